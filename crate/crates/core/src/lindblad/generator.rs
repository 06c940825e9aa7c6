//! Block-to-block evaluation of the collective dissipator
//!
//! `dρ/dτ = (n̄+1) 𝓛(J⁻)ρ + n̄ 𝓛(J⁺)ρ`,  `𝓛(A)ρ = 2AρA† − A†Aρ − ρA†A`,
//!
//! in dimensionless time `τ = γt`. Block `k` receives `J⁻ ρ J⁺` from block
//! `k + 1` and `J⁺ ρ J⁻` from block `k - 1`; the anticommutator terms are
//! tridiagonal within the block.

use std::sync::Arc;

use super::{block_offsets, BlockView, BlockedDensityMatrix};
use crate::error::{Error, Result};
use crate::ode::OdeSystem;
use crate::reservoir::ReservoirSpec;
use crate::spin::{BlockLayout, TransitionMap, Tridiagonal};

/// A transition map rescaled by `sqrt(2 c)`, with source indices clamped
/// into range (their coefficients are zero whenever the clamp matters).
#[derive(Debug, Clone)]
struct Feed {
    sa: Vec<usize>,
    sb: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
    src_dim: usize,
}

impl Feed {
    fn new(map: &TransitionMap, scale: f64) -> Self {
        let last = map.source_dim as isize - 1;
        let n = map.a.len();
        let s = |i: usize, shift: isize| (i as isize + map.offset + shift).clamp(0, last) as usize;
        Feed {
            sa: (0..n).map(|i| s(i, 0)).collect(),
            sb: (0..n).map(|i| s(i, 1)).collect(),
            a: map.a.iter().map(|x| x * scale).collect(),
            b: map.b.iter().map(|x| x * scale).collect(),
            src_dim: map.source_dim,
        }
    }

    /// Adds the upper triangle of `F σ Fᵀ` to `out` (`d × d`, row-major),
    /// using `scratch` for `σ Fᵀ`.
    fn add_sandwich(&self, src: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.src_dim;
        let d = self.a.len();
        scratch.clear();
        scratch.resize(n * d, 0.0);
        for p in 0..n {
            let row = &src[p * n..(p + 1) * n];
            let t = &mut scratch[p * d..(p + 1) * d];
            for j in 0..d {
                t[j] = row[self.sa[j]] * self.a[j] + row[self.sb[j]] * self.b[j];
            }
        }
        for i in 0..d {
            let (ai, bi) = (self.a[i], self.b[i]);
            let ta = &scratch[self.sa[i] * d..(self.sa[i] + 1) * d];
            let tb = &scratch[self.sb[i] * d..(self.sb[i] + 1) * d];
            let o = &mut out[i * d..(i + 1) * d];
            for j in i..d {
                o[j] += ai * ta[j] + bi * tb[j];
            }
        }
    }
}

#[derive(Debug, Clone)]
struct BlockTerms {
    dim: usize,
    /// `(n̄+1) J⁺J⁻ + n̄ J⁻J⁺` on this block.
    damping: Tridiagonal,
    from_above: Option<Feed>,
    from_below: Option<Feed>,
}

/// The generator restricted to blocks `lo..=hi`, with all operator data
/// precomputed.
#[derive(Debug, Clone)]
pub struct BlockGenerator {
    layout: Arc<BlockLayout>,
    lo: usize,
    hi: usize,
    offsets: Vec<usize>,
    terms: Vec<BlockTerms>,
    spectral_bound: f64,
}

impl BlockGenerator {
    /// Generator on blocks `lo..=hi`. Transfers into blocks outside the
    /// range are dropped, so the range must be closed under the dynamics of
    /// the states it is applied to.
    pub fn new(layout: Arc<BlockLayout>, res: &ReservoirSpec, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi >= layout.block_count() {
            return Err(Error::Contract(format!("block range {lo}..={hi} is invalid")));
        }
        let (cd, cu) = (res.down_rate(), res.up_rate());
        let (sd, su) = ((2.0 * cd).sqrt(), (2.0 * cu).sqrt());
        let terms = (lo..=hi)
            .map(|k| {
                let kk = layout.jp_jm(k);
                let uu = layout.jm_jp(k);
                let damping = Tridiagonal {
                    diag: kk.diag.iter().zip(&uu.diag).map(|(x, y)| cd * x + cu * y).collect(),
                    off: kk.off.iter().zip(&uu.off).map(|(x, y)| cd * x + cu * y).collect(),
                };
                let from_above = (k < hi).then(|| Feed::new(layout.lower_into(k).expect("k below top"), sd));
                let from_below =
                    (k > lo && cu > 0.0).then(|| Feed::new(layout.raise_into(k).expect("k above bottom"), su));
                BlockTerms { dim: layout.block(k).dim(), damping, from_above, from_below }
            })
            .collect();

        // Largest decay rate 2[(n̄+1) a² + n̄ b²] of the top sector over the
        // blocks in range; at T = 0 the generator is triangular in the
        // coupled basis and this is its spectral radius, at T > 0 the
        // absorption feed can at most double it.
        let jm = layout.j_max().casimir();
        let mut bound = 0.0f64;
        for k in lo..=hi {
            let m = layout.block(k).m().value();
            let a2 = (jm - m * (m - 1.0)).max(0.0);
            let b2 = (jm - m * (m + 1.0)).max(0.0);
            bound = bound.max(2.0 * (cd * a2 + cu * b2));
        }
        if cu > 0.0 {
            bound *= 2.0;
        }

        Ok(BlockGenerator {
            offsets: block_offsets(&layout, lo, hi),
            layout,
            lo,
            hi,
            terms,
            spectral_bound: 1.05 * bound,
        })
    }

    /// Generator on the blocks reachable from `rho`: everything below its
    /// top block at zero temperature, every block otherwise.
    pub fn for_state(rho: &BlockedDensityMatrix, res: &ReservoirSpec) -> Result<Self> {
        let (_, hi) = rho.block_range();
        let top = if res.up_rate() > 0.0 { rho.layout().block_count() - 1 } else { hi };
        Self::new(rho.layout().clone(), res, 0, top)
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn block_range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    /// Number of stored entries of one (real or imaginary) part.
    pub fn len(&self) -> usize {
        *self.offsets.last().expect("nonempty")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper bound on the spectral radius of the generator (τ units).
    pub fn spectral_bound(&self) -> f64 {
        self.spectral_bound
    }

    pub(crate) fn view<'a>(&'a self, re: &'a [f64], im: Option<&'a [f64]>) -> BlockView<'a> {
        BlockView { layout: &self.layout, lo: self.lo, offsets: &self.offsets, re, im }
    }

    /// Real and imaginary parts of `rho` over this generator's block range.
    pub(crate) fn embed(&self, rho: &BlockedDensityMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        if rho.layout().domains() != self.layout.domains() {
            return Err(Error::Contract(format!(
                "state built for (N1, N2) = ({}, {}), generator for ({}, {})",
                rho.domains().0.n_spins(),
                rho.domains().1.n_spins(),
                self.layout.domains().0.n_spins(),
                self.layout.domains().1.n_spins()
            )));
        }
        let (lo, hi) = rho.block_range();
        if lo < self.lo || hi > self.hi {
            return Err(Error::Contract(format!(
                "state occupies blocks {lo}..={hi}, generator covers {}..={}",
                self.lo, self.hi
            )));
        }
        let w = rho.widened(self.lo, self.hi)?;
        Ok((w.re, w.im))
    }

    /// `dy = L y` in τ units for one part of the state: the real part
    /// (`antisymmetric = false`) or the imaginary part. Only upper triangles
    /// are computed and then mirrored, so the symmetry of `y` carries over
    /// exactly.
    pub fn apply_part(&self, y: &[f64], dy: &mut [f64], antisymmetric: bool) {
        let mut scratch = Vec::new();
        let sign = if antisymmetric { -1.0 } else { 1.0 };
        for (r, t) in self.terms.iter().enumerate() {
            let d = t.dim;
            let rho = &y[self.offsets[r]..self.offsets[r + 1]];
            let out = &mut dy[self.offsets[r]..self.offsets[r + 1]];
            damping_upper(&t.damping, rho, out);
            if let Some(f) = &t.from_above {
                f.add_sandwich(&y[self.offsets[r + 1]..self.offsets[r + 2]], out, &mut scratch);
            }
            if let Some(f) = &t.from_below {
                f.add_sandwich(&y[self.offsets[r - 1]..self.offsets[r]], out, &mut scratch);
            }
            for i in 0..d {
                if antisymmetric {
                    out[i * d + i] = 0.0;
                }
                for j in i + 1..d {
                    out[j * d + i] = sign * out[i * d + j];
                }
            }
        }
    }
}

/// Writes the upper triangle of `-(G ρ + ρ G)` for tridiagonal `G`.
fn damping_upper(g: &Tridiagonal, rho: &[f64], out: &mut [f64]) {
    let d = g.diag.len();
    // off-diagonal of G padded with zeros at both ends: gl[j] couples j-1 and j
    let mut gl = vec![0.0; d + 1];
    gl[1..d].copy_from_slice(&g.off);
    for i in 0..d {
        let row = &rho[i * d..(i + 1) * d];
        let o = &mut out[i * d..(i + 1) * d];
        let gi = g.diag[i];
        for j in i..d {
            o[j] = -(gi + g.diag[j]) * row[j];
        }
        // ρ G: neighbours within the row
        for j in i.max(1)..d {
            o[j] -= gl[j] * row[j - 1];
        }
        for j in i..d - 1 {
            o[j] -= gl[j + 1] * row[j + 1];
        }
        // G ρ: neighbouring rows
        if i > 0 {
            let (gu, up) = (gl[i], &rho[(i - 1) * d..i * d]);
            for j in i..d {
                o[j] -= gu * up[j];
            }
        }
        if i + 1 < d {
            let (gd, dn) = (gl[i + 1], &rho[(i + 1) * d..(i + 2) * d]);
            for j in i..d {
                o[j] -= gd * dn[j];
            }
        }
    }
}

/// The generator acting on a state vector that stacks the real part and,
/// when `complex`, the imaginary part.
pub(crate) struct StackedGenerator<'a> {
    pub gen: &'a BlockGenerator,
    pub complex: bool,
}

impl OdeSystem for StackedGenerator<'_> {
    type Scalar = f64;

    fn dim(&self) -> usize {
        self.gen.len() * if self.complex { 2 } else { 1 }
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.gen.len();
        self.gen.apply_part(&y[..n], &mut dy[..n], false);
        if self.complex {
            self.gen.apply_part(&y[n..], &mut dy[n..], true);
        }
    }

    fn spectral_radius(&self, _y: &[f64]) -> Option<f64> {
        Some(self.gen.spectral_bound)
    }
}

/// `dρ/dt` in s⁻¹ for the given reservoir. The result covers every block
/// `rho` can feed within one application of the generator.
pub fn rhs(rho: &BlockedDensityMatrix, res: &ReservoirSpec) -> Result<BlockedDensityMatrix> {
    let (lo, hi) = rho.block_range();
    let top = rho.layout().block_count() - 1;
    let hi = if res.up_rate() > 0.0 { (hi + 1).min(top) } else { hi };
    let gen = BlockGenerator::new(rho.layout().clone(), res, lo.saturating_sub(1), hi)?;
    rhs_with(&gen, rho, res)
}

/// [`rhs`] with a prebuilt generator; fails if the state does not fit it.
pub fn rhs_with(gen: &BlockGenerator, rho: &BlockedDensityMatrix, res: &ReservoirSpec) -> Result<BlockedDensityMatrix> {
    let (re, im) = gen.embed(rho)?;
    let gamma = res.damping_rate;
    let mut dre = vec![0.0; re.len()];
    gen.apply_part(&re, &mut dre, false);
    dre.iter_mut().for_each(|x| *x *= gamma);
    let mut dim = Vec::new();
    if !im.is_empty() {
        dim = vec![0.0; im.len()];
        gen.apply_part(&im, &mut dim, true);
        dim.iter_mut().for_each(|x| *x *= gamma);
    }
    let (lo, hi) = gen.block_range();
    Ok(BlockedDensityMatrix::from_parts(gen.layout().clone(), lo, hi, dre, dim, "derivative".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{InitialConfig, SpinDomain};

    fn pair(n1: u32, n2: u32) -> (SpinDomain, SpinDomain) {
        (SpinDomain::new(n1), SpinDomain::new(n2))
    }

    fn res(t: f64) -> ReservoirSpec {
        ReservoirSpec::new(t, 1e10, 0.01).unwrap()
    }

    #[test]
    fn single_spin_emission_rate() {
        let rho = BlockedDensityMatrix::build_initial(InitialConfig::Parallel, pair(1, 0)).unwrap();
        let d = rhs(&rho, &res(0.0)).unwrap().observables().unwrap();
        assert!((d.jz1 - (-2.0 * 0.01)).abs() < 1e-15);
        assert!(d.trace.unwrap().abs() < 1e-12);
    }

    #[test]
    fn ground_state_is_dark_at_zero_temperature() {
        let domains = pair(3, 2);
        let rho = BlockedDensityMatrix::build_initial(
            InitialConfig::Custom { m1: -domains.0.j(), m2: -domains.1.j() },
            domains,
        )
        .unwrap();
        let d = rhs(&rho, &res(0.0)).unwrap();
        let (basis, dense) = d.to_dense();
        assert!(!basis.is_empty());
        assert!(dense.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn stretched_state_emits_at_twice_n() {
        let rho = BlockedDensityMatrix::build_initial(InitialConfig::Parallel, pair(50, 50)).unwrap();
        let d = rhs(&rho, &res(0.0)).unwrap().observables().unwrap();
        assert!((d.jz1 + d.jz2 - (-2.0 * 0.01 * 100.0)).abs() < 1e-12);
    }

    #[test]
    fn generator_is_traceless_and_keeps_hermiticity() {
        let rho = crate::lindblad::tests::random_state(pair(4, 3), 11);
        for t in [0.0, 0.4] {
            let d = rhs(&rho, &res(t)).unwrap();
            assert!(d.trace().abs() < 1e-12);
            assert_eq!(d.hermiticity_error(), 0.0);
        }
    }

    #[test]
    fn mismatched_domains_violate_the_contract() {
        let gen = BlockGenerator::new(Arc::new(BlockLayout::new(pair(2, 2))), &res(0.0), 0, 4).unwrap();
        let rho = BlockedDensityMatrix::build_initial(InitialConfig::Antiparallel, pair(3, 1)).unwrap();
        assert!(matches!(rhs_with(&gen, &rho, &res(0.0)), Err(Error::Contract(_))));
    }
}
