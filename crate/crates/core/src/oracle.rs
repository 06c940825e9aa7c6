//! Steady states without integration.
//!
//! Collective jump operators commute with `J_tot²`, so the weight of each
//! total-spin sector `J` is fixed by the initial state. At T = 0 every
//! sector decays to its bottom state `|J, -J>` and coherences between
//! sectors die out. At T > 0 each sector thermalizes over its own ladder
//! with populations `∝ x^(M+J)`, `x = n̄ / (n̄ + 1)`. Domain polarizations
//! inside a sector follow from the projection theorem.

use crate::error::{Error, Result};
use crate::lindblad::BlockedDensityMatrix;
use crate::reservoir::ReservoirSpec;
use crate::spin::{CgBlock, HalfInt, InitialConfig, LnFactorials, ProductBasisIndex, SpinDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    First,
    Second,
}

/// Weights of the total-spin sectors in a product state.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorDecomposition {
    pub j1: HalfInt,
    pub j2: HalfInt,
    pub m1: HalfInt,
    pub m2: HalfInt,
    /// `(J, p_J)` ascending in `J`; zero-weight sectors are kept.
    pub sectors: Vec<(HalfInt, f64)>,
}

impl SectorDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.sectors.iter().map(|&(_, p)| p).sum()
    }

    pub fn weight(&self, j: HalfInt) -> f64 {
        self.sectors.iter().find(|&&(jj, _)| jj == j).map_or(0.0, |&(_, p)| p)
    }
}

/// Sector weights `|<J, m1+m2 | j1 m1; j2 m2>|²` of the product state `config`.
pub fn decompose(domains: (SpinDomain, SpinDomain), config: InitialConfig) -> Result<SectorDecomposition> {
    let idx = config.resolve(domains)?;
    Ok(decompose_index(domains, idx))
}

fn decompose_index(domains: (SpinDomain, SpinDomain), idx: ProductBasisIndex) -> SectorDecomposition {
    let (j1, j2) = (domains.0.j(), domains.1.j());
    let (m1, m2) = (idx.m1, idx.m2);
    let m = m1 + m2;
    let j_lo = (j1 - j2).abs().max(m.abs());
    let j_hi = j1 + j2;
    let count = ((j_hi - j_lo).twice() / 2 + 1) as usize;
    let js = (0..count).map(|k| j_lo + HalfInt::from_int(k as i64));

    let sectors = if m1.abs() == j1 || m2.abs() == j2 {
        let lf = LnFactorials::new((j_hi.twice() + 2) as usize);
        js.map(|j| {
            let c = crate::spin::extremal_coefficient(&lf, j1, j2, j, m1, m2);
            (j, c * c)
        })
        .collect()
    } else {
        let block = CgBlock::new(j1, j2, m);
        js.map(|j| {
            let c = block.coefficient(j, m1);
            (j, c * c)
        })
        .collect()
    };
    SectorDecomposition { j1, j2, m1, m2, sectors }
}

/// `<J, M | J_az | J, M>` inside the sector `J` of the pair `(j1, j2)`.
pub fn sector_jz(j: HalfInt, m: HalfInt, j1: HalfInt, j2: HalfInt, which: Domain) -> Result<f64> {
    if j < HalfInt::ZERO || (j1 - j2).abs() > j || j > j1 + j2 || !(j1 + j2 - j).is_integer() {
        return Err(Error::Domain(format!("J = {j} is not reachable from j1 = {j1}, j2 = {j2}")));
    }
    if m.abs() > j || !m.same_parity(j) {
        return Err(Error::out_of_range(j, m));
    }
    if j == HalfInt::ZERO {
        return Ok(0.0);
    }
    let (ja, jb) = match which {
        Domain::First => (j1, j2),
        Domain::Second => (j2, j1),
    };
    let cj = j.casimir();
    Ok(m.value() * (cj + ja.casimir() - jb.casimir()) / (2.0 * cj))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyPrediction {
    pub jz1: f64,
    pub jz2: f64,
}

/// Mean of `M` over `-J..=J` with weights `x^(M+J)`, `x ∈ [0, 1)`.
fn gibbs_mean_m(j: HalfInt, x: f64) -> f64 {
    let levels = j.twice() as usize + 1;
    if x == 0.0 {
        return -j.value();
    }
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for k in 0..levels {
        num += w * k as f64;
        den += w;
        w *= x;
    }
    num / den - j.value()
}

/// Steady polarizations inside sector `j` alone: its bottom state at T = 0,
/// its Gibbs ladder otherwise.
pub fn sector_steady(j: HalfInt, j1: HalfInt, j2: HalfInt, res: &ReservoirSpec) -> Result<SteadyPrediction> {
    // sector_jz is linear in M, so the thermal average only needs <M>.
    let mean_m = gibbs_mean_m(j, res.boltzmann_ratio());
    if j == HalfInt::ZERO {
        sector_jz(j, j, j1, j2, Domain::First)?;
        return Ok(SteadyPrediction { jz1: 0.0, jz2: 0.0 });
    }
    let share1 = sector_jz(j, j, j1, j2, Domain::First)? / j.value();
    Ok(SteadyPrediction { jz1: share1 * mean_m, jz2: (1.0 - share1) * mean_m })
}

fn predict(dec: &SectorDecomposition, res: &ReservoirSpec) -> Result<SteadyPrediction> {
    let mut out = SteadyPrediction { jz1: 0.0, jz2: 0.0 };
    for &(j, p) in &dec.sectors {
        if p == 0.0 {
            continue;
        }
        let s = sector_steady(j, dec.j1, dec.j2, res)?;
        out.jz1 += p * s.jz1;
        out.jz2 += p * s.jz2;
    }
    Ok(out)
}

/// Steady domain polarizations reached from the product state `config`.
pub fn steady_state(
    domains: (SpinDomain, SpinDomain),
    config: InitialConfig,
    res: &ReservoirSpec,
) -> Result<SteadyPrediction> {
    predict(&decompose(domains, config)?, res)
}

/// Same as [`steady_state`] for an arbitrary density matrix, which must be a
/// single product basis state.
pub fn steady_state_of(rho: &BlockedDensityMatrix, res: &ReservoirSpec) -> Result<SteadyPrediction> {
    let not_product = || Error::Unsupported("the sector oracle needs a product basis state |j1 m1> ⊗ |j2 m2>".into());
    let layout = rho.layout();
    let (lo, hi) = rho.block_range();
    let mut found = None;
    for k in lo..=hi {
        let block = layout.block(k);
        for i in 0..block.dim() {
            for c in 0..block.dim() {
                let z = rho.entry(k, i, c);
                if z.norm() == 0.0 {
                    continue;
                }
                if i != c || found.is_some() || (z.re - 1.0).abs() > 1e-12 || z.im != 0.0 {
                    return Err(not_product());
                }
                found = Some(ProductBasisIndex { m1: block.m1_at(i), m2: block.m2_at(i) });
            }
        }
    }
    let idx = found.ok_or_else(|| Error::Unsupported("zero density matrix".into()))?;
    predict(&decompose_index(rho.domains(), idx), res)
}
