//! Exact master-equation dynamics in the product Dicke basis.
//!
//! Collective jumps change the total magnetization `M` by one, so a state
//! that starts diagonal in `M` stays so. The density matrix is stored as one
//! dense Hermitian block per magnetization, and the generator couples each
//! block only to its two neighbours.
//!
//! Every operator involved has real matrix elements, so the real
//! (symmetric) and imaginary (antisymmetric) parts of `ρ` evolve
//! independently under the same real map. They are stored separately and the
//! imaginary part is only carried when it is nonzero.

mod evolve;
mod generator;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::Observables;
use crate::spin::{ladder_unchecked, BlockLayout, Direction, HalfInt, InitialConfig, ProductBasisIndex, SpinDomain};

pub use evolve::{evolve, Evolution};
pub use generator::{rhs, rhs_with, BlockGenerator};

/// Largest tolerated imaginary part of an expectation value.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

/// Density matrix over a contiguous range of magnetization blocks; blocks
/// outside the range are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedDensityMatrix {
    layout: Arc<BlockLayout>,
    lo: usize,
    hi: usize,
    offsets: Vec<usize>,
    re: Vec<f64>,
    /// Empty when the state is real.
    im: Vec<f64>,
    label: String,
}

pub(crate) fn block_offsets(layout: &BlockLayout, lo: usize, hi: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(hi - lo + 2);
    let mut acc = 0;
    offsets.push(0);
    for k in lo..=hi {
        let d = layout.block(k).dim();
        acc += d * d;
        offsets.push(acc);
    }
    offsets
}

impl BlockedDensityMatrix {
    /// All-zero matrix over blocks `lo..=hi`.
    pub fn zeros(layout: Arc<BlockLayout>, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi >= layout.block_count() {
            return Err(Error::Contract(format!("block range {lo}..={hi} outside 0..{}", layout.block_count())));
        }
        let offsets = block_offsets(&layout, lo, hi);
        let len = *offsets.last().expect("nonempty");
        Ok(BlockedDensityMatrix { layout, lo, hi, offsets, re: vec![0.0; len], im: Vec::new(), label: "custom".into() })
    }

    /// The pure product state selected by `config`.
    pub fn build_initial(config: InitialConfig, domains: (SpinDomain, SpinDomain)) -> Result<Self> {
        Self::build_initial_in(Arc::new(BlockLayout::new(domains)), config)
    }

    /// Like [`build_initial`](Self::build_initial), reusing a prepared layout.
    pub fn build_initial_in(layout: Arc<BlockLayout>, config: InitialConfig) -> Result<Self> {
        let idx = config.resolve(layout.domains())?;
        let k = layout.block_index(idx.total()).expect("resolved state lies in a block");
        let i = layout.block(k).index_of(idx.m1).expect("resolved state lies in its block");
        let d = layout.block(k).dim();
        let mut rho = Self::zeros(layout, k, k)?;
        rho.re[i * d + i] = 1.0;
        rho.label = config.label();
        Ok(rho)
    }

    pub(crate) fn from_parts(
        layout: Arc<BlockLayout>,
        lo: usize,
        hi: usize,
        re: Vec<f64>,
        im: Vec<f64>,
        label: String,
    ) -> Self {
        let offsets = block_offsets(&layout, lo, hi);
        assert_eq!(*offsets.last().unwrap(), re.len());
        assert!(im.is_empty() || im.len() == re.len());
        BlockedDensityMatrix { layout, lo, hi, offsets, re, im, label }
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn domains(&self) -> (SpinDomain, SpinDomain) {
        self.layout.domains()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Inclusive range of stored block indices (block `k` holds `M = -(j1+j2) + k`).
    pub fn block_range(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(|&x| x == 0.0)
    }

    fn locate(&self, k: usize) -> Option<(usize, usize)> {
        (self.lo..=self.hi).contains(&k).then(|| (self.offsets[k - self.lo], self.layout.block(k).dim()))
    }

    /// Entry `(i, j)` of block `k` (zero when the block is not stored).
    pub fn entry(&self, k: usize, i: usize, j: usize) -> Complex64 {
        match self.locate(k) {
            Some((off, d)) if i < d && j < d => {
                let im = if self.im.is_empty() { 0.0 } else { self.im[off + i * d + j] };
                Complex64::new(self.re[off + i * d + j], im)
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Sets entry `(i, j)` of stored block `k`; the caller keeps the matrix Hermitian.
    pub fn set_entry(&mut self, k: usize, i: usize, j: usize, z: Complex64) -> Result<()> {
        let (off, d) = self
            .locate(k)
            .filter(|&(_, d)| i < d && j < d)
            .ok_or_else(|| Error::Contract(format!("entry ({i}, {j}) of block {k} is not stored")))?;
        self.re[off + i * d + j] = z.re;
        if z.im != 0.0 && self.im.is_empty() {
            self.im = vec![0.0; self.re.len()];
        }
        if !self.im.is_empty() {
            self.im[off + i * d + j] = z.im;
        }
        Ok(())
    }

    /// Block at magnetization `m` as a dense matrix (zero when not stored).
    pub fn block_matrix(&self, m: HalfInt) -> Result<DMatrix<Complex64>> {
        let k = self
            .layout
            .block_index(m)
            .ok_or_else(|| Error::Domain(format!("M = {m} is not a block of this domain pair")))?;
        let d = self.layout.block(k).dim();
        Ok(DMatrix::from_fn(d, d, |i, j| self.entry(k, i, j)))
    }

    /// Copy whose stored range is widened to `lo..=hi`.
    pub fn widened(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo > self.lo || hi < self.hi {
            return Err(Error::Contract("widened range must contain the stored range".into()));
        }
        let mut out = Self::zeros(self.layout.clone(), lo, hi)?;
        let start = out.offsets[self.lo - lo];
        out.re[start..start + self.re.len()].copy_from_slice(&self.re);
        if !self.im.is_empty() {
            out.im = vec![0.0; out.re.len()];
            out.im[start..start + self.im.len()].copy_from_slice(&self.im);
        }
        out.label = self.label.clone();
        Ok(out)
    }

    pub(crate) fn view(&self) -> BlockView<'_> {
        BlockView {
            layout: &self.layout,
            lo: self.lo,
            offsets: &self.offsets,
            re: &self.re,
            im: (!self.im.is_empty()).then_some(&self.im[..]),
        }
    }

    pub fn trace(&self) -> f64 {
        self.view().trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.view().hermiticity_error()
    }

    /// Smallest eigenvalue of block `k` (treated as Hermitian).
    pub fn min_eigenvalue(&self, k: usize) -> Option<f64> {
        self.view().min_eigenvalue(k)
    }

    pub fn observables(&self) -> Result<Observables> {
        self.view().observables()
    }

    /// Dense matrix over the full product basis, ordered by `m1` descending
    /// and then `m2` descending, together with that basis.
    pub fn to_dense(&self) -> (Vec<ProductBasisIndex>, DMatrix<Complex64>) {
        let (d1, d2) = self.domains();
        let basis: Vec<ProductBasisIndex> =
            d1.projections().flat_map(|m1| d2.projections().map(move |m2| ProductBasisIndex { m1, m2 })).collect();
        let pos = |m1: HalfInt, m2: HalfInt| {
            let i1 = ((d1.j() - m1).twice() / 2) as usize;
            let i2 = ((d2.j() - m2).twice() / 2) as usize;
            i1 * d2.dim() + i2
        };
        let n = basis.len();
        let mut dense = DMatrix::zeros(n, n);
        for k in self.lo..=self.hi {
            let bb = self.layout.block(k);
            let d = bb.dim();
            for r in 0..d {
                for c in 0..d {
                    dense[(pos(bb.m1_at(r), bb.m2_at(r)), pos(bb.m1_at(c), bb.m2_at(c)))] = self.entry(k, r, c);
                }
            }
        }
        (basis, dense)
    }
}

/// Borrowed blocks `lo..` laid out back to back.
#[derive(Clone, Copy)]
pub(crate) struct BlockView<'a> {
    pub layout: &'a BlockLayout,
    pub lo: usize,
    pub offsets: &'a [usize],
    pub re: &'a [f64],
    pub im: Option<&'a [f64]>,
}

impl BlockView<'_> {
    fn block_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn block_re(&self, r: usize) -> &[f64] {
        &self.re[self.offsets[r]..self.offsets[r + 1]]
    }

    fn block_im(&self, r: usize) -> Option<&[f64]> {
        self.im.map(|im| &im[self.offsets[r]..self.offsets[r + 1]])
    }

    pub fn trace(&self) -> f64 {
        (0..self.block_count())
            .map(|r| {
                let d = self.layout.block(self.lo + r).dim();
                let b = self.block_re(r);
                (0..d).map(|i| b[i * d + i]).sum::<f64>()
            })
            .sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.block_count() {
            let d = self.layout.block(self.lo + r).dim();
            let re = self.block_re(r);
            let im = self.block_im(r);
            for i in 0..d {
                for j in i..d {
                    let dr = re[i * d + j] - re[j * d + i];
                    let di = im.map_or(0.0, |b| b[i * d + j] + b[j * d + i]);
                    worst = worst.max(dr.hypot(di));
                }
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self, k: usize) -> Option<f64> {
        let r = k.checked_sub(self.lo)?;
        if r >= self.block_count() {
            return None;
        }
        let d = self.layout.block(k).dim();
        let re = self.block_re(r);
        let min = |v: &nalgebra::DVector<f64>| v.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(match self.block_im(r) {
            None => {
                let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (re[i * d + j] + re[j * d + i]));
                min(&m.symmetric_eigenvalues())
            }
            Some(im) => {
                let m = DMatrix::from_fn(d, d, |i, j| {
                    Complex64::new(0.5 * (re[i * d + j] + re[j * d + i]), 0.5 * (im[i * d + j] - im[j * d + i]))
                });
                min(&m.symmetric_eigenvalues())
            }
        })
    }

    pub fn observables(&self) -> Result<Observables> {
        let parts: &[(&[f64], bool)] = &[(self.re, false)];
        let (d1, d2) = self.layout.domains();
        let (j1, j2) = (d1.j().twice(), d2.j().twice());
        // [trace, jz1, jz2, jz1jz2, a12, jtot2] for the real and imaginary parts
        let mut acc = [[0.0f64; 6]; 2];
        let im_part = self.im.map(|im| (im, true));
        for (data, is_im) in parts.iter().copied().chain(im_part) {
            let out = &mut acc[is_im as usize];
            for r in 0..self.block_count() {
                let k = self.lo + r;
                let bb = self.layout.block(k);
                let d = bb.dim();
                let b = &data[self.offsets[r]..self.offsets[r + 1]];
                let m = bb.m().value();
                let kk = self.layout.jp_jm(k);
                let mut tr_k = 0.0;
                for i in 0..d {
                    let p = b[i * d + i];
                    let (m1, m2) = (bb.m1_at(i).value(), bb.m2_at(i).value());
                    tr_k += p;
                    out[1] += p * m1;
                    out[2] += p * m2;
                    out[3] += p * (m1 * m2);
                    out[5] += p * kk.diag[i];
                    if i > 0 {
                        let sym = b[i * d + i - 1] + b[(i - 1) * d + i];
                        // <i-1| J1+ J2- |i>, which equals <i| J1- J2+ |i-1>
                        let c = ladder_unchecked(j1, bb.m1_at(i).twice(), Direction::Raise)
                            * ladder_unchecked(j2, bb.m2_at(i).twice(), Direction::Lower);
                        out[4] += sym * c;
                        out[5] += sym * kk.off[i - 1];
                    }
                }
                out[0] += tr_k;
                out[5] += tr_k * (m * m - m);
            }
        }

        let names = ["trace", "jz1", "jz2", "jz1jz2", "a12", "jtot2"];
        for (q, name) in names.iter().enumerate() {
            let (re, im) = (acc[0][q], acc[1][q]);
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NumericalCorruption(format!("<{name}> is not finite")));
            }
            if im.abs() > IMAGINARY_RESIDUE_LIMIT {
                return Err(Error::NumericalCorruption(format!("<{name}> has imaginary part {im:e}")));
            }
        }
        let v = acc[0];
        Ok(Observables { jz1: v[1], jz2: v[2], a12: v[4], jz1jz2: v[3], jtot2: Some(v[5]), trace: Some(v[0]) })
    }
}
