//! The product basis `|j1 m1> ⊗ |j2 m2>` split into blocks of fixed total
//! magnetization `M = m1 + m2`, and the collective ladder operators
//! `J^± = J1^± + J2^±` as sparse maps between neighbouring blocks.

use num_complex::Complex64;

use super::{ladder_unchecked, Direction, HalfInt, SpinDomain};
use crate::error::{Error, Result};

/// Basis of one magnetization block, ordered by `m1` descending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockBasis {
    m: HalfInt,
    m1_max: HalfInt,
    dim: usize,
}

impl BlockBasis {
    pub fn new(domains: (SpinDomain, SpinDomain), m: HalfInt) -> Option<Self> {
        let (j1, j2) = (domains.0.j(), domains.1.j());
        if m.abs() > j1 + j2 || !m.same_parity(j1 + j2) {
            return None;
        }
        let hi = j1.min(m + j2);
        let lo = (-j1).max(m - j2);
        let dim = ((hi - lo).twice() / 2 + 1) as usize;
        Some(BlockBasis { m, m1_max: hi, dim })
    }

    pub fn m(&self) -> HalfInt {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m1_at(&self, i: usize) -> HalfInt {
        self.m1_max - HalfInt::from_int(i as i64)
    }

    pub fn m2_at(&self, i: usize) -> HalfInt {
        self.m - self.m1_at(i)
    }

    pub fn index_of(&self, m1: HalfInt) -> Option<usize> {
        let d = self.m1_max - m1;
        if d < HalfInt::ZERO || !d.is_integer() {
            return None;
        }
        let i = (d.twice() / 2) as usize;
        (i < self.dim).then_some(i)
    }
}

/// Sparse map between adjacent blocks with at most two entries per target
/// row: `target[i] = a[i] * source[i + offset] + b[i] * source[i + offset + 1]`.
///
/// Coefficients are exactly zero wherever the source index falls outside the
/// source block.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMap {
    pub offset: isize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub source_dim: usize,
}

impl TransitionMap {
    /// Applies the map to a ket stored over the source block.
    pub fn apply(&self, source: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(source.len(), self.source_dim);
        (0..self.a.len())
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                let s = i as isize + self.offset;
                if self.a[i] != 0.0 {
                    acc += source[s as usize] * self.a[i];
                }
                if self.b[i] != 0.0 {
                    acc += source[(s + 1) as usize] * self.b[i];
                }
                acc
            })
            .collect()
    }

    /// `Mᵀ M` over the source block, which is tridiagonal.
    fn gram(&self) -> Tridiagonal {
        let n = self.source_dim;
        let mut t = Tridiagonal::zeros(n);
        for r in 0..self.a.len() {
            let c = r as isize + self.offset;
            let (a, b) = (self.a[r], self.b[r]);
            if a != 0.0 {
                t.diag[c as usize] += a * a;
            }
            if b != 0.0 {
                t.diag[(c + 1) as usize] += b * b;
            }
            if a != 0.0 && b != 0.0 {
                t.off[c as usize] += a * b;
            }
        }
        t
    }
}

/// Real symmetric tridiagonal matrix; `off[i]` sits at `(i, i+1)` and `(i+1, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}

/// Every magnetization block of a domain pair together with the collective
/// ladder maps connecting them. Block `k` holds `M = -(j1 + j2) + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    domains: (SpinDomain, SpinDomain),
    blocks: Vec<BlockBasis>,
    lower_into: Vec<Option<TransitionMap>>,
    raise_into: Vec<Option<TransitionMap>>,
    jp_jm: Vec<Tridiagonal>,
    jm_jp: Vec<Tridiagonal>,
}

impl BlockLayout {
    pub fn new(domains: (SpinDomain, SpinDomain)) -> Self {
        let j_max = domains.0.j() + domains.1.j();
        let count = (j_max.twice() + 1) as usize;
        let blocks: Vec<BlockBasis> = (0..count)
            .map(|k| {
                let m = -j_max + HalfInt::from_int(k as i64);
                BlockBasis::new(domains, m).expect("M within range")
            })
            .collect();

        let lower_into: Vec<Option<TransitionMap>> =
            (0..count).map(|k| (k + 1 < count).then(|| lower_map(domains, &blocks[k], &blocks[k + 1]))).collect();
        let raise_into: Vec<Option<TransitionMap>> =
            (0..count).map(|k| (k > 0).then(|| raise_map(domains, &blocks[k], &blocks[k - 1]))).collect();

        // J+J- on block k is the Gram matrix of the lowering map out of k;
        // J-J+ is the Gram matrix of the raising map out of k.
        let jp_jm = (0..count)
            .map(|k| match k.checked_sub(1).and_then(|b| lower_into[b].as_ref()) {
                Some(map) => map.gram(),
                None => Tridiagonal::zeros(blocks[k].dim()),
            })
            .collect();
        let jm_jp = (0..count)
            .map(|k| match raise_into.get(k + 1).and_then(Option::as_ref) {
                Some(map) => map.gram(),
                None => Tridiagonal::zeros(blocks[k].dim()),
            })
            .collect();

        BlockLayout { domains, blocks, lower_into, raise_into, jp_jm, jm_jp }
    }

    pub fn domains(&self) -> (SpinDomain, SpinDomain) {
        self.domains
    }

    pub fn j_max(&self) -> HalfInt {
        self.domains.0.j() + self.domains.1.j()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, k: usize) -> &BlockBasis {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[BlockBasis] {
        &self.blocks
    }

    pub fn block_index(&self, m: HalfInt) -> Option<usize> {
        let d = m + self.j_max();
        if d < HalfInt::ZERO || !d.is_integer() {
            return None;
        }
        let k = (d.twice() / 2) as usize;
        (k < self.blocks.len()).then_some(k)
    }

    /// `J^-` from block `k + 1` into block `k`.
    pub fn lower_into(&self, k: usize) -> Option<&TransitionMap> {
        self.lower_into[k].as_ref()
    }

    /// `J^+` from block `k - 1` into block `k`.
    pub fn raise_into(&self, k: usize) -> Option<&TransitionMap> {
        self.raise_into[k].as_ref()
    }

    /// `J^+ J^-` restricted to block `k`.
    pub fn jp_jm(&self, k: usize) -> &Tridiagonal {
        &self.jp_jm[k]
    }

    /// `J^- J^+` restricted to block `k`.
    pub fn jm_jp(&self, k: usize) -> &Tridiagonal {
        &self.jm_jp[k]
    }

    /// Total number of density-matrix entries over all blocks.
    pub fn density_len(&self) -> usize {
        self.blocks.iter().map(|b| b.dim() * b.dim()).sum()
    }
}

fn lower_map(domains: (SpinDomain, SpinDomain), target: &BlockBasis, source: &BlockBasis) -> TransitionMap {
    let (j1, j2) = (domains.0.j().twice(), domains.1.j().twice());
    let offset = (source.m1_max - target.m1_max).twice() / 2 - 1;
    let n = target.dim();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let (m1, m2) = (target.m1_at(i), target.m2_at(i));
        // J1^- from (m1 + 1, m2)
        if let Some(s) = source.index_of(m1 + HalfInt::ONE) {
            debug_assert_eq!(s as isize, i as isize + offset as isize);
            a[i] = ladder_unchecked(j1, (m1 + HalfInt::ONE).twice(), Direction::Lower);
        }
        // J2^- from (m1, m2 + 1)
        if let Some(s) = source.index_of(m1) {
            debug_assert_eq!(s as isize, i as isize + offset as isize + 1);
            b[i] = ladder_unchecked(j2, (m2 + HalfInt::ONE).twice(), Direction::Lower);
        }
    }
    TransitionMap { offset: offset as isize, a, b, source_dim: source.dim() }
}

fn raise_map(domains: (SpinDomain, SpinDomain), target: &BlockBasis, source: &BlockBasis) -> TransitionMap {
    let (j1, j2) = (domains.0.j().twice(), domains.1.j().twice());
    let offset = -((target.m1_max - source.m1_max).twice() / 2);
    let n = target.dim();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let (m1, m2) = (target.m1_at(i), target.m2_at(i));
        // J2^+ from (m1, m2 - 1)
        if let Some(s) = source.index_of(m1) {
            debug_assert_eq!(s as isize, i as isize + offset as isize);
            a[i] = ladder_unchecked(j2, (m2 - HalfInt::ONE).twice(), Direction::Raise);
        }
        // J1^+ from (m1 - 1, m2)
        if let Some(s) = source.index_of(m1 - HalfInt::ONE) {
            debug_assert_eq!(s as isize, i as isize + offset as isize + 1);
            b[i] = ladder_unchecked(j1, (m1 - HalfInt::ONE).twice(), Direction::Raise);
        }
    }
    TransitionMap { offset: offset as isize, a, b, source_dim: source.dim() }
}

/// Applies `J^-_tot = J1^- ⊗ 1 + 1 ⊗ J2^-` to a ket supported on block `m`,
/// returning its components on block `m - 1`. The bottom block maps to the
/// (empty) space below it.
pub fn apply_collective_lower(layout: &BlockLayout, m: HalfInt, ket: &[Complex64]) -> Result<Vec<Complex64>> {
    let k =
        layout.block_index(m).ok_or_else(|| Error::Domain(format!("M = {m} is not a block of this domain pair")))?;
    if ket.len() != layout.block(k).dim() {
        return Err(Error::Contract(format!(
            "ket has {} components, block M = {m} has {}",
            ket.len(),
            layout.block(k).dim()
        )));
    }
    Ok(match k.checked_sub(1) {
        Some(below) => layout.lower_into(below).expect("map exists").apply(ket),
        None => Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_spin_lowering() {
        let layout = BlockLayout::new((SpinDomain::new(1), SpinDomain::new(1)));
        let out = apply_collective_lower(&layout, HalfInt::ONE, &[c(1.0)]).unwrap();
        // M = 0 block is [|↑↓>, |↓↑>]
        assert_eq!(out, vec![c(1.0), c(1.0)]);
    }

    #[test]
    fn ground_block_is_annihilated() {
        let layout = BlockLayout::new((SpinDomain::new(3), SpinDomain::new(2)));
        let out = apply_collective_lower(&layout, HalfInt::from_twice(-5), &[c(1.0)]).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn lowering_with_empty_second_domain() {
        let layout = BlockLayout::new((SpinDomain::new(2), SpinDomain::new(0)));
        let out = apply_collective_lower(&layout, HalfInt::ZERO, &[c(1.0)]).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_dims_and_ordering() {
        let layout = BlockLayout::new((SpinDomain::new(4), SpinDomain::new(2)));
        let dims: Vec<usize> = layout.blocks().iter().map(|b| b.dim()).collect();
        assert_eq!(dims, vec![1, 2, 3, 3, 3, 2, 1]);
        let b = layout.block(3);
        assert_eq!(b.m(), HalfInt::ZERO);
        assert_eq!(b.m1_at(0), HalfInt::ONE);
        assert_eq!(b.m1_at(2), -HalfInt::ONE);
        assert_eq!(layout.density_len(), 1 + 4 + 9 + 9 + 9 + 4 + 1);
    }

    /// Dense J^± and J^z for the full product space, block-major ordering.
    fn dense_ops(layout: &BlockLayout) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let offsets: Vec<usize> = layout
            .blocks()
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.dim();
                Some(o)
            })
            .collect();
        let n: usize = layout.blocks().iter().map(|b| b.dim()).sum();
        let mut jm = DMatrix::zeros(n, n);
        let mut jz = DMatrix::zeros(n, n);
        for k in 0..layout.block_count() {
            let b = layout.block(k);
            for i in 0..b.dim() {
                jz[(offsets[k] + i, offsets[k] + i)] = b.m().value();
            }
            if let Some(map) = layout.lower_into(k) {
                for i in 0..b.dim() {
                    let s = i as isize + map.offset;
                    if map.a[i] != 0.0 {
                        jm[(offsets[k] + i, offsets[k + 1] + s as usize)] = map.a[i];
                    }
                    if map.b[i] != 0.0 {
                        jm[(offsets[k] + i, offsets[k + 1] + (s + 1) as usize)] = map.b[i];
                    }
                }
            }
        }
        let jp = jm.transpose();
        (jp, jm, jz)
    }

    #[test]
    fn raise_map_is_transpose_of_lower_map() {
        let layout = BlockLayout::new((SpinDomain::new(5), SpinDomain::new(3)));
        for k in 1..layout.block_count() {
            let up = layout.raise_into(k).unwrap();
            let down = layout.lower_into(k - 1).unwrap();
            for i in 0..layout.block(k).dim() {
                for (src, coef) in [(i as isize + up.offset, up.a[i]), (i as isize + up.offset + 1, up.b[i])] {
                    if coef == 0.0 {
                        continue;
                    }
                    let r = src as usize;
                    let back = if r as isize + down.offset == i as isize {
                        down.a[r]
                    } else {
                        assert_eq!(r as isize + down.offset + 1, i as isize);
                        down.b[r]
                    };
                    assert_eq!(coef, back);
                }
            }
        }
    }

    #[test]
    fn casimir_commutes_with_collective_operators() {
        for n_tot in 1..=12u32 {
            for n1 in 0..=n_tot {
                let layout = BlockLayout::new((SpinDomain::new(n1), SpinDomain::new(n_tot - n1)));
                let (jp, jm, jz) = dense_ops(&layout);
                let j2 = &jp * &jm + &jz * &jz - &jz;
                for op in [&jp, &jm, &jz] {
                    let comm = &j2 * op - op * &j2;
                    assert!(comm.amax() < 1e-12, "n1={n1} n_tot={n_tot}: {}", comm.amax());
                }
                // the Gram-matrix blocks agree with the dense products
                let pm = &jp * &jm;
                let mp = &jm * &jp;
                let mut o = 0;
                for k in 0..layout.block_count() {
                    let d = layout.block(k).dim();
                    let want_pm = pm.view((o, o), (d, d)).into_owned();
                    let want_mp = mp.view((o, o), (d, d)).into_owned();
                    assert!((layout.jp_jm(k).to_dense() - want_pm).amax() < 1e-12);
                    assert!((layout.jm_jp(k).to_dense() - want_mp).amax() < 1e-12);
                    o += d;
                }
            }
        }
    }
}
