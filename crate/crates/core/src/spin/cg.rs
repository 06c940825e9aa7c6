//! Clebsch–Gordan coefficients `<J, M | j1 m1; j2 m2>` (Condon–Shortley
//! phase) for two coupled collective spins.
//!
//! Inside a block of fixed `M`, the coupled states `|J, M>` are the
//! eigenvectors of the tridiagonal matrix of `J_tot²`, so a whole block is
//! obtained from one symmetric eigendecomposition; the phase is fixed by
//! making the component with the largest allowed `m1` positive. When one of
//! the domains sits at an extremal projection, the Racah sum collapses to a
//! single product of factorials, which is evaluated in log space and stays
//! accurate for `j` in the thousands.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{ladder_unchecked, Direction, HalfInt};

/// `ln n!` for `n = 0..=max`.
#[derive(Debug, Clone)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LnFactorials(table)
    }

    pub fn max(&self) -> usize {
        self.0.len() - 1
    }

    /// `ln(h!)` for an integer-valued half-integer `h >= 0`.
    pub fn at(&self, h: HalfInt) -> f64 {
        debug_assert!(h.is_integer() && h >= HalfInt::ZERO);
        self.0[(h.twice() / 2) as usize]
    }
}

fn selection_ok(j1: HalfInt, j2: HalfInt, j: HalfInt, m: HalfInt, m1: HalfInt, m2: HalfInt) -> bool {
    let zero = HalfInt::ZERO;
    j1 >= zero
        && j2 >= zero
        && m1 + m2 == m
        && m1.abs() <= j1
        && m2.abs() <= j2
        && m.abs() <= j
        && m1.same_parity(j1)
        && m2.same_parity(j2)
        && m.same_parity(j)
        && (j1 - j2).abs() <= j
        && j <= j1 + j2
        && (j1 + j2 - j).is_integer()
}

/// `<J, M | j1 m1; j2 m2>`; zero whenever a selection rule fails.
pub fn cg_coefficient(j1: HalfInt, j2: HalfInt, j: HalfInt, m: HalfInt, m1: HalfInt, m2: HalfInt) -> f64 {
    if !selection_ok(j1, j2, j, m, m1, m2) {
        return 0.0;
    }
    if m1.abs() == j1 || m2.abs() == j2 {
        let lf = LnFactorials::new(((j1 + j2 + j).twice() / 2 + 1) as usize);
        return extremal_coefficient(&lf, j1, j2, j, m1, m2);
    }
    let block = CgBlock::new(j1, j2, m);
    block.coefficient(j, m1)
}

/// Single-term Racah evaluation, valid when `|m1| = j1` or `|m2| = j2`.
/// `lf` must cover `j1 + j2 + J + 1`.
pub(crate) fn extremal_coefficient(
    lf: &LnFactorials,
    j1: HalfInt,
    j2: HalfInt,
    j: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
) -> f64 {
    // The k = 0 term is the only one when m1 = j1 or m2 = -j2; the other two
    // extremes follow from <j1 m1 j2 m2|J M> = (-1)^(j1+j2-J) <j1 -m1 j2 -m2|J -M>.
    let (m1, m2, sign) = if m1 == j1 || m2 == -j2 {
        (m1, m2, 1.0)
    } else {
        let parity = ((j1 + j2 - j).twice() / 2).rem_euclid(2);
        (-m1, -m2, if parity == 0 { 1.0 } else { -1.0 })
    };
    let m = m1 + m2;
    let one = HalfInt::ONE;
    let ln_pref = ((j.twice() + 1) as f64).ln() + lf.at(j + j1 - j2) + lf.at(j - j1 + j2) + lf.at(j1 + j2 - j)
        - lf.at(j1 + j2 + j + one)
        + lf.at(j + m)
        + lf.at(j - m)
        + lf.at(j1 - m1)
        + lf.at(j1 + m1)
        + lf.at(j2 - m2)
        + lf.at(j2 + m2);
    let ln_den = lf.at(j1 + j2 - j) + lf.at(j1 - m1) + lf.at(j2 + m2) + lf.at(j - j2 + m1) + lf.at(j - j1 - m2);
    sign * (0.5 * ln_pref - ln_den).exp()
}

/// All coupled states of one magnetization block.
#[derive(Debug, Clone)]
pub(crate) struct CgBlock {
    j_min: HalfInt,
    m1_max: HalfInt,
    /// Row `r` holds `|J_min + r, M>` over the block basis (m1 descending).
    vectors: DMatrix<f64>,
}

impl CgBlock {
    pub(crate) fn new(j1: HalfInt, j2: HalfInt, m: HalfInt) -> Self {
        let hi = j1.min(m + j2);
        let lo = (-j1).max(m - j2);
        let dim = ((hi - lo).twice() / 2 + 1) as usize;
        let j_min = (j1 - j2).abs().max(m.abs());

        let base = j1.casimir() + j2.casimir();
        let mut t = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            let m1 = hi - HalfInt::from_int(i as i64);
            let m2 = m - m1;
            t[(i, i)] = base + 2.0 * m1.value() * m2.value();
            if i + 1 < dim {
                // <m1, m2| J1+ J2- |m1 - 1, m2 + 1>
                let v = ladder_unchecked(j1.twice(), (m1 - HalfInt::ONE).twice(), Direction::Raise)
                    * ladder_unchecked(j2.twice(), (m2 + HalfInt::ONE).twice(), Direction::Lower);
                t[(i, i + 1)] = v;
                t[(i + 1, i)] = v;
            }
        }

        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let mut vectors = DMatrix::<f64>::zeros(dim, dim);
        for (r, &col) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(col);
            let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..dim {
                vectors[(r, i)] = sign * v[i];
            }
        }
        CgBlock { j_min, m1_max: hi, vectors }
    }

    pub(crate) fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub(crate) fn j_at(&self, r: usize) -> HalfInt {
        self.j_min + HalfInt::from_int(r as i64)
    }

    pub(crate) fn coefficient(&self, j: HalfInt, m1: HalfInt) -> f64 {
        let r = (j - self.j_min).twice() / 2;
        let i = (self.m1_max - m1).twice() / 2;
        if r < 0 || i < 0 || r as usize >= self.dim() || i as usize >= self.dim() {
            return 0.0;
        }
        self.vectors[(r as usize, i as usize)]
    }
}

/// Every Clebsch–Gordan coefficient of a `(j1, j2)` pair.
#[derive(Debug, Clone)]
pub struct CgTable {
    j1: HalfInt,
    j2: HalfInt,
    blocks: Vec<CgBlock>,
}

impl CgTable {
    pub fn new(j1: HalfInt, j2: HalfInt) -> Self {
        let j_max = j1 + j2;
        let blocks = (0..=j_max.twice()).map(|k| CgBlock::new(j1, j2, -j_max + HalfInt::from_int(k))).collect();
        CgTable { j1, j2, blocks }
    }

    pub fn j1(&self) -> HalfInt {
        self.j1
    }

    pub fn j2(&self) -> HalfInt {
        self.j2
    }

    /// `<J, M | j1 m1; j2 m2>`, zero outside the selection rules.
    pub fn get(&self, j: HalfInt, m: HalfInt, m1: HalfInt, m2: HalfInt) -> f64 {
        if !selection_ok(self.j1, self.j2, j, m, m1, m2) {
            return 0.0;
        }
        let k = ((m + self.j1 + self.j2).twice() / 2) as usize;
        self.blocks[k].coefficient(j, m1)
    }

    /// Total spins present in block `M`, ascending.
    pub fn sectors(&self, m: HalfInt) -> Vec<HalfInt> {
        let k = ((m + self.j1 + self.j2).twice() / 2) as usize;
        let b = &self.blocks[k];
        (0..b.dim()).map(|r| b.j_at(r)).collect()
    }

    /// Product-basis projections `(m1, m2)` of block `M`, m1 descending.
    pub fn basis(&self, m: HalfInt) -> Vec<(HalfInt, HalfInt)> {
        let k = ((m + self.j1 + self.j2).twice() / 2) as usize;
        let b = &self.blocks[k];
        (0..b.dim())
            .map(|i| {
                let m1 = b.m1_max - HalfInt::from_int(i as i64);
                (m1, m - m1)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i64) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    #[test]
    fn tabulated_values() {
        // j1 = 1, j2 = 1/2
        let a = cg_coefficient(h(2), h(1), h(3), h(1), h(2), h(-1));
        assert!((a - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        let b = cg_coefficient(h(2), h(1), h(1), h(1), h(2), h(-1));
        assert!((b - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        // the interior coefficient (m1 = 0) goes through the eigen path
        let c = cg_coefficient(h(2), h(2), h(0), h(0), h(0), h(0));
        assert!((c + (1.0f64 / 3.0).sqrt()).abs() < 1e-14, "{c}");
    }

    #[test]
    fn stretched_state_is_one() {
        for (a, b) in [(1, 1), (5, 2), (10, 0), (200, 7)] {
            let c = cg_coefficient(h(a), h(b), h(a + b), h(a + b), h(a), h(b));
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_rules_give_zero() {
        assert_eq!(cg_coefficient(h(2), h(1), h(3), h(1), h(2), h(1)), 0.0);
        assert_eq!(cg_coefficient(h(2), h(1), h(7), h(1), h(2), h(-1)), 0.0);
        assert_eq!(cg_coefficient(h(4), h(1), h(1), h(1), h(2), h(-1)), 0.0);
    }

    #[test]
    fn extremal_and_eigen_paths_agree() {
        for (a, b) in [(3, 2), (6, 6), (9, 4), (20, 11)] {
            let (j1, j2) = (h(a), h(b));
            let table = CgTable::new(j1, j2);
            let lf = LnFactorials::new((a + b + 4) as usize);
            for m1 in [j1, -j1] {
                for m2 in (0..=b).map(|k| h(b - 2 * k)) {
                    let m = m1 + m2;
                    for j in table.sectors(m) {
                        let x = extremal_coefficient(&lf, j1, j2, j, m1, m2);
                        let y = table.get(j, m, m1, m2);
                        assert!((x - y).abs() < 1e-12, "{a} {b} J={j} m1={m1} m2={m2}: {x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn orthonormality_and_completeness_small_pairs() {
        for n_tot in 0..=12i64 {
            for a in 0..=n_tot {
                let table = CgTable::new(h(a), h(n_tot - a));
                check_unitary(&table);
            }
        }
    }

    #[test]
    fn orthonormality_at_total_spin_one_hundred() {
        for (a, b) in [(100, 100), (150, 50), (199, 1)] {
            check_unitary(&CgTable::new(h(a), h(b)));
        }
    }

    fn check_unitary(table: &CgTable) {
        let j_max = table.j1() + table.j2();
        for k in 0..=j_max.twice() {
            let m = -j_max + HalfInt::from_int(k);
            let sectors = table.sectors(m);
            let basis = table.basis(m);
            for &ja in &sectors {
                for &jb in &sectors {
                    let s: f64 =
                        basis.iter().map(|&(m1, m2)| table.get(ja, m, m1, m2) * table.get(jb, m, m1, m2)).sum();
                    let want = if ja == jb { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12);
                }
            }
            for &(a1, a2) in &basis {
                for &(b1, b2) in &basis {
                    let s: f64 = sectors.iter().map(|&j| table.get(j, m, a1, a2) * table.get(j, m, b1, b2)).sum();
                    let want = if a1 == b1 { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12);
                }
            }
        }
    }
}
