//! Collective-spin (Dicke) basis arithmetic for two domains.

mod blocks;
mod cg;
mod half;

use serde::{Deserialize, Serialize};

pub use blocks::{apply_collective_lower, BlockBasis, BlockLayout, TransitionMap, Tridiagonal};
pub use cg::{cg_coefficient, CgTable, LnFactorials};
pub(crate) use cg::{extremal_coefficient, CgBlock};
pub use half::HalfInt;

use crate::error::{Error, Result};

/// A domain of `n_spins` spin-1/2 particles in its symmetric sector,
/// i.e. a collective spin of magnitude `j = n_spins / 2`.
///
/// `n_spins = 0` is an absent domain with a single basis state `m = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinDomain {
    n_spins: u32,
}

impl SpinDomain {
    pub const fn new(n_spins: u32) -> Self {
        SpinDomain { n_spins }
    }

    pub const fn n_spins(self) -> u32 {
        self.n_spins
    }

    pub const fn j(self) -> HalfInt {
        HalfInt::from_twice(self.n_spins as i64)
    }

    pub const fn dim(self) -> usize {
        self.n_spins as usize + 1
    }

    pub fn contains(self, m: HalfInt) -> bool {
        m.abs() <= self.j() && m.same_parity(self.j())
    }

    /// Projections from `+j` down to `-j`.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.j().twice();
        (0..=self.n_spins as i64).map(move |k| HalfInt::from_twice(j - 2 * k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Raise,
    Lower,
}

/// `<j, m±1| J^± |j, m>`, zero when `m±1` falls off the ladder.
pub fn ladder_element(j: HalfInt, m: HalfInt, direction: Direction) -> Result<f64> {
    if j < HalfInt::ZERO || m.abs() > j || !m.same_parity(j) {
        return Err(Error::out_of_range(j, m));
    }
    Ok(ladder_unchecked(j.twice(), m.twice(), direction))
}

/// Same as [`ladder_element`] on twice-values, for callers that already
/// validated `(j, m)`.
#[inline]
pub(crate) fn ladder_unchecked(j2: i64, m2: i64, direction: Direction) -> f64 {
    // 4 [j(j+1) - m(m±1)] = j2 (j2 + 2) - m2 (m2 ± 2)
    let step = match direction {
        Direction::Raise => 2,
        Direction::Lower => -2,
    };
    if (m2 + step).abs() > j2 {
        return 0.0;
    }
    let four_x = j2 * (j2 + 2) - m2 * (m2 + step);
    (four_x as f64).sqrt() / 2.0
}

/// A basis state `|j1, m1> ⊗ |j2, m2>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductBasisIndex {
    pub m1: HalfInt,
    pub m2: HalfInt,
}

impl ProductBasisIndex {
    pub fn new(domains: (SpinDomain, SpinDomain), m1: HalfInt, m2: HalfInt) -> Result<Self> {
        if !domains.0.contains(m1) {
            return Err(Error::out_of_range(domains.0.j(), m1));
        }
        if !domains.1.contains(m2) {
            return Err(Error::out_of_range(domains.1.j(), m2));
        }
        Ok(ProductBasisIndex { m1, m2 })
    }

    pub fn total(self) -> HalfInt {
        self.m1 + self.m2
    }
}

/// Initial product configuration of the two domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialConfig {
    /// Both domains fully excited, `(j1, j2)`.
    Parallel,
    /// Domain 1 excited, domain 2 in its ground state, `(j1, -j2)`.
    Antiparallel,
    Custom {
        m1: HalfInt,
        m2: HalfInt,
    },
}

impl InitialConfig {
    pub fn resolve(self, domains: (SpinDomain, SpinDomain)) -> Result<ProductBasisIndex> {
        let (j1, j2) = (domains.0.j(), domains.1.j());
        let (m1, m2) = match self {
            InitialConfig::Parallel => (j1, j2),
            InitialConfig::Antiparallel => (j1, -j2),
            InitialConfig::Custom { m1, m2 } => (m1, m2),
        };
        ProductBasisIndex::new(domains, m1, m2)
    }

    pub fn label(self) -> String {
        match self {
            InitialConfig::Parallel => "parallel".into(),
            InitialConfig::Antiparallel => "antiparallel".into(),
            InitialConfig::Custom { m1, m2 } => format!("custom(m1={m1},m2={m2})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(twice: i64) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    #[test]
    fn ladder_examples() {
        assert_eq!(ladder_element(h(1), h(-1), Direction::Raise).unwrap(), 1.0);
        assert_eq!(ladder_element(h(1), h(1), Direction::Raise).unwrap(), 0.0);
        let v = ladder_element(h(5), h(5), Direction::Lower).unwrap();
        assert!((v - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ladder_element(h(5), h(-5), Direction::Lower).unwrap(), 0.0);
    }

    #[test]
    fn ladder_rejects_invalid_pairs() {
        assert!(ladder_element(h(1), h(3), Direction::Raise).is_err());
        assert!(ladder_element(h(2), h(1), Direction::Raise).is_err());
        assert!(ladder_element(h(-2), h(0), Direction::Raise).is_err());
    }

    #[test]
    fn initial_configs_resolve() {
        let d = (SpinDomain::new(10), SpinDomain::new(10));
        let ap = InitialConfig::Antiparallel.resolve(d).unwrap();
        assert_eq!((ap.m1, ap.m2), (h(10), h(-10)));
        assert_eq!(ap.total(), HalfInt::ZERO);
        let p = InitialConfig::Parallel.resolve(d).unwrap();
        assert_eq!(p.total(), h(20));
        let bad = InitialConfig::Custom { m1: h(12), m2: h(0) };
        assert!(bad.resolve(d).is_err());
        let odd = InitialConfig::Custom { m1: h(1), m2: h(0) };
        assert!(odd.resolve(d).is_err());
    }

    #[test]
    fn empty_domain_has_one_state() {
        let d = SpinDomain::new(0);
        assert_eq!(d.projections().collect::<Vec<_>>(), vec![HalfInt::ZERO]);
        assert_eq!(ladder_element(d.j(), HalfInt::ZERO, Direction::Lower).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn raise_lower_symmetry(n in 0u32..200, k in 0u32..200) {
            let d = SpinDomain::new(n);
            let k = k % (n + 1);
            let m = HalfInt::from_twice(n as i64 - 2 * k as i64);
            let up = ladder_element(d.j(), m, Direction::Raise).unwrap();
            if m < d.j() {
                let down = ladder_element(d.j(), m + HalfInt::ONE, Direction::Lower).unwrap();
                prop_assert_eq!(up, down);
            } else {
                prop_assert_eq!(up, 0.0);
            }
        }
    }
}
