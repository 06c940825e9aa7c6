//! Clebsch–Gordan values against exact rational arithmetic, and the
//! collective-spin algebra on every pair with `N1 + N2 <= 12`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use spindomains::spin::{cg_coefficient, ladder_element, CgTable, Direction, HalfInt};

fn fact(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Racah's closed form, returned as `(sign, C²)` exactly. All arguments are
/// twice the physical value.
fn cg_exact(j1: i64, j2: i64, j: i64, m1: i64, m2: i64) -> (i32, BigRational) {
    let m = m1 + m2;
    if (j1 + j2 - j) % 2 != 0 || j > j1 + j2 || j < (j1 - j2).abs() || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return (0, BigRational::zero());
    }
    let h = |x: i64| {
        assert!(x % 2 == 0, "non-integer factorial argument");
        x / 2
    };
    let pre = BigRational::new(
        BigInt::from(j + 1) * fact(h(j + j1 - j2)) * fact(h(j - j1 + j2)) * fact(h(j1 + j2 - j)),
        fact(h(j1 + j2 + j) + 1),
    ) * BigRational::from_integer(
        fact(h(j + m)) * fact(h(j - m)) * fact(h(j1 - m1)) * fact(h(j1 + m1)) * fact(h(j2 - m2)) * fact(h(j2 + m2)),
    );
    let mut sum = BigRational::zero();
    for k in 0.. {
        let args = [k, h(j1 + j2 - j) - k, h(j1 - m1) - k, h(j2 + m2) - k, h(j - j2 + m1) + k, h(j - j1 - m2) + k];
        if args[1] < 0 || args[2] < 0 || args[3] < 0 {
            break;
        }
        if args[4] < 0 || args[5] < 0 {
            continue;
        }
        let den = args.iter().fold(BigInt::one(), |acc, &a| acc * fact(a));
        let term = BigRational::new(BigInt::one(), den);
        sum = if k % 2 == 0 { sum + term } else { sum - term };
    }
    let sign = if sum.is_zero() {
        0
    } else if sum.is_positive() {
        1
    } else {
        -1
    };
    (sign, pre * &sum * &sum)
}

fn h(twice: i64) -> HalfInt {
    HalfInt::from_twice(twice)
}

#[test]
fn coefficients_match_exact_rationals() {
    for nt in 0..=12i64 {
        for a in 0..=nt {
            let (j1, j2) = (a, nt - a);
            let table = CgTable::new(h(j1), h(j2));
            for j in ((j1 - j2).abs()..=j1 + j2).step_by(2) {
                for m1 in (-j1..=j1).step_by(2) {
                    for m2 in (-j2..=j2).step_by(2) {
                        let (sign, sq) = cg_exact(j1, j2, j, m1, m2);
                        let expect = sign as f64 * sq.to_f64().unwrap().sqrt();
                        let direct = cg_coefficient(h(j1), h(j2), h(j), h(m1 + m2), h(m1), h(m2));
                        let tab = table.get(h(j), h(m1 + m2), h(m1), h(m2));
                        assert!(
                            (direct - expect).abs() < 1e-13 && (tab - expect).abs() < 1e-13,
                            "<{j}/2 {}/2 | {j1}/2 {m1}/2; {j2}/2 {m2}/2>: exact {expect}, direct {direct}, table {tab}",
                            m1 + m2
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn exact_oracle_sanity() {
    // <1 0 | 1/2 1/2; 1/2 -1/2> = 1/sqrt 2, <0 0 | 1/2 -1/2; 1/2 1/2> = -1/sqrt 2
    let (s, sq) = cg_exact(1, 1, 2, 1, -1);
    assert_eq!((s, sq), (1, BigRational::new(1.into(), 2.into())));
    let (s, sq) = cg_exact(1, 1, 0, -1, 1);
    assert_eq!((s, sq), (-1, BigRational::new(1.into(), 2.into())));
}

/// Dense `J⁺`, `Jᶻ` for the pair, built from `ladder_element`.
fn collective(n1: i64, n2: i64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (d1, d2) = (n1 as usize + 1, n2 as usize + 1);
    let d = d1 * d2;
    let m_of = |n: i64, i: usize| h(n - 2 * i as i64);
    let mut jp = DMatrix::zeros(d, d);
    let mut jz = DMatrix::zeros(d, d);
    for i1 in 0..d1 {
        for i2 in 0..d2 {
            let c = i1 * d2 + i2;
            let (m1, m2) = (m_of(n1, i1), m_of(n2, i2));
            jz[(c, c)] = (m1 + m2).value();
            if i1 > 0 {
                jp[((i1 - 1) * d2 + i2, c)] += ladder_element(h(n1), m1, Direction::Raise).unwrap();
            }
            if i2 > 0 {
                jp[(i1 * d2 + i2 - 1, c)] += ladder_element(h(n2), m2, Direction::Raise).unwrap();
            }
        }
    }
    (jp, jz)
}

#[test]
fn total_casimir_commutes_with_collective_operators() {
    for nt in 1..=12i64 {
        for n1 in 0..=nt {
            let (jp, jz) = collective(n1, nt - n1);
            let jm = jp.transpose();
            let j2 = &jp * &jm + &jz * &jz - &jz;
            for op in [&jp, &jm, &jz] {
                let comm = &j2 * op - op * &j2;
                let worst = comm.amax();
                assert!(worst < 1e-12, "N1={n1} N2={} [J², ·] = {worst:e}", nt - n1);
            }
            let ladder = &jp * &jm - &jm * &jp - &jz * 2.0;
            assert!(ladder.amax() < 1e-12);
        }
    }
}

#[test]
fn coupled_states_are_casimir_eigenvectors() {
    for (n1, n2) in [(3i64, 2i64), (4, 4), (7, 1), (6, 6)] {
        let (jp, jz) = collective(n1, n2);
        let j2 = &jp * jp.transpose() + &jz * &jz - &jz;
        let table = CgTable::new(h(n1), h(n2));
        let d2 = n2 as usize + 1;
        for jj in ((n1 - n2).abs()..=n1 + n2).step_by(2) {
            for mm in (-jj..=jj).step_by(2) {
                let v = nalgebra::DVector::from_fn((n1 as usize + 1) * d2, |c, _| {
                    let (i1, i2) = (c / d2, c % d2);
                    let (m1, m2) = (n1 - 2 * i1 as i64, n2 - 2 * i2 as i64);
                    table.get(h(jj), h(mm), h(m1), h(m2))
                });
                let jv = h(jj).value();
                let resid = (&j2 * &v - &v * (jv * (jv + 1.0))).amax();
                assert!(resid < 1e-12, "J={jj}/2 M={mm}/2 residual {resid:e}");
            }
        }
    }
}
