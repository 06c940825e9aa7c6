#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spindomains::lindblad::BlockedDensityMatrix;
use spindomains::spin::{BlockLayout, SpinDomain};

pub fn pair(n1: u32, n2: u32) -> (SpinDomain, SpinDomain) {
    (SpinDomain::new(n1), SpinDomain::new(n2))
}

/// `J⁻` of a spin with `n` spin-½ members, basis `m = n/2, n/2 - 1, ...`.
fn lowering(n: u32) -> DMatrix<f64> {
    let d = n as usize + 1;
    let j = n as f64 / 2.0;
    DMatrix::from_fn(d, d, |r, c| {
        let m = j - c as f64;
        if r == c + 1 {
            ((j + m) * (j - m + 1.0)).sqrt()
        } else {
            0.0
        }
    })
}

/// Dense `(J₁⁻ ⊗ 1, 1 ⊗ J₂⁻)` on the product basis ordered `m1` descending,
/// then `m2` descending.
pub fn dense_lowering(n1: u32, n2: u32) -> (DMatrix<f64>, DMatrix<f64>) {
    let id1 = DMatrix::<f64>::identity(n1 as usize + 1, n1 as usize + 1);
    let id2 = DMatrix::<f64>::identity(n2 as usize + 1, n2 as usize + 1);
    (lowering(n1).kronecker(&id2), id1.kronecker(&lowering(n2)))
}

/// `J₁ᶻ`, `J₂ᶻ` diagonals in the same basis.
pub fn dense_jz(n1: u32, n2: u32) -> (DMatrix<f64>, DMatrix<f64>) {
    let d2 = n2 as usize + 1;
    let d = (n1 as usize + 1) * d2;
    let z1 = DMatrix::from_fn(d, d, |r, c| if r == c { n1 as f64 / 2.0 - (r / d2) as f64 } else { 0.0 });
    let z2 = DMatrix::from_fn(d, d, |r, c| if r == c { n2 as f64 / 2.0 - (r % d2) as f64 } else { 0.0 });
    (z1, z2)
}

/// Column-major superoperator of `X ↦ A X B`.
fn sandwich(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    b.transpose().kronecker(a)
}

/// Dense Liouvillian in `τ = γt` acting on column-major `vec(ρ)`.
pub fn liouvillian(n1: u32, n2: u32, nbar: f64) -> DMatrix<f64> {
    let (a, b) = dense_lowering(n1, n2);
    let jm = a + b;
    let jp = jm.transpose();
    let d = jm.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let dissipator = |a: &DMatrix<f64>| {
        let ad = a.transpose();
        let ada = &ad * a;
        sandwich(a, &ad) * 2.0 - sandwich(&ada, &id) - sandwich(&id, &ada)
    };
    dissipator(&jm) * (nbar + 1.0) + dissipator(&jp) * nbar
}

pub fn vec_of(m: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &nalgebra::DVector<f64>, d: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// A random physical state that is block diagonal in `M`: every block is
/// `A A†` for a random complex `A`, and the whole is normalized.
pub fn random_block_state(n1: u32, n2: u32, seed: u64) -> BlockedDensityMatrix {
    let layout = Arc::new(BlockLayout::new(pair(n1, n2)));
    let hi = layout.block_count() - 1;
    let mut rho = BlockedDensityMatrix::zeros(layout.clone(), 0, hi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::new();
    let mut total = 0.0;
    for k in 0..=hi {
        let d = layout.block(k).dim();
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let b = &a * a.adjoint();
        total += b.trace().re;
        blocks.push(b);
    }
    for (k, b) in blocks.iter().enumerate() {
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                let mut z = b[(i, j)] / total;
                if i == j {
                    z.im = 0.0;
                }
                rho.set_entry(k, i, j, z).unwrap();
            }
        }
    }
    rho
}

pub fn max_abs_c(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
