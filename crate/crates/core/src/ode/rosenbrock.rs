//! Linearly implicit Rosenbrock 2(3) pair (the Shampine–Reichelt W-method),
//! L-stable, for small stiff systems with an analytic Jacobian.

use nalgebra::{DMatrix, DVector};

use super::{error_norm, OdeScalar, OdeSystem, Tolerances, Trial};

pub struct Rosenbrock<T> {
    tmp: Vec<T>,
    f1: Vec<T>,
    err: Vec<T>,
}

impl<T: OdeScalar> Rosenbrock<T> {
    pub fn new(n: usize) -> Self {
        let z = vec![T::from_real(0.0); n];
        Rosenbrock { tmp: z.clone(), f1: z.clone(), err: z }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step<S: OdeSystem<Scalar = T>>(
        &mut self,
        sys: &S,
        y: &[T],
        f0: &[T],
        jac: &DMatrix<T>,
        h: f64,
        tol: &Tolerances,
        y_new: &mut [T],
        f_new: &mut [T],
    ) -> Result<Trial, String> {
        let n = y.len();
        let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
        let e32 = 6.0 + std::f64::consts::SQRT_2;

        let w = DMatrix::<T>::identity(n, n) - jac.map(|x| x.scale(h * d));
        let lu = w.lu();
        let solve = |rhs: DVector<T>| lu.solve(&rhs).ok_or_else(|| "singular Rosenbrock iteration matrix".to_string());

        let f0v = DVector::from_column_slice(f0);
        let k1 = solve(f0v.clone())?;

        for i in 0..n {
            self.tmp[i] = y[i] + k1[i].scale(0.5 * h);
        }
        sys.rhs(&self.tmp, &mut self.f1);
        let f1v = DVector::from_column_slice(&self.f1);
        let k2 = solve(&f1v - &k1)? + &k1;

        for i in 0..n {
            y_new[i] = y[i] + k2[i].scale(h);
        }
        sys.rhs(y_new, f_new);
        let f2v = DVector::from_column_slice(f_new);
        let rhs3 = &f2v - (&k2 - &f1v).map(|x| x.scale(e32)) - (&k1 - &f0v).map(|x| x.scale(2.0));
        let k3 = solve(rhs3)?;

        for i in 0..n {
            self.err[i] = (k1[i] - k2[i].scale(2.0) + k3[i]).scale(h / 6.0);
        }
        Ok(Trial { err: error_norm(&self.err, y, y_new, tol), evals: 2, order_exponent: 1.0 / 3.0 })
    }
}
