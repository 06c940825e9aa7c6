//! Dormand–Prince 5(4) with first-same-as-last, for autonomous systems
//! (the stage abscissae never enter).

use super::{error_norm, OdeScalar, OdeSystem, Tolerances, Trial};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub struct DormandPrince<T> {
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    k5: Vec<T>,
    k6: Vec<T>,
    tmp: Vec<T>,
}

impl<T: OdeScalar> DormandPrince<T> {
    pub fn new(n: usize) -> Self {
        let z = vec![T::from_real(0.0); n];
        DormandPrince { k2: z.clone(), k3: z.clone(), k4: z.clone(), k5: z.clone(), k6: z.clone(), tmp: z }
    }

    /// One trial step from `y` (with `k1 = f(y)`), writing the fifth-order
    /// solution to `y_new` and `f(y_new)` to `f_new`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step<S: OdeSystem<Scalar = T>>(
        &mut self,
        sys: &S,
        y: &[T],
        k1: &[T],
        h: f64,
        tol: &Tolerances,
        y_new: &mut [T],
        f_new: &mut [T],
    ) -> Trial {
        let n = y.len();
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + k1[i].scale(h * A21);
        }
        sys.rhs(tmp, &mut self.k2);

        for i in 0..n {
            tmp[i] = y[i] + (k1[i].scale(A31) + self.k2[i].scale(A32)).scale(h);
        }
        sys.rhs(tmp, &mut self.k3);

        for i in 0..n {
            tmp[i] = y[i] + (k1[i].scale(A41) + self.k2[i].scale(A42) + self.k3[i].scale(A43)).scale(h);
        }
        sys.rhs(tmp, &mut self.k4);

        for i in 0..n {
            tmp[i] = y[i]
                + (k1[i].scale(A51) + self.k2[i].scale(A52) + self.k3[i].scale(A53) + self.k4[i].scale(A54)).scale(h);
        }
        sys.rhs(tmp, &mut self.k5);

        for i in 0..n {
            tmp[i] = y[i]
                + (k1[i].scale(A61)
                    + self.k2[i].scale(A62)
                    + self.k3[i].scale(A63)
                    + self.k4[i].scale(A64)
                    + self.k5[i].scale(A65))
                .scale(h);
        }
        sys.rhs(tmp, &mut self.k6);

        for i in 0..n {
            y_new[i] = y[i]
                + (k1[i].scale(A71)
                    + self.k3[i].scale(A73)
                    + self.k4[i].scale(A74)
                    + self.k5[i].scale(A75)
                    + self.k6[i].scale(A76))
                .scale(h);
        }
        sys.rhs(y_new, f_new);

        for i in 0..n {
            tmp[i] = (k1[i].scale(E1)
                + self.k3[i].scale(E3)
                + self.k4[i].scale(E4)
                + self.k5[i].scale(E5)
                + self.k6[i].scale(E6)
                + f_new[i].scale(E7))
            .scale(h);
        }
        Trial { err: error_norm(tmp, y, y_new, tol), evals: 6, order_exponent: 0.2 }
    }
}
