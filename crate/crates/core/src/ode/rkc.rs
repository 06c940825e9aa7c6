//! Second-order Runge–Kutta–Chebyshev stepping.
//!
//! An `s`-stage step is stable for `h ρ <= β(s) ∝ s²` along the
//! negative real axis, so the cost per unit time grows like `sqrt(ρ)`
//! instead of `ρ`. Suited to generators with (near-)real spectra such as
//! collective dissipators.

use super::{error_norm, OdeScalar, OdeSystem, Tolerances, Trial};

/// Damping of the Chebyshev polynomial. The customary 2/13 leaves the
/// stiffest modes barely damped; the blocked generators here keep those modes
/// populated at the tolerance level, and a heavier damping lets the error
/// estimate settle. Costs about 30% of the stability interval.
const DAMPING: f64 = 5.0;

/// Recurrence coefficients of an `s`-stage step.
#[derive(Debug, Clone)]
struct Coefficients {
    mu1: f64,
    /// `(mu_j, nu_j, mu_tilde_j, gamma_tilde_j)` for `j = 2..=s`.
    stages: Vec<(f64, f64, f64, f64)>,
    /// Length of the real stability interval `[-beta, 0]`.
    beta: f64,
}

impl Coefficients {
    fn new(s: usize) -> Self {
        assert!(s >= 2);
        let w0 = 1.0 + DAMPING / (s * s) as f64;
        let mut t = vec![0.0; s + 1];
        let mut dt = vec![0.0; s + 1];
        let mut ddt = vec![0.0; s + 1];
        t[0] = 1.0;
        t[1] = w0;
        dt[1] = 1.0;
        for j in 2..=s {
            t[j] = 2.0 * w0 * t[j - 1] - t[j - 2];
            dt[j] = 2.0 * t[j - 1] + 2.0 * w0 * dt[j - 1] - dt[j - 2];
            ddt[j] = 4.0 * dt[j - 1] + 2.0 * w0 * ddt[j - 1] - ddt[j - 2];
        }
        let w1 = dt[s] / ddt[s];
        let mut b = vec![0.0; s + 1];
        for j in 2..=s {
            b[j] = ddt[j] / (dt[j] * dt[j]);
        }
        b[0] = b[2];
        b[1] = b[2];
        let a = |j: usize| 1.0 - b[j] * t[j];

        let stages = (2..=s)
            .map(|j| {
                let mu = 2.0 * w0 * b[j] / b[j - 1];
                let nu = -b[j] / b[j - 2];
                let mu_t = 2.0 * w1 * b[j] / b[j - 1];
                let gamma_t = -a(j - 1) * mu_t;
                (mu, nu, mu_t, gamma_t)
            })
            .collect();
        Coefficients { mu1: b[1] * w1, stages, beta: (1.0 + w0) / w1 }
    }
}

pub struct Chebyshev<T> {
    max_stages: usize,
    prev: Vec<T>,
    prev2: Vec<T>,
    cur: Vec<T>,
    f: Vec<T>,
    cache: Vec<Option<Coefficients>>,
}

impl<T: OdeScalar> Chebyshev<T> {
    pub fn new(n: usize, max_stages: usize) -> Self {
        let z = vec![T::from_real(0.0); n];
        Chebyshev {
            max_stages: max_stages.max(2),
            prev: z.clone(),
            prev2: z.clone(),
            cur: z.clone(),
            f: z,
            cache: vec![None; max_stages.max(2) + 1],
        }
    }

    fn coefficients(&mut self, s: usize) -> &Coefficients {
        self.cache[s].get_or_insert_with(|| Coefficients::new(s))
    }

    /// Fewest stages whose stability interval covers `h rho`.
    fn stages_for(&mut self, h: f64, rho: f64) -> usize {
        let z = h * rho;
        let (mut lo, mut hi) = (2, self.max_stages);
        if self.coefficients(hi).beta < z {
            return hi;
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.coefficients(mid).beta >= z {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// Largest step the stage cap allows for spectral radius `rho`.
    pub fn max_stable_step(&mut self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return f64::INFINITY;
        }
        let s = self.max_stages;
        self.coefficients(s).beta / rho
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step<S: OdeSystem<Scalar = T>>(
        &mut self,
        sys: &S,
        y: &[T],
        f0: &[T],
        h: f64,
        rho: f64,
        tol: &Tolerances,
        y_new: &mut [T],
        f_new: &mut [T],
    ) -> Trial {
        let n = y.len();
        let s = self.stages_for(h, rho);
        let coef = self.coefficients(s).clone();

        // Y_{j-2} = prev2, Y_{j-1} = prev
        self.prev2.copy_from_slice(y);
        for i in 0..n {
            self.prev[i] = y[i] + f0[i].scale(coef.mu1 * h);
        }
        for &(mu, nu, mu_t, gamma_t) in &coef.stages {
            sys.rhs(&self.prev, &mut self.f);
            let c0 = 1.0 - mu - nu;
            for i in 0..n {
                self.cur[i] = y[i].scale(c0)
                    + self.prev[i].scale(mu)
                    + self.prev2[i].scale(nu)
                    + self.f[i].scale(mu_t * h)
                    + f0[i].scale(gamma_t * h);
            }
            std::mem::swap(&mut self.prev2, &mut self.prev);
            std::mem::swap(&mut self.prev, &mut self.cur);
        }
        y_new.copy_from_slice(&self.prev);
        sys.rhs(y_new, f_new);

        // est = 0.8 (y_n - y_{n+1}) + 0.4 h (f_n + f_{n+1})
        for i in 0..n {
            self.cur[i] = (y[i] - y_new[i]).scale(0.8) + (f0[i] + f_new[i]).scale(0.4 * h);
        }
        Trial { err: error_norm(&self.cur, y, y_new, tol), evals: s, order_exponent: 1.0 / 3.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The stability polynomial P_s(z) = a_s + b_s T_s(w0 + w1 z) must equal
    /// 1 + z + z²/2 + O(z³), i.e. the method is second order.
    #[test]
    fn stability_polynomial_is_second_order() {
        for s in [2usize, 3, 7, 20, 90] {
            let c = Coefficients::new(s);
            // apply one step to y' = λ y with h = 1 and small λ
            let eval = |z: f64| {
                let mut p2 = 1.0;
                let mut p1 = 1.0 + c.mu1 * z;
                for &(mu, nu, mu_t, gamma_t) in &c.stages {
                    let p = (1.0 - mu - nu) + mu * p1 + nu * p2 + mu_t * z * p1 + gamma_t * z;
                    p2 = p1;
                    p1 = p;
                }
                p1
            };
            for z in [-1e-3, -2e-3] {
                let taylor = 1.0 + z + z * z / 2.0;
                assert!((eval(z) - taylor).abs() < 50.0 * z.abs().powi(3), "s={s} z={z}");
            }
            // stays bounded by one on the whole stability interval
            let beta = c.beta;
            for k in 1..=200 {
                let z = -beta * k as f64 / 200.0;
                assert!(eval(z).abs() <= 1.0 + 1e-9, "s={s} z={z} p={}", eval(z));
            }
        }
    }
}
