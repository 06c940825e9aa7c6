//! Adaptive one-step integrators for autonomous systems `y' = f(y)`.
//!
//! All steppers share one driver that lands exactly on a prescribed grid of
//! sample times and hands every sample to an observer, which may stop the
//! integration early.

mod dopri5;
mod rkc;
mod rosenbrock;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use dopri5::DormandPrince;
pub use rkc::Chebyshev;
pub use rosenbrock::Rosenbrock;

/// Scalars an integrator can carry: `f64` or `Complex64`.
pub trait OdeScalar: ComplexField<RealField = f64> + Copy + Send + Sync {}

impl OdeScalar for f64 {}
impl OdeScalar for Complex64 {}

pub trait OdeSystem {
    type Scalar: OdeScalar;

    fn dim(&self) -> usize;

    fn rhs(&self, y: &[Self::Scalar], dy: &mut [Self::Scalar]);

    /// Upper estimate of the spectral radius of the Jacobian at `y`.
    fn spectral_radius(&self, _y: &[Self::Scalar]) -> Option<f64> {
        None
    }

    fn jacobian(&self, _y: &[Self::Scalar]) -> Option<DMatrix<Self::Scalar>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-8, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StiffMethod {
    /// Second-order Runge–Kutta–Chebyshev; needs `spectral_radius`, suited to
    /// spectra near the negative real axis.
    Chebyshev,
    /// Linearly implicit 2(3) Rosenbrock pair; needs `jacobian`.
    Rosenbrock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepperPolicy {
    DormandPrince,
    Stiff(StiffMethod),
    /// Dormand–Prince while the spectral radius stays at or below
    /// `threshold`, the stiff method above it.
    Switching {
        threshold: f64,
        stiff: StiffMethod,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tol: Tolerances,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub max_chebyshev_stages: usize,
    pub policy: StepperPolicy,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            tol: Tolerances::default(),
            h0: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            max_chebyshev_stages: 400,
            policy: StepperPolicy::DormandPrince,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub stiff_steps: usize,
    pub max_spectral_radius: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Result of one trial step.
pub(crate) struct Trial {
    /// Weighted RMS error estimate; the step is accepted when `<= 1`.
    pub err: f64,
    pub evals: usize,
    /// Exponent of the step-size controller, `1 / (q + 1)`.
    pub order_exponent: f64,
}

/// Weighted RMS norm used by every stepper.
pub(crate) fn error_norm<T: OdeScalar>(err: &[T], y0: &[T], y1: &[T], tol: &Tolerances) -> f64 {
    if err.is_empty() {
        return 0.0;
    }
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.modulus().max(b.modulus());
            let r = e.modulus() / sc;
            r * r
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

/// Integrates `sys` from `grid[0]` through every time in `grid`, which must be
/// strictly increasing. The observer sees the initial state at index 0.
pub fn integrate<S, F>(
    sys: &S,
    y0: Vec<S::Scalar>,
    grid: &[f64],
    opts: &IntegratorOptions,
    mut observer: F,
) -> Result<IntegrationStats>
where
    S: OdeSystem,
    F: FnMut(usize, f64, &[S::Scalar]) -> Result<Flow>,
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::Contract(format!("initial state has {} components, system has {n}", y0.len())));
    }
    if grid.is_empty() {
        return Err(Error::Contract("empty sample grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract("sample grid must be strictly increasing".into()));
    }

    let mut stats = IntegrationStats { t_end: grid[0], ..Default::default() };
    let mut t = grid[0];
    let mut y = y0;
    let mut y_new = y.clone();
    let zero = <S::Scalar as ComplexField>::from_real(0.0);
    let mut f = vec![zero; n];
    let mut f_new = vec![zero; n];
    sys.rhs(&y, &mut f);
    stats.rhs_evals += 1;

    if observer(0, t, &y)? == Flow::Stop {
        return Ok(stats);
    }

    let mut dopri = DormandPrince::new(n);
    let mut chebyshev = Chebyshev::new(n, opts.max_chebyshev_stages);
    let mut rosenbrock = Rosenbrock::new(n);
    let mut h = opts.h0.min(opts.h_max);
    if !(h > 0.0) {
        return Err(Error::Contract("initial step must be positive".into()));
    }

    for (idx, &t_next) in grid.iter().enumerate().skip(1) {
        while t < t_next {
            let remaining = t_next - t;
            let mut h_try = h;
            let mut lands = false;
            if h_try >= remaining {
                h_try = remaining;
                lands = true;
            }

            let stiff = match opts.policy {
                StepperPolicy::DormandPrince => None,
                StepperPolicy::Stiff(method) => Some(method),
                StepperPolicy::Switching { threshold, stiff } => {
                    let rho = sys.spectral_radius(&y).unwrap_or(0.0);
                    stats.max_spectral_radius = stats.max_spectral_radius.max(rho);
                    (rho > threshold).then_some(stiff)
                }
            };

            let trial = match stiff {
                None => dopri.step(sys, &y, &f, h_try, &opts.tol, &mut y_new, &mut f_new),
                Some(StiffMethod::Chebyshev) => {
                    let rho = sys
                        .spectral_radius(&y)
                        .ok_or_else(|| Error::Contract("Chebyshev stepping needs a spectral radius estimate".into()))?;
                    stats.max_spectral_radius = stats.max_spectral_radius.max(rho);
                    let h_stable = chebyshev.max_stable_step(rho);
                    if h_try > h_stable {
                        h_try = h_stable;
                        lands = false;
                    }
                    chebyshev.step(sys, &y, &f, h_try, rho, &opts.tol, &mut y_new, &mut f_new)
                }
                Some(StiffMethod::Rosenbrock) => {
                    let jac = sys
                        .jacobian(&y)
                        .ok_or_else(|| Error::Contract("Rosenbrock stepping needs a Jacobian".into()))?;
                    rosenbrock
                        .step(sys, &y, &f, &jac, h_try, &opts.tol, &mut y_new, &mut f_new)
                        .map_err(|reason| Error::Integration { t_last_good: t, reason })?
                }
            };
            stats.rhs_evals += trial.evals;

            let err = if trial.err.is_finite() { trial.err } else { f64::INFINITY };
            let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-trial.order_exponent)).clamp(0.1, 10.0) };

            if err <= 1.0 {
                t = if lands { t_next } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut f, &mut f_new);
                stats.accepted += 1;
                if stiff.is_some() {
                    stats.stiff_steps += 1;
                }
                let proposal = (h_try * factor).min(opts.h_max);
                h = if lands { h.max(proposal).min(opts.h_max) } else { proposal };
            } else {
                stats.rejected += 1;
                h = h_try * factor.min(0.5);
            }

            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Integration { t_last_good: t, reason: format!("step size underflow (h = {h:e})") });
            }
            if stats.accepted + stats.rejected > opts.max_steps {
                return Err(Error::Integration {
                    t_last_good: t,
                    reason: format!("exceeded {} steps", opts.max_steps),
                });
            }
        }
        stats.t_end = t;
        if observer(idx, t, &y)? == Flow::Stop {
            break;
        }
    }
    Ok(stats)
}

/// Uniform grid of `count` points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { t_max } else { t_max * i as f64 / last }).collect()
}
