//! Four-moment closure of the two-domain dynamics.
//!
//! The state is `(<J1z>, <J2z>, <A12>, <J1z J2z>)` with
//! `A12 = J1+ J2- + J1- J2+`. Third-order moments are factorized into
//! products of these, which is exact at t = 0 for product states and
//! increasingly accurate for large domains. Nothing here depends on the
//! Hilbert-space dimension, so N = 10^4 costs the same as N = 10.

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{
    integrate, uniform_grid, Flow, IntegrationStats, IntegratorOptions, OdeSystem, StepperPolicy, StiffMethod,
};
use crate::reservoir::ReservoirSpec;
use crate::series::{window_is_steady, EvolveOptions, Observables, SeriesMeta, Solver, TimeSeries};
use crate::spin::{InitialConfig, SpinDomain};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentState {
    pub jz1: f64,
    pub jz2: f64,
    pub a12: f64,
    pub jz1jz2: f64,
}

impl MomentState {
    pub fn to_array(self) -> [f64; 4] {
        [self.jz1, self.jz2, self.a12, self.jz1jz2]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        MomentState { jz1: v[0], jz2: v[1], a12: v[2], jz1jz2: v[3] }
    }

    /// `a12 + 2 jz1jz2 = 2 <J1·J2>`, constant along closure trajectories.
    pub fn exchange_invariant(self) -> f64 {
        self.a12 + 2.0 * self.jz1jz2
    }

    pub fn observables(self) -> Observables {
        Observables { jz1: self.jz1, jz2: self.jz2, a12: self.a12, jz1jz2: self.jz1jz2, jtot2: None, trace: None }
    }
}

/// Moments of the product state selected by `config`.
pub fn initial_moments(config: InitialConfig, domains: (SpinDomain, SpinDomain)) -> Result<MomentState> {
    let idx = config.resolve(domains)?;
    let (m1, m2) = (idx.m1.value(), idx.m2.value());
    Ok(MomentState { jz1: m1, jz2: m2, a12: 0.0, jz1jz2: m1 * m2 })
}

/// Closure equations in units of γ, with `g = 2n̄ + 1`.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    g: f64,
    /// `N_a (N_a + 2)` for each domain.
    c1: f64,
    c2: f64,
}

impl Coefficients {
    fn new(domains: (SpinDomain, SpinDomain), res: &ReservoirSpec) -> Self {
        let (n1, n2) = (domains.0.n_spins() as f64, domains.1.n_spins() as f64);
        Coefficients { g: 2.0 * res.nbar() + 1.0, c1: n1 * (n1 + 2.0), c2: n2 * (n2 + 2.0) }
    }

    fn rhs(&self, x: &[f64; 4]) -> [f64; 4] {
        let [j1, j2, a, c] = *x;
        let g = self.g;
        let dj1 = -2.0 * g * j1 + 0.5 * (-self.c1 + 4.0 * j1 * j1 - 2.0 * a);
        let dj2 = -2.0 * g * j2 + 0.5 * (-self.c2 + 4.0 * j2 * j2 - 2.0 * a);
        let da = -2.0 * g * (a - 4.0 * c) + 2.0 * (j1 + j2) * (a - 2.0 * c) + (self.c2 * j1 + self.c1 * j2);
        [dj1, dj2, da, -0.5 * da]
    }

    fn jacobian(&self, x: &[f64; 4]) -> Matrix4<f64> {
        let [j1, j2, a, c] = *x;
        let g = self.g;
        let s = j1 + j2;
        let row_a =
            [2.0 * (a - 2.0 * c) + self.c2, 2.0 * (a - 2.0 * c) + self.c1, -2.0 * g + 2.0 * s, 8.0 * g - 4.0 * s];
        #[rustfmt::skip]
        let jac = Matrix4::new(
            -2.0 * g + 4.0 * j1, 0.0, -1.0, 0.0,
            0.0, -2.0 * g + 4.0 * j2, -1.0, 0.0,
            row_a[0], row_a[1], row_a[2], row_a[3],
            -0.5 * row_a[0], -0.5 * row_a[1], -0.5 * row_a[2], -0.5 * row_a[3],
        );
        jac
    }
}

/// Time derivative of the moments in s⁻¹.
pub fn closure_rhs(s: &MomentState, domains: (SpinDomain, SpinDomain), res: &ReservoirSpec) -> MomentState {
    let d = Coefficients::new(domains, res).rhs(&s.to_array());
    MomentState::from_array(d.map(|x| x * res.damping_rate))
}

/// Jacobian of [`closure_rhs`] with respect to `(jz1, jz2, a12, jz1jz2)`, in s⁻¹.
pub fn closure_jacobian(s: &MomentState, domains: (SpinDomain, SpinDomain), res: &ReservoirSpec) -> Matrix4<f64> {
    Coefficients::new(domains, res).jacobian(&s.to_array()) * res.damping_rate
}

/// The closure system in τ = γt.
struct ClosureSystem(Coefficients);

impl OdeSystem for ClosureSystem {
    type Scalar = f64;

    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let x = [y[0], y[1], y[2], y[3]];
        dy.copy_from_slice(&self.0.rhs(&x));
    }

    fn spectral_radius(&self, y: &[f64]) -> Option<f64> {
        let x = [y[0], y[1], y[2], y[3]];
        let eig = self.0.jacobian(&x).complex_eigenvalues();
        Some(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    fn jacobian(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        let x = [y[0], y[1], y[2], y[3]];
        let j = self.0.jacobian(&x);
        Some(DMatrix::from_iterator(4, 4, j.iter().copied()))
    }
}

#[derive(Debug, Clone)]
pub struct ClosureEvolution {
    pub series: TimeSeries,
    pub final_state: MomentState,
    pub stats: IntegrationStats,
}

/// Integrates the closure from `s0` on `sample_count` uniform samples over
/// `[0, t_max_s]` seconds. `config` only labels the series.
pub fn evolve_closure(
    s0: MomentState,
    domains: (SpinDomain, SpinDomain),
    res: &ReservoirSpec,
    t_max_s: f64,
    sample_count: usize,
    config: &str,
    opts: &EvolveOptions,
) -> Result<ClosureEvolution> {
    if !(t_max_s > 0.0) || !t_max_s.is_finite() {
        return Err(Error::validation("t_max_s", "must be a finite value > 0"));
    }
    if sample_count < 2 {
        return Err(Error::validation("sample_count", "need at least two samples"));
    }
    if s0.to_array().iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("initial moments", "must be finite"));
    }
    let gamma = res.damping_rate;
    let coeffs = Coefficients::new(domains, res);
    let g = coeffs.g;
    let system = ClosureSystem(coeffs);
    let (n1, n2) = (domains.0.n_spins(), domains.1.n_spins());

    let grid = uniform_grid(t_max_s * gamma, sample_count);
    let iopts = IntegratorOptions {
        tol: opts.tol,
        h0: 1e-3 / ((n1 + n2 + 1) as f64 * g),
        policy: StepperPolicy::Switching { threshold: 1e3 * g, stiff: StiffMethod::Rosenbrock },
        ..Default::default()
    };

    let nbar = res.nbar();
    let mut series = TimeSeries::new(
        Solver::Closure,
        SeriesMeta {
            n1,
            n2,
            gamma,
            nbar,
            temperature_k: res.temperature,
            spin_frequency_hz: res.spin_frequency,
            config: config.to_string(),
            tau_observable: "jz1".into(),
            frame_dependent_coherences: true,
        },
    );
    let threshold = series.steady_threshold(opts.steady.eps);
    let mut last = s0;

    let result = integrate(&system, s0.to_array().to_vec(), &grid, &iopts, |idx, tau, y| {
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalCorruption(format!("non-finite moments at t = {} s", tau / gamma)));
        }
        last = MomentState::from_array([y[0], y[1], y[2], y[3]]);
        series.push(tau / gamma, &last.observables());
        if opts.stop_when_steady
            && window_is_steady(&series.times_s, &series.jz1, &series.jz2, threshold, opts.steady.window, idx)
        {
            series.converged = true;
            series.t_star_s = Some(series.times_s[idx + 1 - opts.steady.window]);
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    });
    let stats = result.map_err(|e| match e {
        Error::Integration { t_last_good, reason } => Error::Integration { t_last_good: t_last_good / gamma, reason },
        other => other,
    })?;
    if !series.converged {
        series.mark_steady(&opts.steady);
    }
    Ok(ClosureEvolution { series, final_state: last, stats })
}
