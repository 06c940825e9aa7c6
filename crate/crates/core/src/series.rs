//! Sampled observable trajectories shared by both solvers, and the
//! steady-state criterion applied to them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::Scenario;
use crate::ode::Tolerances;

/// Which solver(s) a scenario asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Closure,
    Both,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Closure => "closure",
            Method::Both => "both",
        }
    }

    pub fn solvers(self) -> &'static [Solver] {
        match self {
            Method::Exact => &[Solver::Exact],
            Method::Closure => &[Solver::Closure],
            Method::Both => &[Solver::Exact, Solver::Closure],
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "closure" => Ok(Method::Closure),
            "both" => Ok(Method::Both),
            other => Err(Error::validation("method", format!("expected exact, closure or both, got {other:?}"))),
        }
    }
}

/// The solver that produced a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Closure,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Closure => "closure",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Solver::Exact),
            "closure" => Ok(Solver::Closure),
            other => Err(Error::Parse(format!("unknown solver tag {other:?}"))),
        }
    }
}

/// Expectation values at one instant. `jtot2` and `trace` are only known to
/// the exact solver.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observables {
    pub jz1: f64,
    pub jz2: f64,
    pub a12: f64,
    pub jz1jz2: f64,
    pub jtot2: Option<f64>,
    pub trace: Option<f64>,
}

/// Physical context a series was produced in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub n1: u32,
    pub n2: u32,
    pub gamma: f64,
    pub nbar: f64,
    pub temperature_k: f64,
    pub spin_frequency_hz: f64,
    pub config: String,
    /// Observable the relaxation time is extracted from.
    pub tau_observable: String,
    /// The coherent `J^z` rotation is not integrated, so coherences between
    /// magnetization blocks would only be meaningful in the rotating frame.
    pub frame_dependent_coherences: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub solver: Solver,
    pub meta: SeriesMeta,
    pub times_s: Vec<f64>,
    pub jz1: Vec<f64>,
    pub jz2: Vec<f64>,
    pub jz_sum: Vec<f64>,
    pub a12: Vec<f64>,
    pub jz1jz2: Vec<f64>,
    pub trace: Option<Vec<f64>>,
    pub jtot2: Option<Vec<f64>>,
    /// Smallest eigenvalue of one randomly chosen block per sample.
    pub min_eigenvalue: Option<Vec<f64>>,
    /// Largest `|ρ - ρ†|` entry per sample.
    pub hermiticity_error: Option<Vec<f64>>,
    pub converged: bool,
    pub t_star_s: Option<f64>,
    pub scenario: Option<Scenario>,
}

impl TimeSeries {
    pub fn new(solver: Solver, meta: SeriesMeta) -> Self {
        let exact = solver == Solver::Exact;
        let opt = || exact.then(Vec::new);
        TimeSeries {
            solver,
            meta,
            times_s: Vec::new(),
            jz1: Vec::new(),
            jz2: Vec::new(),
            jz_sum: Vec::new(),
            a12: Vec::new(),
            jz1jz2: Vec::new(),
            trace: opt(),
            jtot2: opt(),
            min_eigenvalue: opt(),
            hermiticity_error: opt(),
            converged: false,
            t_star_s: None,
            scenario: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    pub fn push(&mut self, t_s: f64, obs: &Observables) {
        self.times_s.push(t_s);
        self.jz1.push(obs.jz1);
        self.jz2.push(obs.jz2);
        self.jz_sum.push(obs.jz1 + obs.jz2);
        self.a12.push(obs.a12);
        self.jz1jz2.push(obs.jz1jz2);
        if let (Some(v), Some(x)) = (self.trace.as_mut(), obs.trace) {
            v.push(x);
        }
        if let (Some(v), Some(x)) = (self.jtot2.as_mut(), obs.jtot2) {
            v.push(x);
        }
    }

    pub fn last(&self) -> Option<Observables> {
        let i = self.len().checked_sub(1)?;
        Some(self.at(i))
    }

    pub fn at(&self, i: usize) -> Observables {
        Observables {
            jz1: self.jz1[i],
            jz2: self.jz2[i],
            a12: self.a12[i],
            jz1jz2: self.jz1jz2[i],
            jtot2: self.jtot2.as_ref().and_then(|v| v.get(i).copied()),
            trace: self.trace.as_ref().and_then(|v| v.get(i).copied()),
        }
    }

    /// Checks that times increase strictly and all present arrays agree in length.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.len();
        if self.times_s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("sample times are not strictly increasing".into()));
        }
        let lens = [self.jz1.len(), self.jz2.len(), self.jz_sum.len(), self.a12.len(), self.jz1jz2.len()];
        let optional = [&self.trace, &self.jtot2, &self.min_eigenvalue, &self.hermiticity_error];
        if lens.iter().any(|&l| l != n) || optional.iter().any(|o| o.as_ref().is_some_and(|v| v.len() != n)) {
            return Err(Error::Contract("observable arrays differ in length".into()));
        }
        Ok(())
    }

    /// Derivative threshold in s⁻¹ used by the steady-state criterion.
    pub fn steady_threshold(&self, eps: f64) -> f64 {
        eps * self.meta.gamma * self.meta.n1.max(self.meta.n2) as f64 / 2.0
    }

    /// Applies `criterion` to the whole series and stores the outcome.
    pub fn mark_steady(&mut self, criterion: &SteadyCriterion) {
        let thr = self.steady_threshold(criterion.eps);
        match first_steady_window(&self.times_s, &self.jz1, &self.jz2, thr, criterion.window) {
            Some(start) => {
                self.converged = true;
                self.t_star_s = Some(self.times_s[start]);
            }
            None => {
                self.converged = false;
                self.t_star_s = None;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyCriterion {
    pub eps: f64,
    /// Number of consecutive samples that must all be quiet.
    pub window: usize,
}

impl Default for SteadyCriterion {
    fn default() -> Self {
        SteadyCriterion { eps: 1e-6, window: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
/// Settings shared by both solvers.
pub struct EvolveOptions {
    pub tol: Tolerances,
    pub steady: SteadyCriterion,
    /// Stop at the first sample that completes a quiet window.
    pub stop_when_steady: bool,
    /// Seed for the choice of block whose spectrum is monitored (exact solver).
    pub monitor_seed: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tol: Tolerances::default(),
            steady: SteadyCriterion::default(),
            stop_when_steady: true,
            monitor_seed: 0x5eed,
        }
    }
}

/// True when every finite-difference derivative of both domains over the
/// `window` samples ending at `end` (inclusive) stays below `threshold`.
pub(crate) fn window_is_steady(
    times: &[f64],
    jz1: &[f64],
    jz2: &[f64],
    threshold: f64,
    window: usize,
    end: usize,
) -> bool {
    if window == 0 || end + 1 < window {
        return false;
    }
    let start = end + 1 - window;
    (start..end).all(|i| {
        let dt = times[i + 1] - times[i];
        (jz1[i + 1] - jz1[i]).abs() < threshold * dt && (jz2[i + 1] - jz2[i]).abs() < threshold * dt
    })
}

/// Index of the first sample of the earliest quiet window.
pub(crate) fn first_steady_window(
    times: &[f64],
    jz1: &[f64],
    jz2: &[f64],
    threshold: f64,
    window: usize,
) -> Option<usize> {
    let n = times.len();
    if window == 0 || n < window {
        return None;
    }
    // run-length of consecutive quiet differences ending at each sample
    let mut run = 0usize;
    for i in 1..n {
        let dt = times[i] - times[i - 1];
        let quiet = (jz1[i] - jz1[i - 1]).abs() < threshold * dt && (jz2[i] - jz2[i - 1]).abs() < threshold * dt;
        run = if quiet { run + 1 } else { 0 };
        if run + 1 >= window {
            return Some(i + 1 - window);
        }
    }
    // a one-sample window is trivially quiet
    (window == 1).then_some(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SeriesMeta {
        SeriesMeta {
            n1: 1,
            n2: 0,
            gamma: 0.01,
            nbar: 0.0,
            temperature_k: 0.0,
            spin_frequency_hz: 1e10,
            config: "parallel".into(),
            tau_observable: "jz1".into(),
            frame_dependent_coherences: true,
        }
    }

    #[test]
    fn constant_series_is_steady_from_the_start() {
        let mut s = TimeSeries::new(Solver::Closure, meta());
        for i in 0..40 {
            s.push(i as f64, &Observables { jz1: -0.5, ..Default::default() });
        }
        s.mark_steady(&SteadyCriterion::default());
        assert!(s.converged);
        assert_eq!(s.t_star_s, Some(0.0));
    }

    #[test]
    fn short_series_never_converges() {
        let mut s = TimeSeries::new(Solver::Closure, meta());
        for i in 0..10 {
            s.push(i as f64, &Observables::default());
        }
        s.mark_steady(&SteadyCriterion::default());
        assert!(!s.converged);
    }

    #[test]
    fn sliding_and_pointwise_checks_agree() {
        let times: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let jz1: Vec<f64> = times.iter().map(|t| (-0.05 * t).exp()).collect();
        let jz2 = vec![0.0; times.len()];
        let thr = 1e-3;
        let start = first_steady_window(&times, &jz1, &jz2, thr, 32).unwrap();
        assert!(window_is_steady(&times, &jz1, &jz2, thr, 32, start + 31));
        assert!(!window_is_steady(&times, &jz1, &jz2, thr, 32, start + 30));
    }

    #[test]
    fn exact_series_carry_optional_columns() {
        let mut s = TimeSeries::new(Solver::Exact, meta());
        s.push(0.0, &Observables { trace: Some(1.0), jtot2: Some(0.75), ..Default::default() });
        s.min_eigenvalue.as_mut().unwrap().push(0.0);
        s.hermiticity_error.as_mut().unwrap().push(0.0);
        s.check_shape().unwrap();
        assert_eq!(s.last().unwrap().jtot2, Some(0.75));
    }

    #[test]
    fn method_tags_parse() {
        for m in [Method::Exact, Method::Closure, Method::Both] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("dense".parse::<Method>().is_err());
    }
}
