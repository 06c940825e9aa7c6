//! Scenario runs, steady-state detection, relaxation times and the
//! `τ_N = a/N + b` fit.

mod fit;

use rayon::prelude::*;

use crate::closure::{evolve_closure, initial_moments};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, BlockedDensityMatrix};
use crate::ode::Tolerances;
use crate::oracle;
use crate::reservoir::ReservoirSpec;
use crate::series::{first_steady_window, EvolveOptions, Method, Solver, SteadyCriterion, TimeSeries};
use crate::spin::{InitialConfig, SpinDomain};

pub use fit::{fit_inverse_n, RelaxationFit};

/// Environment variable overriding [`DEFAULT_EXACT_MEMORY_BYTES`].
pub const MEMORY_BUDGET_ENV: &str = "SPINDOMAINS_EXACT_MEMORY_BYTES";
pub const DEFAULT_EXACT_MEMORY_BYTES: u64 = 2 << 30;
/// State-sized buffers alive during an exact run: the state, its
/// derivative, Dormand–Prince stages, Chebyshev recurrences and trial copies.
const WORKING_COPIES: u64 = 24;

pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_SPIN_FREQUENCY: f64 = 1e10;

/// One simulation request. Temperatures are in kelvin here; the file format
/// uses millikelvin.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub n1: u32,
    pub n2: u32,
    pub config: InitialConfig,
    pub temperature_k: f64,
    /// γ in s⁻¹.
    pub gamma: f64,
    /// ω_s / 2π in hertz.
    pub spin_frequency: f64,
    pub method: Method,
    pub t_max_s: f64,
    pub sample_count: usize,
    pub tol: Tolerances,
    pub steady: SteadyCriterion,
}

impl Scenario {
    pub fn new(name: impl Into<String>, n1: u32, n2: u32, config: InitialConfig, method: Method) -> Self {
        Scenario {
            name: name.into(),
            n1,
            n2,
            config,
            temperature_k: 0.0,
            gamma: DEFAULT_GAMMA,
            spin_frequency: DEFAULT_SPIN_FREQUENCY,
            method,
            t_max_s: 1000.0,
            sample_count: 1001,
            tol: Tolerances::default(),
            steady: SteadyCriterion::default(),
        }
    }

    pub fn domains(&self) -> (SpinDomain, SpinDomain) {
        (SpinDomain::new(self.n1), SpinDomain::new(self.n2))
    }

    pub fn reservoir(&self) -> Result<ReservoirSpec> {
        ReservoirSpec::new(self.temperature_k, self.spin_frequency, self.gamma)
    }

    /// Checks every field, and the exact-solver memory estimate against
    /// `memory_budget` bytes.
    pub fn validate_with_budget(&self, memory_budget: u64) -> Result<()> {
        if self.n1 == 0 && self.n2 == 0 {
            return Err(Error::validation("n1", "at least one domain must hold spins"));
        }
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(key, format!("must be a finite value > 0, got {x}")))
            }
        };
        if !(self.temperature_k >= 0.0) || !self.temperature_k.is_finite() {
            return Err(Error::validation("temperature_mk", "must be a finite value >= 0"));
        }
        positive("gamma_hz", self.gamma)?;
        positive("spin_frequency_hz", self.spin_frequency)?;
        positive("t_max_s", self.t_max_s)?;
        positive("rtol", self.tol.rtol)?;
        positive("atol", self.tol.atol)?;
        positive("steady_eps", self.steady.eps)?;
        if self.steady.window == 0 {
            return Err(Error::validation("steady_window", "must be at least 1"));
        }
        if self.sample_count < 2 {
            return Err(Error::validation("sample_count", "need at least two samples"));
        }
        self.config.resolve(self.domains()).map_err(|e| Error::validation("config", e.to_string()))?;
        if self.method != Method::Closure {
            let need = exact_memory_estimate(self.n1, self.n2);
            if need > memory_budget {
                return Err(Error::validation(
                    "method",
                    format!(
                        "exact solver for N1={}, N2={} needs about {} MiB, budget is {} MiB (set {MEMORY_BUDGET_ENV} or use method = \"closure\")",
                        self.n1,
                        self.n2,
                        need >> 20,
                        memory_budget >> 20
                    ),
                ));
            }
        }
        Ok(())
    }

    /// [`Self::validate_with_budget`] with the budget from the environment.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_budget(memory_budget()?)
    }
}

/// Exact-solver memory budget in bytes.
pub fn memory_budget() -> Result<u64> {
    match std::env::var(MEMORY_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::validation(MEMORY_BUDGET_ENV, format!("expected a byte count, got {v:?}"))),
        Err(_) => Ok(DEFAULT_EXACT_MEMORY_BYTES),
    }
}

/// Number of stored real entries of a full blocked density matrix,
/// `Σ_M dim(M)²`.
pub fn blocked_entries(n1: u32, n2: u32) -> u64 {
    let (n1, n2) = (n1 as u64, n2 as u64);
    let cap = n1.min(n2) + 1;
    (0..=n1 + n2).map(|k| (k + 1).min(cap).min(n1 + n2 - k + 1).pow(2)).sum()
}

/// Rough peak heap use of an exact run in bytes.
pub fn exact_memory_estimate(n1: u32, n2: u32) -> u64 {
    blocked_entries(n1, n2) * 8 * WORKING_COPIES
}

/// Runs every solver the scenario asks for, in the order exact, closure.
/// With [`Method::Both`] neither run stops early, so the two series share
/// their sample grid.
pub fn run(scenario: &Scenario) -> Result<Vec<TimeSeries>> {
    scenario.validate()?;
    let res = scenario.reservoir()?;
    let domains = scenario.domains();
    let opts = EvolveOptions {
        tol: scenario.tol,
        steady: scenario.steady,
        stop_when_steady: scenario.method != Method::Both,
        ..Default::default()
    };
    let mut out = Vec::new();
    for &solver in scenario.method.solvers() {
        let mut series = match solver {
            Solver::Exact => {
                let rho = BlockedDensityMatrix::build_initial(scenario.config, domains)?;
                evolve(&rho, &res, scenario.t_max_s, scenario.sample_count, &opts)?.series
            }
            Solver::Closure => {
                let s0 = initial_moments(scenario.config, domains)?;
                let label = scenario.config.label();
                evolve_closure(s0, domains, &res, scenario.t_max_s, scenario.sample_count, &label, &opts)?.series
            }
        };
        series.scenario = Some(scenario.clone());
        out.push(series);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyReport {
    pub converged: bool,
    /// Start of the first quiet window.
    pub t_star_s: Option<f64>,
    /// `(jz1, jz2)` at the end of that window.
    pub values: Option<(f64, f64)>,
}

/// Applies the steady-state criterion to a finished series.
pub fn detect_steady(series: &TimeSeries, window: usize, eps: f64) -> SteadyReport {
    let thr = series.steady_threshold(eps);
    match first_steady_window(&series.times_s, &series.jz1, &series.jz2, thr, window) {
        Some(start) => {
            let end = start + window - 1;
            SteadyReport {
                converged: true,
                t_star_s: Some(series.times_s[start]),
                values: Some((series.jz1[end], series.jz2[end])),
            }
        }
        None => SteadyReport { converged: false, t_star_s: None, values: None },
    }
}

/// Steady `<J1z>` used for the relaxation time: the sector oracle for exact
/// runs at T = 0, the series' own final value otherwise (the closure relaxes
/// to its own fixed point, not the exact one).
pub fn steady_reference(series: &TimeSeries) -> Result<f64> {
    if series.solver == Solver::Exact && series.meta.temperature_k == 0.0 {
        if let Some(sc) = &series.scenario {
            let res = sc.reservoir()?;
            return Ok(oracle::steady_state(sc.domains(), sc.config, &res)?.jz1);
        }
    }
    series.jz1.last().copied().ok_or_else(|| Error::NotConverged("empty series".into()))
}

/// Relaxation time in seconds: the first time the gap `|jz1(t) - jz1_ss|`
/// falls to `1/e` of its initial value, linearly interpolated between
/// samples.
pub fn relaxation_time(series: &TimeSeries) -> Result<f64> {
    relaxation_time_to(series, steady_reference(series)?)
}

/// [`relaxation_time`] against an explicit steady value.
pub fn relaxation_time_to(series: &TimeSeries, jz1_ss: f64) -> Result<f64> {
    if !series.converged {
        return Err(Error::NotConverged("series did not reach a steady state; increase t_max_s".into()));
    }
    let gap: Vec<f64> = series.jz1.iter().map(|x| (x - jz1_ss).abs()).collect();
    let target = gap[0] * (-1.0f64).exp();
    if gap[0] <= target || gap[0] == 0.0 {
        return Ok(series.times_s[0]);
    }
    for i in 1..gap.len() {
        if gap[i] <= target {
            let (t0, t1) = (series.times_s[i - 1], series.times_s[i]);
            let frac = (gap[i - 1] - target) / (gap[i - 1] - gap[i]);
            return Ok(t0 + frac * (t1 - t0));
        }
    }
    Err(Error::NotConverged(format!("gap never fell below 1/e of its initial value {:.3e}", gap[0])))
}

/// One point of a domain-size sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub n: u32,
    pub tau_s: Result<f64>,
}

/// Relaxation times for balanced pairs `N1 = N2 = N`, one job per `N`,
/// returned in ascending `N` whatever order the jobs finish in.
pub fn sweep(base: &Scenario, ns: &[u32]) -> Result<Vec<SweepPoint>> {
    if base.method == Method::Both {
        return Err(Error::validation("method", "a sweep needs a single solver, exact or closure"));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::validation("n", "empty sweep"));
    }
    for &n in &ns {
        let mut sc = base.clone();
        sc.n1 = n;
        sc.n2 = n;
        sc.validate()?;
    }
    let points = ns
        .par_iter()
        .map(|&n| {
            let mut sc = base.clone();
            sc.n1 = n;
            sc.n2 = n;
            sc.name = format!("{}-N{n}", base.name);
            let tau_s = run(&sc).and_then(|s| relaxation_time(&s[0]));
            SweepPoint { n, tau_s }
        })
        .collect();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Observables, SeriesMeta};

    fn series_from(times: &[f64], jz1: &[f64]) -> TimeSeries {
        let mut s = TimeSeries::new(
            Solver::Closure,
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
            },
        );
        for (&t, &j) in times.iter().zip(jz1) {
            s.push(t, &Observables { jz1: j, ..Default::default() });
        }
        s.converged = true;
        s
    }

    #[test]
    fn e_folding_of_an_exponential() {
        let times: Vec<f64> = (0..2001).map(|i| i as f64 * 0.5).collect();
        let jz1: Vec<f64> = times.iter().map(|t| -0.5 + (-0.02 * t).exp()).collect();
        let tau = relaxation_time_to(&series_from(&times, &jz1), -0.5).unwrap();
        // linear interpolation of a convex curve over 0.5 s
        assert!((tau - 50.0).abs() < 1e-3, "{tau}");
    }

    #[test]
    fn stationary_series_has_zero_relaxation_time() {
        let times: Vec<f64> = (0..50).map(f64::from).collect();
        let tau = relaxation_time_to(&series_from(&times, &[-0.5; 50]), -0.5).unwrap();
        assert_eq!(tau, 0.0);
    }

    #[test]
    fn unconverged_series_is_refused() {
        let mut s = series_from(&[0.0, 1.0], &[0.5, 0.4]);
        s.converged = false;
        assert!(matches!(relaxation_time_to(&s, -0.5), Err(Error::NotConverged(_))));
    }

    #[test]
    fn stationary_input_is_steady_from_the_first_window() {
        let times: Vec<f64> = (0..64).map(f64::from).collect();
        let r = detect_steady(&series_from(&times, &[-0.5; 64]), 32, 1e-6);
        assert!(r.converged);
        assert_eq!(r.t_star_s, Some(0.0));
        assert_eq!(r.values, Some((-0.5, 0.0)));
    }

    #[test]
    fn blocked_entry_count() {
        // N1 = N2 = 1: blocks of dimension 1, 2, 1
        assert_eq!(blocked_entries(1, 1), 6);
        assert_eq!(blocked_entries(3, 0), 4);
        let n = 100u64;
        let dense = (n + 1) * (n + 1);
        assert!(blocked_entries(100, 100) < dense * (n + 1));
        assert_eq!(blocked_entries(5, 2), (0..=7u64).map(|k| (k + 1).min(3).min(8 - k).pow(2)).sum::<u64>());
    }

    #[test]
    fn oversized_exact_runs_are_rejected() {
        let sc = Scenario::new("big", 10_000, 100, InitialConfig::Antiparallel, Method::Exact);
        let err = sc.validate_with_budget(DEFAULT_EXACT_MEMORY_BYTES).unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "method"), "{err}");
        let sc = Scenario { method: Method::Closure, ..sc };
        sc.validate_with_budget(DEFAULT_EXACT_MEMORY_BYTES).unwrap();
    }

    #[test]
    fn validation_names_the_key() {
        let mut sc = Scenario::new("x", 4, 4, InitialConfig::Antiparallel, Method::Closure);
        sc.t_max_s = -1.0;
        assert!(matches!(sc.validate_with_budget(1 << 30), Err(Error::Validation { key, .. }) if key == "t_max_s"));
        sc.t_max_s = 10.0;
        sc.gamma = 0.0;
        assert!(matches!(sc.validate_with_budget(1 << 30), Err(Error::Validation { key, .. }) if key == "gamma_hz"));
    }

    #[test]
    fn both_methods_share_the_grid() {
        let mut sc = Scenario::new("pair", 3, 2, InitialConfig::Antiparallel, Method::Both);
        sc.t_max_s = 50.0;
        sc.sample_count = 101;
        let out = run(&sc).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].solver, Solver::Exact);
        assert_eq!(out[0].times_s, out[1].times_s);
        assert_eq!(out[0].len(), 101);
    }

    #[test]
    fn sweep_merges_in_n_order() {
        let mut base = Scenario::new("sw", 0, 0, InitialConfig::Antiparallel, Method::Closure);
        base.t_max_s = 3000.0;
        base.sample_count = 3001;
        let pts = sweep(&base, &[40, 10, 20]).unwrap();
        let ns: Vec<u32> = pts.iter().map(|p| p.n).collect();
        assert_eq!(ns, vec![10, 20, 40]);
        let taus: Vec<f64> = pts.iter().map(|p| *p.tau_s.as_ref().unwrap()).collect();
        assert!(taus[0] > taus[1] && taus[1] > taus[2], "{taus:?}");
    }
}
