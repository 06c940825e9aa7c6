use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generator::StackedGenerator;
use super::{BlockGenerator, BlockedDensityMatrix};
use crate::error::{Error, Result};
use crate::ode::{integrate, uniform_grid, Flow, IntegrationStats, IntegratorOptions, StepperPolicy, StiffMethod};
use crate::reservoir::ReservoirSpec;
use crate::series::{window_is_steady, EvolveOptions, SeriesMeta, Solver, TimeSeries};

#[derive(Debug, Clone)]
pub struct Evolution {
    pub series: TimeSeries,
    pub final_state: BlockedDensityMatrix,
    pub stats: IntegrationStats,
}

/// Integrates the master equation from `rho0` on `sample_count` uniform
/// samples over `[0, t_max_s]` seconds.
pub fn evolve(
    rho0: &BlockedDensityMatrix,
    res: &ReservoirSpec,
    t_max_s: f64,
    sample_count: usize,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    if !(t_max_s > 0.0) || !t_max_s.is_finite() {
        return Err(Error::validation("t_max_s", "must be a finite value > 0"));
    }
    if sample_count < 2 {
        return Err(Error::validation("sample_count", "need at least two samples"));
    }
    let gamma = res.damping_rate;
    let gen = BlockGenerator::for_state(rho0, res)?;
    let (re0, im0) = gen.embed(rho0)?;
    let complex = im0.iter().any(|&x| x != 0.0);
    let n = re0.len();
    let mut y0 = re0;
    if complex {
        y0.extend_from_slice(&im0);
    }
    let system = StackedGenerator { gen: &gen, complex };
    let (d1, d2) = gen.layout().domains();
    let (n1, n2) = (d1.n_spins(), d2.n_spins());
    let nbar = res.nbar();
    let g = 2.0 * nbar + 1.0;

    let grid: Vec<f64> = uniform_grid(t_max_s * gamma, sample_count);
    let iopts = IntegratorOptions {
        tol: opts.tol,
        h0: 1e-3 / ((n1 + n2 + 1) as f64 * g),
        policy: StepperPolicy::Switching { threshold: 1e3 * g, stiff: StiffMethod::Chebyshev },
        ..Default::default()
    };

    let mut series = TimeSeries::new(
        Solver::Exact,
        SeriesMeta {
            n1,
            n2,
            gamma,
            nbar,
            temperature_k: res.temperature,
            spin_frequency_hz: res.spin_frequency,
            config: rho0.label().to_string(),
            tau_observable: "jz1".into(),
            frame_dependent_coherences: true,
        },
    );
    let threshold = series.steady_threshold(opts.steady.eps);
    let (lo, hi) = gen.block_range();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.monitor_seed);
    let mut final_y = Vec::new();

    let result = integrate(&system, y0, &grid, &iopts, |idx, tau, y| {
        let view = gen.view(&y[..n], complex.then(|| &y[n..]));
        let obs = view.observables()?;
        series.push(tau / gamma, &obs);
        let k = rng.random_range(lo..=hi);
        series.min_eigenvalue.as_mut().expect("exact series").push(view.min_eigenvalue(k).expect("block in range"));
        series.hermiticity_error.as_mut().expect("exact series").push(view.hermiticity_error());

        let last = idx + 1 == grid.len();
        if opts.stop_when_steady
            && window_is_steady(&series.times_s, &series.jz1, &series.jz2, threshold, opts.steady.window, idx)
        {
            series.converged = true;
            series.t_star_s = Some(series.times_s[idx + 1 - opts.steady.window]);
            final_y = y.to_vec();
            return Ok(Flow::Stop);
        }
        if last {
            final_y = y.to_vec();
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
    let im = if complex { final_y.split_off(n) } else { Vec::new() };
    let final_state =
        BlockedDensityMatrix::from_parts(gen.layout().clone(), lo, hi, final_y, im, rho0.label().to_string());
    Ok(Evolution { series, final_state, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::EvolveOptions;
    use crate::spin::{InitialConfig, SpinDomain};

    #[test]
    fn single_spin_closed_form() {
        let rho =
            BlockedDensityMatrix::build_initial(InitialConfig::Parallel, (SpinDomain::new(1), SpinDomain::new(0)))
                .unwrap();
        let res = ReservoirSpec::new(0.0, 1e10, 0.01).unwrap();
        let ev = evolve(&rho, &res, 1000.0, 1001, &EvolveOptions::default()).unwrap();
        let s = &ev.series;
        for (t, jz) in s.times_s.iter().zip(&s.jz1) {
            assert!((jz - (-0.5 + (-0.02 * t).exp())).abs() < 1e-6);
        }
        assert!(s.converged);
        // e^{-2γt}·2γ < 1e-6·γ/2  ⇔  γt > ln(4e6)/2 ≈ 7.6
        let t_star = s.t_star_s.unwrap();
        assert!((700.0..800.0).contains(&t_star), "{t_star}");
    }

    #[test]
    fn short_horizon_is_not_converged() {
        let d = (SpinDomain::new(20), SpinDomain::new(20));
        let rho = BlockedDensityMatrix::build_initial(InitialConfig::Antiparallel, d).unwrap();
        let res = ReservoirSpec::new(0.0, 1e10, 0.01).unwrap();
        let ev = evolve(&rho, &res, 10.0, 101, &EvolveOptions::default()).unwrap();
        assert!(!ev.series.converged);
        assert_eq!(ev.series.len(), 101);
    }

    #[test]
    fn rejects_bad_horizon() {
        let rho =
            BlockedDensityMatrix::build_initial(InitialConfig::Parallel, (SpinDomain::new(1), SpinDomain::new(0)))
                .unwrap();
        let res = ReservoirSpec::new(0.0, 1e10, 0.01).unwrap();
        assert!(matches!(evolve(&rho, &res, 0.0, 10, &EvolveOptions::default()), Err(Error::Validation { .. })));
    }
}
