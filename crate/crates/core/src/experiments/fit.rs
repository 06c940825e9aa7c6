use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares fit of `τ_N = a/N + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationFit {
    /// `(N, τ_N)` in seconds, ascending in `N`.
    pub taus: Vec<(u32, f64)>,
    /// Seconds times spin count.
    pub a: f64,
    /// Seconds.
    pub b: f64,
    /// Euclidean norm of the residual vector, seconds.
    pub residual_norm: f64,
    pub r_squared: f64,
    pub n_min: u32,
    pub n_max: u32,
}

pub fn fit_inverse_n(taus: &[(u32, f64)]) -> Result<RelaxationFit> {
    let mut taus = taus.to_vec();
    taus.sort_by_key(|&(n, _)| n);
    if taus.iter().any(|&(n, t)| n == 0 || !t.is_finite()) {
        return Err(Error::Fit("need N > 0 and finite relaxation times".into()));
    }
    let mut distinct: Vec<u32> = taus.iter().map(|&(n, _)| n).collect();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct N, got {}", distinct.len())));
    }

    let m = taus.len();
    let x = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 / taus[i].0 as f64 } else { 1.0 });
    let y = DVector::from_iterator(m, taus.iter().map(|&(_, t)| t));
    let coef = x.clone().svd(true, true).solve(&y, 1e-14).map_err(|e| Error::Fit(e.to_string()))?;
    let (a, b) = (coef[0], coef[1]);

    let resid = &y - &x * &coef;
    let ss_res = resid.norm_squared();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };

    Ok(RelaxationFit { n_min: taus[0].0, n_max: taus[m - 1].0, taus, a, b, residual_norm: ss_res.sqrt(), r_squared })
}
