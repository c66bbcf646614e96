//! Least-squares convergence rate `e ≈ C h^rate`.

use serde::Serialize;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of log e against log h; `None` when every error is zero.
    pub rate: Option<f64>,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// True when at least one error was exactly zero.
    pub exact: bool,
    /// Rows that entered the fit.
    pub points: usize,
}

/// Rows with `e = 0` are reported as exact and left out of the fit.
pub fn fit_rate(rows: &[(f64, f64)]) -> Result<RateFit, HarnessError> {
    if let Some(&(h, e)) = rows.iter().find(|(h, e)| !(h.is_finite() && *h > 0.0 && e.is_finite() && *e >= 0.0)) {
        return Err(HarnessError::Fit(format!("row (h = {h}, e = {e}) is not a positive finite pair")));
    }
    let used: Vec<(f64, f64)> = rows.iter().filter(|(_, e)| *e > 0.0).map(|&(h, e)| (h.ln(), e.ln())).collect();
    let exact = used.len() < rows.len();
    if used.is_empty() && exact {
        return Ok(RateFit {
            rate: None,
            residual: 0.0,
            exact,
            points: 0,
        });
    }
    if used.len() < 2 {
        return Err(HarnessError::Fit(format!("need at least two nonzero errors, got {}", used.len())));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(HarnessError::Fit("all mesh sizes are equal".into()));
    }
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = sxy / sxx;
    let residual = (used.iter().map(|p| (p.1 - my - rate * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit {
        rate: Some(rate),
        residual,
        exact,
        points: used.len(),
    })
}
