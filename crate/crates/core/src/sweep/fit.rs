use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{ScalingRecord, SweepError};

/// Fits need at least this many records.
pub const MIN_FIT_RECORDS: usize = 5;

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// `slope / slope_stderr`.
    pub t_statistic: f64,
    /// Two-sided p-value for `slope = 0` with `n − 2` degrees of freedom.
    pub p_value: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn ordinary_least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit, SweepError> {
    let n = x.len();
    if n != y.len() || n < MIN_FIT_RECORDS {
        return Err(SweepError::TooFewRecords { needed: MIN_FIT_RECORDS, found: n.min(y.len()) });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(SweepError::Degenerate);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = nf - 2.0;
    let slope_stderr = (sse / dof / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (t_statistic, p_value) = if slope_stderr > 0.0 {
        let t = slope / slope_stderr;
        let dist = StudentsT::new(0.0, 1.0, dof).expect("at least 3 degrees of freedom");
        (t, 2.0 * (1.0 - dist.cdf(t.abs())))
    } else if slope == 0.0 {
        (0.0, 1.0)
    } else {
        (slope.signum() * f64::INFINITY, 0.0)
    };
    Ok(LinearFit { slope, intercept, slope_stderr, t_statistic, p_value, r_squared, points: n })
}

fn normalized_sup(r: &ScalingRecord) -> Result<f64, SweepError> {
    let s = r.sup_norm / r.l2_norm;
    if !(s > 0.0 && s.is_finite() && r.h > 0.0) {
        return Err(SweepError::NonPositive { h: r.h });
    }
    Ok(s)
}

/// OLS of `ln(sup/‖u‖)` on `ln h`; the slope is the growth exponent.
pub fn fit_exponent(records: &[ScalingRecord]) -> Result<LinearFit, SweepError> {
    let x: Vec<f64> = records.iter().map(|r| r.h.ln()).collect();
    let y = records.iter().map(|r| normalized_sup(r).map(f64::ln)).collect::<Result<Vec<_>, _>>()?;
    ordinary_least_squares(&x, &y)
}

/// OLS of `(h^{1/2}·sup/‖u‖)²` on `ln(1/h)`. A positive significant slope
/// means logarithmically corrected growth; zero slope means a pure power.
pub fn test_log_factor(records: &[ScalingRecord]) -> Result<LinearFit, SweepError> {
    let x: Vec<f64> = records.iter().map(|r| -r.h.ln()).collect();
    let y = records.iter().map(|r| normalized_sup(r).map(|s| s * s * r.h)).collect::<Result<Vec<_>, _>>()?;
    ordinary_least_squares(&x, &y)
}

/// OLS of `ln(h^{1/2}·sup/‖u‖)` on `ln(ln(1/h)^{1/2})`: the power of the log
/// factor, 1 for `sup ≈ |ln h|^{1/2} h^{−1/2}`.
pub fn fit_log_power(records: &[ScalingRecord]) -> Result<LinearFit, SweepError> {
    let x: Vec<f64> = records.iter().map(|r| 0.5 * (-r.h.ln()).ln()).collect();
    let y = records.iter().map(|r| normalized_sup(r).map(|s| (s * r.h.sqrt()).ln())).collect::<Result<Vec<_>, _>>()?;
    ordinary_least_squares(&x, &y)
}
