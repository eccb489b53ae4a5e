//! Families of quasimodes over dyadic `h`, with power-law and log-factor fits.

mod experiments;
mod fit;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexample::SumRange;

pub use experiments::{ELLIPTIC_CURVATURE, ZERO_CROSSING_CURVATURE};
pub use fit::{fit_exponent, fit_log_power, ordinary_least_squares, test_log_factor, LinearFit, MIN_FIT_RECORDS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("fits need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("all abscissae coincide; the fit is degenerate")]
    Degenerate,
    #[error("sup norm or h not positive at h = {h}")]
    NonPositive { h: f64 },
    #[error("h values must be strictly decreasing and at most 1/4")]
    InvalidH,
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
}

/// The symbol `h²ξ₁ξ₂` is at most `2h` on every frequency box of the
/// counterexample, which bounds its residual by `2h‖u‖`.
pub const HYPERBOLIC_CERTIFICATE: f64 = 2.0;
/// A log factor is reported only if the fitted slope is also this large
/// relative to the mean of `(h^{1/2} sup)²`, so that rounding noise on an
/// exactly flat sequence is not called significant.
const LOG_SLOPE_FLOOR: f64 = 1e-9;
/// Significance level of the log-factor test.
pub const LOG_FACTOR_LEVEL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Coherent cluster on the flat torus with `V ≡ −1`, in mode space.
    TorusCluster,
    /// Oscillator ground state from the eigensolver.
    HarmonicGround,
    /// `V = x₁ + small quadratic`, a frequency-space Airy quasimode.
    ZeroCrossing,
    /// `V = −1 + small quadratic`, a spectrally filtered point source.
    Elliptic,
    /// The log-loss sum for `h²∂₁∂₂` on the tensor path.
    HyperbolicCounterexample,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::TorusCluster,
        Experiment::HarmonicGround,
        Experiment::ZeroCrossing,
        Experiment::Elliptic,
        Experiment::HyperbolicCounterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TorusCluster => "torus-cluster",
            Experiment::HarmonicGround => "harmonic-ground",
            Experiment::ZeroCrossing => "zero-crossing",
            Experiment::Elliptic => "elliptic",
            Experiment::HyperbolicCounterexample => "hyperbolic-counterexample",
        }
    }

    /// Default `k` range for `h = 2^{−k}`. Eigensolver and grid experiments
    /// stay small; the mode-space and tensor paths go further.
    pub fn default_k_range(self) -> (u32, u32) {
        match self {
            Experiment::TorusCluster => (4, 12),
            Experiment::HarmonicGround => (3, 5),
            Experiment::ZeroCrossing | Experiment::Elliptic => (2, 6),
            Experiment::HyperbolicCounterexample => (6, 16),
        }
    }

    /// `C` in the certificate `‖Pu‖ ≤ C h ‖u‖`.
    pub fn certificate_constant(self, cfg: &SweepConfig) -> f64 {
        match self {
            Experiment::HyperbolicCounterexample => HYPERBOLIC_CERTIFICATE,
            _ => cfg.width_constant,
        }
    }

    fn build(self, h: f64, cfg: &SweepConfig) -> Result<ScalingRecord, String> {
        let r = match self {
            Experiment::TorusCluster => experiments::torus_cluster(h, cfg),
            Experiment::HarmonicGround => experiments::harmonic_ground(h, cfg),
            Experiment::ZeroCrossing => experiments::zero_crossing(h, cfg),
            Experiment::Elliptic => experiments::elliptic(h, cfg),
            Experiment::HyperbolicCounterexample => experiments::hyperbolic_counterexample(h, cfg),
        };
        r.map_err(|e| e.to_string())
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| SweepError::UnknownExperiment(s.to_string()))
    }
}

/// Knobs shared by all experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Cluster width `C` in `|E| ≤ Ch`, also the residual certificate.
    pub width_constant: f64,
    /// Points per side; `None` picks a resolution per `h`.
    pub grid: Option<usize>,
    pub sum_range: SumRange,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { width_constant: 1.0, grid: None, sum_range: SumRange::Full }
    }
}

/// One quasimode at one `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub h: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub residual_l2: f64,
    /// `residual_l2 ≤ C h l2_norm`, set by [`run_sweep`].
    pub certified: bool,
    pub extra: BTreeMap<String, f64>,
}

impl ScalingRecord {
    pub fn new(h: f64, l2_norm: f64, sup_norm: f64, residual_l2: f64) -> Self {
        Self { h, l2_norm, sup_norm, residual_l2, certified: true, extra: BTreeMap::new() }
    }

    /// `residual / (h·‖u‖)`.
    pub fn residual_ratio(&self) -> f64 {
        self.residual_l2 / (self.h * self.l2_norm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub h: f64,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    PurePower,
    LogCorrected,
}

impl fmt::Display for GrowthVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthVerdict::PurePower => "pure-power",
            GrowthVerdict::LogCorrected => "log-corrected",
        })
    }
}

/// Records and fits of one sweep. Fits use only certified records and are
/// absent when fewer than [`MIN_FIT_RECORDS`] remain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub experiment: Experiment,
    pub config: SweepConfig,
    pub certificate_constant: f64,
    /// In the order of the requested `h`, largest first.
    pub records: Vec<ScalingRecord>,
    pub failures: Vec<SweepFailure>,
    /// Slope of `ln(sup/‖u‖)` against `ln h`.
    pub exponent: Option<f64>,
    pub exponent_stderr: Option<f64>,
    /// Slope of `(h^{1/2} sup/‖u‖)²` against `ln(1/h)`.
    pub log_factor_slope: Option<f64>,
    pub log_factor_pvalue: Option<f64>,
    pub log_factor_t: Option<f64>,
    /// Power `p` in `h^{1/2} sup ∝ ln(1/h)^{p/2}`.
    pub log_power: Option<f64>,
    pub verdict: Option<GrowthVerdict>,
    /// Why the fits are missing, if they are.
    pub fit_note: Option<String>,
}

impl ScalingReport {
    pub fn certified(&self) -> impl Iterator<Item = &ScalingRecord> {
        self.records.iter().filter(|r| r.certified)
    }

    /// Some record failed its certificate or could not be built.
    pub fn has_certificate_failures(&self) -> bool {
        self.records.iter().any(|r| !r.certified)
    }

    /// `(h^{1/2} sup/‖u‖)` per record, the constant in the sup-norm bound.
    pub fn measured_constants(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sup_norm / r.l2_norm * r.h.sqrt()).collect()
    }
}

/// `h = 2^{−k}` for `k` in `k_min..=k_max`, decreasing.
pub fn dyadic_h_values(k_min: u32, k_max: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(-(k as i32))).collect()
}

/// Builds one record per `h` (in parallel on the current rayon pool), checks
/// each certificate and fits the certified ones. A failing builder leaves a
/// [`SweepFailure`] and the rest of the report intact.
pub fn run_sweep(experiment: Experiment, h_values: &[f64], cfg: &SweepConfig) -> Result<ScalingReport, SweepError> {
    let decreasing = h_values.windows(2).all(|w| w[1] < w[0]);
    if !decreasing || h_values.iter().any(|h| !(*h > 0.0 && *h <= 0.25)) {
        return Err(SweepError::InvalidH);
    }
    let c = experiment.certificate_constant(cfg);
    let built: Vec<(f64, Result<ScalingRecord, String>)> =
        h_values.par_iter().map(|&h| (h, experiment.build(h, cfg))).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (h, r) in built {
        match r {
            Ok(mut rec) => {
                rec.certified = rec.residual_l2 <= c * h * rec.l2_norm;
                records.push(rec);
            }
            Err(message) => failures.push(SweepFailure { h, message }),
        }
    }
    let mut report = ScalingReport {
        experiment,
        config: *cfg,
        certificate_constant: c,
        records,
        failures,
        exponent: None,
        exponent_stderr: None,
        log_factor_slope: None,
        log_factor_pvalue: None,
        log_factor_t: None,
        log_power: None,
        verdict: None,
        fit_note: None,
    };
    let certified: Vec<ScalingRecord> = report.certified().cloned().collect();
    match (fit_exponent(&certified), test_log_factor(&certified)) {
        (Ok(e), Ok(l)) => {
            report.exponent = Some(e.slope);
            report.exponent_stderr = Some(e.slope_stderr);
            report.log_factor_slope = Some(l.slope);
            report.log_factor_pvalue = Some(l.p_value);
            report.log_factor_t = Some(l.t_statistic);
            report.log_power = fit_log_power(&certified).ok().map(|f| f.slope);
            let mean = certified.iter().map(|r| (r.sup_norm / r.l2_norm).powi(2) * r.h).sum::<f64>() / certified.len() as f64;
            let significant = l.p_value < LOG_FACTOR_LEVEL && l.slope > LOG_SLOPE_FLOOR * mean;
            report.verdict = Some(if significant { GrowthVerdict::LogCorrected } else { GrowthVerdict::PurePower });
        }
        (Err(e), _) | (_, Err(e)) => report.fit_note = Some(e.to_string()),
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
