use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qlab_core::counterexample::{
    build_sum, verify_restricted_sum, OrthogonalityReport, ProfileGrids, RestrictedReport, SumRange, SumSummary,
};
use qlab_core::field::{inner_product, Grid2D, MetricField, Polynomial2, PotentialField};
use qlab_core::operator::{assemble, residual, Backend};
use qlab_core::rescale::{classify_case, cover_ball, verify_normalization, BuiltinPotential, CaseDecision, NormalizationReport};
use qlab_core::spectral::{
    build_cluster, interior_eigenpairs, random_unit_coefficients, EigenOptions, EnergyWindow, TorusCluster,
};
use qlab_core::sweep::{
    fit_exponent, run_sweep, Experiment, ScalingReport, SweepConfig, HYPERBOLIC_CERTIFICATE,
};
use qlab_core::BumpProfile;

use crate::config::RunConfig;
use crate::svg::{self, Series};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    CertificateFailure,
}

pub const CSV_HEADER: &str = "h,l2_norm,sup_norm,residual_l2,origin_value,cluster_dim";

/// Largest pairwise relative overlap accepted as orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-12;

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().context("building worker pool")
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// sweep

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config: RunConfig,
    pub verdict: Option<String>,
    pub report: ScalingReport,
}

pub fn records_csv(report: &ScalingReport) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.h,
            r.l2_norm,
            r.sup_norm,
            r.residual_l2,
            cell(r.extra.get("origin_value").copied()),
            r.extra.get("cluster_dim").map(|d| format!("{}", *d as u64)).unwrap_or_default()
        );
    }
    s
}

fn scaling_svg(report: &ScalingReport) -> String {
    let pts: Vec<(f64, f64)> = report.records.iter().map(|r| (r.h.ln(), (r.sup_norm / r.l2_norm).ln())).collect();
    let (cert, uncert): (Vec<_>, Vec<_>) =
        report.records.iter().zip(&pts).partition(|(r, _)| r.certified);
    let mut series = vec![Series {
        label: format!("{} (certified)", report.experiment),
        points: cert.into_iter().map(|(_, p)| *p).collect(),
        line: false,
    }];
    if !uncert.is_empty() {
        series.push(Series { label: "uncertified".into(), points: uncert.into_iter().map(|(_, p)| *p).collect(), line: false });
    }
    let kept: Vec<_> = report.certified().cloned().collect();
    if let Ok(fit) = fit_exponent(&kept) {
        let xs: Vec<f64> = kept.iter().map(|r| r.h.ln()).collect();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        series.push(Series {
            label: format!("fit: slope {:.4}", fit.slope),
            points: vec![(lo, fit.intercept + fit.slope * lo), (hi, fit.intercept + fit.slope * hi)],
            line: true,
        });
    }
    svg::plot(&format!("sup/L2 scaling, {}", report.experiment), "ln h", "ln(sup / L2)", &series)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let name = cfg.experiment.as_deref().ok_or_else(|| anyhow!("sweep needs --experiment"))?;
    let experiment: Experiment = name.parse()?;
    let range = parse_range(&cfg.range)?;
    let sweep_cfg = SweepConfig { width_constant: cfg.cluster_width, grid: cfg.grid, sum_range: range };
    let pool = prepare(cfg)?;
    let report = pool.install(|| run_sweep(experiment, &cfg.h_values(), &sweep_cfg))?;
    let failed = report.has_certificate_failures() || !report.failures.is_empty();
    write_text(&cfg.out, "records.csv", &records_csv(&report))?;
    write_text(&cfg.out, "scaling.svg", &scaling_svg(&report))?;
    for f in &report.failures {
        eprintln!("h = {}: {}", f.h, f.message);
    }
    for r in report.records.iter().filter(|r| !r.certified) {
        eprintln!("h = {}: residual/(h·L2) = {:.4} exceeds {}", r.h, r.residual_ratio(), report.certificate_constant);
    }
    match (&report.exponent, &report.verdict) {
        (Some(e), Some(v)) => println!("{}: exponent {:.4}, {}", experiment, e, v),
        _ => println!("{}: {}", experiment, report.fit_note.as_deref().unwrap_or("no fit")),
    }
    let out = SweepOutput { config: cfg.clone(), verdict: report.verdict.map(|v| v.to_string()), report };
    write_json(&cfg.out, "report.json", &out)?;
    Ok(if failed { Outcome::CertificateFailure } else { Outcome::Success })
}

// classify

fn parse_range(s: &str) -> Result<SumRange> {
    match s {
        "full" => Ok(SumRange::Full),
        "restricted" => Ok(SumRange::Restricted),
        other => bail!("unknown range `{other}` (expected full or restricted)"),
    }
}

fn resolve_potential(cfg: &RunConfig) -> Result<(String, PotentialField<f64>)> {
    match (&cfg.potential, &cfg.coefficients) {
        (Some(_), Some(_)) => bail!("give either --potential or --coefficients, not both"),
        (_, Some(c)) => {
            if c.is_empty() {
                bail!("empty coefficient list");
            }
            Ok((format!("polynomial {c:?}"), PotentialField::from_field(Polynomial2::from_graded(c))))
        }
        (name, None) => {
            let b: BuiltinPotential = name.as_deref().unwrap_or("linear").parse().map_err(|e: String| anyhow!(e))?;
            Ok((b.name().to_string(), b.potential()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationOutput {
    pub config: RunConfig,
    pub potential: String,
    pub normalization: NormalizationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverOutput {
    pub config: RunConfig,
    pub potential: String,
    pub h: f64,
    pub normalization: NormalizationReport,
    pub case_counts: [usize; 4],
    pub certified_squares: usize,
    pub decisions: Vec<CaseDecision>,
}

const CASE_LEGEND: [&str; 4] = ["case 1", "case 2", "case 3", "case 4"];
/// Beyond this many balls the plot switches to a rasterized case map.
const MAX_DRAWN_BALLS: usize = 4000;
const MAP_CELLS: usize = 240;

/// Run-length case classes on a raster of the unit ball, top row first.
fn case_rows(potential: &PotentialField<f64>, h: f64) -> Vec<Vec<(usize, usize, usize)>> {
    let step = 2.0 / MAP_CELLS as f64;
    (0..MAP_CELLS)
        .map(|i| {
            let y = 1.0 - (i as f64 + 0.5) * step;
            let mut runs: Vec<(usize, usize, usize)> = Vec::new();
            for j in 0..MAP_CELLS {
                let x = -1.0 + (j as f64 + 0.5) * step;
                let Ok(d) = classify_case(potential, h, [x, y]) else { continue };
                let class = d.case_id as usize - 1;
                match runs.last_mut() {
                    Some(r) if r.0 + r.1 == j && r.2 == class => r.1 += 1,
                    _ => runs.push((j, 1, class)),
                }
            }
            runs
        })
        .collect()
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Outcome> {
    let (name, potential) = resolve_potential(cfg)?;
    prepare(cfg)?;
    let report = verify_normalization(&MetricField::identity(), &potential);
    if !report.passes() {
        eprintln!("normalization fails for {name}: cond1 {} cond2 {}", report.cond1_ok, report.cond2_ok);
        match report.suggested_c {
            Some(c) => println!("suggested_c = {c}"),
            None => println!("suggested_c = none"),
        }
        write_json(&cfg.out, "normalization.json", &NormalizationOutput { config: cfg.clone(), potential: name, normalization: report })?;
        return Ok(Outcome::CertificateFailure);
    }
    let h = 2f64.powi(-(cfg.k_min as i32));
    let cover = cover_ball(&potential, h)?;
    let counts = cover.case_counts();
    println!("{name}: {} balls at h = {h}, cases {:?}", cover.decisions.len(), counts);
    let title = format!("case cover, {name}, h = {h}");
    let svg = if cover.decisions.len() <= MAX_DRAWN_BALLS {
        let items: Vec<([f64; 2], f64, usize)> =
            cover.decisions.iter().map(|d| (d.center, d.radius, d.case_id as usize - 1)).collect();
        svg::disks(&title, &items, &CASE_LEGEND)
    } else {
        svg::case_map(&format!("{title} ({} balls, case map)", cover.decisions.len()), MAP_CELLS, &case_rows(&potential, h), &CASE_LEGEND)
    };
    write_text(&cfg.out, "cover.svg", &svg)?;
    let out = CoverOutput {
        config: cfg.clone(),
        potential: name,
        h,
        normalization: report,
        case_counts: counts,
        certified_squares: cover.certified_squares,
        decisions: cover.decisions,
    };
    write_json(&cfg.out, "cover.json", &out)?;
    Ok(Outcome::Success)
}

// counterexample

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleEntry {
    pub h: f64,
    pub summary: SumSummary,
    /// `‖h²∂₁∂₂u_h‖ / (h·‖u_h‖)`; certified when at most the symbol bound.
    pub residual_ratio: f64,
    pub certified: bool,
    pub orthogonality_max: f64,
    /// `u_h(0)·h^{1/2}/|ln h|^{1/2}`.
    pub origin_over_log_law: f64,
    pub restricted: RestrictedReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleOutput {
    pub config: RunConfig,
    pub certificate_constant: f64,
    pub orthogonality_tolerance: f64,
    pub entries: Vec<CounterexampleEntry>,
    pub failures: Vec<String>,
}

fn orthogonality_max(o: &OrthogonalityReport) -> f64 {
    o.plain.max(o.hyperbolic).max(o.x1x2).max(o.x1_squared)
}

pub fn cmd_counterexample(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.k_min < 2 {
        bail!("k_min = {} gives h > 1/4, where |ln h| is too small for the sum", cfg.k_min);
    }
    let range = parse_range(&cfg.range)?;
    let pool = prepare(cfg)?;
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles)?;
    let hs = cfg.h_values();
    let results: Vec<Result<CounterexampleEntry, String>> = pool.install(|| {
        hs.par_iter()
            .map(|&h| {
                let sum = build_sum(h, &profiles, &grids, range).map_err(|e| format!("h = {h}: {e}"))?;
                let summary = SumSummary::of(&sum);
                let restricted = verify_restricted_sum(h, &profiles, &grids).map_err(|e| format!("h = {h}: {e}"))?;
                let residual_ratio = summary.hyperbolic_residual / (h * summary.l2_norm);
                Ok(CounterexampleEntry {
                    h,
                    residual_ratio,
                    certified: residual_ratio <= HYPERBOLIC_CERTIFICATE,
                    orthogonality_max: orthogonality_max(&summary.orthogonality),
                    origin_over_log_law: summary.origin_value * h.sqrt() / h.ln().abs().sqrt(),
                    restricted,
                    summary,
                })
            })
            .collect()
    });
    let (mut entries, mut failures) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(m) => failures.push(m),
        }
    }
    let mut failed = !failures.is_empty();
    for e in &entries {
        if !e.certified {
            eprintln!("h = {}: residual ratio {:.4} exceeds {HYPERBOLIC_CERTIFICATE}", e.h, e.residual_ratio);
            failed = true;
        }
        if e.orthogonality_max > ORTHOGONALITY_TOLERANCE {
            eprintln!("h = {}: pieces overlap by {:.3e}", e.h, e.orthogonality_max);
            failed = true;
        }
        println!(
            "h = 2^-{}: u(0) = {:.6}, pieces {}, residual/h = {:.4}, x1^2 u/h (restricted) = {:.4}",
            -(e.h.log2().round() as i64) as u64,
            e.summary.origin_value,
            e.summary.piece_count,
            e.residual_ratio,
            e.restricted.x1_squared_over_h
        );
    }
    for f in &failures {
        eprintln!("{f}");
    }
    if let Some(h) = hs.last() {
        let sum = build_sum(*h, &profiles, &grids, range)?;
        let n = 801;
        let axis = |f: &dyn Fn(f64) -> [f64; 2]| -> Vec<(f64, f64)> {
            (0..n)
                .map(|i| {
                    let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                    (t, sum.value_at(f(t)).re)
                })
                .collect()
        };
        let svg = svg::plot(
            &format!("u_h along the axes, h = {h}"),
            "coordinate",
            "Re u_h",
            &[
                Series { label: "along x1 (x2 = 0)".into(), points: axis(&|t| [t, 0.0]), line: true },
                Series { label: "along x2 (x1 = 0)".into(), points: axis(&|t| [0.0, t]), line: true },
            ],
        );
        write_text(&cfg.out, "profile.svg", &svg)?;
    }
    let out = CounterexampleOutput {
        config: cfg.clone(),
        certificate_constant: HYPERBOLIC_CERTIFICATE,
        orthogonality_tolerance: ORTHOGONALITY_TOLERANCE,
        entries,
        failures,
    };
    write_json(&cfg.out, "counterexample.json", &out)?;
    Ok(if failed { Outcome::CertificateFailure } else { Outcome::Success })
}

// cluster

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub h: f64,
    pub grid: usize,
    /// Lattice modes in the window.
    pub cluster_dim: usize,
    /// Eigenvalues the solver found in the window.
    pub eigen_count: usize,
    pub max_eigen_residual: f64,
    /// `M^{1/2}/(2π)`, attained by the coherent sum.
    pub coherent_sup: f64,
    pub coherent_residual: f64,
    pub random_sup: f64,
    pub random_l2: f64,
    pub random_residual: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub config: RunConfig,
    pub entries: Vec<ClusterEntry>,
    pub failures: Vec<String>,
}

pub fn parse_backend(s: &str) -> Result<Backend> {
    match s {
        "spectral" => Ok(Backend::Spectral),
        "fd" | "finite-difference" => Ok(Backend::FiniteDifference),
        other => bail!("unknown backend `{other}` (expected spectral or fd)"),
    }
}

fn cluster_entry(cfg: &RunConfig, backend: Backend, h: f64, k: u32) -> Result<ClusterEntry> {
    let c = cfg.cluster_width;
    let torus = TorusCluster::new(h, c)?;
    let n = cfg.grid.unwrap_or_else(|| (4 * torus.max_wavenumber() as usize + 4).next_power_of_two().max(16));
    let grid = Grid2D::new(std::f64::consts::PI, n)?;
    let p = assemble(h, &MetricField::identity(), &PotentialField::constant(-1.0), grid, backend)?;
    let max_count = 2 * torus.dimension() + 16;
    let pairs = interior_eigenpairs(&p, EnergyWindow::cluster(c, h), max_count, &EigenOptions::default())?;
    if pairs.is_empty() {
        bail!("no eigenvalues in the window");
    }
    let coeffs = random_unit_coefficients::<f64>(pairs.len(), cfg.seed.wrapping_add(k as u64));
    let (_, w) = build_cluster(h, c, &pairs, &coeffs)?;
    let (res, l2) = residual(&p, &w)?;
    // the eigenfunctions are orthonormal, so ‖w‖ = 1 up to rounding
    let norm = inner_product(&w, &w)?.re.sqrt();
    let max_eigen_residual = pairs.iter().map(|q| q.residual).fold(0.0, f64::max);
    let certified = res <= c * h * norm + max_eigen_residual + 1e-9;
    Ok(ClusterEntry {
        h,
        grid: n,
        cluster_dim: torus.dimension(),
        eigen_count: pairs.len(),
        max_eigen_residual,
        coherent_sup: torus.sup_norm(),
        coherent_residual: torus.residual_l2(),
        random_sup: w.sup_norm(),
        random_l2: l2,
        random_residual: res,
        certified,
    })
}

pub fn cmd_cluster(cfg: &RunConfig) -> Result<Outcome> {
    let backend = parse_backend(&cfg.backend)?;
    let pool = prepare(cfg)?;
    let ks: Vec<u32> = (cfg.k_min..=cfg.k_max).collect();
    let results: Vec<Result<ClusterEntry>> =
        pool.install(|| ks.par_iter().map(|&k| cluster_entry(cfg, backend, 2f64.powi(-(k as i32)), k)).collect());
    let (mut entries, mut failures) = (Vec::new(), Vec::new());
    for (k, r) in ks.iter().zip(results) {
        match r {
            Ok(e) => entries.push(e),
            Err(e) => failures.push(format!("h = 2^-{k}: {e:#}")),
        }
    }
    let mut failed = !failures.is_empty();
    for e in &entries {
        println!(
            "h = {}: {} modes, {} eigenvalues, coherent sup {:.4}, random sup {:.4}",
            e.h, e.cluster_dim, e.eigen_count, e.coherent_sup, e.random_sup
        );
        if !e.certified {
            eprintln!("h = {}: residual {:.3e} exceeds C·h·L2", e.h, e.random_residual);
            failed = true;
        }
    }
    for f in &failures {
        eprintln!("{f}");
    }
    write_json(&cfg.out, "cluster.json", &ClusterOutput { config: cfg.clone(), entries, failures })?;
    Ok(if failed { Outcome::CertificateFailure } else { Outcome::Success })
}

// verify

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Check {
        Check { name: name.into(), value, bound, passed: value <= bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub config: RunConfig,
    pub checks: Vec<Check>,
}

/// Fast invariant checks across the modules.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    prepare(cfg)?;
    let mut checks = Vec::new();

    let h = 2f64.powi(-(cfg.k_min.max(2) as i32));
    let torus = TorusCluster::new(h, cfg.cluster_width)?;
    checks.push(Check::at_most("torus residual / (C h)", torus.residual_l2() / (cfg.cluster_width * h), 1.0));
    let w = torus.synthesize((4 * torus.max_wavenumber() as usize + 4).next_power_of_two())?;
    checks.push(Check::at_most("torus grid vs mode sup", (w.sup_norm() - torus.sup_norm()).abs() / torus.sup_norm(), 1e-10));
    checks.push(Check::at_most("torus grid L2 defect", (w.l2_norm() - 1.0).abs(), 1e-10));

    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles)?;
    let sum = build_sum(h.min(0.25), &profiles, &grids, SumRange::Full)?;
    let s = SumSummary::of(&sum);
    checks.push(Check::at_most("counterexample orthogonality", orthogonality_max(&s.orthogonality), ORTHOGONALITY_TOLERANCE));
    checks.push(Check::at_most(
        "counterexample residual / (h L2)",
        s.hyperbolic_residual / (sum.h() * s.l2_norm),
        HYPERBOLIC_CERTIFICATE,
    ));
    let direct = sum.value_at([0.0, 0.0]).re;
    checks.push(Check::at_most("counterexample origin consistency", (direct - s.origin_value).abs(), 1e-12 * s.origin_value.abs()));

    for b in BuiltinPotential::ALL {
        let r = verify_normalization::<f64>(&MetricField::identity(), &b.potential());
        checks.push(Check { name: format!("normalization {}", b.name()), value: r.cond1_defect, bound: 0.0, passed: r.passes() });
    }

    let failed = checks.iter().any(|c| !c.passed);
    for c in &checks {
        println!("{} {}: {:.3e} (bound {:.3e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    write_json(&cfg.out, "verify.json", &VerifyOutput { config: cfg.clone(), checks })?;
    Ok(if failed { Outcome::CertificateFailure } else { Outcome::Success })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlab_core::sweep::ScalingRecord;

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let mut r = ScalingRecord::new(0.25, 1.0, 2.0, 0.1);
        r.extra.insert("origin_value".into(), 2.0);
        let report_json = serde_json::json!({
            "experiment": "hyperbolic-counterexample",
            "config": {"width_constant": 1.0, "grid": null, "sum_range": "full"},
            "certificate_constant": 2.0,
            "records": [r],
            "failures": [],
            "exponent": null, "exponent_stderr": null, "log_factor_slope": null,
            "log_factor_pvalue": null, "log_factor_t": null, "log_power": null,
            "verdict": null, "fit_note": null
        });
        let report: ScalingReport = serde_json::from_value(report_json).unwrap();
        let csv = records_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0.25,1,2,0.1,2,"));
    }

    #[test]
    fn ranges_and_backends() {
        assert_eq!(parse_range("restricted").unwrap(), SumRange::Restricted);
        assert!(parse_range("half").is_err());
        assert_eq!(parse_backend("fd").unwrap(), Backend::FiniteDifference);
        assert!(parse_backend("gpu").is_err());
    }
}
