//! Exit gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use qlab_core::counterexample::{
    brute_force_totals, build_sum, verify_restricted_sum, OracleSettings, ProfileGrids, SumRange, SumSummary,
};
use qlab_core::field::{Grid2D, GridFunction, MetricField, Polynomial2, PotentialField, SharedField};
use qlab_core::operator::{assemble, cutoff_defect, Backend, RadialCutoff, SemiclassicalOperator};
use qlab_core::rescale::{
    case2_rescale, case_conditions, classify_case, cover_ball, lemma3_rescale, lemma4_rescale, residual_identity,
    BuiltinPotential, Rescaled, Resampling, CASE1_GRADIENT, CASE3_GRADIENT, CASE3_RADIUS, CASE4_RADIUS,
    CASE4_ZERO_DISTANCE,
};
use qlab_core::spectral::{coherent_torus_cluster, interior_eigenpairs, EigenOptions, EnergyWindow, TorusCluster};
use qlab_core::sweep::{dyadic_h_values, ordinary_least_squares, run_sweep, Experiment, SweepConfig};
use qlab_core::BumpProfile;

// criterion 1
const EXPONENT: f64 = -0.5;
const EXPONENT_TOL: f64 = 0.05;
const LOG_T_MAX: f64 = 2.0;
const TORUS_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const OSCILLATOR_GRID: usize = 256;
const EIGENVALUE_TOL: f64 = 0.01;
const SATURATION_TOL: f64 = 0.02;
const OSCILLATOR_BUDGET: Duration = Duration::from_secs(300);
// criterion 3
const ORIGIN_TOL: f64 = 1e-8;
const LOG_LAW_TOL: f64 = 0.10;
const ORIGIN_BUDGET: Duration = Duration::from_secs(30);
// criterion 4
const FROZEN_SLACK: f64 = 1e-9;
// criterion 5
const OVERLAP_TOL: f64 = 1e-12;
const PIECE_NORM_TOL: f64 = 1e-10;
const ORACLE_TOL: f64 = 1e-8;
// criterion 6
const CUTOFF_SLOPE_TOL: f64 = 0.05;
// criterion 7
const RATIO_RANGE: (f64, f64) = (3.5, 4.5);
const ISOMETRY_TOL: f64 = 1e-6;
// criterion 9
const DENSE_TOL: f64 = 1e-9;

type Verdict = (bool, String);

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn sup_norm_law() -> Verdict {
    let t = Instant::now();
    let r = run_sweep(Experiment::TorusCluster, &dyadic_h_values(4, 12), &SweepConfig::default()).expect("torus sweep");
    let elapsed = t.elapsed();
    let (Some(e), Some(tstat)) = (r.exponent, r.log_factor_t) else {
        return (false, format!("no fit: {:?}", r.fit_note));
    };
    let ok = r.records.len() == 9
        && r.records.iter().all(|x| x.certified)
        && (e - EXPONENT).abs() <= EXPONENT_TOL
        && tstat.abs() < LOG_T_MAX
        && elapsed < TORUS_BUDGET;
    (ok, format!("exponent {e:.4}, log-factor t {tstat:.3}, {:.1} s", elapsed.as_secs_f64()))
}

fn oscillator_saturation() -> Verdict {
    let t = Instant::now();
    let cfg = SweepConfig { grid: Some(OSCILLATOR_GRID), ..SweepConfig::default() };
    let r = run_sweep(Experiment::HarmonicGround, &[0.125, 0.0625, 0.03125], &cfg).expect("oscillator sweep");
    let elapsed = t.elapsed();
    let mut worst = (0.0f64, 0.0f64);
    for rec in &r.records {
        // sup·(πh)^{1/2} is 1 for the normalized ground state (πh)^{−1/2}e^{−|x|²/2h}
        worst.0 = worst.0.max(rel(rec.extra["eigenvalue"], 2.0 * rec.h));
        worst.1 = worst.1.max((rec.extra["saturation"] - 1.0).abs());
    }
    let ok = r.failures.is_empty()
        && r.records.len() == 3
        && worst.0 <= EIGENVALUE_TOL
        && worst.1 <= SATURATION_TOL
        && elapsed < OSCILLATOR_BUDGET;
    (
        ok,
        format!(
            "eigenvalue error {:.2e}, sup error {:.2e}, failures {}, {:.1} s",
            worst.0,
            worst.1,
            r.failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn origin_value() -> Verdict {
    let t = Instant::now();
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles).expect("profile grids");
    let mut worst = 0.0f64;
    let mut ratios = Vec::new();
    for k in 6..=16 {
        let h = 2f64.powi(-k);
        let sum = build_sum(h, &profiles, &grids, SumRange::Full).expect("sum");
        let got = sum.value_at_origin().re;
        let want = (1.0 / h).log2().floor().mul_add(1.0, 1.0) / (h.ln().abs().sqrt() * h.sqrt());
        worst = worst.max(rel(got, want));
        ratios.push(got * h.sqrt() / h.ln().abs().sqrt());
    }
    let elapsed = t.elapsed();
    let limit = 1.0 / std::f64::consts::LN_2;
    let monotone = ratios.windows(2).all(|w| (w[1] - limit).abs() < (w[0] - limit).abs());
    let last = *ratios.last().unwrap();
    let ok = worst <= ORIGIN_TOL && monotone && rel(last, limit) <= LOG_LAW_TOL && elapsed < ORIGIN_BUDGET;
    (
        ok,
        format!(
            "formula error {worst:.2e}, monotone {monotone}, ratio at k = 16 {last:.4} vs {limit:.4}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn residual_bounds() -> Verdict {
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles).expect("profile grids");
    let rows: Vec<(f64, f64, f64)> = (6..=16)
        .map(|k| {
            let h = 2f64.powi(-k);
            let s = SumSummary::of(&build_sum(h, &profiles, &grids, SumRange::Full).expect("sum"));
            let r = verify_restricted_sum(h, &profiles, &grids).expect("restricted");
            (s.hyperbolic_residual / h, s.x1x2_norm / h, r.x1_squared_over_h)
        })
        .collect();
    let frozen = rows[0];
    let bound = |c: f64| c * (1.0 + FROZEN_SLACK);
    let ok = rows.iter().all(|r| r.0 <= bound(frozen.0) && r.1 <= bound(frozen.1) && r.2 <= bound(frozen.2));
    let max = rows.iter().fold((0.0f64, 0.0f64, 0.0f64), |a, r| (a.0.max(r.0), a.1.max(r.1), a.2.max(r.2)));
    (
        ok,
        format!(
            "frozen at k = 6: h2d1d2 {:.4}, x1x2 {:.4}, x1^2 (restricted) {:.4}; maxima {:.4}, {:.4}, {:.4}",
            frozen.0, frozen.1, frozen.2, max.0, max.1, max.2
        ),
    )
}

fn orthogonality_and_oracle() -> Verdict {
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles).expect("profile grids");
    let mut overlap = 0.0f64;
    let mut norm_spread = 0.0f64;
    let reference = build_sum(1.0 / 64.0, &profiles, &grids, SumRange::Full).expect("sum").pieces()[0].l2_norm();
    for k in 6..=16 {
        let h = 2f64.powi(-k);
        let sum = build_sum(h, &profiles, &grids, SumRange::Full).expect("sum");
        let n = sum.piece_count();
        for i in 0..n {
            norm_spread = norm_spread.max(rel(sum.pieces()[i].l2_norm(), reference));
            for j in i + 1..n {
                let o = sum.pair_overlaps(i, j);
                overlap = overlap.max(o.plain).max(o.hyperbolic).max(o.x1x2).max(o.x1_squared);
            }
        }
    }
    let mut oracle = 0.0f64;
    for k in 6..=8 {
        let sum = build_sum(2f64.powi(-k), &profiles, &grids, SumRange::Full).expect("sum");
        let b = brute_force_totals(&sum, &OracleSettings::default()).expect("oracle");
        let s = SumSummary::of(&sum);
        let (kp, km) = sum.kt_form_residuals();
        for (a, c) in [
            (b.origin_value.re, s.origin_value),
            (b.l2_norm, s.l2_norm),
            (b.hyperbolic_residual, s.hyperbolic_residual),
            (b.x1x2_norm, s.x1x2_norm),
            (b.x1_squared_norm, s.x1_squared_norm),
            (b.kt_plus, kp),
            (b.kt_minus, km),
        ] {
            oracle = oracle.max(rel(a, c));
        }
    }
    let ok = overlap <= OVERLAP_TOL && norm_spread <= PIECE_NORM_TOL && oracle <= ORACLE_TOL;
    (ok, format!("max overlap {overlap:.2e}, piece norm spread {norm_spread:.2e}, 2D quadrature vs tensor {oracle:.2e}"))
}

fn frequency_cutoff() -> Verdict {
    let chi = RadialCutoff::default();
    let ks: Vec<i32> = (4..=10).collect();
    let ln_h: Vec<f64> = ks.iter().map(|&k| 2f64.powi(-k).ln()).collect();
    // exact values from the lattice modes
    let modes: Vec<f64> = ks
        .iter()
        .map(|&k| {
            let c = TorusCluster::new(2f64.powi(-k), 1.0).expect("cluster");
            c.cutoff_defect(chi) / c.sup_norm()
        })
        .collect();
    let mode_fit = ordinary_least_squares(&ln_h, &modes).expect("fit");
    // the FFT path on sampled clusters, where grids stay small enough
    let fft_ks: Vec<i32> = (4..=8).collect();
    let fft: Vec<f64> = fft_ks
        .iter()
        .map(|&k| {
            let h = 2f64.powi(-k);
            let c = TorusCluster::new(h, 1.0).expect("cluster");
            let n = (2 * c.max_wavenumber() as usize + 2).next_power_of_two();
            let u = coherent_torus_cluster(h, 1.0, n).expect("synthesis");
            cutoff_defect(&u, h, chi) / u.sup_norm()
        })
        .collect();
    let fft_x: Vec<f64> = fft_ks.iter().map(|&k| 2f64.powi(-k).ln()).collect();
    let fft_fit = ordinary_least_squares(&fft_x, &fft).expect("fit");
    let ok = mode_fit.slope.abs() <= CUTOFF_SLOPE_TOL && fft_fit.slope.abs() <= CUTOFF_SLOPE_TOL;
    let max_fft = fft.iter().copied().fold(0.0, f64::max);
    (
        ok,
        format!(
            "slope {:.2e} (modes, k = 4..10), {:.2e} (FFT, k = 4..8); largest relative defect {max_fft:.2e}",
            mode_fit.slope, fft_fit.slope
        ),
    )
}

fn bump(grid: Grid2D<f64>, center: [f64; 2], width: f64) -> GridFunction<f64> {
    GridFunction::from_real_fn(grid, |x| {
        let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
        (-r2 / (2.0 * width * width)).exp() * (1.0 + 0.3 * x[0])
    })
}

fn wavy_metric() -> MetricField<f64> {
    let one_plus = |c: f64| -> SharedField<f64> { Arc::new(Polynomial2::from_terms(&[(0, 0, 1.0), (0, 2, c), (2, 0, c / 2.0)])) };
    let off: SharedField<f64> = Arc::new(Polynomial2::from_terms(&[(1, 1, 0.001)]));
    MetricField::new(one_plus(0.002), off, one_plus(-0.001))
}

/// Relative identity errors and isometry errors at N = 64, 128, 256.
fn refine(map: impl Fn(&GridFunction<f64>, usize) -> Rescaled<f64>, center: [f64; 2], width: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut errs, mut iso) = (Vec::new(), Vec::new());
    for n in [64, 128, 256] {
        let u = bump(Grid2D::new(2.0, n).unwrap(), center, width);
        let r = map(&u, n);
        let id = residual_identity(&u, &wavy_metric(), &r, Backend::FiniteDifference).expect("identity");
        errs.push(id.relative_error);
        iso.push(id.isometry_error.abs());
    }
    (errs, iso)
}

fn rescaling_identities() -> Verdict {
    let metric = wavy_metric();
    let c = 0.25;
    let v4 = PotentialField::from_field(Polynomial2::from_terms(&[(0, 0, c), (1, 0, 0.1 * c)]));
    let h2 = 1.0 / 256.0;
    let v2 = PotentialField::from_field(Polynomial2::from_terms(&[(0, 0, h2 / 2.0), (1, 0, 1.6), (0, 1, -1.2), (1, 1, 0.004)]));
    let runs = [
        (
            "unit-h",
            refine(
                |u, n| lemma3_rescale(u, &metric, 0.25, Grid2D::new(3.0, n).unwrap(), Resampling::BandLimited).unwrap(),
                [0.05, -0.03],
                0.15,
            ),
        ),
        (
            "energy",
            refine(
                |u, n| lemma4_rescale(u, &metric, &v4, 0.25, c, Grid2D::new(3.0, n).unwrap(), Resampling::BandLimited).unwrap(),
                [0.05, -0.03],
                0.15,
            ),
        ),
        (
            "zero-crossing",
            refine(
                |u, n| case2_rescale(u, &metric, &v2, h2, Grid2D::new(2.5, n).unwrap(), Resampling::BandLimited).unwrap(),
                [0.02, -0.03],
                0.12,
            ),
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, (errs, iso)) in &runs {
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
        let conv = ratios.iter().all(|q| (RATIO_RANGE.0..=RATIO_RANGE.1).contains(q));
        // the isometry is exact up to resampling, which converges at least as fast
        let iso_ok = iso[2] <= ISOMETRY_TOL && iso.windows(2).all(|w| w[1] <= 1e-12 || w[0] / w[1] >= RATIO_RANGE.0);
        ok &= conv && iso_ok;
        parts.push(format!("{name} ratios {:.3}/{:.3} isometry {:.1e}", ratios[0], ratios[1], iso[2]));
    }
    (ok, parts.join("; "))
}

fn classifier() -> Verdict {
    let h = 1.0 / 256.0;
    let constants = CASE1_GRADIENT == 8.0
        && CASE3_GRADIENT == 9.0
        && CASE3_RADIUS == 1.0 / 40.0
        && CASE4_ZERO_DISTANCE == 1.0 / 8.0
        && CASE4_RADIUS == 0.9998;
    let n = 400;
    let step = 2.0 / n as f64;
    let samples: Vec<[f64; 2]> = (0..n * n)
        .map(|i| [-1.0 + (i / n) as f64 * step + step / 2.0, -1.0 + (i % n) as f64 * step + step / 2.0])
        .filter(|x| x[0].hypot(x[1]) < 1.0)
        .collect();
    let mut ok = constants;
    let mut parts = Vec::new();
    for b in BuiltinPotential::ALL {
        let v = b.potential::<f64>();
        let (mut errors, mut ties, mut mismatched) = (0usize, 0usize, 0usize);
        let mut counts = [0usize; 4];
        for &x in &samples {
            match classify_case(&v, h, x) {
                Ok(d) => {
                    let g = v.grad_v(x);
                    let cond = case_conditions(v.v(x), g[0].hypot(g[1]), h);
                    if cond.iter().filter(|&&c| c).count() > 1 {
                        ties += 1;
                    }
                    // equalities go to the lower-numbered case
                    if cond.iter().position(|&c| c) != Some(d.case_id as usize - 1) {
                        mismatched += 1;
                    }
                    counts[d.case_id as usize - 1] += 1;
                }
                Err(_) => errors += 1,
            }
        }
        let cover = cover_ball(&v, h).expect("cover");
        let missed = samples.iter().filter(|&&x| !cover.contains(x)).count();
        ok &= errors == 0 && mismatched == 0 && missed == 0;
        parts.push(format!("{} cases {:?} errors {errors} misassigned {mismatched} boundary ties {ties} uncovered {missed}", b.name(), counts));
    }
    (ok, format!("{} samples; constants verbatim {constants}; {}", samples.len(), parts.join("; ")))
}

/// `ḡ^{1/4} P ḡ^{−1/4}` as a dense matrix, column by column.
fn dense(p: &SemiclassicalOperator<f64>) -> DMatrix<f64> {
    let n = p.dim();
    let d: Vec<f64> = p.volume_weights().iter().map(|w| w.sqrt()).collect();
    let mut a = DMatrix::zeros(n, n);
    let (mut e, mut col) = (vec![0.0; n], vec![0.0; n]);
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0 / d[j];
        p.apply_real(&e, &mut col);
        for i in 0..n {
            a[(i, j)] = col[i] * d[i];
        }
    }
    // symmetric up to rounding; average out the rounding
    (&a + a.transpose()) * 0.5
}

fn eigensolver_oracle() -> Verdict {
    use std::f64::consts::PI;
    let trig_metric = {
        let f = |c: f64, a: f64| -> SharedField<f64> { Arc::new(Polynomial2::from_terms(&[(0, 0, c), (2, 0, a), (0, 2, a)])) };
        let off: SharedField<f64> = Arc::new(Polynomial2::from_terms(&[(1, 1, 0.01)]));
        MetricField::new(f(1.0, 0.01), off, f(1.1, -0.01))
    };
    let cases: Vec<(&str, SemiclassicalOperator<f64>, EnergyWindow<f64>)> = vec![
        (
            "N=16 variable metric",
            assemble(
                0.3,
                &trig_metric,
                &PotentialField::from_field(Polynomial2::from_terms(&[(0, 0, -0.6), (2, 0, 0.05), (0, 2, 0.03)])),
                Grid2D::new(2.0, 16).unwrap(),
                Backend::FiniteDifference,
            )
            .unwrap(),
            EnergyWindow { center: 0.1, half_width: 0.4 },
        ),
        (
            "N=32 flat torus",
            assemble(0.25, &MetricField::identity(), &PotentialField::constant(-1.0), Grid2D::new(PI, 32).unwrap(), Backend::Spectral)
                .unwrap(),
            EnergyWindow::cluster(1.0, 0.25),
        ),
        (
            "N=8 oscillator",
            assemble(
                0.25,
                &MetricField::identity(),
                &PotentialField::from_field(Polynomial2::from_terms(&[(0, 0, -1.0), (2, 0, 0.25), (0, 2, 0.25)])),
                Grid2D::new(3.0, 8).unwrap(),
                Backend::FiniteDifference,
            )
            .unwrap(),
            EnergyWindow { center: 0.0, half_width: 0.3 },
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, window) in &cases {
        let mut want: Vec<f64> = SymmetricEigen::new(dense(p)).eigenvalues.iter().copied().filter(|e| window.contains(*e)).collect();
        want.sort_by(f64::total_cmp);
        let got = interior_eigenpairs(p, *window, 128, &EigenOptions::default()).expect("eigensolve");
        let err = if got.len() == want.len() {
            got.iter().zip(&want).map(|(g, w)| (g.value - w).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        ok &= !want.is_empty() && err <= DENSE_TOL;
        parts.push(format!("{name}: {} of {} eigenvalues, max error {err:.1e}", got.len(), want.len()));
    }
    (ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("sup-norm law on the torus", sup_norm_law),
        ("harmonic oscillator saturation", oscillator_saturation),
        ("counterexample origin value", origin_value),
        ("counterexample residual bounds", residual_bounds),
        ("orthogonality and 2D oracle", orthogonality_and_oracle),
        ("frequency cutoff defect", frequency_cutoff),
        ("rescaling identities", rescaling_identities),
        ("case classifier", classifier),
        ("eigensolver vs dense oracle", eigensolver_oracle),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (passed, detail) = match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {detail} [{:.1} s]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
