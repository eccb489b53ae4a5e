use super::*;

#[test]
fn names_round_trip() {
    for e in Experiment::ALL {
        assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(json, format!("\"{}\"", e.name()));
    }
    assert!(matches!("nope".parse::<Experiment>(), Err(SweepError::UnknownExperiment(_))));
}

#[test]
fn rejects_bad_h_lists() {
    let cfg = SweepConfig::default();
    assert_eq!(run_sweep(Experiment::TorusCluster, &[0.5, 0.25], &cfg), Err(SweepError::InvalidH));
    assert_eq!(run_sweep(Experiment::TorusCluster, &[0.125, 0.25], &cfg), Err(SweepError::InvalidH));
}

#[test]
fn torus_sweep_is_pure_power() {
    let r = run_sweep(Experiment::TorusCluster, &dyadic_h_values(4, 12), &SweepConfig::default()).unwrap();
    assert_eq!(r.records.len(), 9);
    assert!(r.records.iter().all(|x| x.certified));
    let e = r.exponent.unwrap();
    assert!((e + 0.5).abs() < 0.05, "{e}");
    assert!(r.log_factor_t.unwrap().abs() < 2.0, "{:?}", r.log_factor_t);
    assert_eq!(r.verdict, Some(GrowthVerdict::PurePower));
    // mode count M ~ 2πC/h, so h^{1/2} sup = (Mh)^{1/2}/(2π) → (2π)^{−1/2}
    for c in r.measured_constants() {
        assert!((c * (2.0 * std::f64::consts::PI).sqrt() - 1.0).abs() < 0.2, "{c}");
    }
}

#[test]
fn counterexample_sweep_is_log_corrected() {
    let r = run_sweep(Experiment::HyperbolicCounterexample, &dyadic_h_values(6, 16), &SweepConfig::default()).unwrap();
    assert!(r.failures.is_empty());
    assert!(r.records.iter().all(|x| x.certified), "{:?}", r.records.iter().map(|x| x.residual_ratio()).collect::<Vec<_>>());
    assert_eq!(r.verdict, Some(GrowthVerdict::LogCorrected));
    assert!(r.log_factor_pvalue.unwrap() < 0.01);
    assert!(r.log_factor_t.unwrap() > 10.0);
    let p = r.log_power.unwrap();
    assert!((p - 1.0).abs() < 0.15, "{p}");
}

#[test]
fn uncertified_records_leave_the_fit() {
    let mut r = run_sweep(Experiment::TorusCluster, &dyadic_h_values(4, 10), &SweepConfig::default()).unwrap();
    let base = r.exponent.unwrap();
    // mark two records as failing and refit by hand
    r.records[1].certified = false;
    r.records[4].certified = false;
    let kept: Vec<_> = r.certified().cloned().collect();
    assert_eq!(kept.len(), 5);
    let refit = fit_exponent(&kept).unwrap();
    assert!((refit.slope - base).abs() < 0.05);
    assert!(r.has_certificate_failures());
}

#[test]
fn too_few_records_leave_a_note() {
    let r = run_sweep(Experiment::TorusCluster, &dyadic_h_values(4, 6), &SweepConfig::default()).unwrap();
    assert!(r.exponent.is_none());
    assert!(r.fit_note.as_deref().unwrap().contains("at least 5"));
}

#[test]
fn builder_failures_are_annotated() {
    // a grid far too coarse for the oscillator box makes the eigensolve or
    // the certificate fail without aborting the sweep
    let cfg = SweepConfig { grid: Some(3), ..SweepConfig::default() };
    let r = run_sweep(Experiment::HarmonicGround, &[0.25, 0.125], &cfg).unwrap();
    assert_eq!(r.failures.len(), 2);
    assert!(r.records.is_empty());
}

#[test]
fn harmonic_ground_saturates() {
    let r = run_sweep(Experiment::HarmonicGround, &[0.25, 0.125], &SweepConfig { grid: Some(128), ..SweepConfig::default() }).unwrap();
    for rec in &r.records {
        assert!(rec.certified);
        let s = rec.extra["saturation"];
        assert!((s - 1.0).abs() < 0.02, "{s}");
        assert!((rec.extra["eigenvalue"] / (2.0 * rec.h) - 1.0).abs() < 0.01);
    }
}

#[test]
fn elliptic_quasimode_is_certified() {
    let r = run_sweep(Experiment::Elliptic, &[0.25, 0.125, 0.0625], &SweepConfig::default()).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    for rec in &r.records {
        assert!(rec.certified, "{}", rec.residual_ratio());
        assert!((rec.l2_norm - 1.0).abs() < 1e-10);
        // the filtered delta peaks at its source
        assert!((rec.extra["origin_value"] - rec.sup_norm).abs() < 1e-12 * rec.sup_norm);
    }
    let c = r.measured_constants();
    assert!(c.iter().all(|v| *v > 0.1 && *v < 1.0), "{c:?}");
}

#[test]
fn zero_crossing_quasimode_is_certified() {
    let r = run_sweep(Experiment::ZeroCrossing, &[0.25, 0.125, 0.0625], &SweepConfig::default()).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    for rec in &r.records {
        assert!(rec.certified, "{}", rec.residual_ratio());
    }
    let c = r.measured_constants();
    assert!(c.iter().all(|v| *v < 2.0), "{c:?}");
}

#[test]
fn reports_are_deterministic() {
    let h = dyadic_h_values(4, 9);
    let a = run_sweep(Experiment::TorusCluster, &h, &SweepConfig::default()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_sweep(Experiment::TorusCluster, &h, &SweepConfig::default()).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
