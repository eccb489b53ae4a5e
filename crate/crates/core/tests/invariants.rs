use num_complex::Complex;
use proptest::prelude::*;
use qlab_core::counterexample::{build_sum, ProfileGrids, SumRange};
use qlab_core::field::{Polynomial2, PotentialField};
use qlab_core::rescale::{case_conditions, classify_case};
use qlab_core::spectral::TorusCluster;
use qlab_core::sweep::{dyadic_h_values, ordinary_least_squares};
use qlab_core::{BumpProfile, Grid2D, GridFunction};

fn point_in_ball() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.999f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classifier_picks_the_lowest_true_condition(
        c in prop::array::uniform6(-0.3..0.3f64),
        k in 2u32..14,
        x in point_in_ball(),
    ) {
        let h = 2f64.powi(-(k as i32));
        let v = PotentialField::from_field(Polynomial2::from_graded(&c));
        let d = classify_case(&v, h, x).unwrap();
        let g = v.grad_v(x);
        let cond = case_conditions(v.v(x), g[0].hypot(g[1]), h);
        prop_assert_eq!(cond.iter().position(|&b| b), Some(d.case_id as usize - 1));
        prop_assert!(d.contains(x));
        prop_assert!(d.radius > 0.0 && d.radius <= 0.5);
    }

    #[test]
    fn spectrum_round_trip(seed in prop::collection::vec(-1.0..1.0f64, 32)) {
        let grid = Grid2D::new(1.5, 16).unwrap();
        let u = GridFunction::from_fn(grid.clone(), |x| {
            let mut z = Complex::new(0.0, 0.0);
            for (i, w) in seed.chunks(2).enumerate() {
                let p = (i % 4) as f64 * x[0] + (i / 4) as f64 * x[1];
                z += Complex::new(w[0], w[1]) * Complex::from_polar(1.0, p);
            }
            z
        });
        let back = GridFunction::from_spectrum(grid, u.spectrum()).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        // midpoint rule: ‖u‖₂ ≤ sup·|box|^{1/2}
        prop_assert!(u.l2_norm() <= u.sup_norm() * 3.0 + 1e-12);
    }

    #[test]
    fn torus_cluster_peaks_at_origin(k in 2i32..7, width in 0.5..3.0f64, x in prop::array::uniform2(-3.0..3.0f64)) {
        let h = 2f64.powi(-k);
        let Ok(w) = TorusCluster::new(h, width) else { return Ok(()) };
        prop_assert!((w.value_at([0.0, 0.0]).norm() - w.sup_norm()).abs() < 1e-12 * w.sup_norm().max(1.0));
        prop_assert!(w.value_at(x).norm() <= w.sup_norm() * (1.0 + 1e-12));
        prop_assert!(w.energies().iter().all(|e| e.abs() <= width * h * (1.0 + 1e-9)));
        prop_assert!(w.residual_l2() <= width * h * (1.0 + 1e-9));
    }

    #[test]
    fn line_fits_are_exact(slope in -3.0..3.0f64, icpt in -5.0..5.0f64, n in 5usize..12) {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + icpt).collect();
        let f = ordinary_least_squares(&x, &y).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((f.intercept - icpt).abs() < 1e-9);
    }

    #[test]
    fn dyadic_values_decrease(a in 0u32..20, len in 0u32..10) {
        let hs = dyadic_h_values(a, a + len);
        prop_assert_eq!(hs.len(), len as usize + 1);
        prop_assert!(hs.windows(2).all(|w| w[1] == w[0] / 2.0));
    }
}

#[test]
fn counterexample_is_largest_at_origin() {
    let profiles = BumpProfile::new();
    let grids = ProfileGrids::resolve(&profiles).unwrap();
    for k in [6, 9] {
        let sum = build_sum(2f64.powi(-k), &profiles, &grids, SumRange::Full).unwrap();
        let peak = sum.value_at_origin();
        assert!(peak.im.abs() < 1e-12 * peak.re);
        assert!((sum.sup_norm() - peak.re).abs() < 1e-12 * peak.re);
        for i in 0..40 {
            let t = i as f64 * 0.37;
            let x = [0.3 * t.cos() * (1.0 + i as f64 / 40.0), 0.2 * (1.7 * t).sin()];
            assert!(sum.value_at(x).norm() <= peak.re * (1.0 + 1e-12), "{x:?}");
        }
    }
}
