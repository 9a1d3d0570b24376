use hadamard_dirichlet::manifold::WarpingFunction;
use hadamard_dirichlet::sc_geometry::{
    certify_convexity, embed_sr, first_integral_residual, integrate_sr_ode, second_fundamental_form,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_integral_is_conserved(r0 in 0.5f64..2.0, k in 0.5f64..2.0) {
        let tol = 1e-10;
        let curve = integrate_sr_ode(r0, k, (-8.0 / k, 8.0 / k), tol, 201).unwrap();
        for s in &curve.samples {
            prop_assert!(first_integral_residual(r0, k, s.r, s.theta).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn reflection_symmetry(r0 in 0.5f64..2.0, k in 0.5f64..2.0) {
        let tol = 1e-10;
        let curve = integrate_sr_ode(r0, k, (-6.0, 6.0), tol, 121).unwrap();
        let n = curve.samples.len();
        for i in 0..n / 2 {
            let (a, b) = (curve.samples[i], curve.samples[n - 1 - i]);
            prop_assert!((a.t + b.t).abs() < 1e-12);
            prop_assert!((a.r - b.r).abs() <= 10.0 * tol * a.r.max(1.0));
            prop_assert!((a.theta + b.theta).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn hyperbolic_surfaces_are_flat(r0 in 0.3f64..2.0, k in 0.5f64..2.0, idx in 0usize..201, angle in 0.1f64..3.0) {
        let wf = WarpingFunction::hyperbolic(k, 100.0).unwrap();
        let curve = integrate_sr_ode(r0, k, (-5.0, 5.0), 1e-11, 201).unwrap();
        let form = second_fundamental_form(&wf, r0, k, &curve.samples[idx], &[angle]).unwrap();
        prop_assert!(form.kappa_tt.abs() < 1e-9 && form.kappa_rot.abs() < 1e-9, "{form:?}");
    }

    #[test]
    fn embedding_preserves_radius(r0 in 0.3f64..2.0, t in -3.0f64..3.0, a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let curve = integrate_sr_ode(r0, 1.0, (-3.0, 3.0), 1e-10, 61).unwrap();
        let (r, _) = curve.state_at(t).unwrap();
        let x = embed_sr(&curve, &[a, b], t).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - r).abs() <= 1e-12 * r);
    }
}

#[test]
fn stronger_curvature_gives_positive_minima() {
    let t: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
    let angles: Vec<f64> = (0..10).map(|i| 0.15 + 0.28 * i as f64).collect();
    for q in [1.5, 2.0] {
        let wf = WarpingFunction::sinh_scaled(q, 1.0, 60.0).unwrap();
        let cert = certify_convexity(&wf, 1.0, &t, &angles, 1e-8).unwrap();
        assert!(cert.pass && cert.min_h_tt > 0.0 && cert.min_h_ii > 0.0, "{cert:?}");
    }
}
