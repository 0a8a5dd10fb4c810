use cregular::circle::{Arc, CircleGrid};
use cregular::criteria::{
    a2_interval_characteristic, a2_poisson_characteristic, a2_profile, entropy_characteristic, A2Mode,
};
use cregular::factorization::{outer_determinant_check, spectral_factor, subordination_check};
use cregular::harmonic::DiskPoint;
use cregular::linalg::{c, CMat};
use cregular::oscillation::{mean_oscillation_modulus, Symbol};
use cregular::prediction::rho;
use cregular::weight::{MatrixWeight, Provenance};
use cregular::weight_file::{export_weight, parse_weight_str};
use num_complex::Complex64;
use proptest::prelude::*;
use serde_json::json;

const N: usize = 256;

fn coeff() -> impl Strategy<Value = f64> {
    -0.4f64..0.4
}

fn series() -> impl Strategy<Value = serde_json::Value> {
    (coeff(), prop::collection::vec(coeff(), 1..3), prop::collection::vec(coeff(), 1..3))
        .prop_map(|(mean, cos, sin)| json!({"mean": mean, "cos": cos, "sin": sin}))
}

fn weight() -> impl Strategy<Value = MatrixWeight> {
    (series(), series(), series()).prop_map(|(a, b, angle)| {
        MatrixWeight::build_builtin(
            "rotation_conjugate",
            &json!({
                "blocks": [
                    {"name": "scalar_exp_trig", "params": a},
                    {"name": "scalar_exp_trig", "params": b}
                ],
                "angle": angle
            }),
            CircleGrid::new(N).unwrap(),
        )
        .unwrap()
    })
}

fn point() -> impl Strategy<Value = DiskPoint> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| DiskPoint::new(r, t).unwrap())
}

fn unitary(a: f64, b: f64, t: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::from_polar(t.cos(), a),
            Complex64::from_polar(-t.sin(), b),
            Complex64::from_polar(t.sin(), -b),
            Complex64::from_polar(t.cos(), -a),
        ],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristics_are_at_least_one(w in weight(), start in 0usize..N, len in 1usize..N, p in point()) {
        let inv = w.invert();
        let arc = Arc::new(start, len, N).unwrap();
        prop_assert!(a2_interval_characteristic(&w, &inv, &arc).unwrap() >= 1.0 - 1e-12);
        prop_assert!(a2_poisson_characteristic(&w, &inv, p) >= 1.0 - 1e-12);
        prop_assert!(entropy_characteristic(&w, p) >= 1.0 - 1e-10);
    }

    #[test]
    fn fourier_table_is_hermitian(w in weight(), k in 0i64..100) {
        let t = w.fourier();
        let diff = (t.get(-k) - t.get(k).adjoint()).norm();
        prop_assert!(diff < 1e-14);
    }

    #[test]
    fn rho_is_a_correlation_and_congruence_invariant(w in weight(), n in 0usize..8, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let r = rho(&w, n, 8).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&r));
        let m = CMat::from_row_slice(2, 2, &[c(1.5), Complex64::new(a, b), c(0.0), c(0.8)]);
        let samples: Vec<CMat> = w.samples().iter().map(|s| m.adjoint() * s * &m).collect();
        let v = MatrixWeight::from_samples(w.grid(), samples, w.offset_steps(), Provenance::UserGrid).unwrap();
        let r2 = rho(&v, n, 8).unwrap().value;
        prop_assert!((r - r2).abs() < 1e-8, "{} vs {}", r, r2);
    }

    #[test]
    fn factor_checks_are_gauge_invariant(w in weight(), a in 0.0f64..6.0, b in 0.0f64..6.0, t in 0.0f64..6.0, p in point()) {
        let f = spectral_factor(&w, 16).unwrap();
        let g = f.with_gauge(&unitary(a, b, t));
        let pts = [p];
        let x = outer_determinant_check(&f, &w, &pts)[0];
        let y = outer_determinant_check(&g, &w, &pts)[0];
        prop_assert!((x - y).abs() < 1e-10);
        let s1 = subordination_check(&f, &w, &pts);
        let s2 = subordination_check(&g, &w, &pts);
        prop_assert!((s1 - s2).abs() < 1e-10);
    }

    #[test]
    fn oscillation_ignores_constants(vals in prop::collection::vec(-3.0f64..3.0, 64), shift in -5.0f64..5.0) {
        let a = mean_oscillation_modulus(&Symbol::Scalar(vals.clone()), 5).unwrap();
        let b = mean_oscillation_modulus(&Symbol::Scalar(vals.iter().map(|v| v + shift).collect()), 5).unwrap();
        for (x, y) in a.modulus.iter().zip(&b.modulus) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(a.modulus.windows(2).all(|m| m[1] <= m[0]));
    }
}

#[test]
fn exported_builtin_reproduces_profiles() {
    let grid = CircleGrid::new(1024).unwrap();
    for text in [
        r#"{"dim":2,"kind":"builtin","name":"peller_counterexample","params":{}}"#,
        r#"{"dim":1,"kind":"builtin","name":"scalar_exp_trig","params":{"cos":[0.3]}}"#,
    ] {
        let w = parse_weight_str(text, grid).unwrap();
        let back = parse_weight_str(&export_weight(&w), grid).unwrap();
        for mode in [A2Mode::Interval, A2Mode::Poisson] {
            let a = a2_profile(&w, &w.invert(), mode, 5).unwrap();
            let b = a2_profile(&back, &back.invert(), mode, 5).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }
    }
}
