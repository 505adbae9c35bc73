mod common;

use std::f64::consts::E;

use common::v;
use geospline::manifold::{chart_from_name, EuclideanChart, ManifoldChart, SphereChart, Vector};
use geospline::potential::{min_sharpness_for_plateau, PotentialSpec, PotentialSum};
use proptest::prelude::*;

fn term(center: Vector, d: f64, k: u32) -> PotentialSpec {
    PotentialSpec::new(center, d, 100.0 / E, k).unwrap()
}

/// Direct evaluation of `e·τ·exp(−1/(1 − (d/D)^{2k}))`.
fn oracle_value(d: f64, big_d: f64, tau: f64, k: u32) -> f64 {
    if d >= big_d {
        return 0.0;
    }
    let s = (d / big_d).powi(2 * k as i32);
    E * tau * (-1.0 / (1.0 - s)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn value_matches_direct_formula(d in 0.0f64..0.3, k in 1u32..12) {
        let p = term(v(&[0.0]), 0.3, k);
        let expected = oracle_value(d, 0.3, p.tau, k);
        prop_assert!((p.profile(d) - expected).abs() <= 1e-12 * p.tau);
    }

    #[test]
    fn non_negative_and_compactly_supported(
        q in prop::collection::vec(-2.0f64..2.0, 3),
        k in 1u32..40,
        d in 0.05f64..1.5,
    ) {
        let chart = EuclideanChart::new(3).unwrap();
        let p = term(v(&[0.1, -0.2, 0.3]), d, k);
        let q = v(&q);
        let value = p.profile(chart.distance(&p.center, &q).unwrap());
        prop_assert!(value >= 0.0);
        if chart.distance(&p.center, &q).unwrap() >= d {
            prop_assert_eq!(value, 0.0);
            prop_assert!(p.gradient(&chart, &q).unwrap().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    // below 0.1 D the drop from τ is under one ulp once k is large
    fn radially_decreasing(a in 0.03f64..0.3, b in 0.03f64..0.3, k in 1u32..8) {
        prop_assume!((a - b).abs() > 1e-3);
        let p = term(v(&[0.0]), 0.3, k);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(p.profile(lo) > p.profile(hi));
    }
}

#[test]
fn seam_is_flat() {
    let p = term(v(&[0.0]), 0.3, 4);
    assert!(p.profile(0.3 * (1.0 - 1e-4)) < 1e-12);
    assert_eq!(p.profile(0.3), 0.0);
}

/// `u = s/(1 − s)` with `s = (d/D)^{2k}`, so that `V = τ·exp(−u)`.
fn oracle_exponent(d: f64, big_d: f64, k: u32) -> f64 {
    let s = (d / big_d).powi(2 * k as i32);
    s / (1.0 - s)
}

fn oracle_distance(chart: &dyn ManifoldChart, p: &Vector, q: &Vector) -> f64 {
    if chart.dim() == 3 {
        (p - q).norm()
    } else {
        let x = common::embed(p[0], p[1]);
        let y = common::embed(q[0], q[1]);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        dot.clamp(-1.0, 1.0).acos()
    }
}

/// `dV = −V du`, with `du` by central differences of the exponent. Differencing
/// the exponent rather than `V` itself avoids cancellation against the plateau `τ`.
#[test]
fn gradients_match_central_differences() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let charts: Vec<Box<dyn ManifoldChart>> = vec![Box::new(EuclideanChart::new(3).unwrap()), Box::new(SphereChart::new())];
    for i in 0..100 {
        let chart = &charts[i % 2];
        let n = chart.dim();
        let center = if n == 3 {
            v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        } else {
            v(&[rng.gen_range(0.8..2.3), rng.gen_range(-1.0..1.0)])
        };
        let big_d = rng.gen_range(0.2..0.8);
        let k = rng.gen_range(1..6);
        let p = term(center.clone(), big_d, k);
        let dir: Vector = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let unit = &dir / chart.norm(&center, &dir).unwrap();
        let dist = rng.gen_range(0.1..0.95) * big_d;
        let q = chart.exp_at(&center, &(unit * dist)).unwrap();

        let grad = p.gradient(chart.as_ref(), &q).unwrap();
        let value = oracle_value(oracle_distance(chart.as_ref(), &center, &q), big_d, p.tau, k);
        let h = 1e-7;
        let mut differential = Vector::zeros(n);
        for i in 0..n {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let up = oracle_exponent(oracle_distance(chart.as_ref(), &center, &qp), big_d, k);
            let um = oracle_exponent(oracle_distance(chart.as_ref(), &center, &qm), big_d, k);
            differential[i] = -value * (up - um) / (2.0 * h);
        }
        // grad V is the metric dual of dV
        let lowered = chart.metric_at(&q).unwrap() * &grad;
        let err = (&lowered - &differential).norm() / differential.norm();
        assert!(err < 1e-5, "{} at {q}: relative error {err}", chart.name());
    }
}

#[test]
fn flat_sum_gradient_matches_term_by_term() {
    let chart = chart_from_name("euclidean:2").unwrap();
    let sum = PotentialSum::new(vec![
        term(v(&[0.0, 0.0]), 0.5, 2),
        term(v(&[0.3, 0.1]), 0.4, 4),
        term(v(&[2.0, 2.0]), 0.3, 1),
    ]);
    for q in [v(&[0.1, 0.05]), v(&[0.3, 0.1]), v(&[0.0, 0.0]), v(&[5.0, 5.0])] {
        let mut expected = Vector::zeros(2);
        for t in &sum.terms {
            expected += t.gradient(chart.as_ref(), &q).unwrap();
        }
        let got = sum.gradient(chart.as_ref(), &q).unwrap();
        assert!((&got - &expected).amax() <= 1e-14 * expected.amax().max(1.0));
    }
}

#[test]
fn plateau_sharpness_for_ratio_nine_tenths() {
    // exp(−s/(1−s)) ≥ 0.99 with s = 0.9^{2k}  ⇔  s ≤ c/(1+c), c = −ln 0.99
    let c = -(0.99f64).ln();
    let oracle = ((c / (1.0 + c)).ln() / (2.0 * 0.9f64.ln())).ceil() as u32;
    let k = min_sharpness_for_plateau(0.9, 0.99, 200).expect("finite K");
    println!("plateau sharpness for r*/D = 0.9, eps = 0.01 tau: K = {k}");
    assert_eq!(k, oracle);
    assert_eq!(k, 22);
    let p = term(v(&[0.0]), 1.0, k);
    for i in 0..=90 {
        assert!(p.profile(i as f64 / 100.0) >= 0.99 * p.tau);
    }
}

#[test]
fn sensing_radius_is_enforced() {
    let sum = PotentialSum::new(vec![term(v(&[0.0, 0.0]), 0.5, 2)]);
    assert!(sum.validate(2, Some(0.6)).is_ok());
    assert!(sum.validate(2, Some(0.4)).is_err());
    assert!(sum.validate(3, None).is_err());
}
