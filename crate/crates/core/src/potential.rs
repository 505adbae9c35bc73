//! Compactly supported repulsive bump potentials.
//!
//! A single term centred at `p` with support radius `D`, height `τ` and
//! sharpness `k` is
//!
//! ```text
//! V(q) = e·τ·exp(−1 / (1 − (d(p,q)/D)^{2k}))   if d(p,q) < D,   0 otherwise.
//! ```
//!
//! It equals `τ` at the centre, decreases monotonically in the distance and
//! vanishes with all derivatives at `d = D`. Larger `k` flattens the profile
//! towards the plateau `τ` on any ball of radius `r* < D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{grad_distance_from, ManifoldChart, Vector};

/// One bump term `{center, D, tau, k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(with = "crate::serde_vec")]
    pub center: Vector,
    #[serde(rename = "D")]
    pub radius: f64,
    pub tau: f64,
    pub k: u32,
}

impl PotentialSpec {
    pub fn new(center: Vector, radius: f64, tau: f64, k: u32) -> Result<Self> {
        let spec = PotentialSpec { center, radius, tau, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::validation(format!("potential radius D must be positive, got {}", self.radius)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::validation(format!("potential height tau must be positive, got {}", self.tau)));
        }
        if self.k == 0 {
            return Err(Error::validation("potential sharpness k must be at least 1"));
        }
        if self.center.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("potential center must be finite"));
        }
        Ok(())
    }

    /// Support must lie within the sensing radius: `D ≤ h`.
    pub fn check_sensing_radius(&self, h: f64) -> Result<()> {
        if self.radius > h {
            return Err(Error::validation(format!(
                "potential radius D = {} exceeds the sensing radius h = {h}",
                self.radius
            )));
        }
        Ok(())
    }

    /// `s = (d/D)^{2k}` and `(d/D)^{2k-1}`, or `None` outside the support.
    fn powers(&self, d: f64) -> Option<(f64, f64)> {
        let t = d / self.radius;
        if !(t < 1.0) {
            return None;
        }
        if t <= 0.0 {
            return Some((0.0, 0.0));
        }
        let ln_t = t.ln();
        let two_k = 2.0 * f64::from(self.k);
        let s = (two_k * ln_t).exp();
        if 1.0 - s < 1e-300 {
            return None;
        }
        Some((s, ((two_k - 1.0) * ln_t).exp()))
    }

    /// Radial profile as a function of the distance to the centre.
    pub fn profile(&self, d: f64) -> f64 {
        match self.powers(d) {
            // e·τ·exp(−1/(1−s)) written as τ·exp(−s/(1−s)) so that d = 0 gives τ exactly
            Some((s, _)) => self.tau * (-s / (1.0 - s)).exp(),
            None => 0.0,
        }
    }

    /// Derivative of the radial profile with respect to the distance.
    pub fn profile_slope(&self, d: f64) -> f64 {
        match self.powers(d) {
            Some((s, t_pow)) => {
                let one_minus = 1.0 - s;
                let value = self.tau * (-s / one_minus).exp();
                -value * 2.0 * f64::from(self.k) * t_pow / (self.radius * one_minus * one_minus)
            }
            None => 0.0,
        }
    }

    pub fn value(&self, chart: &dyn ManifoldChart, q: &Vector) -> Result<f64> {
        let d = chart.distance(&self.center, q)?;
        Ok(self.profile(d))
    }

    /// Riemannian gradient `(dV/dd) · grad d(p, ·)`; zero at the centre and
    /// outside the support.
    pub fn gradient(&self, chart: &dyn ManifoldChart, q: &Vector) -> Result<Vector> {
        let d = chart.distance(&self.center, q)?;
        if d == 0.0 || d >= self.radius {
            return Ok(Vector::zeros(q.len()));
        }
        let slope = self.profile_slope(d);
        if slope == 0.0 {
            return Ok(Vector::zeros(q.len()));
        }
        Ok(grad_distance_from(chart, &self.center, q)? * slope)
    }
}

/// A sum of bump terms; the empty sum is `V ≡ 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PotentialSum {
    pub terms: Vec<PotentialSpec>,
}

impl PotentialSum {
    pub fn new(terms: Vec<PotentialSpec>) -> Self {
        PotentialSum { terms }
    }

    pub fn zero() -> Self {
        PotentialSum::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PotentialSpec) {
        self.terms.push(term);
    }

    pub fn extend(&mut self, other: &PotentialSum) {
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn validate(&self, dim: usize, sensing_radius: Option<f64>) -> Result<()> {
        for (i, term) in self.terms.iter().enumerate() {
            term.validate().map_err(|e| Error::validation(format!("potential term {i}: {e}")))?;
            if term.center.len() != dim {
                return Err(Error::validation(format!(
                    "potential term {i} has a {}-dimensional center on a {dim}-dimensional chart",
                    term.center.len()
                )));
            }
            if let Some(h) = sensing_radius {
                term.check_sensing_radius(h)?;
            }
        }
        Ok(())
    }

    pub fn value(&self, chart: &dyn ManifoldChart, q: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for term in &self.terms {
            total += term.value(chart, q)?;
        }
        Ok(total)
    }

    pub fn gradient(&self, chart: &dyn ManifoldChart, q: &Vector) -> Result<Vector> {
        let mut total = Vector::zeros(q.len());
        if chart.is_flat() {
            chart.check_point(q)?;
            for term in &self.terms {
                let d2: f64 = q.iter().zip(term.center.iter()).map(|(x, c)| (x - c) * (x - c)).sum();
                if d2 == 0.0 || d2 >= term.radius * term.radius {
                    continue;
                }
                let d = d2.sqrt();
                let scale = term.profile_slope(d) / d;
                for (t, (x, c)) in total.iter_mut().zip(q.iter().zip(term.center.iter())) {
                    *t += scale * (x - c);
                }
            }
            return Ok(total);
        }
        for term in &self.terms {
            total += term.gradient(chart, q)?;
        }
        Ok(total)
    }
}

/// Smallest `k` for which the profile stays above `fraction · τ` on the ball
/// of radius `ratio · D`, searched up to `max_k`.
pub fn min_sharpness_for_plateau(ratio: f64, fraction: f64, max_k: u32) -> Option<u32> {
    (1..=max_k).find(|&k| {
        let spec = PotentialSpec {
            center: Vector::zeros(1),
            radius: 1.0,
            tau: 1.0,
            k,
        };
        spec.profile(ratio) >= fraction
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{EuclideanChart, SphereChart};
    use std::f64::consts::E;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn reference_term(center: Vector) -> PotentialSpec {
        PotentialSpec::new(center, 0.3, 100.0 / E, 4).unwrap()
    }

    #[test]
    fn value_at_center_is_tau() {
        let spec = PotentialSpec::new(v(&[0.0]), 1.0, 2.5, 3).unwrap();
        assert_eq!(spec.profile(0.0), 2.5);
    }

    #[test]
    fn value_vanishes_outside_support() {
        let spec = reference_term(v(&[0.0, 0.0, 0.0]));
        assert_eq!(spec.profile(0.3), 0.0);
        assert_eq!(spec.profile(0.31), 0.0);
        assert_eq!(spec.profile(f64::INFINITY), 0.0);
    }

    #[test]
    fn mid_radius_value_direct_evaluation() {
        // e·(100/e)·exp(−1/(1−0.5^8)) = 100·exp(−256/255)
        let spec = reference_term(v(&[0.0]));
        let expected = 100.0 * (-256.0f64 / 255.0).exp();
        let got = spec.profile(0.15);
        assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn seam_is_smooth() {
        let spec = reference_term(v(&[0.0]));
        let eps = 1e-4 * 0.3;
        assert!(spec.profile(0.3 - eps) < 1e-12);
        assert!(spec.profile_slope(0.3 - eps).abs() < 1e-6);
    }

    #[test]
    fn large_k_does_not_overflow() {
        let spec = PotentialSpec::new(v(&[0.0]), 1.0, 1.0, 100_000).unwrap();
        for d in [0.0, 0.5, 0.9999, 0.99999999, 1.0] {
            let val = spec.profile(d);
            let slope = spec.profile_slope(d);
            assert!(val.is_finite() && slope.is_finite(), "d = {d}");
        }
        assert!((spec.profile(0.9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PotentialSpec::new(v(&[0.0]), 0.0, 1.0, 1).is_err());
        assert!(PotentialSpec::new(v(&[0.0]), 1.0, -1.0, 1).is_err());
        assert!(PotentialSpec::new(v(&[0.0]), 1.0, 1.0, 0).is_err());
        let spec = PotentialSpec::new(v(&[0.0]), 0.5, 1.0, 1).unwrap();
        assert!(spec.check_sensing_radius(0.4).is_err());
        assert!(spec.check_sensing_radius(0.5).is_ok());
    }

    #[test]
    fn gradient_matches_finite_difference_1d() {
        let chart = EuclideanChart::new(1).unwrap();
        let spec = PotentialSpec::new(v(&[0.0]), 1.0, 1.0, 1).unwrap();
        let q = v(&[0.5]);
        let g = spec.gradient(&chart, &q).unwrap();
        let h = 1e-6;
        let fd = (spec.value(&chart, &v(&[0.5 + h])).unwrap() - spec.value(&chart, &v(&[0.5 - h])).unwrap()) / (2.0 * h);
        assert!(((g[0] - fd) / fd).abs() < 1e-5, "{} vs {fd}", g[0]);
    }

    #[test]
    fn gradient_zero_at_center_and_outside() {
        let chart = EuclideanChart::new(2).unwrap();
        let spec = PotentialSpec::new(v(&[1.0, 1.0]), 0.5, 3.0, 2).unwrap();
        assert_eq!(spec.gradient(&chart, &v(&[1.0, 1.0])).unwrap(), Vector::zeros(2));
        assert_eq!(spec.gradient(&chart, &v(&[2.0, 1.0])).unwrap(), Vector::zeros(2));
        let near = spec.gradient(&chart, &v(&[1.0 + 1e-300, 1.0])).unwrap();
        assert!(near.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn sphere_gradient_finite_difference() {
        let chart = SphereChart::new();
        let spec = PotentialSpec::new(v(&[1.0, 0.2]), 0.6, 2.0, 2).unwrap();
        let q = v(&[1.2, 0.5]);
        let g = spec.gradient(&chart, &q).unwrap();
        // coordinate differential, then raise the index with g^{-1}
        let h = 1e-6;
        let metric = chart.metric_at(&q).unwrap();
        let mut dv = Vector::zeros(2);
        for i in 0..2 {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            dv[i] = (spec.value(&chart, &qp).unwrap() - spec.value(&chart, &qm).unwrap()) / (2.0 * h);
        }
        let raised = metric.try_inverse().unwrap() * dv;
        assert!((g - &raised).norm() < 1e-5 * raised.norm());
    }

    #[test]
    fn sums_are_linear() {
        let chart = EuclideanChart::new(3).unwrap();
        let q = v(&[0.1, 0.05, 0.02]);
        assert_eq!(PotentialSum::zero().value(&chart, &q).unwrap(), 0.0);
        assert_eq!(PotentialSum::zero().gradient(&chart, &q).unwrap(), Vector::zeros(3));
        let term = PotentialSpec::new(v(&[0.0, 0.0, 0.0]), 0.5, 1.5, 2).unwrap();
        let single = PotentialSum::new(vec![term.clone()]).value(&chart, &q).unwrap();
        let double = PotentialSum::new(vec![term.clone(), term]).value(&chart, &q).unwrap();
        assert_eq!(double, 2.0 * single);
    }

    #[test]
    fn sum_validation_checks_dimension_and_sensing() {
        let term = PotentialSpec::new(v(&[0.0, 0.0]), 0.5, 1.0, 1).unwrap();
        let sum = PotentialSum::new(vec![term]);
        assert!(sum.validate(2, None).is_ok());
        assert!(sum.validate(3, None).is_err());
        assert!(sum.validate(2, Some(0.4)).is_err());
    }

    #[test]
    fn plateau_sharpness_search() {
        // e·exp(−1/(1−0.81^k)) ≥ 0.99 first holds at k = 22
        assert_eq!(min_sharpness_for_plateau(0.9, 0.99, 200), Some(22));
        assert_eq!(min_sharpness_for_plateau(0.9, 1.0 + 1e-9, 200), None);
    }

    #[test]
    fn json_schema_uses_capital_d() {
        let term = PotentialSpec::new(v(&[1.0, 2.0]), 0.3, 4.0, 2).unwrap();
        let text = serde_json::to_string(&term).unwrap();
        assert_eq!(text, r#"{"center":[1.0,2.0],"D":0.3,"tau":4.0,"k":2}"#);
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, term);
    }
}
