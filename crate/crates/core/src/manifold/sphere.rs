use nalgebra::Vector3;

use super::{check_dims, fmt_vec, Christoffel, ManifoldChart, Matrix, Vector};
use crate::error::{Error, Result};

/// Points with `sin θ` below this are treated as the chart's singular set.
const POLE_GUARD: f64 = 1e-8;

/// The unit 2-sphere in colatitude/longitude coordinates `q = (θ, φ)`,
///
/// ```text
/// x = sin θ cos φ,  y = sin θ sin φ,  z = cos θ,     g = diag(1, sin²θ).
/// ```
///
/// The chart is singular at the poles `θ ∈ {0, π}` (any point with
/// `sin θ < 1e-8` is rejected with a domain error). Longitude is not wrapped:
/// `exp_at` returns the longitude closest to that of its base point, so
/// integrated curves stay continuous in coordinates.
///
/// Distances are great-circle angles computed in the embedding, and the
/// injectivity radius is `π`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SphereChart;

impl SphereChart {
    pub fn new() -> Self {
        SphereChart
    }

    pub fn embed(q: &Vector) -> Vector3<f64> {
        let (st, ct) = q[0].sin_cos();
        let (sp, cp) = q[1].sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Chart coordinates of a unit vector, with longitude chosen nearest `phi_ref`.
    pub fn coordinates(x: &Vector3<f64>, phi_ref: f64) -> Vector {
        let theta = x.z.clamp(-1.0, 1.0).acos();
        let raw = x.y.atan2(x.x);
        let two_pi = std::f64::consts::TAU;
        let phi = raw + two_pi * ((phi_ref - raw) / two_pi).round();
        Vector::from_vec(vec![theta, phi])
    }

    /// Orthogonal (not normalised) coordinate frame `(∂θ, ∂φ)` in the embedding.
    fn frame(q: &Vector) -> (Vector3<f64>, Vector3<f64>) {
        let (st, ct) = q[0].sin_cos();
        let (sp, cp) = q[1].sin_cos();
        (Vector3::new(ct * cp, ct * sp, -st), Vector3::new(-st * sp, st * cp, 0.0))
    }

    fn to_ambient(q: &Vector, v: &Vector) -> Vector3<f64> {
        let (e_theta, e_phi) = Self::frame(q);
        e_theta * v[0] + e_phi * v[1]
    }

    fn from_ambient(q: &Vector, w: &Vector3<f64>) -> Vector {
        let (e_theta, e_phi) = Self::frame(q);
        let s2 = q[0].sin().powi(2);
        Vector::from_vec(vec![w.dot(&e_theta), w.dot(&e_phi) / s2])
    }
}

impl ManifoldChart for SphereChart {
    fn name(&self) -> String {
        "sphere2".to_string()
    }

    fn dim(&self) -> usize {
        2
    }

    fn check_point(&self, q: &Vector) -> Result<()> {
        check_dims(2, q, "point")?;
        if !q[0].is_finite() || !q[1].is_finite() {
            return Err(Error::domain(format!("non-finite chart point {}", fmt_vec(q))));
        }
        if q[0].sin().abs() < POLE_GUARD {
            return Err(Error::domain(format!(
                "sphere chart is singular at the poles, got {}",
                fmt_vec(q)
            )));
        }
        Ok(())
    }

    fn metric_at(&self, q: &Vector) -> Result<Matrix> {
        self.check_point(q)?;
        let s = q[0].sin();
        Ok(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, s * s]))
    }

    fn christoffel_at(&self, q: &Vector) -> Result<Christoffel> {
        self.check_point(q)?;
        let (s, c) = q[0].sin_cos();
        let mut gamma = Christoffel::zeros(2);
        gamma.set(0, 1, 1, -s * c);
        gamma.set(1, 0, 1, c / s);
        gamma.set(1, 1, 0, c / s);
        Ok(gamma)
    }

    fn christoffel_contract(&self, q: &Vector, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        let (s, c) = q[0].sin_cos();
        let cot = c / s;
        Ok(Vector::from_vec(vec![
            -s * c * x[1] * y[1],
            cot * (x[0] * y[1] + x[1] * y[0]),
        ]))
    }

    /// Constant curvature one: `R(a,b)c = g(b,c) a − g(a,c) b`.
    fn curvature_apply(&self, q: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Result<Vector> {
        let gbc = self.inner(q, b, c)?;
        let gac = self.inner(q, a, c)?;
        Ok(a * gbc - b * gac)
    }

    fn exp_at(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        check_dims(2, v, "tangent vector")?;
        let x = Self::embed(q);
        let w = Self::to_ambient(q, v);
        let len = w.norm();
        let y = if len < 1e-300 {
            x
        } else {
            x * len.cos() + w * (len.sin() / len)
        };
        let out = Self::coordinates(&y, q[1]);
        self.check_point(&out)?;
        Ok(out)
    }

    fn log_at(&self, q: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        self.check_point(y)?;
        let xq = Self::embed(q);
        let xy = Self::embed(y);
        let cos = xq.dot(&xy);
        let perp = xy - xq * cos;
        let sin = perp.norm();
        let angle = sin.atan2(cos);
        if angle == 0.0 {
            return Ok(Vector::zeros(2));
        }
        if sin < 1e-15 {
            return Err(Error::domain(format!(
                "logarithm undefined between antipodal points {} and {}",
                fmt_vec(q),
                fmt_vec(y)
            )));
        }
        let w = perp * (angle / sin);
        Ok(Self::from_ambient(q, &w))
    }

    fn distance(&self, q: &Vector, y: &Vector) -> Result<f64> {
        self.check_point(q)?;
        self.check_point(y)?;
        let a = Self::embed(q);
        let b = Self::embed(y);
        Ok(a.cross(&b).norm().atan2(a.dot(&b)))
    }

    fn injectivity_radius(&self) -> f64 {
        std::f64::consts::PI
    }

    fn inner(&self, q: &Vector, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_point(q)?;
        let s2 = q[0].sin().powi(2);
        Ok(x[0] * y[0] + s2 * x[1] * y[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    #[test]
    fn quarter_great_circle() {
        let s = SphereChart::new();
        let d = s.distance(&v(&[FRAC_PI_2, 0.0]), &v(&[FRAC_PI_2, FRAC_PI_2])).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-8);
        let d = s.distance(&v(&[0.3, 1.0]), &v(&[0.3 + FRAC_PI_2, 1.0])).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn poles_rejected() {
        let s = SphereChart::new();
        assert!(matches!(s.metric_at(&v(&[0.0, 1.0])), Err(Error::Domain(_))));
        assert!(matches!(s.christoffel_at(&v(&[PI, 0.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_log_round_trip_unit_speed() {
        let s = SphereChart::new();
        let q = v(&[1.1, -0.4]);
        let dir = v(&[0.6, 0.8 / 1.1f64.sin()]);
        let n = s.norm(&q, &dir).unwrap();
        let tangent = dir / n;
        let y = s.exp_at(&q, &tangent).unwrap();
        let back = s.log_at(&q, &y).unwrap();
        assert!((back - &tangent).norm() < 1e-8);
        assert!((s.distance(&q, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn longitude_stays_continuous() {
        let s = SphereChart::new();
        let q = v(&[FRAC_PI_2, 3.1]);
        let y = s.exp_at(&q, &v(&[0.0, 0.2])).unwrap();
        assert!((y[1] - 3.3).abs() < 1e-12);
    }
}
