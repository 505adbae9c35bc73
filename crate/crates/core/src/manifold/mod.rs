//! Coordinate charts of Riemannian manifolds.
//!
//! A chart exposes the metric tensor, the Levi-Civita connection through its
//! Christoffel symbols, the curvature endomorphism `R(X,Y)Z`, the exponential
//! and logarithm maps, and the Riemannian distance. Every quantity is
//! expressed in chart coordinates.
//!
//! Curvature follows the convention `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`,
//! so a space of constant sectional curvature `K` has
//! `R(X,Y)Z = K (g(Y,Z) X − g(X,Z) Y)`.
//!
//! Only [`ManifoldChart::metric_at`] is mandatory. The remaining operations
//! have numerical defaults (see [`numeric`]) so a new chart can be added by
//! supplying a metric alone; [`EuclideanChart`] and [`SphereChart`] override
//! all of them with closed forms.

mod euclidean;
mod metric;
pub mod numeric;
mod sphere;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use euclidean::EuclideanChart;
pub use metric::{hyperbolic_half_plane, MetricChart, MetricFn};
pub use sphere::SphereChart;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Christoffel symbols `Γ^i_{jk}` of a chart at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    /// `Γ^i_{jk}`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = value;
    }

    /// Contraction `Γ(x, y)^i = Γ^i_{jk} x^j y^k`.
    pub fn contract(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.dim;
        Vector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                if x[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += self.get(i, j, k) * x[j] * y[k];
                }
            }
            acc
        })
    }

    /// Largest `|Γ^i_{jk} − Γ^i_{kj}|` over all indices.
    pub fn lower_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// A coordinate chart of an n-dimensional Riemannian manifold.
///
/// Implementations must be pure: every method is a function of its
/// arguments only, so a chart may be shared freely between threads.
pub trait ManifoldChart: Send + Sync + fmt::Debug {
    /// Registry name, e.g. `euclidean:3` or `sphere2`.
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// Rejects points of the wrong dimension, non-finite points and points
    /// in the chart's singular set.
    fn check_point(&self, q: &Vector) -> Result<()> {
        check_dims(self.dim(), q, "point")?;
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain(format!("non-finite chart point {}", fmt_vec(q))));
        }
        Ok(())
    }

    /// Metric tensor `g(q)` as a symmetric positive-definite matrix.
    fn metric_at(&self, q: &Vector) -> Result<Matrix>;

    fn christoffel_at(&self, q: &Vector) -> Result<Christoffel> {
        numeric::christoffel_from_metric(self, q, numeric::METRIC_FD_STEP)
    }

    /// `Γ(q; x, y)^i = Γ^i_{jk}(q) x^j y^k`.
    fn christoffel_contract(&self, q: &Vector, x: &Vector, y: &Vector) -> Result<Vector> {
        Ok(self.christoffel_at(q)?.contract(x, y))
    }

    /// The curvature endomorphism `R(a, b) c` at `q`.
    fn curvature_apply(&self, q: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Result<Vector> {
        numeric::curvature_from_christoffel(self, q, a, b, c, numeric::CURVATURE_FD_STEP)
    }

    fn exp_at(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        numeric::geodesic_exp(self, q, v, numeric::GEODESIC_STEPS)
    }

    /// Inverse of the exponential map. Only defined inside the injectivity radius.
    fn log_at(&self, q: &Vector, y: &Vector) -> Result<Vector> {
        numeric::newton_log(self, q, y)
    }

    fn distance(&self, q: &Vector, y: &Vector) -> Result<f64> {
        let l = self.log_at(q, y)?;
        self.norm(q, &l)
    }

    /// Lower bound on the injectivity radius, uniform over the chart.
    fn injectivity_radius(&self) -> f64 {
        f64::INFINITY
    }

    /// `g_q(x, y)`.
    fn inner(&self, q: &Vector, x: &Vector, y: &Vector) -> Result<f64> {
        let g = self.metric_at(q)?;
        Ok(x.dot(&(g * y)))
    }

    fn norm(&self, q: &Vector, x: &Vector) -> Result<f64> {
        Ok(self.inner(q, x, x)?.max(0.0).sqrt())
    }

    /// Flat charts carry the identity metric, so callers may skip connection
    /// and curvature terms and use coordinate differences as tangent vectors.
    fn is_flat(&self) -> bool {
        false
    }
}

/// Resolves a chart by its registry name: `euclidean:<n>`, `sphere2` or
/// `hyperbolic2` (upper half-plane, metric-only fallback chart).
pub fn chart_from_name(name: &str) -> Result<Arc<dyn ManifoldChart>> {
    let name = name.trim();
    if let Some(n) = name.strip_prefix("euclidean:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::validation(format!("bad euclidean dimension in chart name {name:?}")))?;
        return Ok(Arc::new(EuclideanChart::new(n)?));
    }
    match name {
        "sphere2" => Ok(Arc::new(SphereChart::new())),
        "hyperbolic2" => Ok(Arc::new(hyperbolic_half_plane())),
        other => Err(Error::validation(format!("unknown chart {other:?}"))),
    }
}

/// Gradient at `q` of `m ↦ d(p, m)`: the unit vector `−log_q(p) / d(p, q)`.
pub fn grad_distance_from(chart: &dyn ManifoldChart, p: &Vector, q: &Vector) -> Result<Vector> {
    let d = chart.distance(p, q)?;
    if d == 0.0 {
        return Err(Error::Singularity(format!(
            "distance gradient undefined at its base point {}",
            fmt_vec(p)
        )));
    }
    if d >= chart.injectivity_radius() {
        return Err(Error::Precondition(format!(
            "point at distance {d} is beyond the injectivity radius {}",
            chart.injectivity_radius()
        )));
    }
    let l = chart.log_at(q, p)?;
    Ok(-l / d)
}

pub(crate) fn check_dims(n: usize, x: &Vector, what: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::validation(format!(
            "{what} has dimension {} but the chart has dimension {n}",
            x.len()
        )));
    }
    Ok(())
}

pub(crate) fn fmt_vec(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", parts.join(", "))
}
