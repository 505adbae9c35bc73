use std::fmt;
use std::sync::Arc;

use super::{check_dims, fmt_vec, ManifoldChart, Matrix, Vector};
use crate::error::{Error, Result};

pub type MetricFn = Arc<dyn Fn(&Vector) -> Result<Matrix> + Send + Sync>;

/// A chart defined by its metric alone. Connection, curvature, exponential
/// and logarithm all come from the numerical defaults of [`ManifoldChart`].
#[derive(Clone)]
pub struct MetricChart {
    name: String,
    dim: usize,
    metric: MetricFn,
    domain: Option<Arc<dyn Fn(&Vector) -> bool + Send + Sync>>,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl MetricChart {
    pub fn new(name: impl Into<String>, dim: usize, metric: MetricFn) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("chart dimension must be at least 1"));
        }
        Ok(MetricChart {
            name: name.into(),
            dim,
            metric,
            domain: None,
        })
    }

    /// Restricts the chart to points satisfying `inside`.
    pub fn with_domain(mut self, inside: impl Fn(&Vector) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(inside));
        self
    }
}

impl ManifoldChart for MetricChart {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, q: &Vector) -> Result<()> {
        check_dims(self.dim, q, "point")?;
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain(format!("non-finite chart point {}", fmt_vec(q))));
        }
        if let Some(inside) = &self.domain {
            if !inside(q) {
                return Err(Error::domain(format!("{} is outside the {} chart", fmt_vec(q), self.name)));
            }
        }
        Ok(())
    }

    fn metric_at(&self, q: &Vector) -> Result<Matrix> {
        self.check_point(q)?;
        (self.metric)(q)
    }
}

/// Upper half-plane `{(x, y) : y > 0}` with `g = I / y²` (curvature −1).
pub fn hyperbolic_half_plane() -> MetricChart {
    let metric: MetricFn = Arc::new(|q: &Vector| {
        let w = 1.0 / (q[1] * q[1]);
        Ok(Matrix::from_row_slice(2, 2, &[w, 0.0, 0.0, w]))
    });
    MetricChart::new("hyperbolic2", 2, metric)
        .expect("dimension 2 is valid")
        .with_domain(|q| q[1] > 0.0)
}
