use super::{check_dims, Christoffel, ManifoldChart, Matrix, Vector};
use crate::error::{Error, Result};

/// Flat `R^n` with the identity metric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EuclideanChart {
    dim: usize,
}

impl EuclideanChart {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("euclidean chart dimension must be at least 1"));
        }
        Ok(EuclideanChart { dim })
    }
}

impl ManifoldChart for EuclideanChart {
    fn name(&self) -> String {
        format!("euclidean:{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn metric_at(&self, q: &Vector) -> Result<Matrix> {
        self.check_point(q)?;
        Ok(Matrix::identity(self.dim, self.dim))
    }

    fn christoffel_at(&self, q: &Vector) -> Result<Christoffel> {
        self.check_point(q)?;
        Ok(Christoffel::zeros(self.dim))
    }

    fn christoffel_contract(&self, q: &Vector, _x: &Vector, _y: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        Ok(Vector::zeros(self.dim))
    }

    fn curvature_apply(&self, q: &Vector, _a: &Vector, _b: &Vector, _c: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        Ok(Vector::zeros(self.dim))
    }

    fn exp_at(&self, q: &Vector, v: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        check_dims(self.dim, v, "tangent vector")?;
        Ok(q + v)
    }

    fn log_at(&self, q: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(q)?;
        self.check_point(y)?;
        Ok(y - q)
    }

    fn distance(&self, q: &Vector, y: &Vector) -> Result<f64> {
        self.check_point(q)?;
        self.check_point(y)?;
        Ok((y - q).norm())
    }

    fn inner(&self, _q: &Vector, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(x.dot(y))
    }

    fn is_flat(&self) -> bool {
        true
    }
}
