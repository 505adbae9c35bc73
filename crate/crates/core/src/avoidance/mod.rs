//! Obstacle avoidance: tolerance bands, set distances, avoidance
//! certificates and finite ball covers of sampled obstacles.
//!
//! Around a point obstacle `p` the bands `0 < r < r* < R` define the
//! collision region `B_r(p)`, the risk region `B_{r*}(p)` and the safety
//! region `Q \ closure(B_R(p))`. Extended obstacles are finite point clouds;
//! they are reduced to point obstacles by [`cover_obstacle`].

mod certificate;
mod cover;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::manifold::{ManifoldChart, Vector};
use crate::potential::{PotentialSpec, PotentialSum};

pub use certificate::{
    certificate_chain, certify, select_parameters, Certificate, ParameterGrid, ParameterSelection, ReferenceSummary,
};
pub use cover::{
    check_coverage, cover_obstacle, sample_ball_around, tangent_directions, verify_cover, Cover, CoverOptions,
    CoverVerification,
};

/// Radii `0 < r < r* < R` of the collision, risk and safety regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceBands {
    pub r: f64,
    pub r_star: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl ToleranceBands {
    pub fn new(r: f64, r_star: f64, big_r: f64) -> Result<Self> {
        let bands = ToleranceBands { r, r_star, big_r };
        bands.validate()?;
        Ok(bands)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r_star.is_finite() && self.big_r.is_finite()) {
            return Err(Error::validation("tolerance bands must be finite"));
        }
        if !(0.0 < self.r) {
            return Err(Error::validation(format!("tolerance bands require 0 < r, got r = {}", self.r)));
        }
        if !(self.r < self.r_star) {
            return Err(Error::validation(format!(
                "tolerance bands require r < r_star, got r = {} and r_star = {}",
                self.r, self.r_star
            )));
        }
        if !(self.r_star < self.big_r) {
            return Err(Error::validation(format!(
                "tolerance bands require r_star < R, got r_star = {} and R = {}",
                self.r_star, self.big_r
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// `d < r`
    Collision,
    /// `r ≤ d < r*`
    Risk,
    /// `r* ≤ d ≤ R`
    Buffer,
    /// `d > R`
    Safety,
}

pub fn classify(chart: &dyn ManifoldChart, bands: &ToleranceBands, obstacle: &Vector, q: &Vector) -> Result<Region> {
    let d = chart.distance(obstacle, q)?;
    Ok(if d < bands.r {
        Region::Collision
    } else if d < bands.r_star {
        Region::Risk
    } else if d <= bands.big_r {
        Region::Buffer
    } else {
        Region::Safety
    })
}

/// Finite sample of an obstacle set `P`; `d(m, P)` is the minimum over the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleCloud {
    #[serde(with = "crate::serde_vec::list")]
    pub points: Vec<Vector>,
}

impl ObstacleCloud {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let cloud = ObstacleCloud { points };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .points
            .first()
            .ok_or_else(|| Error::validation("obstacle cloud is empty"))?;
        let n = first.len();
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != n {
                return Err(Error::validation(format!("cloud point {i} has dimension {} instead of {n}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("cloud point {i} is not finite")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    pub fn check_chart(&self, chart: &dyn ManifoldChart) -> Result<()> {
        self.validate()?;
        for p in &self.points {
            chart.check_point(p)?;
        }
        Ok(())
    }

    /// `d(m, P)` and the index of the nearest sample.
    pub fn nearest(&self, chart: &dyn ManifoldChart, m: &Vector) -> Result<(f64, usize)> {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = chart.distance(p, m)?;
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best)
    }

    pub fn distance(&self, chart: &dyn ManifoldChart, m: &Vector) -> Result<f64> {
        Ok(self.nearest(chart, m)?.0)
    }
}

/// Minimum over trajectory samples of `d(q(t), P)` and the time it occurs.
pub fn min_distance(chart: &dyn ManifoldChart, traj: &Trajectory, obstacle: &ObstacleCloud) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, traj.start_time());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let d = obstacle.distance(chart, &s.q)?;
        if d < best.0 {
            best = (d, *t);
        }
    }
    Ok(best)
}

/// One bump term of support `R` per center, all sharing `(τ, k)`.
pub fn build_avoidance_potential(centers: &[Vector], big_r: f64, tau: f64, k: u32) -> Result<PotentialSum> {
    let terms = centers
        .iter()
        .map(|c| PotentialSpec::new(c.clone(), big_r, tau, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(PotentialSum::new(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, JetState, Method};
    use crate::manifold::EuclideanChart;
    use std::f64::consts::E;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    #[test]
    fn bands_must_be_ordered() {
        assert!(ToleranceBands::new(0.1, 0.2, 0.3).is_ok());
        let err = ToleranceBands::new(0.25, 0.2, 0.3).unwrap_err().to_string();
        assert!(err.contains("r < r_star"), "{err}");
        assert!(ToleranceBands::new(0.1, 0.3, 0.3).is_err());
        assert!(ToleranceBands::new(0.0, 0.2, 0.3).is_err());
    }

    #[test]
    fn region_classification() {
        let chart = EuclideanChart::new(2).unwrap();
        let bands = ToleranceBands::new(0.1, 0.2, 0.3).unwrap();
        let p = v(&[0.0, 0.0]);
        let at = |x: f64| classify(&chart, &bands, &p, &v(&[x, 0.0])).unwrap();
        assert_eq!(at(0.05), Region::Collision);
        assert_eq!(at(0.15), Region::Risk);
        assert_eq!(at(0.25), Region::Buffer);
        assert_eq!(at(0.35), Region::Safety);
    }

    #[test]
    fn constant_trajectory_distance() {
        let chart = EuclideanChart::new(2).unwrap();
        let q = v(&[1.0, 1.0]);
        let traj = integrate(&chart, &PotentialSum::zero(), &JetState::at_rest(q), 1.0, 0.1, Method::Rk4).unwrap();
        let cloud = ObstacleCloud::new(vec![v(&[4.0, 5.0])]).unwrap();
        let (d, t) = min_distance(&chart, &traj, &cloud).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn trajectory_through_cloud_point() {
        let chart = EuclideanChart::new(2).unwrap();
        let s0 = JetState::new(v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.0]), v(&[0.0, 0.0]));
        let h = 1e-3;
        let traj = integrate(&chart, &PotentialSum::zero(), &s0, 1.0, h, Method::Rk4).unwrap();
        let cloud = ObstacleCloud::new(vec![v(&[0.4, 0.0]), v(&[3.0, 3.0])]).unwrap();
        let (d, t) = min_distance(&chart, &traj, &cloud).unwrap();
        assert!(d < 1e-9);
        assert!((t - 0.4).abs() <= h);
    }

    #[test]
    fn set_distance_triangle_inequality() {
        let chart = EuclideanChart::new(2).unwrap();
        let cloud = ObstacleCloud::new(vec![v(&[0.0, 0.0]), v(&[1.0, 0.5]), v(&[-0.3, 2.0])]).unwrap();
        let mut x = 0.37f64;
        for _ in 0..200 {
            // deterministic scatter
            x = (x * 97.13 + 0.71).fract();
            let y = (x * 31.7 + 0.13).fract();
            let m = v(&[4.0 * x - 2.0, 4.0 * y - 1.0]);
            let p = v(&[3.0 * y - 1.0, 3.0 * x]);
            let lhs = cloud.distance(&chart, &m).unwrap();
            let rhs = chart.distance(&m, &p).unwrap() + cloud.distance(&chart, &p).unwrap();
            assert!(lhs <= rhs + 1e-15);
        }
    }

    #[test]
    fn empty_cloud_rejected() {
        assert!(ObstacleCloud::new(vec![]).is_err());
        assert!(ObstacleCloud::new(vec![v(&[0.0]), v(&[0.0, 1.0])]).is_err());
    }

    #[test]
    fn avoidance_potential_terms() {
        assert!(build_avoidance_potential(&[], 0.3, 1.0, 1).unwrap().is_empty());
        let chart = EuclideanChart::new(3).unwrap();
        let c = v(&[0.1, 0.2, 0.3]);
        let sum = build_avoidance_potential(std::slice::from_ref(&c), 0.3, 100.0 / E, 4).unwrap();
        let single = PotentialSpec::new(c, 0.3, 100.0 / E, 4).unwrap();
        for q in [v(&[0.1, 0.2, 0.3]), v(&[0.2, 0.2, 0.3]), v(&[0.5, 0.5, 0.5])] {
            assert_eq!(sum.value(&chart, &q).unwrap(), single.value(&chart, &q).unwrap());
        }
    }
}
