//! The three-dimensional avoidance run against a patch of the unit sphere.
//!
//! The obstacle is `P = {(sin φ sin θ, sin φ cos θ, cos φ) : 0 < φ < π/4, 0 < θ < π/2}`,
//! replaced by three bump potentials of support `R = 0.3`, `k = 4` and
//! `τ = 100/e` centered at hand-picked points of `P`.

use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::avoidance::{build_avoidance_potential, check_coverage, min_distance, ObstacleCloud};
use crate::bvp::{shoot, BoundaryData, ShootOptions};
use crate::error::Result;
use crate::integrator::{action_value, Method, Trajectory};
use crate::manifold::{EuclideanChart, Vector};
use crate::simplex::SimplexOptions;

pub const PATCH_PHI: [f64; 2] = [0.0, FRAC_PI_4];
pub const PATCH_THETA: [f64; 2] = [0.0, FRAC_PI_2];

pub fn patch_point(phi: f64, theta: f64) -> Vector {
    Vector::from_row_slice(&[phi.sin() * theta.sin(), phi.sin() * theta.cos(), phi.cos()])
}

/// The three hand-picked centers `(φ, θ) = (π/12, π/4), (π/5, π/9), (π/5, π/3)`.
pub fn patch_centers() -> Vec<Vector> {
    [(PI / 12.0, PI / 4.0), (PI / 5.0, PI / 9.0), (PI / 5.0, PI / 3.0)]
        .iter()
        .map(|&(phi, theta)| patch_point(phi, theta))
        .collect()
}

pub fn patch_boundary() -> BoundaryData {
    BoundaryData::new(
        Vector::from_row_slice(&[0.0, 0.0, 0.0]),
        Vector::from_row_slice(&[0.125, 0.125, 0.45]),
        Vector::from_row_slice(&[0.2, 0.5, 1.8]),
        Vector::from_row_slice(&[0.3, 0.25, 0.5]),
        1.0,
    )
}

/// Points of the patch drawn uniformly in `(φ, θ)`.
pub fn sample_patch(count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let phi = rng.gen_range(PATCH_PHI[0]..PATCH_PHI[1]);
            let theta = rng.gen_range(PATCH_THETA[0]..PATCH_THETA[1]);
            patch_point(phi, theta)
        })
        .collect()
}

/// Regular `(φ, θ)` grid of the patch, interior points only.
pub fn patch_grid(per_side: usize) -> Vec<Vector> {
    let mut pts = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let phi = PATCH_PHI[1] * (i as f64 + 0.5) / per_side as f64;
            let theta = PATCH_THETA[1] * (j as f64 + 0.5) / per_side as f64;
            pts.push(patch_point(phi, theta));
        }
    }
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReproOptions {
    pub radius: f64,
    pub tau: f64,
    pub k: u32,
    pub step: f64,
    pub method: Method,
    pub cover_samples: usize,
    pub seed: u64,
    pub shoot: ShootOptions,
}

impl Default for ReproOptions {
    fn default() -> Self {
        ReproOptions {
            radius: 0.3,
            tau: 100.0 / E,
            k: 4,
            step: 1e-3,
            method: Method::Euler,
            cover_samples: 10_000,
            seed: 0,
            shoot: ShootOptions {
                simplex: SimplexOptions {
                    target_value: 1e-12,
                    ..SimplexOptions::default()
                },
                ..ShootOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub samples: usize,
    pub radius: f64,
    pub violations: usize,
    /// Largest distance from a patch sample to its nearest center.
    pub worst_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub cover: CoverCheck,
    pub converged: bool,
    pub residual: f64,
    pub evaluations: usize,
    #[serde(with = "crate::serde_vec")]
    pub a0: Vector,
    #[serde(with = "crate::serde_vec")]
    pub j0: Vector,
    pub action: f64,
    /// `min_t d(q(t), p_i)` per center.
    pub center_distances: Vec<f64>,
    /// `min_t d(q(t), P)` over a dense patch grid.
    pub obstacle_distance: f64,
    /// Same for the unobstructed Hermite cubic with identical boundary data.
    pub free_obstacle_distance: f64,
    /// Sample times at which the trajectory passes through the patch.
    pub patch_crossings: Vec<f64>,
    pub free_patch_crossings: Vec<f64>,
}

fn in_patch_directions(x: &Vector) -> bool {
    let rho = x.norm();
    if rho == 0.0 {
        return false;
    }
    let phi = (x[2] / rho).clamp(-1.0, 1.0).acos();
    let theta = x[0].atan2(x[1]);
    phi > PATCH_PHI[0] && phi < PATCH_PHI[1] && theta > PATCH_THETA[0] && theta < PATCH_THETA[1]
}

/// Times of sign changes of `‖q‖ − 1` whose later sample points into the patch.
pub fn patch_crossings(traj: &Trajectory) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..traj.len() {
        let (a, b) = (&traj.states[i - 1].q, &traj.states[i].q);
        if (a.norm() - 1.0) * (b.norm() - 1.0) <= 0.0 && in_patch_directions(b) {
            out.push(traj.times[i]);
        }
    }
    out
}

pub struct ReproRun {
    pub report: ReproReport,
    pub trajectory: Trajectory,
}

pub fn run_repro(opts: &ReproOptions) -> Result<ReproRun> {
    let chart = EuclideanChart::new(3)?;
    let centers = patch_centers();

    let samples = sample_patch(opts.cover_samples, opts.seed);
    let (violations, worst_distance) = check_coverage(&chart, &samples, &centers, opts.radius)?;
    let cover = CoverCheck {
        samples: samples.len(),
        radius: opts.radius,
        violations,
        worst_distance,
    };

    let potential = build_avoidance_potential(&centers, opts.radius, opts.tau, opts.k)?;
    let bd = patch_boundary();
    let mut shoot_opts = opts.shoot.clone();
    shoot_opts.step = opts.step;
    shoot_opts.method = opts.method;
    let res = shoot(&chart, &potential, &bd, &shoot_opts)?;

    let mut center_distances = Vec::new();
    for c in &centers {
        let single = ObstacleCloud::new(vec![c.clone()])?;
        center_distances.push(min_distance(&chart, &res.trajectory, &single)?.0);
    }
    let dense = ObstacleCloud::new(patch_grid(120))?;
    let obstacle_distance = min_distance(&chart, &res.trajectory, &dense)?.0;

    let (a, j) = bd.hermite_jets();
    let free = crate::integrator::integrate(
        &chart,
        &crate::potential::PotentialSum::zero(),
        &bd.initial_state(a, j),
        bd.horizon,
        opts.step,
        Method::Rk4,
    )?;
    let free_obstacle_distance = min_distance(&chart, &free, &dense)?.0;

    let report = ReproReport {
        cover,
        converged: res.converged,
        residual: res.residual,
        evaluations: res.evaluations,
        a0: res.a0,
        j0: res.j0,
        action: action_value(&chart, &potential, &res.trajectory)?,
        center_distances,
        obstacle_distance,
        free_obstacle_distance,
        patch_crossings: patch_crossings(&res.trajectory),
        free_patch_crossings: patch_crossings(&free),
    };
    Ok(ReproRun {
        report,
        trajectory: res.trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_lie_on_the_patch() {
        for c in patch_centers() {
            assert!((c.norm() - 1.0).abs() < 1e-15);
            assert!(c.iter().all(|x| *x > 0.0));
        }
    }

    #[test]
    fn patch_samples_are_seeded() {
        assert_eq!(sample_patch(10, 4), sample_patch(10, 4));
        assert_ne!(sample_patch(10, 4), sample_patch(10, 5));
    }

    #[test]
    fn patch_corner_is_farthest_from_centers() {
        let chart = EuclideanChart::new(3).unwrap();
        let corner = patch_point(FRAC_PI_4, FRAC_PI_2);
        let (_, worst) = check_coverage(&chart, std::slice::from_ref(&corner), &patch_centers(), 0.3).unwrap();
        assert!(worst > 0.36 && worst < 0.37, "{worst}");
    }
}
