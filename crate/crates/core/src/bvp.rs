//! Single shooting for the two-point boundary-value problem.
//!
//! Position and velocity are prescribed at both ends. The unknown initial
//! covariant acceleration and jerk `(a0, j0) ∈ R^{2n}` are searched with the
//! downhill simplex method so that the terminal state matches the target.
//! The terminal mismatch is
//!
//! ```text
//! w_q · d(q(T), qT)² + w_v · ‖v(T) − vT‖²_{g(qT)}
//! ```
//!
//! with the velocity difference taken in chart coordinates. Both endpoints
//! must therefore lie on the same chart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, propagate, JetState, Method, Trajectory};
use crate::manifold::{check_dims, ManifoldChart, Vector};
use crate::potential::PotentialSum;
use crate::simplex::{minimize, SimplexOptions};

/// Boundary data `ξ = (q0, v0)`, `η = (qT, vT)` and horizon `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    #[serde(with = "crate::serde_vec")]
    pub q0: Vector,
    #[serde(with = "crate::serde_vec")]
    pub v0: Vector,
    #[serde(rename = "qT", with = "crate::serde_vec")]
    pub q_end: Vector,
    #[serde(rename = "vT", with = "crate::serde_vec")]
    pub v_end: Vector,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl BoundaryData {
    pub fn new(q0: Vector, v0: Vector, q_end: Vector, v_end: Vector, horizon: f64) -> Self {
        BoundaryData {
            q0,
            v0,
            q_end,
            v_end,
            horizon,
        }
    }

    pub fn validate(&self, chart: &dyn ManifoldChart) -> Result<()> {
        let n = chart.dim();
        check_dims(n, &self.q0, "q0")?;
        check_dims(n, &self.v0, "v0")?;
        check_dims(n, &self.q_end, "qT")?;
        check_dims(n, &self.v_end, "vT")?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::validation(format!("horizon T must be positive, got {}", self.horizon)));
        }
        if self.v0.iter().chain(self.v_end.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("boundary velocities must be finite"));
        }
        chart.check_point(&self.q0)?;
        chart.check_point(&self.q_end)
    }

    /// Initial jet for a given guess of the unknown acceleration and jerk.
    pub fn initial_state(&self, a0: Vector, j0: Vector) -> JetState {
        JetState::new(self.q0.clone(), self.v0.clone(), a0, j0)
    }

    /// Acceleration and jerk at `t = 0` of the coordinate Hermite cubic
    /// matching the boundary data.
    pub fn hermite_jets(&self) -> (Vector, Vector) {
        let t = self.horizon;
        let gap = &self.q_end - &self.q0 - &self.v0 * t;
        let dv = &self.v_end - &self.v0;
        let j0 = (&dv * (6.0 * t) - &gap * 12.0) / t.powi(3);
        let a0 = &dv / t - &j0 * (0.5 * t);
        (a0, j0)
    }
}

/// Starting point of the simplex search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InitialGuess {
    /// `a0 = j0 = 0`.
    #[default]
    Zero,
    /// Jets of the coordinate Hermite cubic through the boundary data.
    Hermite,
    Given {
        #[serde(with = "crate::serde_vec")]
        a0: Vector,
        #[serde(with = "crate::serde_vec")]
        j0: Vector,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    pub step: f64,
    pub method: Method,
    pub simplex: SimplexOptions,
    /// Residual below which the solve counts as converged.
    pub tolerance: f64,
    pub position_weight: f64,
    pub velocity_weight: f64,
    pub initial_guess: InitialGuess,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            step: 1e-3,
            method: Method::Rk4,
            simplex: SimplexOptions {
                target_value: 1e-16,
                ..SimplexOptions::default()
            },
            tolerance: 1e-6,
            position_weight: 1.0,
            velocity_weight: 1.0,
            initial_guess: InitialGuess::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingResult {
    pub trajectory: Trajectory,
    pub residual: f64,
    pub a0: Vector,
    pub j0: Vector,
    pub evaluations: usize,
    pub converged: bool,
    /// Best residual after each simplex iteration.
    pub best_history: Vec<f64>,
}

/// Terminal mismatch of `end` against the target `(qT, vT)`.
pub fn terminal_residual(chart: &dyn ManifoldChart, bd: &BoundaryData, end: &JetState, opts: &ShootOptions) -> Result<f64> {
    let d = chart.distance(&end.q, &bd.q_end)?;
    let dv = &end.v - &bd.v_end;
    let dv2 = chart.inner(&bd.q_end, &dv, &dv)?;
    Ok(opts.position_weight * d * d + opts.velocity_weight * dv2)
}

fn split(x: &[f64]) -> (Vector, Vector) {
    let n = x.len() / 2;
    (Vector::from_row_slice(&x[..n]), Vector::from_row_slice(&x[n..]))
}

/// Finds `(a0, j0)` whose trajectory meets the terminal boundary data.
///
/// Exhausting the evaluation budget is not an error: the best vertex is
/// returned with `converged = false`. Probes whose integration fails score `+∞`.
pub fn shoot(chart: &dyn ManifoldChart, potential: &PotentialSum, bd: &BoundaryData, opts: &ShootOptions) -> Result<ShootingResult> {
    bd.validate(chart)?;
    potential.validate(chart.dim(), None)?;
    if !(opts.tolerance > 0.0) {
        return Err(Error::validation("shooting tolerance must be positive"));
    }
    let n = chart.dim();
    let (a_init, j_init) = match &opts.initial_guess {
        InitialGuess::Zero => (Vector::zeros(n), Vector::zeros(n)),
        InitialGuess::Hermite => bd.hermite_jets(),
        InitialGuess::Given { a0, j0 } => {
            check_dims(n, a0, "initial acceleration guess")?;
            check_dims(n, j0, "initial jerk guess")?;
            (a0.clone(), j0.clone())
        }
    };
    let x0: Vec<f64> = a_init.iter().chain(j_init.iter()).copied().collect();

    let objective = |x: &[f64]| -> f64 {
        let (a0, j0) = split(x);
        let s0 = bd.initial_state(a0, j0);
        match propagate(chart, potential, &s0, bd.horizon, opts.step, opts.method) {
            Ok(end) => terminal_residual(chart, bd, &end, opts).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let outcome = minimize(objective, &x0, &opts.simplex);

    let (a0, j0) = split(&outcome.x);
    let trajectory = integrate(chart, potential, &bd.initial_state(a0.clone(), j0.clone()), bd.horizon, opts.step, opts.method)?;
    let residual = terminal_residual(chart, bd, trajectory.last(), opts)?;
    Ok(ShootingResult {
        trajectory,
        residual,
        a0,
        j0,
        evaluations: outcome.evaluations,
        converged: residual < opts.tolerance,
        best_history: outcome.best_history,
    })
}
