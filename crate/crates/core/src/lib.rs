//! Obstacle-avoiding Riemannian spline trajectories.
//!
//! Trajectories are critical points of `J(q) = ½ ∫ (‖D q̇/dt‖² + V(q)) dt`
//! on a chart of a Riemannian manifold, found by shooting on the fourth-order
//! Euler–Lagrange equation. Bump potentials around sampled obstacles are
//! certified to keep minimisers away from them, and the same machinery
//! interpolates knot points across the domains of a system with impulse effects.

pub mod avoidance;
pub mod bvp;
pub mod cli;
pub mod error;
pub mod hybrid;
pub mod integrator;
pub mod io;
pub mod manifold;
pub mod potential;
pub mod repro;
mod serde_vec;
pub mod simplex;

pub use error::{Error, Result};
