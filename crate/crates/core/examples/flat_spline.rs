//! Integrates a free cubic in the plane and compares it with the polynomial
//! it must reproduce, for both integrators.

use geospline::integrator::{action_value, integrate, JetState, Method};
use geospline::manifold::{EuclideanChart, Vector};
use geospline::potential::PotentialSum;

fn main() -> geospline::Result<()> {
    let chart = EuclideanChart::new(2)?;
    let s0 = JetState::new(
        Vector::from_vec(vec![0.0, 0.0]),
        Vector::from_vec(vec![1.0, 0.5]),
        Vector::from_vec(vec![-0.4, 0.2]),
        Vector::from_vec(vec![0.3, -0.6]),
    );
    let horizon = 2.0;
    let exact = |t: f64| &s0.q + &s0.v * t + &s0.a * (t * t / 2.0) + &s0.j * (t * t * t / 6.0);

    for (method, step) in [(Method::Euler, 1e-3), (Method::Rk4, 1e-2)] {
        let traj = integrate(&chart, &PotentialSum::zero(), &s0, horizon, step, method)?;
        let err = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(t, s)| (&s.q - exact(*t)).amax())
            .fold(0.0, f64::max);
        let action = action_value(&chart, &PotentialSum::zero(), &traj)?;
        println!("{method:?} h = {step}: {} samples, max error {err:.3e}, action {action:.6}", traj.len());
    }
    Ok(())
}
