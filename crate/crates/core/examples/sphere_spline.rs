//! Shoots a Riemannian cubic on the unit sphere between two position and
//! velocity pairs given in spherical coordinates.

use geospline::bvp::{shoot, BoundaryData, ShootOptions};
use geospline::integrator::action_value;
use geospline::manifold::{ManifoldChart, SphereChart, Vector};
use geospline::potential::PotentialSum;

fn main() -> geospline::Result<()> {
    let chart = SphereChart::new();
    let bd = BoundaryData::new(
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::from_vec(vec![0.6, 0.9]),
        Vector::from_vec(vec![1.6, 1.2]),
        Vector::from_vec(vec![-0.4, 0.7]),
        1.0,
    );
    let opts = ShootOptions {
        tolerance: 1e-10,
        ..ShootOptions::default()
    };
    let res = shoot(&chart, &PotentialSum::zero(), &bd, &opts)?;
    println!("converged: {} after {} evaluations", res.converged, res.evaluations);
    println!("terminal residual: {:.3e}", res.residual);
    println!("initial jets: a0 = {:?}, j0 = {:?}", res.a0.as_slice(), res.j0.as_slice());
    println!("action: {:.6}", action_value(&chart, &PotentialSum::zero(), &res.trajectory)?);

    let end = res.trajectory.last();
    let miss = chart.distance(&end.q, &bd.q_end)?;
    println!("endpoint distance to target: {miss:.3e}");
    Ok(())
}
