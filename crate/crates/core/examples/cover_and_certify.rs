//! Covers a sampled obstacle, picks bump parameters from a reference path
//! and plans a spline around the obstacle.

use std::path::Path;

use geospline::avoidance::{
    build_avoidance_potential, cover_obstacle, min_distance, select_parameters, verify_cover, CoverOptions,
    ParameterGrid, ReferenceSummary, ToleranceBands,
};
use geospline::bvp::{shoot, BoundaryData, InitialGuess, ShootOptions};
use geospline::integrator::{action_value, integrate, JetState, Method};
use geospline::io::load_cloud;
use geospline::manifold::{EuclideanChart, Vector};
use geospline::potential::PotentialSum;

fn main() -> geospline::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios");
    let chart = EuclideanChart::new(2)?;
    let cloud = load_cloud(&dir.join("blob.csv"))?;

    let cover = cover_obstacle(&chart, &cloud, 0.05, 0.3, &CoverOptions::default())?;
    let check = verify_cover(&chart, &cloud, &cover, 10_000, 7)?;
    println!(
        "{} points -> {} centers (delta {:.3}, r* {:.3}), verification passed: {}",
        cloud.len(),
        cover.centers.len(),
        cover.delta,
        cover.r_star,
        check.passed()
    );

    let bands = ToleranceBands::new(cover.r, cover.r_star, cover.big_r)?;
    // an accelerating reference well clear of the obstacle
    let start = JetState::new(
        Vector::from_vec(vec![0.0, 0.6]),
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::from_vec(vec![0.0, 0.4]),
        Vector::zeros(2),
    );
    let reference = integrate(&chart, &PotentialSum::zero(), &start, 1.2, 1e-2, Method::Rk4)?;
    let v0 = start.v.norm();
    let summary = ReferenceSummary::from_trajectory(&chart, &reference, &cover.centers, &bands, v0)?;
    let sel = select_parameters(&chart, &bands, 0.5, &summary, &cover.centers, &ParameterGrid::default())?;
    println!(
        "selected tau = {}, k = {}: threshold {:.4}, V* lower bound {:.4}",
        sel.tau, sel.k, sel.certificate.threshold, sel.certificate.v_star_lower
    );

    let potential = build_avoidance_potential(&cover.centers, bands.big_r, sel.tau, sel.k)?;
    let bd = BoundaryData::new(
        Vector::from_vec(vec![0.0, 0.05]),
        Vector::from_vec(vec![1.0, 0.0]),
        Vector::from_vec(vec![1.2, 0.05]),
        Vector::from_vec(vec![1.0, 0.0]),
        1.2,
    );
    // the straight Hermite guess finds the critical point through the obstacle;
    // a guess bending upwards finds the detour, which has the lower action
    let guesses = [
        ("hermite", InitialGuess::Hermite),
        (
            "upward",
            InitialGuess::Given {
                a0: Vector::from_vec(vec![0.0, 4.0]),
                j0: Vector::from_vec(vec![0.0, -10.0]),
            },
        ),
    ];
    for (label, initial_guess) in guesses {
        let opts = ShootOptions {
            initial_guess,
            ..ShootOptions::default()
        };
        let res = shoot(&chart, &potential, &bd, &opts)?;
        let (d, t) = min_distance(&chart, &res.trajectory, &cloud)?;
        let action = action_value(&chart, &potential, &res.trajectory)?;
        println!(
            "{label:8} guess: residual {:.3e}, action {action:.4}, closest approach {d:.4} at t = {t:.3}",
            res.residual
        );
    }
    Ok(())
}
