//! Avoidance of a spherical patch by three bumps, with the cover and
//! clearance diagnostics of the run.

use geospline::repro::{run_repro, ReproOptions};

fn main() -> geospline::Result<()> {
    let run = run_repro(&ReproOptions::default())?;
    let r = &run.report;
    println!(
        "cover: {}/{} patch samples farther than {} from every center (worst {:.4})",
        r.cover.violations, r.cover.samples, r.cover.radius, r.cover.worst_distance
    );
    println!("shooting: converged {}, residual {:.3e}, {} evaluations", r.converged, r.residual, r.evaluations);
    println!("a0 = {:?}", r.a0.as_slice());
    println!("j0 = {:?}", r.j0.as_slice());
    println!("action {:.6}", r.action);
    println!("distance to each center: {:?}", r.center_distances);
    println!("distance to the patch: {:.4} (free cubic {:.4})", r.obstacle_distance, r.free_obstacle_distance);
    println!("patch crossings at t = {:?} (free cubic {:?})", r.patch_crossings, r.free_patch_crossings);
    Ok(())
}
