//! Interpolates knots across two planar domains glued by translations.
//! Leaving `A` through `x > 1` lands in `B` shifted by `-2`, and leaving `B`
//! through `x < -2` shifts back.

use std::sync::Arc;

use geospline::avoidance::ObstacleCloud;
use geospline::hybrid::{
    interpolate, AffineReset, Edge, Guard, GuardPrimitive, HybridOptions, HybridSystem, Knot, KnotSequence, Vertex,
};
use geospline::manifold::{EuclideanChart, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn strip(x0: f64, side: f64) -> geospline::Result<Guard> {
    let mut pts = Vec::new();
    for i in 0..3 {
        for j in 0..=40 {
            pts.push(v(&[x0 + side * (0.05 + 0.1 * i as f64), -2.0 + 0.1 * j as f64]));
        }
    }
    Ok(Guard {
        cloud: ObstacleCloud::new(pts)?,
        primitive: GuardPrimitive::Halfspace {
            normal: v(&[side, 0.0]),
            offset: side * x0,
        },
        threshold: 0.0,
    })
}

fn main() -> geospline::Result<()> {
    let plane = |id: &str| -> geospline::Result<Vertex> {
        Ok(Vertex {
            id: id.into(),
            chart: Arc::new(EuclideanChart::new(2)?),
        })
    };
    let sys = HybridSystem::new(
        vec![plane("A")?, plane("B")?],
        vec![
            Edge {
                from: "A".into(),
                to: "B".into(),
                guard: strip(1.0, 1.0)?,
                reset: AffineReset::translation(v(&[-2.0, 0.0])),
            },
            Edge {
                from: "B".into(),
                to: "A".into(),
                guard: strip(-2.0, -1.0)?,
                reset: AffineReset::translation(v(&[2.0, 0.0])),
            },
        ],
    )?;
    let knot = |vertex: &str, q: &[f64], vel: &[f64]| Knot {
        vertex: vertex.into(),
        q: v(q),
        v: v(vel),
    };
    let knots = KnotSequence {
        times: vec![0.0, 1.0, 3.0],
        knots: vec![
            knot("A", &[-0.5, 0.0], &[0.5, 0.0]),
            knot("A", &[0.0, 0.4], &[0.5, 0.0]),
            knot("B", &[0.0, 0.5], &[0.5, 0.0]),
        ],
    };

    let traj = interpolate(&sys, &knots, &HybridOptions::default())?;
    for p in &traj.pieces {
        println!("piece on {} over [{:.4}, {:.4}]", p.vertex, p.start(), p.end());
    }
    for i in &traj.impacts {
        println!(
            "impact {} at t = {:.6}: {:?} -> {:?}",
            i.edge,
            i.time,
            i.pre_q.as_slice(),
            i.post_q.as_slice()
        );
    }
    Ok(())
}
