//! Closed-form oracles and shared fixtures for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use geospline::avoidance::ObstacleCloud;
use geospline::hybrid::{AffineReset, Edge, Guard, GuardPrimitive, HybridSystem, Knot, KnotSequence, Vertex};
use geospline::manifold::{EuclideanChart, Vector};
use geospline::integrator::JetState;

pub fn v(x: &[f64]) -> Vector {
    Vector::from_row_slice(x)
}

/// State at time `t` of the flat curve `q0 + v0 t + a0 t²/2 + j0 t³/6`.
pub fn cubic_state(s0: &JetState, t: f64) -> JetState {
    JetState::new(
        &s0.q + &s0.v * t + &s0.a * (t * t / 2.0) + &s0.j * (t * t * t / 6.0),
        &s0.v + &s0.a * t + &s0.j * (t * t / 2.0),
        &s0.a + &s0.j * t,
        s0.j.clone(),
    )
}

/// Initial acceleration and jerk of the cubic with the given end conditions,
/// from the Hermite basis `h00, h10, h01, h11` differentiated twice and thrice at 0.
pub fn hermite_initial_jets(q0: &Vector, v0: &Vector, q1: &Vector, v1: &Vector, t: f64) -> (Vector, Vector) {
    // q(s) = h00 q0 + h10 T v0 + h01 q1 + h11 T v1, s = t/T
    // h00'' (0) = -6, h10''(0) = -4, h01''(0) = 6, h11''(0) = -2
    // h00'''(0) = 12, h10'''(0) = 6, h01'''(0) = -12, h11'''(0) = 6
    let a = (q0 * -6.0 + v0 * (-4.0 * t) + q1 * 6.0 + v1 * (-2.0 * t)) / (t * t);
    let j = (q0 * 12.0 + v0 * (6.0 * t) + q1 * -12.0 + v1 * (6.0 * t)) / (t * t * t);
    (a, j)
}

/// Unit-speed great circle on the sphere in `(θ, φ)` coordinates starting at
/// colatitude `theta0`, longitude `phi0` with heading `psi` measured from the
/// meridian direction `∂θ`: its embedding at arc length `s`.
pub fn great_circle_point(theta0: f64, phi0: f64, psi: f64, s: f64) -> [f64; 3] {
    let p = [theta0.sin() * phi0.cos(), theta0.sin() * phi0.sin(), theta0.cos()];
    let e_theta = [theta0.cos() * phi0.cos(), theta0.cos() * phi0.sin(), -theta0.sin()];
    let e_phi = [-phi0.sin(), phi0.cos(), 0.0];
    let mut x = [0.0; 3];
    for i in 0..3 {
        let u = psi.cos() * e_theta[i] + psi.sin() * e_phi[i];
        x[i] = s.cos() * p[i] + s.sin() * u;
    }
    x
}

pub fn embed(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Certificate chain written out step by step, independent of the library.
pub fn oracle_chain(a: f64, v_minus: f64, t: f64, v0: f64, r: f64, r_star: f64) -> (f64, f64, f64) {
    let c = a.powi(2) * t + v_minus * t;
    let ct = c * t;
    let root1 = f64::sqrt(ct);
    let root2 = f64::sqrt(ct + v0.powi(2));
    let v = root1 + root2;
    let threshold = (c * v) / (2.0 * r_star - 2.0 * r);
    (c, v, threshold)
}

fn plane(id: &str) -> Vertex {
    Vertex {
        id: id.into(),
        chart: Arc::new(EuclideanChart::new(2).unwrap()),
    }
}

/// Guard `{x > x0}` sampled on a grid strictly inside it.
pub fn right_strip(x0: f64) -> Guard {
    let mut pts = Vec::new();
    for i in 0..3 {
        for j in 0..=40 {
            pts.push(v(&[x0 + 0.05 + 0.1 * i as f64, -2.0 + 0.1 * j as f64]));
        }
    }
    Guard {
        cloud: ObstacleCloud::new(pts).unwrap(),
        primitive: GuardPrimitive::Halfspace {
            normal: v(&[1.0, 0.0]),
            offset: x0,
        },
        threshold: 0.0,
    }
}

/// Guard `{x < x0}` sampled on a grid strictly inside it.
pub fn left_strip(x0: f64) -> Guard {
    let mut pts = Vec::new();
    for i in 0..3 {
        for j in 0..=40 {
            pts.push(v(&[x0 - 0.05 - 0.1 * i as f64, -2.0 + 0.1 * j as f64]));
        }
    }
    Guard {
        cloud: ObstacleCloud::new(pts).unwrap(),
        primitive: GuardPrimitive::Halfspace {
            normal: v(&[-1.0, 0.0]),
            offset: -x0,
        },
        threshold: 0.0,
    }
}

/// Two copies of the plane. Leaving `A` through `x > 1` lands in `B` shifted
/// by `(−2, 0)`; leaving `B` through `x < −2` lands in `A` shifted by `(+2, 0)`.
pub fn two_domain_system() -> HybridSystem {
    let edges = vec![
        Edge {
            from: "A".into(),
            to: "B".into(),
            guard: right_strip(1.0),
            reset: AffineReset::translation(v(&[-2.0, 0.0])),
        },
        Edge {
            from: "B".into(),
            to: "A".into(),
            guard: left_strip(-2.0),
            reset: AffineReset::translation(v(&[2.0, 0.0])),
        },
    ];
    HybridSystem::new(vec![plane("A"), plane("B")], edges).unwrap()
}

/// A → A (no guard contact) → B (one impact).
pub fn two_domain_knots() -> KnotSequence {
    KnotSequence {
        times: vec![0.0, 1.0, 3.0],
        knots: vec![
            Knot {
                vertex: "A".into(),
                q: v(&[-0.5, 0.0]),
                v: v(&[0.5, 0.0]),
            },
            Knot {
                vertex: "A".into(),
                q: v(&[0.0, 0.4]),
                v: v(&[0.5, 0.0]),
            },
            Knot {
                vertex: "B".into(),
                q: v(&[0.0, 0.5]),
                v: v(&[0.5, 0.0]),
            },
        ],
    }
}

/// Chain `A → B → C` of planes joined by left-to-right strips and translations.
pub fn three_vertex_chain() -> HybridSystem {
    let edges = vec![
        Edge {
            from: "A".into(),
            to: "B".into(),
            guard: right_strip(1.0),
            reset: AffineReset::translation(v(&[-2.0, 0.0])),
        },
        Edge {
            from: "B".into(),
            to: "C".into(),
            guard: right_strip(1.0),
            reset: AffineReset::translation(v(&[-2.0, 0.0])),
        },
    ];
    HybridSystem::new(vec![plane("A"), plane("B"), plane("C")], edges).unwrap()
}

/// `Γ(x, y)` of the round sphere in `(θ, φ)` coordinates, written out by hand.
pub fn sphere_gamma(q: &Vector, x: &Vector, y: &Vector) -> Vector {
    let (s, c) = q[0].sin_cos();
    v(&[
        -s * c * x[1] * y[1],
        (c / s) * (x[0] * y[1] + x[1] * y[0]),
    ])
}

pub fn sphere_inner(q: &Vector, x: &Vector, y: &Vector) -> f64 {
    x[0] * y[0] + q[0].sin().powi(2) * x[1] * y[1]
}

/// `R(a, b)c = g(b, c) a − g(a, c) b` on the unit sphere.
pub fn sphere_curvature(q: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Vector {
    a * sphere_inner(q, b, c) - b * sphere_inner(q, a, c)
}

/// The sphere with the sign of its curvature operator reversed; everything
/// else delegates to the real chart.
#[derive(Debug)]
pub struct FlippedSphere(pub geospline::manifold::SphereChart);

impl geospline::manifold::ManifoldChart for FlippedSphere {
    fn name(&self) -> String {
        "flipped-sphere".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn check_point(&self, q: &Vector) -> geospline::Result<()> {
        self.0.check_point(q)
    }
    fn metric_at(&self, q: &Vector) -> geospline::Result<geospline::manifold::Matrix> {
        self.0.metric_at(q)
    }
    fn christoffel_at(&self, q: &Vector) -> geospline::Result<geospline::manifold::Christoffel> {
        self.0.christoffel_at(q)
    }
    fn christoffel_contract(&self, q: &Vector, x: &Vector, y: &Vector) -> geospline::Result<Vector> {
        self.0.christoffel_contract(q, x, y)
    }
    fn curvature_apply(&self, q: &Vector, a: &Vector, b: &Vector, c: &Vector) -> geospline::Result<Vector> {
        Ok(-self.0.curvature_apply(q, a, b, c)?)
    }
    fn exp_at(&self, q: &Vector, x: &Vector) -> geospline::Result<Vector> {
        self.0.exp_at(q, x)
    }
    fn log_at(&self, q: &Vector, y: &Vector) -> geospline::Result<Vector> {
        self.0.log_at(q, y)
    }
    fn distance(&self, q: &Vector, y: &Vector) -> geospline::Result<f64> {
        self.0.distance(q, y)
    }
    fn injectivity_radius(&self) -> f64 {
        self.0.injectivity_radius()
    }
    fn inner(&self, q: &Vector, x: &Vector, y: &Vector) -> geospline::Result<f64> {
        self.0.inner(q, x, y)
    }
}

/// `½ ∫ g(D q̇/dt, D q̇/dt) dt` on the sphere for the coordinate curve
/// `q + ε η` with `η(t) = (t(T − t)/T²)² w`, by the trapezoidal rule. The
/// base curve is given by its samples of `q`, coordinate `q̇` and covariant `a`.
pub fn sphere_action_perturbed(traj: &geospline::integrator::Trajectory, w: &Vector, eps: f64) -> f64 {
    let t_end = traj.end_time();
    let integrand = |t: f64, s: &JetState| {
        let u = t * (t_end - t) / (t_end * t_end);
        let du = (t_end - 2.0 * t) / (t_end * t_end);
        let ddu = -2.0 / (t_end * t_end);
        let eta = w * (u * u) * eps;
        let deta = w * (2.0 * u * du) * eps;
        let ddeta = w * (2.0 * du * du + 2.0 * u * ddu) * eps;
        let qdd = &s.a - sphere_gamma(&s.q, &s.v, &s.v);
        let q = &s.q + eta;
        let qd = &s.v + deta;
        let acc = qdd + ddeta + sphere_gamma(&q, &qd, &qd);
        0.5 * sphere_inner(&q, &acc, &acc)
    };
    let mut total = 0.0;
    for i in 1..traj.len() {
        let (t0, t1) = (traj.times[i - 1], traj.times[i]);
        total += 0.5 * (integrand(t0, &traj.states[i - 1]) + integrand(t1, &traj.states[i])) * (t1 - t0);
    }
    total
}

/// Central difference of the action along a family of bump variations.
pub fn sphere_first_variation(traj: &geospline::integrator::Trajectory, w: &Vector) -> f64 {
    let eps = 1e-4;
    (sphere_action_perturbed(traj, w, eps) - sphere_action_perturbed(traj, w, -eps)) / (2.0 * eps)
}

/// Largest knot mismatch `(position, velocity)` of a hybrid trajectory: each
/// knot is compared with the last sample at or before its time on its vertex.
pub fn knot_errors(
    sys: &HybridSystem,
    traj: &geospline::hybrid::HybridTrajectory,
    knots: &KnotSequence,
) -> (f64, f64) {
    let (mut dq, mut dv) = (0.0f64, 0.0f64);
    for (t, k) in knots.times.iter().zip(&knots.knots) {
        let chart = sys.chart(&k.vertex).unwrap();
        let state = traj
            .pieces
            .iter()
            .filter(|p| p.vertex == k.vertex && p.start() <= *t + 1e-12 && p.end() >= *t - 1e-12)
            .find_map(|p| {
                p.trajectory
                    .times
                    .iter()
                    .position(|s| (s - t).abs() < 1e-9)
                    .map(|i| p.trajectory.states[i].clone())
            })
            .unwrap_or_else(|| panic!("no sample at knot time {t} on {}", k.vertex));
        dq = dq.max(chart.distance(&state.q, &k.q).unwrap());
        dv = dv.max(chart.norm(&k.q, &(&state.v - &k.v)).unwrap());
    }
    (dq, dv)
}

/// Every impact joins the piece it ends to the piece it starts, and the
/// post-impact state is the reset of the pre-impact state, bitwise.
pub fn resets_are_consistent(sys: &HybridSystem, traj: &geospline::hybrid::HybridTrajectory) -> bool {
    traj.impacts.iter().all(|imp| {
        let edge = &sys.edges[imp.edge_index];
        let (q, w) = edge.reset.apply(&imp.pre_q, &imp.pre_v);
        let Some(i) = traj.pieces.iter().position(|p| p.vertex == edge.to && p.start() == imp.time) else {
            return false;
        };
        let before = traj.pieces[i - 1].trajectory.last();
        let after = traj.pieces[i].trajectory.first();
        q == imp.post_q
            && w == imp.post_v
            && after.q == imp.post_q
            && after.v == imp.post_v
            && before.q == imp.pre_q
            && before.v == imp.pre_v
    })
}

/// No piece enters a guard of its vertex other than the one whose impact ends it.
pub fn pieces_avoid_other_guards(sys: &HybridSystem, traj: &geospline::hybrid::HybridTrajectory) -> bool {
    traj.pieces.iter().all(|p| {
        let exit = traj.impacts.iter().find(|imp| imp.time == p.end()).map(|imp| imp.edge_index);
        let chart = sys.chart(&p.vertex).unwrap();
        sys.outgoing(&p.vertex)
            .into_iter()
            .filter(|e| Some(*e) != exit)
            .all(|e| geospline::hybrid::detect_crossing(chart, &p.trajectory, &sys.edges[e].guard).unwrap().is_none())
    })
}

/// Edge `A → B` through `x > 1` with the identity reset, while `B` has a
/// guard on the same halfspace: every reset image lands inside a guard.
pub fn identity_onto_guard_system() -> HybridSystem {
    let edges = vec![
        Edge {
            from: "A".into(),
            to: "B".into(),
            guard: right_strip(1.0),
            reset: AffineReset::identity(2),
        },
        Edge {
            from: "B".into(),
            to: "A".into(),
            guard: right_strip(1.0),
            reset: AffineReset::translation(v(&[-2.0, 0.0])),
        },
    ];
    HybridSystem::new(vec![plane("A"), plane("B")], edges).unwrap()
}
