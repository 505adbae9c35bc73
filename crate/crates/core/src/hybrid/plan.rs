use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::{validate_zeno, Guard, HybridSystem};
use crate::avoidance::{
    build_avoidance_potential, cover_obstacle, select_parameters, CoverOptions, ParameterGrid, ReferenceSummary,
    ToleranceBands,
};
use crate::bvp::{shoot, BoundaryData, ShootOptions};
use crate::error::{Error, Result};
use crate::integrator::{JetState, Trajectory};
use crate::manifold::{check_dims, fmt_vec, ManifoldChart, Vector};
use crate::potential::PotentialSum;

const CROSSING_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub vertex: String,
    #[serde(with = "crate::serde_vec")]
    pub q: Vector,
    #[serde(with = "crate::serde_vec")]
    pub v: Vector,
}

/// Knot points `ξ_n` on vertices `σ(n)` at times `t_1 = 0 < … < t_s = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotSequence {
    pub times: Vec<f64>,
    pub knots: Vec<Knot>,
}

impl KnotSequence {
    pub fn validate(&self, sys: &HybridSystem) -> Result<()> {
        if self.knots.len() < 2 || self.knots.len() != self.times.len() {
            return Err(Error::validation(format!(
                "knot sequence needs at least two knots with one time each ({} knots, {} times)",
                self.knots.len(),
                self.times.len()
            )));
        }
        if self.times[0] != 0.0 {
            return Err(Error::validation("knot times must start at 0"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) || self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::validation("knot times must be finite and strictly increasing"));
        }
        for (n, k) in self.knots.iter().enumerate() {
            sys.check_point_on(&k.vertex, &k.q, &format!("knot {n} position"))?;
            check_dims(sys.chart(&k.vertex)?.dim(), &k.v, &format!("knot {n} velocity"))?;
            for e in sys.outgoing(&k.vertex) {
                if sys.edges[e].guard.contains(&k.q) {
                    return Err(Error::validation(format!(
                        "knot {n} at {} lies inside the guard of edge {}",
                        fmt_vec(&k.q),
                        sys.edges[e].label()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Bump strength and sharpness for guard potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ParameterChoice {
    Fixed { tau: f64, k: u32 },
    /// Certified selection, using the unobstructed solution of each leg as reference.
    Auto {
        #[serde(default)]
        grid: ParameterGrid,
        sensing_radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuardAvoidance {
    /// Collision tolerance around guard samples.
    pub r: f64,
    /// Support radius of the guard bumps.
    #[serde(rename = "R")]
    pub big_r: f64,
    pub parameters: ParameterChoice,
    pub cover: CoverOptions,
}

impl Default for GuardAvoidance {
    fn default() -> Self {
        GuardAvoidance {
            r: 0.05,
            big_r: 0.3,
            parameters: ParameterChoice::Fixed { tau: 100.0 / E, k: 4 },
            cover: CoverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridOptions {
    pub shoot: ShootOptions,
    pub avoidance: GuardAvoidance,
    /// Allowed position and velocity mismatch at every knot.
    pub knot_tolerance: f64,
    pub zeno_margin: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            shoot: ShootOptions {
                tolerance: 1e-10,
                ..ShootOptions::default()
            },
            avoidance: GuardAvoidance::default(),
            knot_tolerance: 1e-4,
            zeno_margin: 1e-3,
        }
    }
}

/// Smooth piece on one vertex; trajectory times are absolute.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub vertex: String,
    pub segment: usize,
    pub trajectory: Trajectory,
}

impl Piece {
    pub fn start(&self) -> f64 {
        self.trajectory.start_time()
    }

    pub fn end(&self) -> f64 {
        self.trajectory.end_time()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    pub time: f64,
    pub segment: usize,
    pub edge: String,
    pub edge_index: usize,
    #[serde(with = "crate::serde_vec")]
    pub pre_q: Vector,
    #[serde(with = "crate::serde_vec")]
    pub pre_v: Vector,
    #[serde(with = "crate::serde_vec")]
    pub post_q: Vector,
    #[serde(with = "crate::serde_vec")]
    pub post_v: Vector,
    /// Free-endpoint optimality residual of the piece ending at this impact.
    pub boundary_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentPlan {
    pub pieces: Vec<Piece>,
    pub impacts: Vec<Impact>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridTrajectory {
    pub pieces: Vec<Piece>,
    pub impacts: Vec<Impact>,
}

impl HybridTrajectory {
    pub fn start_time(&self) -> f64 {
        self.pieces.first().map_or(0.0, Piece::start)
    }

    pub fn end_time(&self) -> f64 {
        self.pieces.last().map_or(0.0, Piece::end)
    }

    /// Whether consecutive pieces share endpoints and cover `[0, T]`.
    pub fn tiles(&self, horizon: f64) -> bool {
        !self.pieces.is_empty()
            && self.start_time() == 0.0
            && self.end_time() == horizon
            && self.pieces.windows(2).all(|w| w[0].end() == w[1].start())
    }
}

/// First entry of a trajectory into a guard.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub state: JetState,
    /// Index of the first stored sample inside the guard.
    pub index: usize,
}

fn hermite_state(t0: f64, s0: &JetState, t1: f64, s1: &JetState, t: f64) -> JetState {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let q = &s0.q * (2.0 * s3 - 3.0 * s2 + 1.0)
        + &s0.v * (h * (s3 - 2.0 * s2 + s))
        + &s1.q * (-2.0 * s3 + 3.0 * s2)
        + &s1.v * (h * (s3 - s2));
    let v = &s0.q * ((6.0 * s2 - 6.0 * s) / h)
        + &s0.v * (3.0 * s2 - 4.0 * s + 1.0)
        + &s1.q * ((-6.0 * s2 + 6.0 * s) / h)
        + &s1.v * (3.0 * s2 - 2.0 * s);
    let a = &s0.a * (1.0 - s) + &s1.a * s;
    let j = &s0.j * (1.0 - s) + &s1.j * s;
    JetState::new(q, v, a, j)
}

/// First time the trajectory enters `guard`, refined by bisection on the
/// cubic Hermite interpolant of the bracketing samples.
///
/// Entries and exits within one step are missed unless a sample lands inside.
pub fn detect_crossing(chart: &dyn ManifoldChart, traj: &Trajectory, guard: &Guard) -> Result<Option<Crossing>> {
    if guard.contains(&traj.first().q) {
        return Err(Error::Precondition(format!(
            "trajectory starts inside the guard at {}",
            fmt_vec(&traj.first().q)
        )));
    }
    let Some(index) = traj.states.iter().position(|s| guard.contains(&s.q)) else {
        return Ok(None);
    };
    let (t0, t1) = (traj.times[index - 1], traj.times[index]);
    let (s0, s1) = (&traj.states[index - 1], &traj.states[index]);
    let (mut lo, mut hi) = (t0, t1);
    let mut inside = s1.clone();
    while hi - lo > CROSSING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let state = hermite_state(t0, s0, t1, s1, mid);
        if guard.contains(&state.q) {
            hi = mid;
            inside = state;
        } else {
            lo = mid;
        }
    }
    chart.check_point(&inside.q)?;
    Ok(Some(Crossing {
        time: hi,
        state: inside,
        index,
    }))
}

/// `g(a, a) − g(v, j)` at the final sample.
pub fn boundary_residual(chart: &dyn ManifoldChart, piece: &Trajectory) -> Result<f64> {
    let s = piece.last();
    Ok(chart.inner(&s.q, &s.a, &s.a)? - chart.inner(&s.q, &s.v, &s.j)?)
}

fn fail(segment: usize, reason: impl Into<String>) -> Error {
    Error::SegmentFailure {
        segment,
        reason: reason.into(),
    }
}

/// Bump potential covering every guard leaving `vertex` except `except`.
fn guard_potential(
    sys: &HybridSystem,
    vertex: &str,
    except: Option<usize>,
    bd: &BoundaryData,
    opts: &HybridOptions,
) -> Result<PotentialSum> {
    let chart = sys.chart(vertex)?;
    let av = &opts.avoidance;
    let mut centers = Vec::new();
    let mut r_star = f64::NAN;
    for e in sys.outgoing(vertex) {
        if Some(e) == except {
            continue;
        }
        let cover = cover_obstacle(chart, &sys.edges[e].guard.cloud, av.r, av.big_r, &av.cover)?;
        r_star = cover.r_star;
        centers.extend(cover.centers);
    }
    if centers.is_empty() {
        return Ok(PotentialSum::zero());
    }
    let (tau, k) = match &av.parameters {
        ParameterChoice::Fixed { tau, k } => (*tau, *k),
        ParameterChoice::Auto { grid, sensing_radius } => {
            let bands = ToleranceBands::new(av.r, r_star, av.big_r)?;
            let reference = shoot(chart, &PotentialSum::zero(), bd, &opts.shoot)?;
            let v0_norm = chart.norm(&bd.q0, &bd.v0)?;
            let summary = ReferenceSummary::from_trajectory(chart, &reference.trajectory, &centers, &bands, v0_norm)?;
            let sel = select_parameters(chart, &bands, *sensing_radius, &summary, &centers, grid)?;
            (sel.tau, sel.k)
        }
    };
    build_avoidance_potential(&centers, av.big_r, tau, k)
}

fn shoot_leg(
    chart: &dyn ManifoldChart,
    potential: &PotentialSum,
    bd: &BoundaryData,
    opts: &HybridOptions,
    segment: usize,
    what: &str,
) -> Result<Trajectory> {
    let res = shoot(chart, potential, bd, &opts.shoot)?;
    if !res.converged {
        return Err(fail(
            segment,
            format!(
                "{what}: shooting did not converge (residual {:e} after {} evaluations)",
                res.residual, res.evaluations
            ),
        ));
    }
    Ok(res.trajectory)
}

fn check_no_crossing(
    sys: &HybridSystem,
    vertex: &str,
    traj: &Trajectory,
    except: Option<usize>,
    segment: usize,
    what: &str,
) -> Result<()> {
    let chart = sys.chart(vertex)?;
    for e in sys.outgoing(vertex) {
        if Some(e) == except {
            continue;
        }
        if let Some(c) = detect_crossing(chart, traj, &sys.edges[e].guard)? {
            return Err(fail(
                segment,
                format!("{what} crosses the guard of edge {} at t = {}", sys.edges[e].label(), c.time),
            ));
        }
    }
    Ok(())
}

/// Same-vertex segment: a spline avoiding every guard leaving the vertex.
/// The returned trajectory starts at time 0.
pub fn plan_segment_case1(
    sys: &HybridSystem,
    start: &Knot,
    end: &Knot,
    duration: f64,
    opts: &HybridOptions,
    segment: usize,
) -> Result<Trajectory> {
    if start.vertex != end.vertex {
        return Err(Error::validation(format!(
            "same-vertex segment joins different vertices {:?} and {:?}",
            start.vertex, end.vertex
        )));
    }
    let chart = sys.chart(&start.vertex)?;
    let bd = BoundaryData::new(start.q.clone(), start.v.clone(), end.q.clone(), end.v.clone(), duration);
    let potential = guard_potential(sys, &start.vertex, None, &bd, opts)?;
    let traj = shoot_leg(chart, &potential, &bd, opts, segment, "same-vertex leg")?;
    check_no_crossing(sys, &start.vertex, &traj, None, segment, "same-vertex leg")?;
    Ok(traj)
}

fn point_segment_distance(x: &Vector, a: &Vector, b: &Vector) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((x - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (x - (a + ab * s)).norm()
}

/// Guard sample nearest to the coordinate chord from `from` to `toward`.
fn default_guard_target(guard: &Guard, from: &Vector, toward: &Vector) -> Vector {
    let toward = if toward.len() == from.len() { toward } else { from };
    guard
        .cloud
        .points
        .iter()
        .min_by(|x, y| point_segment_distance(x, from, toward).total_cmp(&point_segment_distance(y, from, toward)))
        .expect("guard clouds are non-empty")
        .clone()
}

/// Leading part of `traj` up to the crossing, which becomes the last sample.
fn clip(traj: &Trajectory, crossing: &Crossing) -> Result<Trajectory> {
    let mut times = traj.times[..crossing.index].to_vec();
    let mut states = traj.states[..crossing.index].to_vec();
    if crossing.time - times.last().copied().unwrap_or(f64::NEG_INFINITY) < 1e-12 {
        times.pop();
        states.pop();
    }
    times.push(crossing.time);
    states.push(crossing.state.clone());
    Trajectory::new(traj.chart.clone(), times, states)
}

/// Cross-vertex segment along `path` (edge indices from `start.vertex` to `end.vertex`).
///
/// With `m = path.len() + 1` legs of budget `α = duration/m`, each leg but the
/// last shoots toward a target `η_j` on the next guard while avoiding the other
/// guards of its vertex, is clipped at its first entry into that guard and is
/// continued from the reset image. The last leg reaches `end` over the time
/// that remains. `targets[j]` overrides `η_j`; by default it is the guard sample
/// nearest the chord towards the end knot. An empty path is a same-vertex
/// segment.
#[allow(clippy::too_many_arguments)]
pub fn plan_segment_case2(
    sys: &HybridSystem,
    path: &[usize],
    start: &Knot,
    end: &Knot,
    t_start: f64,
    duration: f64,
    targets: &[Option<Vector>],
    opts: &HybridOptions,
    segment: usize,
) -> Result<SegmentPlan> {
    if path.is_empty() {
        let traj = plan_segment_case1(sys, start, end, duration, opts, segment)?;
        return Ok(SegmentPlan {
            pieces: vec![Piece {
                vertex: start.vertex.clone(),
                segment,
                trajectory: traj.shifted(t_start),
            }],
            impacts: Vec::new(),
        });
    }
    let mut at = start.vertex.as_str();
    for &e in path {
        let edge = sys
            .edges
            .get(e)
            .ok_or_else(|| Error::validation(format!("path uses unknown edge index {e}")))?;
        if edge.from != at {
            return Err(Error::validation(format!("path edge {} does not leave vertex {at:?}", edge.label())));
        }
        at = edge.to.as_str();
    }
    if at != end.vertex {
        return Err(Error::validation(format!("path ends at {at:?}, not at {:?}", end.vertex)));
    }

    let alpha = duration / (path.len() + 1) as f64;
    let mut plan = SegmentPlan::default();
    let mut vertex = start.vertex.clone();
    let mut q = start.q.clone();
    let mut v = start.v.clone();
    let mut t = t_start;

    for (j, &e) in path.iter().enumerate() {
        let edge = &sys.edges[e];
        let chart = sys.chart(&vertex)?;
        let eta = match targets.get(j).cloned().flatten() {
            Some(eta) => {
                check_dims(chart.dim(), &eta, "guard target")?;
                eta
            }
            None => default_guard_target(&edge.guard, &q, &end.q),
        };
        let arrival = -chart.log_at(&eta, &q)? / alpha;
        let bd = BoundaryData::new(q.clone(), v.clone(), eta.clone(), arrival, alpha);
        let potential = guard_potential(sys, &vertex, Some(e), &bd, opts)?;
        let leg = format!("leg {} toward guard {}", j + 1, edge.label());
        let res = shoot(chart, &potential, &bd, &opts.shoot)?;
        let crossing = detect_crossing(chart, &res.trajectory, &edge.guard)
            .map_err(|err| fail(segment, format!("{leg}: {err}")))?
            .ok_or_else(|| {
                fail(
                    segment,
                    format!(
                        "{leg} never enters the guard within {alpha} (target {}, residual {:e})",
                        fmt_vec(&eta),
                        res.residual
                    ),
                )
            })?;
        let piece = clip(&res.trajectory, &crossing)?;
        check_no_crossing(sys, &vertex, &piece, Some(e), segment, &leg)?;

        let pre = piece.last().clone();
        let (q_post, v_post) = edge.reset.apply(&pre.q, &pre.v);
        let target_chart = sys.chart(&edge.to)?;
        target_chart
            .check_point(&q_post)
            .map_err(|err| fail(segment, format!("reset of edge {} leaves the chart: {err}", edge.label())))?;
        for g in sys.outgoing(&edge.to) {
            if sys.edges[g].guard.contains(&q_post) {
                return Err(fail(
                    segment,
                    format!(
                        "reset of edge {} lands inside the guard of edge {}",
                        edge.label(),
                        sys.edges[g].label()
                    ),
                ));
            }
        }
        let impact_time = t + crossing.time;
        plan.impacts.push(Impact {
            time: impact_time,
            segment,
            edge: edge.label(),
            edge_index: e,
            pre_q: pre.q.clone(),
            pre_v: pre.v.clone(),
            post_q: q_post.clone(),
            post_v: v_post.clone(),
            boundary_residual: boundary_residual(chart, &piece)?,
        });
        plan.pieces.push(Piece {
            vertex: vertex.clone(),
            segment,
            trajectory: piece.shifted(t),
        });
        vertex = edge.to.clone();
        q = q_post;
        v = v_post;
        t = impact_time;
    }

    let remaining = t_start + duration - t;
    if !(remaining > 0.0) {
        return Err(fail(segment, "no time left for the final leg"));
    }
    let chart = sys.chart(&vertex)?;
    let bd = BoundaryData::new(q, v, end.q.clone(), end.v.clone(), remaining);
    let potential = guard_potential(sys, &vertex, None, &bd, opts)?;
    let traj = shoot_leg(chart, &potential, &bd, opts, segment, "final leg")?;
    check_no_crossing(sys, &vertex, &traj, None, segment, "final leg")?;
    // absolute end time fixed to the knot time rather than accumulated
    let mut traj = traj.shifted(t);
    if let Some(last) = traj.times.last_mut() {
        *last = t_start + duration;
    }
    plan.pieces.push(Piece {
        vertex,
        segment,
        trajectory: traj,
    });
    Ok(plan)
}

fn as_segment_failure(segment: usize, err: Error) -> Error {
    match err {
        Error::SegmentFailure { .. } => err,
        other => fail(segment, other.to_string()),
    }
}

/// Glues same-vertex and cross-vertex segments through every knot pair.
pub fn interpolate(sys: &HybridSystem, knots: &KnotSequence, opts: &HybridOptions) -> Result<HybridTrajectory> {
    knots.validate(sys)?;
    let zeno = validate_zeno(sys, opts.zeno_margin)?;
    if !zeno.passed {
        let first = &zeno.violations[0];
        return Err(Error::Precondition(format!(
            "reset of edge {} maps guard sample {} within {} of a guard (margin {})",
            first.edge, first.sample, first.distance, opts.zeno_margin
        )));
    }
    let mut out = HybridTrajectory::default();
    for n in 0..knots.knots.len() - 1 {
        let (start, end) = (&knots.knots[n], &knots.knots[n + 1]);
        let (t0, t1) = (knots.times[n], knots.times[n + 1]);
        let plan = (|| {
            let path = sys.shortest_path(&start.vertex, &end.vertex)?;
            let mut plan = plan_segment_case2(sys, &path, start, end, t0, t1 - t0, &[], opts, n)?;
            if let Some(last) = plan.pieces.last_mut() {
                if let Some(tl) = last.trajectory.times.last_mut() {
                    *tl = t1;
                }
            }
            Ok(plan)
        })()
        .map_err(|e| as_segment_failure(n, e))?;

        let last = plan.pieces.last().expect("segment has a piece").trajectory.last();
        let chart = sys.chart(&end.vertex)?;
        let dq = chart.distance(&last.q, &end.q)?;
        let dv = chart.norm(&end.q, &(&last.v - &end.v))?;
        if dq > opts.knot_tolerance || dv > opts.knot_tolerance {
            return Err(fail(
                n,
                format!("knot {} missed by {dq:e} in position and {dv:e} in velocity", n + 1),
            ));
        }
        out.pieces.extend(plan.pieces);
        out.impacts.extend(plan.impacts);
    }
    Ok(out)
}
