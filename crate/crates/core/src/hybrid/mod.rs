//! Multi-domain systems with impulse effects and their spline interpolation.
//!
//! A [`HybridSystem`] is a directed graph whose vertices carry charts. Each
//! edge carries a guard (a sampled set plus a membership test) and an affine
//! reset into the target chart. Crossing a guard ends the current piece and
//! restarts the motion from the reset image of the pre-impact state.

mod plan;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::avoidance::ObstacleCloud;
use crate::error::{Error, Result};
use crate::manifold::{check_dims, fmt_vec, ManifoldChart, Matrix, Vector};

pub use plan::{
    boundary_residual, detect_crossing, interpolate, plan_segment_case1, plan_segment_case2, Crossing, GuardAvoidance,
    HybridOptions, HybridTrajectory, Impact, Knot, KnotSequence, ParameterChoice, Piece, SegmentPlan,
};

/// Shape whose signed distance defines guard membership, in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuardPrimitive {
    /// `{x : n·x ≥ offset}`; signed distance `(offset − n·x)/‖n‖`.
    Halfspace {
        #[serde(with = "crate::serde_vec")]
        normal: Vector,
        offset: f64,
    },
    /// Signed distance `‖x − c‖ − radius`.
    Ball {
        #[serde(with = "crate::serde_vec")]
        center: Vector,
        radius: f64,
    },
    /// Patch `{c + radius·(sin φ sin θ, sin φ cos θ, cos φ)}` of a sphere in three
    /// dimensions, with polar angle `φ ∈ phi` and azimuth `θ ∈ theta` measured
    /// from the second axis towards the first. The signed distance is the radial
    /// gap `|‖x − c‖ − radius|` over the patch directions and `+∞` elsewhere.
    SphericalPatch {
        #[serde(with = "crate::serde_vec")]
        center: Vector,
        radius: f64,
        phi: [f64; 2],
        theta: [f64; 2],
    },
}

impl GuardPrimitive {
    pub fn dim(&self) -> Option<usize> {
        match self {
            GuardPrimitive::Halfspace { normal, .. } => Some(normal.len()),
            GuardPrimitive::Ball { center, .. } => Some(center.len()),
            GuardPrimitive::SphericalPatch { .. } => Some(3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GuardPrimitive::Halfspace { normal, offset } => {
                if !(normal.norm() > 0.0) || !offset.is_finite() {
                    return Err(Error::validation("halfspace guard needs a non-zero normal and finite offset"));
                }
            }
            GuardPrimitive::Ball { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::validation("ball guard needs a positive radius"));
                }
            }
            GuardPrimitive::SphericalPatch { center, radius, phi, theta } => {
                if center.len() != 3 || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::validation("spherical patch guard needs a 3D center and positive radius"));
                }
                if !(phi[0] < phi[1] && theta[0] < theta[1]) {
                    return Err(Error::validation("spherical patch angle ranges must be increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn signed_distance(&self, x: &Vector) -> f64 {
        match self {
            GuardPrimitive::Halfspace { normal, offset } => (offset - normal.dot(x)) / normal.norm(),
            GuardPrimitive::Ball { center, radius } => (x - center).norm() - radius,
            GuardPrimitive::SphericalPatch { center, radius, phi, theta } => {
                let y = x - center;
                let rho = y.norm();
                if rho == 0.0 {
                    return f64::INFINITY;
                }
                let ph = (y[2] / rho).clamp(-1.0, 1.0).acos();
                let th = y[0].atan2(y[1]);
                let inside = ph > phi[0] && ph < phi[1] && th > theta[0] && th < theta[1];
                if inside {
                    (rho - radius).abs()
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Guard set: a finite sample for distances plus a membership predicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub cloud: ObstacleCloud,
    pub primitive: GuardPrimitive,
    /// Points with signed distance below this value are inside the guard.
    #[serde(default)]
    pub threshold: f64,
}

impl Guard {
    pub fn contains(&self, q: &Vector) -> bool {
        self.primitive.signed_distance(q) < self.threshold
    }
}

/// `q ↦ A q + b`, `v ↦ A v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineReset {
    #[serde(with = "crate::serde_vec::matrix")]
    pub matrix: Matrix,
    #[serde(with = "crate::serde_vec")]
    pub offset: Vector,
}

impl AffineReset {
    pub fn identity(n: usize) -> Self {
        AffineReset {
            matrix: Matrix::identity(n, n),
            offset: Vector::zeros(n),
        }
    }

    pub fn translation(offset: Vector) -> Self {
        let n = offset.len();
        AffineReset {
            matrix: Matrix::identity(n, n),
            offset,
        }
    }

    pub fn apply_point(&self, q: &Vector) -> Vector {
        &self.matrix * q + &self.offset
    }

    pub fn apply(&self, q: &Vector, v: &Vector) -> (Vector, Vector) {
        (self.apply_point(q), &self.matrix * v)
    }
}

#[derive(Clone)]
pub struct Vertex {
    pub id: String,
    pub chart: Arc<dyn ManifoldChart>,
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Vertex").field("id", &self.id).field("chart", &self.chart.name()).finish()
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub guard: Guard,
    pub reset: AffineReset,
}

impl Edge {
    pub fn label(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

#[derive(Clone, Debug)]
pub struct HybridSystem {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl HybridSystem {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate vertex id {:?}", v.id)));
            }
        }
        let sys = HybridSystem { vertices, edges, index };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::validation("hybrid system has no vertices"));
        }
        for e in &self.edges {
            let from = self.vertex(&e.from)?;
            let to = self.vertex(&e.to)?;
            let (n_from, n_to) = (from.chart.dim(), to.chart.dim());
            e.guard.cloud.check_chart(from.chart.as_ref())?;
            if e.guard.cloud.dim() != n_from {
                return Err(Error::validation(format!("guard cloud of edge {} has the wrong dimension", e.label())));
            }
            e.guard.primitive.validate()?;
            if e.guard.primitive.dim() != Some(n_from) {
                return Err(Error::validation(format!("guard primitive of edge {} has the wrong dimension", e.label())));
            }
            if e.reset.matrix.shape() != (n_to, n_from) || e.reset.offset.len() != n_to {
                return Err(Error::validation(format!(
                    "reset of edge {} must map dimension {n_from} to {n_to}",
                    e.label()
                )));
            }
        }
        if !self.weakly_connected() {
            return Err(Error::validation("hybrid graph is not connected"));
        }
        Ok(())
    }

    fn weakly_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for e in &self.edges {
                let (a, b) = (self.index[&e.from], self.index[&e.to]);
                for (x, y) in [(a, b), (b, a)] {
                    if x == i && !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex(&self, id: &str) -> Result<&Vertex> {
        self.index
            .get(id)
            .map(|&i| &self.vertices[i])
            .ok_or_else(|| Error::validation(format!("unknown vertex {id:?}")))
    }

    pub fn chart(&self, id: &str) -> Result<&dyn ManifoldChart> {
        Ok(self.vertex(id)?.chart.as_ref())
    }

    /// Indices of edges leaving `id`.
    pub fn outgoing(&self, id: &str) -> Vec<usize> {
        (0..self.edges.len()).filter(|&i| self.edges[i].from == id).collect()
    }

    /// Fewest-edge directed path from `from` to `to`, as edge indices.
    pub fn shortest_path(&self, from: &str, to: &str) -> Result<Vec<usize>> {
        self.vertex(from)?;
        self.vertex(to)?;
        let mut prev: HashMap<&str, usize> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = vec![from];
        while let Some(cur) = queue.pop_front() {
            if cur == to {
                break;
            }
            for i in self.outgoing(cur) {
                let next = self.edges[i].to.as_str();
                if !seen.contains(&next) {
                    seen.push(next);
                    prev.insert(next, i);
                    queue.push_back(next);
                }
            }
        }
        if from != to && !prev.contains_key(to) {
            return Err(Error::validation(format!("no directed path from {from:?} to {to:?}")));
        }
        let mut path = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = prev[cur];
            path.push(e);
            cur = self.edges[e].from.as_str();
        }
        path.reverse();
        Ok(path)
    }

    /// Distance from `q` on vertex `id` to the guards leaving `id`, skipping `except`.
    pub fn guard_distance(&self, id: &str, q: &Vector, except: Option<usize>) -> Result<f64> {
        let chart = self.chart(id)?;
        let mut best = f64::INFINITY;
        for i in self.outgoing(id) {
            if Some(i) == except {
                continue;
            }
            let g = &self.edges[i].guard;
            let d = if g.contains(q) { 0.0 } else { g.cloud.distance(chart, q)? };
            best = best.min(d);
        }
        Ok(best)
    }

    pub(crate) fn check_point_on(&self, id: &str, q: &Vector, what: &str) -> Result<()> {
        let chart = self.chart(id)?;
        check_dims(chart.dim(), q, what)?;
        chart.check_point(q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZenoViolation {
    pub edge: String,
    pub sample: usize,
    /// Offending reset image.
    #[serde(with = "crate::serde_vec")]
    pub image: Vector,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZenoReport {
    pub passed: bool,
    pub margin: f64,
    /// Smallest distance found between a reset image and the guards it lands near.
    pub min_distance: f64,
    pub violations: Vec<ZenoViolation>,
}

/// Checks that every reset image of every guard sample keeps distance
/// `margin` from the guards leaving the target vertex.
pub fn validate_zeno(sys: &HybridSystem, margin: f64) -> Result<ZenoReport> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::validation(format!("Zeno margin must be positive, got {margin}")));
    }
    let mut violations = Vec::new();
    let mut min_distance = f64::INFINITY;
    for e in &sys.edges {
        let chart = sys.chart(&e.to)?;
        for (s, x) in e.guard.cloud.points.iter().enumerate() {
            let image = e.reset.apply_point(x);
            let d = match chart.check_point(&image) {
                Ok(()) => sys.guard_distance(&e.to, &image, None)?,
                Err(err) => {
                    return Err(Error::validation(format!(
                        "reset of edge {} maps guard sample {s} to {} off the target chart: {err}",
                        e.label(),
                        fmt_vec(&image)
                    )))
                }
            };
            min_distance = min_distance.min(d);
            if d < margin {
                violations.push(ZenoViolation {
                    edge: e.label(),
                    sample: s,
                    image,
                    distance: d,
                });
            }
        }
    }
    Ok(ZenoReport {
        passed: violations.is_empty(),
        margin,
        min_distance,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::EuclideanChart;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn plane(id: &str) -> Vertex {
        Vertex {
            id: id.into(),
            chart: Arc::new(EuclideanChart::new(2).unwrap()),
        }
    }

    fn strip_guard(x0: f64) -> Guard {
        let points = (0..=10).map(|i| v(&[x0 + 0.05, -1.0 + 0.2 * i as f64])).collect();
        Guard {
            cloud: ObstacleCloud::new(points).unwrap(),
            primitive: GuardPrimitive::Halfspace {
                normal: v(&[1.0, 0.0]),
                offset: x0,
            },
            threshold: 0.0,
        }
    }

    #[test]
    fn halfspace_membership() {
        let g = strip_guard(1.0);
        assert!(g.contains(&v(&[1.01, 0.0])));
        assert!(!g.contains(&v(&[1.0, 0.0])));
        assert!(!g.contains(&v(&[0.5, 3.0])));
    }

    #[test]
    fn spherical_patch_membership() {
        let patch = GuardPrimitive::SphericalPatch {
            center: v(&[0.0, 0.0, 0.0]),
            radius: 1.0,
            phi: [0.0, std::f64::consts::FRAC_PI_4],
            theta: [0.0, std::f64::consts::FRAC_PI_2],
        };
        let ph = 0.3f64;
        let th = 0.8f64;
        let on = v(&[ph.sin() * th.sin(), ph.sin() * th.cos(), ph.cos()]);
        assert!(patch.signed_distance(&on).abs() < 1e-15);
        assert!((patch.signed_distance(&(&on * 1.1)) - 0.1).abs() < 1e-12);
        assert_eq!(patch.signed_distance(&v(&[0.0, 1.0, 0.0])), f64::INFINITY);
    }

    #[test]
    fn translation_reset_passes_zeno() {
        let edges = vec![Edge {
            from: "A".into(),
            to: "B".into(),
            guard: strip_guard(1.0),
            reset: AffineReset::translation(v(&[-10.0, 0.0])),
        }];
        let sys = HybridSystem::new(vec![plane("A"), plane("B")], edges).unwrap();
        assert!(validate_zeno(&sys, 0.1).unwrap().passed);
    }

    #[test]
    fn identity_reset_onto_own_guard_fails_zeno() {
        let edges = vec![Edge {
            from: "A".into(),
            to: "A".into(),
            guard: strip_guard(1.0),
            reset: AffineReset::identity(2),
        }];
        let sys = HybridSystem::new(vec![plane("A")], edges).unwrap();
        let report = validate_zeno(&sys, 0.1).unwrap();
        assert!(!report.passed);
        assert_eq!(report.violations.len(), 11);
        assert!(report.violations.iter().all(|x| x.distance == 0.0 && x.edge == "A->A"));
    }

    #[test]
    fn near_miss_reset_fails_zeno() {
        let margin = 0.2;
        // guard samples at x = 1.05, image lands 0.5·margin left of the nearest sample
        let edges = vec![Edge {
            from: "A".into(),
            to: "A".into(),
            guard: strip_guard(1.0),
            reset: AffineReset::translation(v(&[-0.5 * margin, 0.0])),
        }];
        let sys = HybridSystem::new(vec![plane("A")], edges).unwrap();
        let report = validate_zeno(&sys, margin).unwrap();
        assert!(!report.passed);
        assert!(report.violations.len() == 11);
    }

    #[test]
    fn graph_checks() {
        let e = |from: &str, to: &str| Edge {
            from: from.into(),
            to: to.into(),
            guard: strip_guard(1.0),
            reset: AffineReset::identity(2),
        };
        assert!(HybridSystem::new(vec![plane("A"), plane("B")], vec![]).is_err());
        assert!(HybridSystem::new(vec![plane("A"), plane("A")], vec![]).is_err());
        assert!(HybridSystem::new(vec![plane("A")], vec![e("A", "C")]).is_err());
        let sys = HybridSystem::new(vec![plane("A"), plane("B"), plane("C")], vec![e("A", "B"), e("B", "C"), e("C", "A")]).unwrap();
        assert_eq!(sys.shortest_path("A", "C").unwrap(), vec![0, 1]);
        assert_eq!(sys.shortest_path("C", "B").unwrap(), vec![2, 0]);
        assert!(sys.shortest_path("A", "A").unwrap().is_empty());
    }

    #[test]
    fn reset_shape_checked() {
        let edges = vec![Edge {
            from: "A".into(),
            to: "B".into(),
            guard: strip_guard(1.0),
            reset: AffineReset::identity(3),
        }];
        assert!(HybridSystem::new(vec![plane("A"), plane("B")], edges).is_err());
    }
}
