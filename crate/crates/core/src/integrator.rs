//! Fourth-order Euler–Lagrange flow for the action
//! `J(q) = ½ ∫ (‖D q̇/dt‖² + V(q)) dt`.
//!
//! Critical points of `J` solve `D³q̇/dt³ + R(Dq̇/dt, q̇) q̇ = −grad V(q)`.
//! The state carries covariant jets, so the first-order system in chart
//! coordinates is
//!
//! ```text
//! dq/dt = v
//! dv/dt = a − Γ(q; v, v)
//! da/dt = j − Γ(q; v, a)
//! dj/dt = −R(a, v) v − grad V(q) − Γ(q; v, j)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{check_dims, ManifoldChart, Vector};
use crate::potential::PotentialSum;

/// Position, velocity, covariant acceleration and covariant jerk of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetState {
    #[serde(with = "crate::serde_vec")]
    pub q: Vector,
    #[serde(with = "crate::serde_vec")]
    pub v: Vector,
    #[serde(with = "crate::serde_vec")]
    pub a: Vector,
    #[serde(with = "crate::serde_vec")]
    pub j: Vector,
}

impl JetState {
    pub fn new(q: Vector, v: Vector, a: Vector, j: Vector) -> Self {
        JetState { q, v, a, j }
    }

    /// State at rest at `q` with zero higher jets.
    pub fn at_rest(q: Vector) -> Self {
        let n = q.len();
        JetState::new(q, Vector::zeros(n), Vector::zeros(n), Vector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        [&self.q, &self.v, &self.a, &self.j]
            .iter()
            .all(|x| x.iter().all(|c| c.is_finite()))
    }

    pub fn check(&self, chart: &dyn ManifoldChart) -> Result<()> {
        let n = chart.dim();
        check_dims(n, &self.q, "jet position")?;
        check_dims(n, &self.v, "jet velocity")?;
        check_dims(n, &self.a, "jet acceleration")?;
        check_dims(n, &self.j, "jet jerk")?;
        if !self.is_finite() {
            return Err(Error::validation("jet state has non-finite entries"));
        }
        chart.check_point(&self.q)
    }

    /// Flat slice `[q, v, a, j]`.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(4 * self.dim());
        for part in [&self.q, &self.v, &self.a, &self.j] {
            row.extend(part.iter());
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() % 4 != 0 || row.is_empty() {
            return Err(Error::validation(format!("jet row of length {} is not 4n", row.len())));
        }
        let n = row.len() / 4;
        let part = |i: usize| Vector::from_row_slice(&row[i * n..(i + 1) * n]);
        Ok(JetState::new(part(0), part(1), part(2), part(3)))
    }
}

/// Fixed-step integration scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::validation(format!("unknown integration method {other:?}"))),
        }
    }
}

/// Samples of a curve on one chart, storing every jet level.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub chart: String,
    pub times: Vec<f64>,
    pub states: Vec<JetState>,
}

impl Trajectory {
    pub fn new(chart: impl Into<String>, times: Vec<f64>, states: Vec<JetState>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::validation(format!(
                "trajectory needs matching non-empty times and states ({} vs {})",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("trajectory times must be strictly increasing"));
        }
        Ok(Trajectory {
            chart: chart.into(),
            times,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn first(&self) -> &JetState {
        &self.states[0]
    }

    pub fn last(&self) -> &JetState {
        self.states.last().expect("non-empty")
    }

    /// Copy with every time shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Trajectory {
        Trajectory {
            chart: self.chart.clone(),
            times: self.times.iter().map(|t| t + offset).collect(),
            states: self.states.clone(),
        }
    }
}

/// Time derivative of the jet state.
pub fn ode_rhs(chart: &dyn ManifoldChart, potential: &PotentialSum, s: &JetState) -> Result<JetState> {
    let n = s.dim();
    let y = Vector::from_vec(s.to_row());
    let mut out = Vector::zeros(4 * n);
    rhs_into(chart, potential, &y, &mut Scratch::new(n), &mut out)?;
    JetState::from_row(out.as_slice())
}

/// Unpacked copies of the four jet levels, reused across evaluations.
struct Scratch {
    q: Vector,
    v: Vector,
    a: Vector,
    j: Vector,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            q: Vector::zeros(n),
            v: Vector::zeros(n),
            a: Vector::zeros(n),
            j: Vector::zeros(n),
        }
    }
}

/// Evaluates the right-hand side on the packed state `y = [q, v, a, j]`.
fn rhs_into(chart: &dyn ManifoldChart, potential: &PotentialSum, y: &Vector, sc: &mut Scratch, out: &mut Vector) -> Result<()> {
    let n = sc.q.len();
    sc.q.copy_from(&y.rows(0, n));
    sc.v.copy_from(&y.rows(n, n));
    sc.a.copy_from(&y.rows(2 * n, n));
    sc.j.copy_from(&y.rows(3 * n, n));
    if chart.is_flat() {
        chart.check_point(&sc.q)?;
        out.rows_mut(0, n).copy_from(&sc.v);
        out.rows_mut(n, n).copy_from(&sc.a);
        out.rows_mut(2 * n, n).copy_from(&sc.j);
        let mut dj = out.rows_mut(3 * n, n);
        dj.fill(0.0);
        if !potential.is_empty() {
            dj -= potential.gradient(chart, &sc.q)?;
        }
        return Ok(());
    }
    let gamma = chart.christoffel_at(&sc.q)?;
    let dv = &sc.a - gamma.contract(&sc.v, &sc.v);
    let da = &sc.j - gamma.contract(&sc.v, &sc.a);
    let mut dj = -chart.curvature_apply(&sc.q, &sc.a, &sc.v, &sc.v)? - gamma.contract(&sc.v, &sc.j);
    if !potential.is_empty() {
        dj -= potential.gradient(chart, &sc.q)?;
    }
    out.rows_mut(0, n).copy_from(&sc.v);
    out.rows_mut(n, n).copy_from(&dv);
    out.rows_mut(2 * n, n).copy_from(&da);
    out.rows_mut(3 * n, n).copy_from(&dj);
    Ok(())
}

/// Preallocated buffers for in-place stepping of the packed state.
struct Stepper<'a> {
    chart: &'a dyn ManifoldChart,
    potential: &'a PotentialSum,
    method: Method,
    scratch: Scratch,
    k1: Vector,
    k2: Vector,
    k3: Vector,
    k4: Vector,
    stage: Vector,
}

impl<'a> Stepper<'a> {
    fn new(chart: &'a dyn ManifoldChart, potential: &'a PotentialSum, method: Method, n: usize) -> Self {
        Stepper {
            chart,
            potential,
            method,
            scratch: Scratch::new(n),
            k1: Vector::zeros(4 * n),
            k2: Vector::zeros(4 * n),
            k3: Vector::zeros(4 * n),
            k4: Vector::zeros(4 * n),
            stage: Vector::zeros(4 * n),
        }
    }

    fn step(&mut self, y: &mut Vector, h: f64) -> Result<()> {
        let (chart, potential) = (self.chart, self.potential);
        match self.method {
            Method::Euler => {
                rhs_into(chart, potential, y, &mut self.scratch, &mut self.k1)?;
                y.axpy(h, &self.k1, 1.0);
            }
            Method::Rk4 => {
                rhs_into(chart, potential, y, &mut self.scratch, &mut self.k1)?;
                self.stage.copy_from(y);
                self.stage.axpy(0.5 * h, &self.k1, 1.0);
                rhs_into(chart, potential, &self.stage, &mut self.scratch, &mut self.k2)?;
                self.stage.copy_from(y);
                self.stage.axpy(0.5 * h, &self.k2, 1.0);
                rhs_into(chart, potential, &self.stage, &mut self.scratch, &mut self.k3)?;
                self.stage.copy_from(y);
                self.stage.axpy(h, &self.k3, 1.0);
                rhs_into(chart, potential, &self.stage, &mut self.scratch, &mut self.k4)?;
                y.axpy(h / 6.0, &self.k1, 1.0);
                y.axpy(h / 3.0, &self.k2, 1.0);
                y.axpy(h / 3.0, &self.k3, 1.0);
                y.axpy(h / 6.0, &self.k4, 1.0);
            }
        }
        Ok(())
    }
}

/// Step schedule over `[0, T]`: `floor(T/h)` full steps plus, when `T/h` is
/// not an integer, one final partial step that lands exactly on `T`.
fn schedule(horizon: f64, h: f64) -> Result<Vec<f64>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::validation(format!("horizon T must be positive, got {horizon}")));
    }
    if !(h.is_finite() && h > 0.0) || h > horizon * (1.0 + 1e-12) {
        return Err(Error::validation(format!("step h = {h} must satisfy 0 < h ≤ T = {horizon}")));
    }
    let full = (horizon / h + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=full).map(|i| i as f64 * h).collect();
    let last = *times.last().expect("non-empty");
    if horizon - last > 1e-12 * horizon {
        times.push(horizon);
    } else {
        *times.last_mut().expect("non-empty") = horizon;
    }
    Ok(times)
}

fn run<F: FnMut(f64, &Vector)>(
    chart: &dyn ManifoldChart,
    potential: &PotentialSum,
    s0: &JetState,
    horizon: f64,
    h: f64,
    method: Method,
    mut observe: F,
) -> Result<JetState> {
    s0.check(chart)?;
    let times = schedule(horizon, h)?;
    let mut stepper = Stepper::new(chart, potential, method, s0.dim());
    let mut y = Vector::from_vec(s0.to_row());
    observe(times[0], &y);
    for w in times.windows(2) {
        stepper.step(&mut y, w[1] - w[0])?;
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Divergence { time: w[1] });
        }
        observe(w[1], &y);
    }
    JetState::from_row(y.as_slice())
}

/// Integrates from `s0` over `[0, T]` with fixed step `h`, storing all samples.
pub fn integrate(
    chart: &dyn ManifoldChart,
    potential: &PotentialSum,
    s0: &JetState,
    horizon: f64,
    h: f64,
    method: Method,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    run(chart, potential, s0, horizon, h, method, |t, y| {
        times.push(t);
        states.push(JetState::from_row(y.as_slice()).expect("packed state has length 4n"));
    })?;
    Ok(Trajectory {
        chart: chart.name(),
        times,
        states,
    })
}

/// Like [`integrate`] but keeps only the terminal state.
pub fn propagate(
    chart: &dyn ManifoldChart,
    potential: &PotentialSum,
    s0: &JetState,
    horizon: f64,
    h: f64,
    method: Method,
) -> Result<JetState> {
    run(chart, potential, s0, horizon, h, method, |_, _| {})
}

/// `J = ½ ∫ (g(a, a) + V(q)) dt` by the trapezoidal rule on the stored samples.
pub fn action_value(chart: &dyn ManifoldChart, potential: &PotentialSum, traj: &Trajectory) -> Result<f64> {
    let integrand = |s: &JetState| -> Result<f64> {
        let acc = chart.inner(&s.q, &s.a, &s.a)?;
        let pot = if potential.is_empty() { 0.0 } else { potential.value(chart, &s.q)? };
        Ok(0.5 * (acc + pot))
    };
    let mut total = 0.0;
    let mut prev = integrand(&traj.states[0])?;
    for i in 1..traj.len() {
        let cur = integrand(&traj.states[i])?;
        total += 0.5 * (prev + cur) * (traj.times[i] - traj.times[i - 1]);
        prev = cur;
    }
    Ok(total)
}
