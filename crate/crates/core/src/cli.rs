//! Scenario files and the command runner behind the `geospline` binary.
//!
//! A scenario is a JSON document; every section is optional and each
//! command checks that the sections it needs are present before computing
//! anything. Relative file paths inside a scenario resolve against the
//! scenario's directory. Outputs are written atomically into the output
//! directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::avoidance::{
    build_avoidance_potential, certify, cover_obstacle, select_parameters, verify_cover, CoverOptions, ObstacleCloud,
    ReferenceSummary, ToleranceBands,
};
use crate::bvp::{shoot, BoundaryData, ShootOptions};
use crate::error::{Error, Result};
use crate::hybrid::{
    interpolate, validate_zeno, AffineReset, Edge, Guard, GuardPrimitive, HybridOptions, HybridSystem, KnotSequence,
    ParameterChoice, Vertex,
};
use crate::integrator::{action_value, integrate, JetState, Method};
use crate::io;
use crate::manifold::{chart_from_name, ManifoldChart, Vector};
use crate::potential::PotentialSum;
use crate::repro::{run_repro, ReproOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Integrate,
    Shoot,
    Cover,
    Certify,
    PlanHybrid,
    ReproSim,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Integrate,
        Command::Shoot,
        Command::Cover,
        Command::Certify,
        Command::PlanHybrid,
        Command::ReproSim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Shoot => "shoot",
            Command::Cover => "cover",
            Command::Certify => "certify",
            Command::PlanHybrid => "plan-hybrid",
            Command::ReproSim => "repro-sim",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown command {s:?}")))
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. } | Error::Divergence { .. } | Error::Infeasible { .. } => 3,
        Error::SegmentFailure { .. } => 4,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CloudSource {
    Points(Vec<Vec<f64>>),
    File(PathBuf),
}

impl CloudSource {
    pub fn load(&self, base: &Path) -> Result<ObstacleCloud> {
        match self {
            CloudSource::Points(rows) => ObstacleCloud::new(rows.iter().map(|r| Vector::from_row_slice(r)).collect()),
            CloudSource::File(p) => io::load_cloud(&base.join(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1e-3
}

fn default_samples() -> usize {
    10_000
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            method: Method::Rk4,
            step: default_step(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub cloud: CloudSource,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Risk radius for `certify`; derived from the cover when absent.
    #[serde(default)]
    pub r_star: Option<f64>,
    #[serde(default)]
    pub parameters: Option<ParameterChoice>,
    #[serde(default)]
    pub cover: CoverOptions,
    #[serde(default = "default_samples")]
    pub verification_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    pub chart: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSpec {
    pub cloud: CloudSource,
    pub primitive: GuardPrimitive,
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub guard: GuardSpec,
    pub reset: AffineReset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    pub knots: KnotSequence,
    #[serde(default)]
    pub options: HybridOptions,
}

impl HybridSpec {
    pub fn build(&self, base: &Path) -> Result<HybridSystem> {
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                Ok(Vertex {
                    id: v.id.clone(),
                    chart: chart_from_name(&v.chart)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = self
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    guard: Guard {
                        cloud: e.guard.cloud.load(base)?,
                        primitive: e.guard.primitive.clone(),
                        threshold: e.guard.threshold,
                    },
                    reset: e.reset.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HybridSystem::new(vertices, edges)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    /// Initial jet and horizon for `integrate`.
    #[serde(default)]
    pub initial: Option<JetState>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub boundary: Option<BoundaryData>,
    #[serde(default)]
    pub potential: PotentialSum,
    #[serde(default)]
    pub sensing_radius: Option<f64>,
    #[serde(default)]
    pub obstacle: Option<ObstacleSpec>,
    /// Reference trajectory CSV for `certify`.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Shooting options; `step` and `method` come from `integrator`.
    #[serde(default)]
    pub solver: ShootOptions,
    #[serde(default)]
    pub hybrid: Option<HybridSpec>,
    #[serde(default)]
    pub repro: Option<ReproOptions>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| Error::validation(format!("scenario: {e}")))?;
        s.base_dir = base_dir.to_path_buf();
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::from_json(&text, &base)
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if !(self.integrator.step.is_finite() && self.integrator.step > 0.0) {
            return Err(Error::validation(format!("integrator step must be positive, got {}", self.integrator.step)));
        }
        if let Some(name) = &self.chart {
            let chart = chart_from_name(name)?;
            self.potential.validate(chart.dim(), self.sensing_radius)?;
            if let Some(s0) = &self.initial {
                s0.check(chart.as_ref())?;
            }
            if let Some(bd) = &self.boundary {
                bd.validate(chart.as_ref())?;
            }
        }
        if let Some(ob) = &self.obstacle {
            if let Some(r_star) = ob.r_star {
                ToleranceBands::new(ob.r, r_star, ob.big_r)?;
            } else if !(ob.r > 0.0 && ob.r < ob.big_r) {
                return Err(Error::validation(format!(
                    "tolerance bands require 0 < r < R, got r = {} and R = {}",
                    ob.r, ob.big_r
                )));
            }
            if let Some(h) = self.sensing_radius {
                if ob.big_r > h {
                    return Err(Error::validation(format!("R = {} exceeds the sensing radius {h}", ob.big_r)));
                }
            }
        }
        Ok(())
    }

    fn chart(&self) -> Result<Arc<dyn ManifoldChart>> {
        chart_from_name(self.chart.as_deref().ok_or_else(|| Error::validation("scenario has no chart"))?)
    }

    fn shoot_options(&self) -> ShootOptions {
        let mut opts = self.solver.clone();
        opts.step = self.integrator.step;
        opts.method = self.integrator.method;
        opts
    }

    fn obstacle(&self) -> Result<&ObstacleSpec> {
        self.obstacle.as_ref().ok_or_else(|| Error::validation("scenario has no obstacle section"))
    }
}

/// Command-line overrides of scenario settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<()> {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(m) = self.method {
            s.integrator.method = m;
        }
        if let Some(h) = self.step {
            s.integrator.step = h;
        }
        if self.method.is_some() || self.step.is_some() || s.repro.is_some() {
            let r = s.repro.get_or_insert_with(ReproOptions::default);
            if let Some(m) = self.method {
                r.method = m;
            }
            if let Some(h) = self.step {
                r.step = h;
            }
        }
        s.validate()
    }
}

/// Files written by a command, relative to the output directory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        io::write_atomic(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }
}

/// Runs `cmd` on a loaded scenario and writes its outputs into `out`.
///
/// Solver failures still write whatever was computed before returning the error.
pub fn run(cmd: Command, scenario: &Scenario, out: &Path) -> Result<RunReport> {
    let mut output = Output { dir: out, files: Vec::new() };
    let summary = match cmd {
        Command::Integrate => run_integrate(scenario, &mut output)?,
        Command::Shoot => run_shoot(scenario, &mut output)?,
        Command::Cover => run_cover(scenario, &mut output)?,
        Command::Certify => run_certify(scenario, &mut output)?,
        Command::PlanHybrid => run_hybrid(scenario, &mut output)?,
        Command::ReproSim => run_repro_sim(scenario, &mut output)?,
    };
    Ok(RunReport {
        files: output.files,
        summary,
    })
}

fn run_integrate(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let chart = s.chart()?;
    let s0 = s.initial.as_ref().ok_or_else(|| Error::validation("integrate needs an initial jet"))?;
    let horizon = s.horizon.ok_or_else(|| Error::validation("integrate needs a horizon"))?;
    let traj = integrate(chart.as_ref(), &s.potential, s0, horizon, s.integrator.step, s.integrator.method)?;
    out.write("trajectory.csv", io::trajectory_to_string(&traj)?.as_bytes())?;
    let summary = json!({
        "chart": chart.name(),
        "method": s.integrator.method,
        "step": s.integrator.step,
        "samples": traj.len(),
        "action": action_value(chart.as_ref(), &s.potential, &traj)?,
        "final": traj.last(),
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

fn run_shoot(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let chart = s.chart()?;
    let bd = s.boundary.as_ref().ok_or_else(|| Error::validation("shoot needs boundary data"))?;
    let res = shoot(chart.as_ref(), &s.potential, bd, &s.shoot_options())?;
    out.write("trajectory.csv", io::trajectory_to_string(&res.trajectory)?.as_bytes())?;
    let summary = json!({
        "residual": res.residual,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "a0": res.a0.as_slice(),
        "j0": res.j0.as_slice(),
        "action": action_value(chart.as_ref(), &s.potential, &res.trajectory)?,
    });
    out.json("summary.json", &summary)?;
    if !res.converged {
        return Err(Error::NotConverged {
            residual: res.residual,
            evaluations: res.evaluations,
        });
    }
    Ok(summary)
}

fn run_cover(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let chart = s.chart()?;
    let ob = s.obstacle()?;
    let cloud = ob.cloud.load(&s.base_dir)?;
    let mut opts = ob.cover.clone();
    opts.seed = s.seed;
    let cover = cover_obstacle(chart.as_ref(), &cloud, ob.r, ob.big_r, &opts)?;
    let check = verify_cover(chart.as_ref(), &cloud, &cover, ob.verification_samples, s.seed)?;
    let summary = json!({ "cover": cover, "verification": check });
    out.json("centers.json", &summary)?;
    let mut csv = Vec::new();
    io::write_cloud(&mut csv, &cover.centers)?;
    out.write("centers.csv", &csv)?;
    Ok(summary)
}

fn run_certify(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let chart = s.chart()?;
    let reference_path = s.reference.as_ref().ok_or_else(|| Error::validation("certify needs a reference trajectory"))?;
    let reference = io::load_trajectory(&s.base_dir.join(reference_path), &chart.name())?;
    for st in &reference.states {
        st.check(chart.as_ref())?;
    }
    let v0_norm = chart.norm(&reference.first().q, &reference.first().v)?;
    let horizon = reference.end_time() - reference.start_time();

    let summary = if !s.potential.is_empty() {
        let ob = s.obstacle()?;
        let r_star = ob.r_star.ok_or_else(|| Error::validation("certify with explicit potential terms needs obstacle.r_star"))?;
        let bands = ToleranceBands::new(ob.r, r_star, ob.big_r)?;
        let cert = certify(chart.as_ref(), &reference, &s.potential, &bands, v0_norm, horizon)?;
        json!({ "certificate": cert, "ratio": cert.ratio() })
    } else {
        let ob = s.obstacle()?;
        let cloud = ob.cloud.load(&s.base_dir)?;
        let mut opts = ob.cover.clone();
        opts.seed = s.seed;
        let cover = cover_obstacle(chart.as_ref(), &cloud, ob.r, ob.big_r, &opts)?;
        let bands = ToleranceBands::new(ob.r, ob.r_star.unwrap_or(cover.r_star), ob.big_r)?;
        let choice = ob
            .parameters
            .clone()
            .ok_or_else(|| Error::validation("certify from an obstacle cloud needs obstacle.parameters"))?;
        let (tau, k, cert) = match choice {
            ParameterChoice::Fixed { tau, k } => {
                let sum = build_avoidance_potential(&cover.centers, ob.big_r, tau, k)?;
                (tau, k, certify(chart.as_ref(), &reference, &sum, &bands, v0_norm, horizon)?)
            }
            ParameterChoice::Auto { grid, sensing_radius } => {
                let summary = ReferenceSummary::from_trajectory(chart.as_ref(), &reference, &cover.centers, &bands, v0_norm)?;
                let sel = select_parameters(chart.as_ref(), &bands, sensing_radius, &summary, &cover.centers, &grid)?;
                (sel.tau, sel.k, sel.certificate)
            }
        };
        json!({
            "certificate": cert,
            "ratio": cert.ratio(),
            "tau": tau,
            "k": k,
            "centers": cover.centers.iter().map(|c| c.as_slice().to_vec()).collect::<Vec<_>>(),
        })
    };
    out.json("certificate.json", &summary)?;
    Ok(summary)
}

fn run_hybrid(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let spec = s.hybrid.as_ref().ok_or_else(|| Error::validation("plan-hybrid needs a hybrid section"))?;
    let sys = spec.build(&s.base_dir)?;
    let mut opts = spec.options.clone();
    opts.shoot.step = s.integrator.step;
    opts.shoot.method = s.integrator.method;
    opts.avoidance.cover.seed = s.seed;
    let zeno = validate_zeno(&sys, opts.zeno_margin)?;
    out.json("zeno.json", &zeno)?;
    let traj = interpolate(&sys, &spec.knots, &opts)?;
    let mut csv = Vec::new();
    io::write_hybrid(&mut csv, &traj)?;
    out.write("hybrid.csv", &csv)?;
    out.json("impacts.json", &traj.impacts)?;
    let summary = json!({
        "pieces": traj.pieces.len(),
        "impacts": traj.impacts.len(),
        "tiles": traj.tiles(spec.knots.horizon()),
        "zeno_passed": zeno.passed,
    });
    Ok(summary)
}

fn run_repro_sim(s: &Scenario, out: &mut Output) -> Result<serde_json::Value> {
    let mut opts = s.repro.clone().unwrap_or_default();
    opts.seed = s.seed;
    let run = run_repro(&opts)?;
    out.write("trajectory.csv", io::trajectory_to_string(&run.trajectory)?.as_bytes())?;
    out.json("summary.json", &run.report)?;
    if run.report.cover.violations > 0 {
        eprintln!(
            "warning: {} of {} patch samples lie outside every ball of radius {} (worst distance {:.4})",
            run.report.cover.violations, run.report.cover.samples, run.report.cover.radius, run.report.cover.worst_distance
        );
    }
    if !run.report.converged {
        return Err(Error::NotConverged {
            residual: run.report.residual,
            evaluations: run.report.evaluations,
        });
    }
    Ok(serde_json::to_value(&run.report)?)
}
