use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use geospline::cli::{exit_code, run, Command, Overrides, Scenario};
use geospline::integrator::Method;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Integrate,
    Shoot,
    Cover,
    Certify,
    PlanHybrid,
    ReproSim,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Euler,
    Rk4,
}

/// Riemannian spline planning with obstacle avoidance.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Sub,
    /// Scenario JSON file (optional for repro-sim).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    step: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Sub::Integrate => Command::Integrate,
        Sub::Shoot => Command::Shoot,
        Sub::Cover => Command::Cover,
        Sub::Certify => Command::Certify,
        Sub::PlanHybrid => Command::PlanHybrid,
        Sub::ReproSim => Command::ReproSim,
    };
    let overrides = Overrides {
        seed: args.seed,
        method: args.method.map(|m| match m {
            MethodArg::Euler => Method::Euler,
            MethodArg::Rk4 => Method::Rk4,
        }),
        step: args.step,
    };
    let result = (|| {
        let mut scenario = match &args.scenario {
            Some(path) => Scenario::load(path)?,
            None if cmd == Command::ReproSim => Scenario::default(),
            None => return Err(geospline::Error::Validation(format!("{cmd} needs --scenario"))),
        };
        overrides.apply(&mut scenario)?;
        run(cmd, &scenario, &args.out)
    })();
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("geospline {cmd}: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
