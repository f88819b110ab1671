//! `finpart`: regularized values of integrals with a linear singular locus.
//!
//! Every subcommand reads one JSON problem document, runs one computation,
//! and prints a JSON report to stdout.  Exit codes: 0 on success, 1 when a
//! `check` verdict fails, 2 on invalid input, 3 on numerical failure.

mod report;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::{pair, CommandEcho, Report};
use crate::run::{CheckKind, Ctx, Failure};
use crate::spec::EngineChoice;

#[derive(Parser)]
#[command(
    name = "finpart",
    version,
    about = "Regularized integrals of forms singular on a linear subspace"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Divergence coefficients and the regularized value of the integral.
    FinitePart(Common),
    /// The analytic continuation evaluated at one complex point.
    Zeta {
        #[command(flatten)]
        common: Common,
        /// Evaluation point as RE,IM.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
    },
    /// Pole locations and residues of the continuation.
    Poles(Common),
    /// The residue form on the singular locus.
    Residue(Common),
    /// Integral over one level set of the singular measure.
    LevelSet {
        #[command(flatten)]
        common: Common,
        /// Level of the measure; negative levels probe the parity law.
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
    },
    /// The integral outside one cutoff level.
    Cutoff {
        #[command(flatten)]
        common: Common,
        /// Cutoff level, a small positive number.
        #[arg(long)]
        eps: f64,
    },
    /// Verifies transformation laws and reports one verdict per identity.
    Check {
        /// Law family to verify.
        #[arg(value_enum)]
        which: CheckArg,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FinitePart(_) => "finite-part",
            Command::Zeta { .. } => "zeta",
            Command::Poles(_) => "poles",
            Command::Residue(_) => "residue",
            Command::LevelSet { .. } => "level-set",
            Command::Cutoff { .. } => "cutoff",
            Command::Check { .. } => "check",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::FinitePart(common)
            | Command::Poles(common)
            | Command::Residue(common) => common,
            Command::Zeta { common, .. }
            | Command::LevelSet { common, .. }
            | Command::Cutoff { common, .. }
            | Command::Check { common, .. } => common,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Path to the JSON problem document.
    spec: PathBuf,
    /// Which engine to run; overrides the document.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Verdict tolerance; overrides the document.
    #[arg(long)]
    tol: Option<f64>,
    /// Also write the report to this file.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Seed for randomized check data; overrides the document.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Mellin,
    Cutoff,
    Both,
}

impl From<EngineArg> for EngineChoice {
    fn from(engine: EngineArg) -> EngineChoice {
        match engine {
            EngineArg::Mellin => EngineChoice::Mellin,
            EngineArg::Cutoff => EngineChoice::Cutoff,
            EngineArg::Both => EngineChoice::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Conformal,
    Exact,
    Residue,
    Homogeneity,
    Parity,
    Crossing,
    Boundary,
    All,
}

impl From<CheckArg> for CheckKind {
    fn from(which: CheckArg) -> CheckKind {
        match which {
            CheckArg::Conformal => CheckKind::Conformal,
            CheckArg::Exact => CheckKind::Exact,
            CheckArg::Residue => CheckKind::Residue,
            CheckArg::Homogeneity => CheckKind::Homogeneity,
            CheckArg::Parity => CheckKind::Parity,
            CheckArg::Crossing => CheckKind::Crossing,
            CheckArg::Boundary => CheckKind::Boundary,
            CheckArg::All => CheckKind::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code() as u8)
        }
    }
}

fn execute(command: &Command) -> Result<ExitCode, Failure> {
    let started = Instant::now();
    let common = command.common();
    let text = std::fs::read_to_string(&common.spec)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", common.spec.display())))?;
    let problem = spec::parse_problem(&text)?;
    let built = spec::build(&problem)?;

    let engine = common
        .engine
        .map(EngineChoice::from)
        .or(problem.engine)
        .unwrap_or(EngineChoice::Mellin);
    let tol = common.tol.or(problem.tol);
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Invalid(
                "--tol must be a positive finite number".to_string(),
            ));
        }
    }
    let seed = common.seed.or(problem.seed).unwrap_or(0);

    let s = match command {
        Command::Zeta { s, .. } => Some(run::parse_complex(s)?),
        _ => None,
    };
    let echo = CommandEcho {
        name: command.name().to_string(),
        engine: engine.to_string(),
        tol,
        seed,
        s: s.map(pair),
        t: match command {
            Command::LevelSet { t, .. } => Some(*t),
            _ => None,
        },
        eps: match command {
            Command::Cutoff { eps, .. } => Some(*eps),
            _ => None,
        },
        which: match command {
            Command::Check { which, .. } => Some(CheckKind::from(*which).name().to_string()),
            _ => None,
        },
    };

    let ctx = Ctx {
        spec: problem.clone(),
        built,
        engine,
        tol,
        seed,
    };
    let mut report = Report::new(echo, problem);
    match command {
        Command::FinitePart(_) => run::finite_part(&ctx, &mut report)?,
        Command::Zeta { .. } => run::zeta(&ctx, s.expect("parsed above"), &mut report)?,
        Command::Poles(_) => run::poles(&ctx, &mut report)?,
        Command::Residue(_) => run::residue(&ctx, &mut report)?,
        Command::LevelSet { t, .. } => run::level_set(&ctx, *t, &mut report)?,
        Command::Cutoff { eps, .. } => run::cutoff(&ctx, *eps, &mut report)?,
        Command::Check { which, .. } => run::check(&ctx, CheckKind::from(*which), &mut report)?,
    }
    report.wall_ms = started.elapsed().as_secs_f64() * 1000.0;

    let mut payload =
        serde_json::to_string_pretty(&report).map_err(|e| Failure::Invalid(e.to_string()))?;
    payload.push('\n');
    print!("{payload}");
    if let Some(path) = &common.json_out {
        std::fs::write(path, &payload)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    }
    Ok(if report.all_checks_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
