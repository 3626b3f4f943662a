//! Argument parsing, logging and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use crate::commands::{self, Outcome};
use crate::error::CliError;
use crate::figures;
use crate::spec::{ProblemSpec, RobustifySpec};

#[derive(Debug, Parser)]
#[command(
    name = "robustmd",
    version,
    about = "Payoff guarantees and their robustness over ambiguity sets of priors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON problem specification
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Directory for report.json and CSV series
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the spec's grid spacing
    #[arg(long)]
    pub grid_spacing: Option<f64>,
    /// Overrides the floor of the robustness tolerance
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case expected payoff over the ambiguity set
    Guarantee(Common),
    /// Decide whether the guarantee survives weak perturbations
    CheckRobust(Common),
    /// Robustified pricing against a Wasserstein neighborhood of [θ̄, 1]
    Robustify {
        #[arg(long)]
        theta_bar: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Series behind one of the figures (fig1 to fig4)
    Figure {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ProblemSpec, CliError> {
    let mut spec = match &common.spec {
        Some(path) => {
            ProblemSpec::parse(&std::fs::read_to_string(path).map_err(CliError::io(path))?)?
        }
        None => ProblemSpec::parse("{}")?,
    };
    if let Some(s) = common.grid_spacing {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!(
                "--grid-spacing must be positive, got {s}"
            )));
        }
        spec.grid.spacing = s;
    }
    if let Some(t) = common.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        spec.options.tol = t;
    }
    Ok(spec)
}

fn log_level() -> Result<LevelFilter, CliError> {
    match std::env::var("ROBUSTMD_LOG").as_deref() {
        Err(_) | Ok("quiet") => Ok(LevelFilter::Off),
        Ok("info") => Ok(LevelFilter::Info),
        Ok("debug") => Ok(LevelFilter::Debug),
        Ok(other) => Err(CliError::Usage(format!(
            "ROBUSTMD_LOG must be quiet, info or debug, got {other:?}"
        ))),
    }
}

pub fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    let (outcome, common) = match &cli.command {
        Command::Guarantee(c) => (commands::guarantee(&load(c)?)?, c),
        Command::CheckRobust(c) => (commands::check_robust(&load(c)?)?, c),
        Command::Robustify {
            theta_bar,
            radius,
            common,
        } => {
            let mut spec = load(common)?;
            match (theta_bar, radius, &mut spec.robustify) {
                (Some(t), Some(r), slot) => {
                    *slot = Some(RobustifySpec {
                        theta_bar: *t,
                        r: *r,
                    })
                }
                (None, None, _) => {}
                (t, r, Some(rs)) => {
                    rs.theta_bar = t.unwrap_or(rs.theta_bar);
                    rs.r = r.unwrap_or(rs.r);
                }
                _ => return Err(CliError::Usage("give both --theta-bar and --radius".into())),
            }
            (commands::robustify_cmd(&spec)?, common)
        }
        Command::Figure { name, common } => (figures::figure(name, &load(common)?)?, common),
    };
    Ok((outcome, common.out.clone()))
}

/// Runs the program and returns its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match log_level() {
        Ok(level) => {
            let _ = env_logger::Builder::new()
                .filter_level(level)
                .format_timestamp(None)
                .try_init();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    let result = execute(&cli).and_then(|(outcome, out)| {
        if let Some(dir) = out {
            for path in outcome.files.write_to(&dir)? {
                log::info!("wrote {}", path.display());
            }
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
