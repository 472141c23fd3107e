//! `qcave`: emits plot-ready data files for two-packet interference in the
//! complex plane. One subcommand per data set; see `--schema` for columns.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qcave::format::fmt_str;
use qcave::{Complex64, Scenario, VolumeFormat};

use crate::output::Outputs;

#[derive(Parser, Debug)]
#[command(name = "qcave", version, about = "Complex quantum trajectories and quantum caves for interfering Gaussian packets")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Named scenario: case1 or case2. Default case1.
    #[arg(long, global = true, conflicts_with = "scenario")]
    pub preset: Option<String>,
    /// TOML scenario file; unknown keys are rejected.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Integrator tolerance (absolute and relative).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Print the column layout of every file the subcommand writes, then exit.
    #[arg(long, global = true)]
    pub schema: bool,
}

/// Parse `re,im` into a complex number.
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected re,im but got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Complex64::new(num(re)?, num(im)?))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Field samples on an (x, y) slice at one time.
    Fields {
        /// Time of the slice; default is the maximal-interference time.
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 81)]
        nx: usize,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        y_min: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        y_max: f64,
        #[arg(long, default_value_t = 61)]
        ny: usize,
    },
    /// Nodal-line angle, rate and spacing over time; node tables.
    Nodal {
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        nt: usize,
        #[arg(long, default_value_t = -3, allow_negative_numbers = true)]
        n_min: i64,
        #[arg(long, default_value_t = 3, allow_negative_numbers = true)]
        n_max: i64,
        /// Times at which nodes and stagnation points are refined; default
        /// is the maximal-interference time.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Nodal-line angles in degrees; the time each is first reached is
        /// written to angles.dat and printed.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Vec<f64>,
    },
    /// Trajectory dumps, launched from explicit points or an isochrone.
    Trajectories {
        /// Launch point `re,im`; repeatable. Without it the isochrone
        /// launch points are used.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        launch: Vec<Complex64>,
        #[arg(long, default_value_t = 3.9)]
        x_max: f64,
        #[arg(long, default_value_t = 0.3)]
        step: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_start: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        t_end: f64,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        /// Follow the Polya field instead of the quantum momentum field.
        #[arg(long)]
        polya: bool,
    },
    /// Launch points whose trajectories reach given real-axis targets.
    Isochrone {
        #[arg(long, default_value_t = 3.9)]
        x_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Arrival time; default is the maximal-interference time.
        #[arg(long)]
        t_arrival: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_launch: f64,
    },
    /// Wrapping records, ensemble averages and the interference lifetime.
    Metrics {
        #[arg(long, default_value_t = 3.9)]
        x_max: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 15.0)]
        t_end: f64,
        #[arg(long, default_value_t = 6001)]
        samples: usize,
        #[arg(long, default_value_t = 5)]
        smoothing: usize,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        theta_enter: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        theta_exit: f64,
    },
    /// Volume export of |Psi| and |dPsi/dz| for isosurface tools.
    Cave {
        #[arg(long, default_value = "binary")]
        format: VolumeFormat,
        /// Override the scenario's axis counts.
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        nt: Option<usize>,
        #[arg(long, default_value_t = qcave::cave::DEFAULT_POINT_BUDGET)]
        budget: u128,
    },
    /// Probability density on the real axis over time.
    Density {
        #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 601)]
        nx: usize,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        nt: usize,
    },
    /// Divergence and vorticity along one trajectory.
    Divvort {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "-9.11016,-1.17309")]
        launch: Complex64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_start: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        t_end: f64,
        #[arg(long, default_value_t = 4001)]
        samples: usize,
    },
    /// dp/dz at a fixed point (default the origin) over time.
    Stagnation {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0,0")]
        point: Complex64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1001)]
        nt: usize,
    },
    /// Exact trajectories next to linearized ones about a stagnation point.
    Approx {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0,0")]
        point: Complex64,
        /// Expansion time; default is the maximal-interference time.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        directions: usize,
        /// Half-width of the time window around `t0`.
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Divergence and vorticity of the pole-local expansion along four
    /// hyperbolic streamlines about a pole at the origin.
    Polelocal {
        #[arg(long, default_value_t = 121)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        order: u32,
        /// Distance scale of the streamlines.
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fields { .. } => "fields",
            Command::Nodal { .. } => "nodal",
            Command::Trajectories { .. } => "trajectories",
            Command::Isochrone { .. } => "isochrone",
            Command::Metrics { .. } => "metrics",
            Command::Cave { .. } => "cave",
            Command::Density { .. } => "density",
            Command::Divvort { .. } => "divvort",
            Command::Stagnation { .. } => "stagnation",
            Command::Approx { .. } => "approx",
            Command::Polelocal { .. } => "polelocal",
        }
    }
}

fn load_scenario(common: &Common) -> Result<Scenario> {
    match (&common.scenario, &common.preset) {
        (Some(path), _) => Scenario::from_file(path).with_context(|| format!("reading scenario {}", path.display())),
        (None, Some(name)) => Ok(Scenario::preset(name)?),
        (None, None) => Ok(Scenario::preset("case1")?),
    }
}

/// Machine-readable kind of an error chain: the library's own kind when
/// one is present, otherwise a generic label.
fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<qcave::Error>().map(|q| q.kind()))
        .unwrap_or(if e.chain().any(|c| c.is::<std::io::Error>()) { "IoFailure" } else { "Failure" })
}

fn run(cli: &Cli) -> Result<()> {
    if cli.common.schema {
        print!("{}", commands::schema(&cli.command));
        return Ok(());
    }
    if let Some(tol) = cli.common.tol {
        if !(tol > 0.0 && tol < 1.0) {
            bail!(qcave::Error::InvalidParameter(format!("tol must lie in (0, 1), got {tol}")));
        }
    }
    let scenario = load_scenario(&cli.common)?;
    let mut out = Outputs::new(&cli.common.out)?;
    let result = commands::execute(&cli.command, &cli.common, &scenario, &mut out)
        .and_then(|_| out.finish(cli.command.name(), &scenario.to_toml()));
    if result.is_err() {
        out.discard();
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error kind=UsageError command=none message={}", fmt_str(first));
            eprint!("{message}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}");
            eprintln!("error kind={} command={} message={}", error_kind(&e), cli.command.name(), fmt_str(&message));
            ExitCode::FAILURE
        }
    }
}
