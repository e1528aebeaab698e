//! Command-line options, the JSON config file, and their resolution into a
//! validated [`RunConfig`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use hypergame::lattice::StepUnit;
use hypergame::{GameParams, NumberFormat, SetMode};
use serde::{Deserialize, Serialize};

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "HYPERGAME_OUT";
pub const DEFAULT_OUT: &str = "hypergame-out";

#[derive(Debug, Parser)]
#[command(
    name = "hypergame",
    version,
    about = "Evolutionary hypergame dynamics for the voluntary prisoner's dilemma"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise stationary payoff table
    Table(Options),
    /// Round-robin tournament: payoff table, pairwise winners and combined scores
    Tournament(Options),
    /// Critical introspection strengths of {C,L} against {D} and {D,L}
    Thresholds(Options),
    /// Replicator trajectory from the barycenter, optionally with a basin scan
    Replicator(Options),
    /// Discrete multiplicative map over all seven strategy sets
    Map7(Options),
    /// Imitation dynamics on a periodic lattice
    Lattice(Options),
    /// Tournament or lattice runs over a (b, w) grid
    Sweep(Options),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Table,
    Tournament,
    Thresholds,
    Replicator,
    Map7,
    Lattice,
    Sweep,
}

impl Command {
    pub fn split(self) -> (CommandKind, Options) {
        match self {
            Command::Table(o) => (CommandKind::Table, o),
            Command::Tournament(o) => (CommandKind::Tournament, o),
            Command::Thresholds(o) => (CommandKind::Thresholds, o),
            Command::Replicator(o) => (CommandKind::Replicator, o),
            Command::Map7(o) => (CommandKind::Map7, o),
            Command::Lattice(o) => (CommandKind::Lattice, o),
            Command::Sweep(o) => (CommandKind::Sweep, o),
        }
    }
}

/// Every option, shared by all commands. The config file uses the same keys
/// as the long flags; flags win over the file.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// JSON file with default values for any of the options below
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Benefit of cooperation [default: 3]
    #[arg(long, help_heading = "Game", allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Cost of cooperation [default: 1]
    #[arg(long, help_heading = "Game", allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Loner payoff [default: 0.25]
    #[arg(long, help_heading = "Game", allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Introspection strength [default: 1]
    #[arg(long, help_heading = "Game", allow_hyphen_values = true)]
    pub w: Option<f64>,
    /// Strategy sets: `pairs` ({C,D}, {C,L}, {D,L}) or `all` seven [default: pairs]
    #[arg(long, help_heading = "Game")]
    pub mode: Option<String>,
    /// Accept parameters outside c > 0, b > c, 0 < delta < b - c
    #[arg(long, action = ArgAction::SetTrue, help_heading = "Game")]
    #[serde(default)]
    pub allow_any_params: bool,

    /// Base RNG seed [default: 1]
    #[arg(long, help_heading = "Output")]
    pub seed: Option<u64>,
    /// Output directory [default: $HYPERGAME_OUT, else ./hypergame-out]
    #[arg(long, help_heading = "Output")]
    pub out: Option<PathBuf>,
    /// `csv` or `json` [default: csv]
    #[arg(long, help_heading = "Output")]
    pub format: Option<String>,
    /// Print CSV numbers with this many decimals instead of full precision
    #[arg(long, help_heading = "Output")]
    pub round: Option<usize>,

    /// RK4 step [default: 0.01]
    #[arg(long, help_heading = "Replicator")]
    pub dt: Option<f64>,
    /// Integration horizon [default: 10000]
    #[arg(long, help_heading = "Replicator")]
    pub t_max: Option<f64>,
    /// Also scan the simplex with this many subdivisions per edge
    #[arg(long, help_heading = "Replicator")]
    pub basin_resolution: Option<usize>,
    /// Generations of the discrete map [default: 10000]
    #[arg(long, help_heading = "Replicator")]
    pub iterations: Option<u64>,

    /// Lattice width [default: 100]
    #[arg(long, help_heading = "Lattice")]
    pub width: Option<usize>,
    /// Lattice height [default: 100]
    #[arg(long, help_heading = "Lattice")]
    pub height: Option<usize>,
    /// Selection temperature [default: 0.1]
    #[arg(long, help_heading = "Lattice", allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Update steps per replicate [default: 10000000]
    #[arg(long, help_heading = "Lattice")]
    pub steps: Option<u64>,
    /// Independent replicates, seeded seed, seed+1, ... [default: 10]
    #[arg(long, help_heading = "Lattice")]
    pub replicates: Option<usize>,
    /// Comma-separated steps at which to write grid snapshots [default: 0 and the last step]
    #[arg(long, value_delimiter = ',', help_heading = "Lattice")]
    pub snapshots: Option<Vec<u64>>,
    /// `attempt` (one focal update) or `sweep` (width*height attempts) [default: attempt]
    #[arg(long, help_heading = "Lattice")]
    pub step_unit: Option<String>,

    /// Comma-separated b values [default: --b]
    #[arg(long, value_delimiter = ',', help_heading = "Sweep")]
    pub b_values: Option<Vec<f64>>,
    /// Comma-separated w values [default: --w]
    #[arg(
        long,
        value_delimiter = ',',
        help_heading = "Sweep",
        allow_hyphen_values = true
    )]
    pub w_values: Option<Vec<f64>>,
    /// `tournament` or `lattice` [default: tournament]
    #[arg(long, help_heading = "Sweep")]
    pub target: Option<String>,
    /// Grid points run at once [default: number of CPUs]
    #[arg(long, help_heading = "Sweep")]
    pub jobs: Option<usize>,
}

impl Options {
    /// Fills every unset field from `file`.
    fn or(self, file: Options) -> Options {
        Options {
            config: self.config,
            b: self.b.or(file.b),
            c: self.c.or(file.c),
            delta: self.delta.or(file.delta),
            w: self.w.or(file.w),
            mode: self.mode.or(file.mode),
            allow_any_params: self.allow_any_params || file.allow_any_params,
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            round: self.round.or(file.round),
            dt: self.dt.or(file.dt),
            t_max: self.t_max.or(file.t_max),
            basin_resolution: self.basin_resolution.or(file.basin_resolution),
            iterations: self.iterations.or(file.iterations),
            width: self.width.or(file.width),
            height: self.height.or(file.height),
            k: self.k.or(file.k),
            steps: self.steps.or(file.steps),
            replicates: self.replicates.or(file.replicates),
            snapshots: self.snapshots.or(file.snapshots),
            step_unit: self.step_unit.or(file.step_unit),
            b_values: self.b_values.or(file.b_values),
            w_values: self.w_values.or(file.w_values),
            target: self.target.or(file.target),
            jobs: self.jobs.or(file.jobs),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    Tournament,
    Lattice,
}

/// Fully resolved and validated settings of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub w: f64,
    pub mode: String,
    pub allow_any_params: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub round: Option<usize>,
    pub dt: f64,
    pub t_max: f64,
    pub basin_resolution: Option<usize>,
    pub iterations: u64,
    pub width: usize,
    pub height: usize,
    pub k: f64,
    pub steps: u64,
    pub replicates: usize,
    pub snapshots: Vec<u64>,
    pub step_unit: StepUnit,
    pub b_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub target: SweepTarget,
    pub jobs: usize,
}

/// Invalid option; the message names the flag.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(flag: &str, constraint: &str, got: impl fmt::Display) -> ConfigError {
    ConfigError(format!(
        "invalid value for --{flag}: {constraint} (got {got})"
    ))
}

fn read_file(path: &Path) -> Result<Options, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read --config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("invalid --config {}: {e}", path.display())))
}

impl RunConfig {
    /// Merges flags over the config file over defaults, then validates.
    pub fn resolve(command: CommandKind, flags: Options) -> Result<RunConfig, ConfigError> {
        let opts = match &flags.config {
            Some(path) => {
                let file = read_file(path)?;
                flags.or(file)
            }
            None => flags,
        };
        let out = opts
            .out
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

        let mode = match command {
            CommandKind::Map7 => "all".to_string(),
            _ => opts.mode.unwrap_or_else(|| "pairs".into()),
        };
        let b = opts.b.unwrap_or(3.0);
        let w = opts.w.unwrap_or(1.0);
        let steps = opts.steps.unwrap_or(10_000_000);
        let cfg = RunConfig {
            command,
            b,
            c: opts.c.unwrap_or(1.0),
            delta: opts.delta.unwrap_or(0.25),
            w,
            mode,
            allow_any_params: opts.allow_any_params,
            seed: opts.seed.unwrap_or(1),
            out,
            format: match opts.format.as_deref().unwrap_or("csv") {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => return Err(invalid("format", "must be `csv` or `json`", other)),
            },
            round: opts.round,
            dt: opts.dt.unwrap_or(0.01),
            t_max: opts.t_max.unwrap_or(1e4),
            basin_resolution: opts.basin_resolution,
            iterations: opts.iterations.unwrap_or(10_000),
            width: opts.width.unwrap_or(100),
            height: opts.height.unwrap_or(100),
            k: opts.k.unwrap_or(0.1),
            steps,
            replicates: opts.replicates.unwrap_or(10),
            snapshots: opts.snapshots.unwrap_or_else(|| vec![0, steps]),
            step_unit: match opts.step_unit.as_deref().unwrap_or("attempt") {
                "attempt" => StepUnit::Attempt,
                "sweep" => StepUnit::Sweep,
                other => return Err(invalid("step-unit", "must be `attempt` or `sweep`", other)),
            },
            b_values: opts.b_values.unwrap_or_else(|| vec![b]),
            w_values: opts.w_values.unwrap_or_else(|| vec![w]),
            target: match opts.target.as_deref().unwrap_or("tournament") {
                "tournament" => SweepTarget::Tournament,
                "lattice" => SweepTarget::Lattice,
                other => {
                    return Err(invalid(
                        "target",
                        "must be `tournament` or `lattice`",
                        other,
                    ))
                }
            },
            jobs: opts
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.set_mode()?;
        let bs: Vec<f64> = if self.command == CommandKind::Sweep {
            self.b_values.clone()
        } else {
            vec![self.b]
        };
        for b in bs {
            self.params(b)?;
        }
        let ws: Vec<(&str, f64)> = if self.command == CommandKind::Sweep {
            self.w_values.iter().map(|&w| ("w-values", w)).collect()
        } else {
            vec![("w", self.w)]
        };
        for (flag, w) in ws {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid(flag, "w must be >= 0", w));
            }
        }
        if self.b_values.is_empty() {
            return Err(invalid("b-values", "need at least one value", "none"));
        }
        if self.w_values.is_empty() {
            return Err(invalid("w-values", "need at least one value", "none"));
        }
        if let Some(r) = self.round {
            if r > 17 {
                return Err(invalid("round", "must be <= 17", r));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be > 0", self.dt));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(invalid("t-max", "must be >= dt", self.t_max));
        }
        if self.basin_resolution == Some(0) {
            return Err(invalid("basin-resolution", "must be >= 1", 0));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be >= 1", 0));
        }
        if self.width < 2 {
            return Err(invalid("width", "must be >= 2", self.width));
        }
        if self.height < 2 {
            return Err(invalid("height", "must be >= 2", self.height));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid("k", "must be > 0", self.k));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be >= 1", 0));
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be >= 1", 0));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be >= 1", 0));
        }
        Ok(())
    }

    pub fn set_mode(&self) -> Result<SetMode, ConfigError> {
        self.mode
            .parse()
            .map_err(|_| invalid("mode", "must be `pairs` or `all`", &self.mode))
    }

    /// Game parameters at benefit `b`, validated unless `--allow-any-params`.
    pub fn params(&self, b: f64) -> Result<GameParams, ConfigError> {
        let (c, delta) = (self.c, self.delta);
        if self.allow_any_params {
            return GameParams::exploratory(b, c, delta)
                .map_err(|e| ConfigError(format!("invalid game parameters: {e}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", "c must be > 0", c));
        }
        if !(b > c && b.is_finite()) {
            return Err(invalid("b", "b must be > c", b));
        }
        if !(delta > 0.0 && delta < b - c) {
            return Err(invalid(
                "delta",
                &format!("need 0 < delta < b - c with b = {b}, c = {c}; pass --allow-any-params to override"),
                delta,
            ));
        }
        GameParams::new(b, c, delta)
            .map_err(|e| ConfigError(format!("invalid game parameters: {e}")))
    }

    pub fn number_format(&self) -> NumberFormat {
        self.round.map_or(NumberFormat::Full, NumberFormat::Rounded)
    }
}
