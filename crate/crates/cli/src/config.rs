//! Command-line flags, the key-value config file, and their merge into a
//! validated [`RunConfig`].
//!
//! Precedence is flag, then file, then built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bbar_core::bridge::{compute_nodes, min_valid_n};
use bbar_core::experiments::{DEFAULT_N_VALUES, DEFAULT_T_VALUES};
use bbar_core::moduli::{DEFAULT_H_STEPS, MAX_T};
use bbar_core::operator::Branch;
use bbar_core::weight::{GridSpec, Placement, CORPUS_NAMES};
use bbar_core::Weight;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bbar", version, about = "Modified Bernstein operator experiments")]
pub struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the output schemas and exit.
    #[arg(long)]
    pub schema: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Weighted,
    Sobolev,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate f, the operator and the weighted error over the grid.
    Eval(Flags),
    /// Tabulate both second-order moduli over the t values.
    Modulus(Flags),
    /// Run named checks; exit 1 if any fails.
    Check(Flags),
    /// Direct, inverse and consistency reports, one JSON line per function.
    Sweep(Flags),
    /// List the corpus members for a weight.
    ListFunctions(Flags),
    /// Regenerate the calibration table.
    Calibrate(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Modulus(_) => "modulus",
            Command::Check(_) => "check",
            Command::Sweep(_) => "sweep",
            Command::ListFunctions(_) => "list-functions",
            Command::Calibrate(_) => "calibrate",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Eval(f)
            | Command::Modulus(f)
            | Command::Check(f)
            | Command::Sweep(f)
            | Command::ListFunctions(f)
            | Command::Calibrate(f) => f,
        }
    }
}

/// Flags shared by every subcommand. All are optional so that the config file
/// can supply them.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Corpus member name.
    #[arg(long = "f", visible_alias = "function", value_name = "NAME")]
    pub function: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Degree for `eval`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated degrees for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    /// Comma-separated moduli steps.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_values: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[arg(long, value_enum)]
    pub grid_placement: Option<PlacementArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub exclusion_radius: Option<f64>,
    /// Step sizes per modulus supremum.
    #[arg(long)]
    pub h_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Comma-separated check names, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub which: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlacementArg {
    Uniform,
    Chebyshev,
}

impl From<PlacementArg> for Placement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::Uniform => Placement::Uniform,
            PlacementArg::Chebyshev => Placement::Chebyshev,
        }
    }
}

/// Keys accepted in a config file, in the order the README lists them.
pub const CONFIG_KEYS: [&str; 19] = [
    "function",
    "xi",
    "alpha",
    "lambda",
    "n",
    "n_values",
    "t_values",
    "grid_count",
    "grid_placement",
    "exclusion_radius",
    "h_steps",
    "format",
    "output",
    "which",
    "branch",
    "beta",
    "gamma",
    "u",
    "v",
];

/// Raw `key = value` pairs of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config("config", format!("line {}: expected `key = value`", i + 1)));
            };
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(&key, format!("line {}: unknown key", i + 1)));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::config(key, format!("cannot parse `{v}`"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.entries
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|_| CliError::config(key, format!("cannot parse `{s}`"))))
                    .collect()
            })
            .transpose()
    }

    fn choice<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|v| T::from_str(v, true).map_err(|_| CliError::config(key, format!("unknown value `{v}`"))))
            .transpose()
    }
}

/// Fully resolved and validated settings for one command.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub function: Option<String>,
    pub weight: Weight,
    pub lambda: f64,
    pub n: usize,
    pub n_values: Vec<usize>,
    pub t_values: Vec<f64>,
    pub grid: GridSpec,
    pub h_steps: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub which: Vec<String>,
    /// Set when `which` was `all`: checks the settings cannot support are skipped
    /// rather than reported as errors.
    pub which_all: bool,
    pub branch: BranchArg,
    pub beta: f64,
    pub gamma: f64,
    pub u: f64,
    pub v: f64,
}

pub const DEFAULT_XI: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_N: usize = 256;

/// Check names accepted by `--which`.
pub const CHECK_NAMES: [&str; 10] = [
    "lemma1", "lemma2", "lemma4", "lemma5", "lemma6", "lemma7", "theorem1", "theorem2", "direct", "inverse",
];

impl RunConfig {
    /// Merges `flags` over `file` over defaults and validates the result.
    pub fn resolve(command: &str, flags: &Flags, file: &ConfigFile) -> Result<Self, CliError> {
        let function = pick(flags.function.clone(), file.scalar("function")?, None);
        let xi = pick(flags.xi, file.scalar("xi")?, Some(DEFAULT_XI)).unwrap();
        let alpha = pick(flags.alpha, file.scalar("alpha")?, Some(DEFAULT_ALPHA)).unwrap();
        let lambda = pick(flags.lambda, file.scalar("lambda")?, Some(0.0)).unwrap();
        let n = pick(flags.n, file.scalar("n")?, Some(DEFAULT_N)).unwrap();
        let n_values = pick(flags.n_values.clone(), file.list("n_values")?, Some(DEFAULT_N_VALUES.to_vec())).unwrap();
        let t_values = pick(flags.t_values.clone(), file.list("t_values")?, Some(DEFAULT_T_VALUES.to_vec())).unwrap();
        let base = GridSpec::default();
        let grid_count = pick(flags.grid_count, file.scalar("grid_count")?, Some(base.count)).unwrap();
        let placement = pick(flags.grid_placement, file.choice("grid_placement")?, None)
            .map(Placement::from)
            .unwrap_or(base.placement);
        let exclusion_radius =
            pick(flags.exclusion_radius, file.scalar("exclusion_radius")?, Some(base.exclusion_radius)).unwrap();
        let h_steps = pick(flags.h_steps, file.scalar("h_steps")?, Some(DEFAULT_H_STEPS)).unwrap();
        let format = pick(flags.format, file.choice("format")?, Some(Format::Csv)).unwrap();
        let output = pick(flags.output.clone(), file.scalar("output")?, None);
        let which = pick(flags.which.clone(), file.list("which")?, Some(vec!["all".to_string()])).unwrap();
        let branch = pick(flags.branch, file.choice("branch")?, Some(BranchArg::Both)).unwrap();
        let beta = pick(flags.beta, file.scalar("beta")?, Some(1.0)).unwrap();
        let gamma = pick(flags.gamma, file.scalar("gamma")?, Some(2.0)).unwrap();
        let u = pick(flags.u, file.scalar("u")?, Some(0.5)).unwrap();
        let v = pick(flags.v, file.scalar("v")?, Some(0.5)).unwrap();

        let weight = Weight::new(xi, alpha).map_err(|e| {
            let field = if xi > 0.0 && xi < 1.0 { "alpha" } else { "xi" };
            CliError::config(field, e.to_string())
        })?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(CliError::config("lambda", format!("{lambda} is outside [0, 1]")));
        }
        if let Some(name) = &function {
            if !CORPUS_NAMES.contains(&name.as_str()) {
                return Err(CliError::config(
                    "function",
                    format!("unknown function `{name}`; see `bbar list-functions`"),
                ));
            }
        }
        if n == 0 {
            return Err(CliError::config("n", "must be at least 1"));
        }
        if n_values.len() < 3 {
            return Err(CliError::config("n_values", "need at least 3 values"));
        }
        if n_values.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CliError::config("n_values", "must be strictly increasing"));
        }
        if t_values.len() < 3 {
            return Err(CliError::config("t_values", "need at least 3 values"));
        }
        if let Some(t) = t_values.iter().find(|t| !(**t > 0.0 && **t <= MAX_T)) {
            return Err(CliError::config("t_values", format!("{t} is outside (0, {MAX_T}]")));
        }
        let grid = GridSpec::new(grid_count, exclusion_radius, placement).map_err(|e| {
            let field = if grid_count < 2 { "grid_count" } else { "exclusion_radius" };
            CliError::config(field, e.to_string())
        })?;
        if h_steps == 0 {
            return Err(CliError::config("h_steps", "must be at least 1"));
        }
        let which_all = which.iter().any(|w| w.trim().eq_ignore_ascii_case("all"));
        let which = normalize_which(which)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(CliError::config("beta", format!("{beta} is outside (0, inf)")));
        }
        for (field, value) in [("gamma", gamma), ("u", u), ("v", v)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(CliError::config(field, format!("{value} is outside [0, inf)")));
            }
        }

        Ok(Self {
            command: command.to_string(),
            function,
            weight,
            lambda,
            n,
            n_values,
            t_values,
            grid,
            h_steps,
            format,
            output,
            which,
            which_all,
            branch,
            beta,
            gamma,
            u,
            v,
        })
    }

    /// The named function, required by this command.
    pub fn require_function(&self) -> Result<&str, CliError> {
        self.function
            .as_deref()
            .ok_or_else(|| CliError::config("function", "required; pass --f NAME"))
    }

    /// Exit-3 error when the nodes for `n` are invalid.
    pub fn require_nodes(&self, n: usize) -> Result<(), CliError> {
        if compute_nodes(n, self.weight.xi).valid {
            Ok(())
        } else {
            Err(CliError::InvalidNodes {
                n,
                min_n: min_valid_n(self.weight.xi),
            })
        }
    }

    pub fn branches(&self) -> Vec<Branch> {
        match self.branch {
            BranchArg::Weighted => vec![Branch::Weighted],
            BranchArg::Sobolev => vec![Branch::Sobolev],
            BranchArg::Both => vec![Branch::Weighted, Branch::Sobolev],
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: Option<T>) -> Option<T> {
    flag.or(file).or(default)
}

fn normalize_which(which: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for name in which {
        let name = name.trim().to_lowercase();
        if name == "all" {
            return Ok(CHECK_NAMES.iter().map(|s| s.to_string()).collect());
        }
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(CliError::config("which", format!("unknown check `{name}`")));
        }
        if !out.contains(&name) {
            out.push(name);
        }
    }
    if out.is_empty() {
        return Err(CliError::config("which", "no checks named"));
    }
    Ok(out)
}
