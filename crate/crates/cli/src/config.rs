use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dgmix::mesh::BoundaryPartition;
use dgmix::spectral::Strategy;
use dgmix::study::{RunConfig, DEFAULT_A_S};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "dgmix", version, about = "Vibration modes of a clamped elastic plate with a mixed DG discretization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one configuration and write its smallest frequencies.
    Solve(SolveArgs),
    /// Sweep the stabilization parameter and flag spurious frequencies.
    SweepAs(SweepArgs),
    /// Refine the mesh and flag frequencies missing from the finest run.
    Refine(RefineArgs),
    /// Refine the mesh, track modes and fit convergence orders.
    Converge(ConvergeArgs),
    /// Approach the incompressible limit and fit the gap decay rate.
    Limit(LimitArgs),
    /// Fit ω(h) = ω_ex + C h^α to tabulated data.
    Fit(FitArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON file with defaults; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cells per side (comma-separated list for `converge` and `refine`).
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Poisson ratio (comma-separated list for `limit`).
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long = "aS")]
    pub a_s: Option<f64>,
    /// bottom | left | top | right | all-dirichlet
    #[arg(long)]
    pub bc: Option<String>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// auto | dense | shift-invert
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub shift: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Write the mesh as JSON.
    #[arg(long)]
    pub export_mesh: Option<PathBuf>,
    /// Write `<prefix>_A.mtx` and `<prefix>_B.mtx`.
    #[arg(long)]
    pub export_matrices: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Stabilization values to sweep.
    #[arg(long = "as")]
    pub as_values: Option<String>,
    /// Stabilization of the reference run.
    #[arg(long)]
    pub reference: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RefineArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// One-based mode numbers to track.
    #[arg(long)]
    pub track: Option<String>,
}

#[derive(Args, Debug)]
pub struct LimitArgs {
    #[command(flatten)]
    pub common: Common,
    /// One-based mode number.
    #[arg(long)]
    pub track: Option<String>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with columns `h,omega` (or `N,omega`).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// A number, a list of numbers, or a comma-separated string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumList {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl NumList {
    fn to_text(&self) -> String {
        match self {
            NumList::One(x) => x.to_string(),
            NumList::Many(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            NumList::Text(s) => s.clone(),
        }
    }
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "N")]
    pub n: Option<NumList>,
    pub k: Option<usize>,
    pub nu: Option<NumList>,
    #[serde(rename = "aS")]
    pub a_s: Option<f64>,
    pub bc: Option<String>,
    pub modes: Option<usize>,
    pub solver: Option<String>,
    pub shift: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<String>,
    #[serde(rename = "as")]
    pub as_values: Option<NumList>,
    pub reference: Option<f64>,
    pub track: Option<NumList>,
    pub input: Option<PathBuf>,
    pub export_mesh: Option<PathBuf>,
    pub export_matrices: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Option<PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config: {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a command needs, after merging the config file under the flags.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: String,
    pub run: RunConfig,
    #[serde(rename = "N")]
    pub n_values: Vec<usize>,
    pub nu_values: Vec<f64>,
    #[serde(rename = "as")]
    pub as_values: Vec<f64>,
    pub reference: f64,
    pub track: Vec<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub export_mesh: Option<PathBuf>,
    pub export_matrices: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(name: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| CliError::usage(format!("{name}: cannot parse `{s}`"))))
        .collect()
}

fn single<T: Copy>(name: &str, v: &[T]) -> Result<T, CliError> {
    match v {
        [x] => Ok(*x),
        _ => Err(CliError::usage(format!("{name}: expected a single value, got {}", v.len()))),
    }
}

/// Per-command defaults for the list-valued settings.
struct Defaults {
    n: &'static str,
    nu: &'static str,
    lists_n: bool,
    lists_nu: bool,
}

impl Resolved {
    pub fn new(command: &str, common: &Common, extra: Extra) -> Result<Self, CliError> {
        let file = FileConfig::load(&common.config)?;
        let d = match command {
            "converge" | "refine" => Defaults { n: "16,32,48,64", nu: "0.35", lists_n: true, lists_nu: false },
            "limit" => Defaults { n: "16", nu: "0.45,0.49,0.499,0.4999", lists_n: false, lists_nu: true },
            _ => Defaults { n: "8", nu: "0.35", lists_n: false, lists_nu: false },
        };
        let pick = |flag: &Option<String>, file: &Option<NumList>, default: &str| -> String {
            flag.clone().or_else(|| file.as_ref().map(NumList::to_text)).unwrap_or_else(|| default.to_string())
        };

        let n_values: Vec<usize> = parse_list("N", &pick(&common.n, &file.n, d.n))?;
        if n_values.is_empty() {
            return Err(CliError::usage("N: no value given"));
        }
        if !d.lists_n {
            single("N", &n_values)?;
        }
        let nu_values: Vec<f64> = parse_list("nu", &pick(&common.nu, &file.nu, d.nu))?;
        if nu_values.is_empty() {
            return Err(CliError::usage("nu: no value given"));
        }
        if !d.lists_nu {
            single("nu", &nu_values)?;
        }
        let bc_name = common.bc.clone().or(file.bc).unwrap_or_else(|| "bottom".into());
        let partition = BoundaryPartition::parse(&bc_name).map_err(CliError::from_core)?;
        let strategy = Strategy::parse(&common.solver.clone().or(file.solver).unwrap_or_else(|| "auto".into()))
            .map_err(CliError::from_core)?;
        let format = match common.format.clone().or(file.format).as_deref().unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(CliError::usage(format!("format: unknown `{other}` (expected csv|json)"))),
        };
        let base_nu = if d.lists_nu { 0.5 } else { nu_values[0] };
        let run = RunConfig {
            n: n_values[0],
            k: common.k.or(file.k).unwrap_or(2),
            nu: base_nu,
            a_s: common.a_s.or(file.a_s).unwrap_or(DEFAULT_A_S),
            partition,
            m: common.modes.or(file.modes).unwrap_or(10),
            strategy,
            shift: common.shift.or(file.shift).unwrap_or(1.3),
            ..RunConfig::default()
        };
        for &n in &n_values {
            RunConfig { n, ..run.clone() }.validate().map_err(CliError::from_core)?;
        }
        for &nu in &nu_values {
            RunConfig { nu, ..run.clone() }.validate().map_err(CliError::from_core)?;
        }
        let as_values: Vec<f64> =
            parse_list("as", &pick(&extra.as_values, &file.as_values, "5,10,20,40,80"))?;
        let track: Vec<usize> = parse_list("track", &pick(&extra.track, &file.track, "1"))?;
        if track.is_empty() || track.contains(&0) {
            return Err(CliError::usage("track: mode numbers start at 1"));
        }
        Ok(Self {
            command: command.to_string(),
            run,
            n_values,
            nu_values,
            as_values,
            reference: extra.reference.or(file.reference).unwrap_or(DEFAULT_A_S),
            track,
            format,
            output: common.output.clone().or(file.output),
            input: extra.input.or(file.input),
            export_mesh: extra.export_mesh.or(file.export_mesh),
            export_matrices: extra.export_matrices.or(file.export_matrices),
        })
    }
}

/// Subcommand-specific flags.
#[derive(Default)]
pub struct Extra {
    pub as_values: Option<String>,
    pub reference: Option<f64>,
    pub track: Option<String>,
    pub input: Option<PathBuf>,
    pub export_mesh: Option<PathBuf>,
    pub export_matrices: Option<PathBuf>,
}
