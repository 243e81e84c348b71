//! Configuration resolution and report rendering for the `spde` binary.
//!
//! Settings come from three layers, later layers winning: built-in desk
//! defaults, an optional TOML config file (`--config`), and command line
//! flags. File keys are spelled exactly like the long flags
//! (`reference-scheme`, `t-final`, ...), and unknown keys are rejected.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::Deserialize;

use spde_core::harness::{ErrorReport, ExperimentConfig, SchemeSelection};
use spde_core::problems::SpdeProblem;
use spde_core::schemes::Scheme;

/// Strong-error convergence experiments for SPDE time stepping on (0,1).
#[derive(Parser, Debug, Default)]
#[command(
    name = "spde",
    version,
    about = "Monte Carlo strong-error tables for BEM and BDF2 time stepping of SPDEs",
    after_help = "The environment variable SPDE_WORKERS caps the number of worker threads; \
                  results are bit-identical for any worker count."
)]
pub struct Cli {
    /// TOML config file; command line flags override its entries
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Problem to solve: heat | quasilinear
    #[arg(long)]
    pub problem: Option<String>,

    /// Noise intensity (0 disables sampling entirely)
    #[arg(long)]
    pub sigma: Option<f64>,

    /// Noise smoothness parameter in the mode decay exponent 2r+1+eps
    #[arg(long)]
    pub r: Option<f64>,

    /// Small positive shift in the mode decay exponent
    #[arg(long)]
    pub eps: Option<f64>,

    /// Number of interior mesh nodes
    #[arg(long)]
    pub nh: Option<usize>,

    /// Number of noise modes
    #[arg(long)]
    pub j: Option<usize>,

    /// Coarse step counts, comma separated (each must divide nref)
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,

    /// Reference step count
    #[arg(long)]
    pub nref: Option<usize>,

    /// Monte Carlo sample count
    #[arg(long)]
    pub samples: Option<usize>,

    /// Base seed; sample i draws from stream (seed, i)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Significance level of the confidence intervals
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Scheme selection: bem | bdf2 | both
    #[arg(long)]
    pub scheme: Option<String>,

    /// Scheme computing the reference trajectory: bem | bdf2
    #[arg(long)]
    pub reference_scheme: Option<String>,

    /// Final time of the integration interval
    #[arg(long)]
    pub t_final: Option<f64>,

    /// Output format: markdown | csv
    #[arg(long)]
    pub format: Option<String>,

    /// Output path; stdout when omitted. Files are written atomically.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Config file schema; every key matches the long flag of the same name.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    sigma: Option<f64>,
    r: Option<f64>,
    eps: Option<f64>,
    nh: Option<usize>,
    j: Option<usize>,
    levels: Option<Vec<usize>>,
    nref: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    alpha: Option<f64>,
    scheme: Option<String>,
    reference_scheme: Option<String>,
    t_final: Option<f64>,
    format: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputFormat::Markdown => write!(f, "markdown"),
            OutputFormat::Csv => write!(f, "csv"),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            other => bail!("invalid `format`: expected markdown or csv, got `{other}`"),
        }
    }
}

/// Where and how the report is written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSettings {
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

fn parse_problem(s: &str) -> Result<SpdeProblem> {
    match s {
        "heat" => Ok(SpdeProblem::Heat),
        "quasilinear" => Ok(SpdeProblem::Quasilinear),
        other => bail!("invalid `problem`: expected heat or quasilinear, got `{other}`"),
    }
}

/// Applies the three configuration layers and returns the experiment plus
/// output settings. Validation of the merged experiment happens here so
/// errors name the offending key before any work starts.
pub fn resolve_config(cli: &Cli) -> Result<(ExperimentConfig, OutputSettings)> {
    let file: FileConfig = match &cli.config {
        None => FileConfig::default(),
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file `{}`", path.display()))?;
            toml::from_str(&raw)
                .with_context(|| format!("cannot parse config file `{}`", path.display()))?
        }
    };

    let mut cfg = ExperimentConfig::default();
    if let Some(p) = file.problem.as_deref().map(parse_problem).transpose()? {
        cfg.problem = p;
    }
    if let Some(v) = file.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = file.r {
        cfg.r = v;
    }
    if let Some(v) = file.eps {
        cfg.eps = v;
    }
    if let Some(v) = file.nh {
        cfg.n_h = v;
    }
    if let Some(v) = file.j {
        cfg.j_modes = v;
    }
    if let Some(v) = file.levels.clone() {
        cfg.levels = v;
    }
    if let Some(v) = file.nref {
        cfg.n_ref = v;
    }
    if let Some(v) = file.samples {
        cfg.samples = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.alpha {
        cfg.alpha = v;
    }
    if let Some(s) = file.scheme.as_deref().map(SchemeSelection::from_str).transpose()? {
        cfg.schemes = s;
    }
    if let Some(s) = file
        .reference_scheme
        .as_deref()
        .map(Scheme::from_str)
        .transpose()?
    {
        cfg.reference_scheme = s;
    }
    if let Some(v) = file.t_final {
        cfg.t_final = v;
    }

    if let Some(p) = cli.problem.as_deref().map(parse_problem).transpose()? {
        cfg.problem = p;
    }
    if let Some(v) = cli.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = cli.r {
        cfg.r = v;
    }
    if let Some(v) = cli.eps {
        cfg.eps = v;
    }
    if let Some(v) = cli.nh {
        cfg.n_h = v;
    }
    if let Some(v) = cli.j {
        cfg.j_modes = v;
    }
    if let Some(v) = cli.levels.clone() {
        cfg.levels = v;
    }
    if let Some(v) = cli.nref {
        cfg.n_ref = v;
    }
    if let Some(v) = cli.samples {
        cfg.samples = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = v;
    }
    if let Some(s) = cli.scheme.as_deref().map(SchemeSelection::from_str).transpose()? {
        cfg.schemes = s;
    }
    if let Some(s) = cli
        .reference_scheme
        .as_deref()
        .map(Scheme::from_str)
        .transpose()?
    {
        cfg.reference_scheme = s;
    }
    if let Some(v) = cli.t_final {
        cfg.t_final = v;
    }

    cfg.validate()?;

    let format = cli
        .format
        .as_deref()
        .or(file.format.as_deref())
        .map(OutputFormat::from_str)
        .transpose()?
        .unwrap_or(OutputFormat::Markdown);
    let out = cli.out.clone().or(file.out);

    Ok((cfg, OutputSettings { format, out }))
}

/// CSV with one row per `(scheme, level)`. Floats use the shortest
/// round-trip representation, so equal values always produce equal bytes.
pub fn render_csv(report: &ErrorReport) -> String {
    let mut s = String::from("scheme,N_k,error,ci_lo,ci_hi,eoc,argmax_n,wall_seconds\n");
    for row in &report.rows {
        let eoc = row.eoc.map(|e| e.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.scheme,
            row.n_k,
            row.error,
            row.ci_lower,
            row.ci_upper,
            eoc,
            row.argmax_step,
            row.wall_seconds
        ));
    }
    s
}

/// Markdown table mirroring the usual convergence table layout: errors and
/// half-widths to six decimals, orders to two. With both schemes the table
/// has one column group per scheme.
pub fn render_markdown(report: &ErrorReport) -> String {
    let cfg = &report.config;
    let problem = match cfg.problem {
        SpdeProblem::Heat => "heat",
        SpdeProblem::Quasilinear => "quasilinear",
    };
    let mut s = format!(
        "Problem: {problem} | sigma = {} | r = {} | eps = {} | N_h = {} | J = {} | \
         n_ref = {} | T = {} | samples = {} | seed = {} | reference: {}\n\n",
        cfg.sigma,
        cfg.r,
        cfg.eps,
        cfg.n_h,
        cfg.j_modes,
        cfg.n_ref,
        cfg.t_final,
        cfg.samples,
        cfg.seed,
        cfg.reference_scheme
    );

    let schemes = cfg.schemes.list();
    s.push_str("| N_k |");
    for scheme in &schemes {
        s.push_str(&format!(" {scheme} error | {scheme} CI+- | {scheme} EOC |"));
    }
    s.push('\n');
    s.push_str("|----:|");
    for _ in &schemes {
        s.push_str("------:|------:|-----:|");
    }
    s.push('\n');

    let levels = cfg.normalized_levels();
    for &n_k in &levels {
        s.push_str(&format!("| {n_k} |"));
        for &scheme in &schemes {
            let row = report
                .rows
                .iter()
                .find(|r| r.scheme == scheme && r.n_k == n_k)
                .expect("report row");
            let half = 0.5 * (row.ci_upper - row.ci_lower);
            let eoc = row.eoc.map(|e| format!("{e:.2}")).unwrap_or_default();
            s.push_str(&format!(" {:.6} | {:.6} | {} |", row.error, half, eoc));
        }
        s.push('\n');
    }
    s
}

/// Writes `content` to `path` atomically: a temporary file in the same
/// directory is written, flushed, and renamed over the target, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)
            .with_context(|| format!("cannot create `{}`", tmp.display()))?;
        f.write_all(content.as_bytes())
            .with_context(|| format!("cannot write `{}`", tmp.display()))?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move `{}` into place", tmp.display()))?;
    Ok(())
}

/// Renders the report and delivers it to stdout or the configured path.
pub fn emit(report: &ErrorReport, settings: &OutputSettings) -> Result<()> {
    let content = match settings.format {
        OutputFormat::Markdown => render_markdown(report),
        OutputFormat::Csv => render_csv(report),
    };
    match &settings.out {
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .context("cannot write to stdout")?;
        }
        Some(path) => write_atomic(path, &content)?,
    }
    Ok(())
}
