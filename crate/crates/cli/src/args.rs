//! Command-line surface and the merge of flags with an optional TOML config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rellich_core::degeneration::default_eps_ladder;
use rellich_core::Params;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "rellich",
    version,
    about = "Sharp constants and numerical checks for weighted Rellich-Sobolev inequalities"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags accepted by every subcommand. Unset flags fall back to the config file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// TOML file with defaults for the shared flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dimension.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// Exponent of the Laplacian term.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// Exponent of the lower-order term; defaults to `p`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Weight exponent.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Spherical harmonic degrees, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub modes: Option<Vec<u32>>,
    /// Half-length of the cylinder grid.
    #[arg(long, global = true)]
    pub grid_span: Option<f64>,
    /// Number of grid nodes.
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Scale parameters for degeneration fits, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_ladder: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file for the report; `-` writes it to stdout instead of the summary.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp so repeated runs give byte-identical reports.
    #[arg(long, global = true)]
    pub comparable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Resonant-mode family, rate `p`.
    Resonance,
    /// Cone over a spherical cap, rate `p - 1 + p/q`.
    Navier,
    /// Radial family whose quotient tends to `|gamma|^p`.
    Sharpness,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Largest harmonic degree; by default chosen from the parameters.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Report the raw value at the requested span without span extrapolation.
    #[arg(long)]
    pub no_extrapolate: bool,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 400)]
    pub max_iter: usize,
    /// Relative tolerance between the discrete value and the exact symbol value.
    #[arg(long, default_value_t = rellich_core::harness::sweep::DISCRETE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived constants of the parameters.
    Constants,
    /// Discrete estimate of the per-mode constant with `q = p`.
    Mu(EstimateArgs),
    /// Discrete estimate of the Rellich-Sobolev constant.
    EstimateS(EstimateArgs),
    /// Quotients of an explicit family along the eps ladder and the fitted rate.
    Degenerate {
        #[arg(long, value_enum, default_value_t = Family::Navier)]
        family: Family,
        /// Allowed distance of the fitted slope from its predicted value.
        #[arg(long, default_value_t = rellich_core::harness::sweep::SLOPE_TOL)]
        slope_tol: f64,
        /// Relative tolerance of the sharpness family at the smallest eps.
        #[arg(long, default_value_t = 1e-2)]
        sharp_tol: f64,
    },
    /// Checks an inequality suite on seeded random samples.
    Verify {
        #[arg(long)]
        suite: String,
        /// Weight of first-order suites; defaults to `alpha - p`.
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Compares random sign-changing radial profiles with their superharmonic majorants.
    Compare {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Outer radius of the annulus `{1/R < r < R}`.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
    },
    /// Sweeps `alpha` over a grid and records constants and checks per point.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        alpha_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha_max: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha_step: f64,
        /// Run the discrete eigen-solve at every point (`p = q = 2`).
        #[arg(long)]
        discrete: bool,
        /// Skip the degeneration fits for `alpha >= np - n`.
        #[arg(long)]
        no_rates: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Mu(_) => "mu",
            Command::EstimateS(_) => "estimate-s",
            Command::Degenerate { .. } => "degenerate",
            Command::Verify { .. } => "verify",
            Command::Compare { .. } => "compare",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Defaults read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub n: Option<u32>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub modes: Option<Vec<u32>>,
    pub grid_span: Option<f64>,
    pub grid_points: Option<usize>,
    pub eps_ladder: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Shared settings after merging flags, config and defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub params: Params,
    pub modes: Vec<u32>,
    /// Only set when given explicitly; commands pick their own default.
    pub grid_span: Option<f64>,
    pub grid_points: Option<usize>,
    pub eps_ladder: Vec<f64>,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub comparable: bool,
}

impl Settings {
    pub fn resolve(args: &SharedArgs) -> Result<Self> {
        let cfg = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let n = args.n.or(cfg.n).unwrap_or(5);
        let p = args.p.or(cfg.p).unwrap_or(2.0);
        let q = args.q.or(cfg.q).unwrap_or(p);
        let alpha = args.alpha.or(cfg.alpha).unwrap_or(0.0);
        let params = Params::new(n, p, q, alpha)?;
        let eps_ladder = args
            .eps_ladder
            .clone()
            .or(cfg.eps_ladder)
            .unwrap_or_else(default_eps_ladder);
        if eps_ladder.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            bail!("eps ladder entries must be positive");
        }
        Ok(Self {
            params,
            modes: args.modes.clone().or(cfg.modes).unwrap_or_else(|| vec![0]),
            grid_span: args.grid_span.or(cfg.grid_span),
            grid_points: args.grid_points.or(cfg.grid_points),
            eps_ladder,
            seed: args.seed.or(cfg.seed).unwrap_or(1),
            format: args.format.or(cfg.format).unwrap_or(Format::Json),
            out: args.out.clone(),
            comparable: args.comparable,
        })
    }
}
