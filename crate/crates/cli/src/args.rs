use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Depth ranking, outlier detection and functional boxplots for trajectory data.
#[derive(Debug, Parser)]
#[command(name = "trajfda", version, about)]
pub struct Cli {
    /// Flat `key = value` file; explicit flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulation model ensemble plus a truth-label sidecar.
    Simulate(SimulateArgs),
    /// Sample curves from the bivariate Matérn Gaussian process.
    GpSample(GpSampleArgs),
    /// Smooth raw tracks onto a common uniform grid.
    Ingest(IngestArgs),
    /// Rank curves by modified simplicial band depth.
    Rank(RankArgs),
    /// Apply the WO, MSBD and RMD outlier rules.
    Detect(DetectArgs),
    /// Draw the trajectory functional boxplot (one SVG per alpha).
    Boxplot(BoxplotArgs),
    /// Emit the MSBD-WO scatterplot as JSON or SVG (one per alpha).
    Msbdwo(MsbdwoArgs),
    /// Monte Carlo detection rates of the three rules.
    Benchmark(BenchmarkArgs),
}

/// Collects the config keys a subcommand received as flags.
pub trait Overrides {
    fn pairs(&self, out: &mut Vec<(&'static str, String)>);
}

macro_rules! push_opts {
    ($out:ident, $self:ident, $($field:ident => $key:literal),* $(,)?) => {
        $( if let Some(v) = &$self.$field { $out.push(($key, v.to_string())); } )*
    };
}

#[derive(Debug, Args)]
pub struct ModelOpts {
    /// m1, m2, m3 or m4.
    #[arg(long)]
    pub model: Option<String>,
    /// Grid size; defaults to the model's own.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl Overrides for ModelOpts {
    fn pairs(&self, out: &mut Vec<(&'static str, String)>) {
        push_opts!(out, self, model => "model", k => "k", seed => "seed");
    }
}

#[derive(Debug, Args)]
pub struct DepthOpts {
    /// auto, projection or mahalanobis.
    #[arg(long)]
    pub method: Option<String>,
    /// Projection directions.
    #[arg(long)]
    pub directions: Option<String>,
    /// Subset cap for exact MSBD counting, or `none`.
    #[arg(long)]
    pub max_triples: Option<String>,
    #[arg(long)]
    pub msbd_seed: Option<String>,
    #[arg(long)]
    pub exclude_query: Option<String>,
    /// Three increasing percentages, e.g. `25,50,75`.
    #[arg(long)]
    pub band_levels: Option<String>,
    /// WO tail probability; a comma list gives one output per value.
    #[arg(long)]
    pub alpha: Option<String>,
}

impl Overrides for DepthOpts {
    fn pairs(&self, out: &mut Vec<(&'static str, String)>) {
        push_opts!(out, self,
            method => "method", directions => "directions", max_triples => "max-triples",
            msbd_seed => "msbd-seed", exclude_query => "exclude-query",
            band_levels => "band-levels", alpha => "alpha",
        );
    }
}

#[derive(Debug, Args)]
pub struct RuleOpts {
    /// MSBD hull inflation factor.
    #[arg(long)]
    pub factor: Option<String>,
    #[arg(long)]
    pub mcd_seed: Option<String>,
    #[arg(long)]
    pub mcd_starts: Option<String>,
    #[arg(long)]
    pub rmd_quantile: Option<String>,
    /// MCD subset fraction, or `none` for the maximal-breakdown size.
    #[arg(long)]
    pub h_fraction: Option<String>,
}

impl Overrides for RuleOpts {
    fn pairs(&self, out: &mut Vec<(&'static str, String)>) {
        push_opts!(out, self,
            factor => "factor", mcd_seed => "mcd-seed", mcd_starts => "mcd-starts",
            rmd_quantile => "rmd-quantile", h_fraction => "h-fraction",
        );
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    /// Append the model's contaminating curves.
    #[arg(long)]
    pub contaminate: bool,
    /// Ensemble CSV; defaults to `<model>_seed<seed>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Label sidecar; defaults to the output stem plus `.labels.csv`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GpSampleArgs {
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Ensemble CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw CSV with columns `id,t,<coords>`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub target_k: Option<String>,
    /// `gcv` or a fixed penalty.
    #[arg(long)]
    pub lambda: Option<String>,
    /// `none` or `common-start`.
    #[arg(long)]
    pub align: Option<String>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Ensemble CSV on a shared grid.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub depth: DepthOpts,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub depth: DepthOpts,
    #[command(flatten)]
    pub rules: RuleOpts,
}

#[derive(Debug, Args)]
pub struct BoxplotArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// SVG path; with several alphas each file gets an `_alpha<value>` suffix.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the JSON report for each alpha.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub depth: DepthOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct MsbdwoArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the output extension, else JSON.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub depth: DepthOpts,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[arg(long)]
    pub replicates: Option<String>,
    /// JSON results; the text table always goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub depth: DepthOpts,
    #[command(flatten)]
    pub rules: RuleOpts,
}

impl Command {
    /// Config overrides carried by the subcommand's flags.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![];
        match self {
            Command::Simulate(a) => {
                a.model.pairs(&mut out);
                if a.contaminate {
                    out.push(("contaminate", "true".into()));
                }
            }
            Command::GpSample(a) => {
                push_opts!(out, a, n => "n", k => "k", seed => "seed");
            }
            Command::Ingest(a) => {
                push_opts!(out, a, target_k => "target-k", lambda => "lambda", align => "align");
            }
            Command::Rank(a) => a.depth.pairs(&mut out),
            Command::Detect(a) => {
                a.depth.pairs(&mut out);
                a.rules.pairs(&mut out);
            }
            Command::Boxplot(a) => a.depth.pairs(&mut out),
            Command::Msbdwo(a) => a.depth.pairs(&mut out),
            Command::Benchmark(a) => {
                a.model.pairs(&mut out);
                push_opts!(out, a, replicates => "replicates");
                a.depth.pairs(&mut out);
                a.rules.pairs(&mut out);
            }
        }
        out
    }
}
