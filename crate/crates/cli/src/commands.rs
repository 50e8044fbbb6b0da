//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use topoclust::io::{diagram_to_string, load_diagram, load_diagrams, read_field};
use topoclust::selection::{select_k_from_summaries, FitSummary, ScoreParams};
use topoclust::{barycenter, cluster, wasserstein_distance, DiagramPoint, Family, LiftingParams, TimeBudget};

use crate::config::{parse_budget, Dim, FamilySelection, InputSource, RunConfig, SynthSpec, Threads, Threshold};
use crate::pipeline::{prepare_diagram, run_pipeline};

#[derive(Debug, Parser)]
#[command(
    name = "topoclust",
    version,
    about = "Cluster scalar-field ensembles by their persistence diagrams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep k over an ensemble, score each k and write a report.
    Run(RunArgs),
    /// Compute the extremum diagram of one field.
    Diagram(DiagramArgs),
    /// Print the Wasserstein distance between two diagrams.
    Distance(DistanceArgs),
    /// Compute the barycenter of a directory of diagrams.
    Barycenter(BarycenterArgs),
    /// Cluster a directory of diagrams for one k and emit JSON.
    Cluster(ClusterArgs),
    /// Score precomputed clusterings and select k.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Ensemble directory or manifest.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    /// Synthetic ensemble, e.g. `gaussians:n=30,patterns=3`.
    #[arg(long)]
    pub synth: Option<SynthSpec>,
    #[arg(long, value_enum, default_value_t = FamilySelection::Maxima)]
    pub family: FamilySelection,
    #[arg(long, default_value_t = 1)]
    pub kmin: usize,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    /// Time budget of each k (e.g. `10s`, `500ms`, `none`).
    #[arg(long, value_parser = parse_budget, default_value = "10s", conflicts_with = "total_budget")]
    pub tmax: TimeBudget,
    /// Whole-sweep budget, divided equally among the k values.
    #[arg(long, value_parser = parse_budget)]
    pub total_budget: Option<TimeBudget>,
    /// Weight of the critical-point locations in the distance, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Persistence threshold: `auto`, `auto:FRACTION` or an absolute value.
    #[arg(long, default_value = "auto")]
    pub pthreshold: Threshold,
    /// Effective dimension for AIC/BIC: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    pub dim: Dim,
    /// Drop the global min-max pair from every diagram.
    #[arg(long)]
    pub no_global_pair: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads: a count or `auto`.
    #[arg(long, env = "TOPOCLUST_THREADS", default_value = "auto")]
    pub threads: Threads,
    #[arg(long, short, default_value = "topoclust-out")]
    pub output: PathBuf,
}

impl RunArgs {
    pub fn into_config(self) -> Result<RunConfig> {
        let input = match (self.input, self.synth) {
            (Some(p), None) => InputSource::Path(p),
            (None, Some(s)) => InputSource::Synth(s),
            _ => bail!("exactly one of --input and --synth is required"),
        };
        if self.kmin > self.kmax {
            bail!("--kmin ({}) must not exceed --kmax ({})", self.kmin, self.kmax);
        }
        let t_max = match self.total_budget {
            None => self.tmax,
            Some(TimeBudget::Unbounded) => TimeBudget::Unbounded,
            Some(TimeBudget::Bounded(total)) => {
                let count = (self.kmax - self.kmin + 1) as u32;
                TimeBudget::bounded(total / count)?
            }
        };
        let mut config = RunConfig::new(input, self.output);
        config.family = self.family;
        config.k_min = self.kmin;
        config.k_max = self.kmax;
        config.t_max = t_max;
        config.alpha = self.alpha;
        config.threshold = self.pthreshold;
        config.dim = self.dim;
        config.include_global_pair = !self.no_global_pair;
        config.seed = self.seed;
        config.threads = self.threads;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    pub field: PathBuf,
    #[arg(long, default_value = "minima")]
    pub family: Family,
    /// Persistence threshold: `auto`, `auto:FRACTION` or an absolute value.
    #[arg(long, default_value = "0")]
    pub pthreshold: Threshold,
    #[arg(long)]
    pub no_global_pair: bool,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LiftingArgs {
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Location interpolation parameter for the minima family.
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    /// Location interpolation parameter for the maxima family.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_max: f64,
}

impl LiftingArgs {
    fn params(&self) -> Result<LiftingParams> {
        Ok(LiftingParams::new(self.alpha, self.lambda_min, self.lambda_max)?)
    }
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[command(flatten)]
    pub lifting: LiftingArgs,
}

#[derive(Debug, Args)]
pub struct BarycenterArgs {
    /// Directory or manifest of `.pdiag` files.
    pub diagrams: PathBuf,
    #[arg(long, value_parser = parse_budget, default_value = "none")]
    pub tmax: TimeBudget,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub lifting: LiftingArgs,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Directory or manifest of `.pdiag` files.
    pub diagrams: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_parser = parse_budget, default_value = "none")]
    pub tmax: TimeBudget,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub lifting: LiftingArgs,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Directory of clustering JSON files written by `cluster`.
    pub clusterings: PathBuf,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// Effective dimension: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    pub dim: Dim,
}

/// JSON document produced by `cluster` and consumed by `select`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterFile {
    pub k: usize,
    pub family: Family,
    pub diagrams: Vec<String>,
    pub mean_diagram_points: f64,
    pub assignment: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    pub distances: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed_seconds: f64,
    pub centroids: Vec<Vec<DiagramPoint>>,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let config = args.into_config()?;
            let report = run_pipeline(&config)?;
            let mut text = String::new();
            for f in &report.families {
                if let Some(s) = f.selected_k {
                    text += &format!("{}: selected k = {} (AIC), {} (BIC)\n", f.family, s.aic, s.bic);
                }
            }
            text += &format!(
                "report written to {}\n",
                config.output.join(crate::pipeline::REPORT_FILE).display()
            );
            emit(None, &text)
        }
        Command::Diagram(args) => {
            let field = read_field(&args.field)?;
            let d = prepare_diagram(&field, args.family, args.pthreshold, !args.no_global_pair);
            emit(args.output.as_deref(), &diagram_to_string(&d))
        }
        Command::Distance(args) => {
            let lifting = args.lifting.params()?;
            let (d, _) = wasserstein_distance(&load_diagram(&args.a)?, &load_diagram(&args.b)?, &lifting)?;
            emit(None, &format!("{d}\n"))
        }
        Command::Barycenter(args) => {
            let lifting = args.lifting.params()?;
            let diagrams = load_diagrams(&args.diagrams)?;
            let r = barycenter(&diagrams, &lifting, args.tmax, args.seed)?;
            eprintln!(
                "energy {} after {} iterations (converged: {})",
                r.frechet_energy, r.iterations, r.converged
            );
            emit(args.output.as_deref(), &diagram_to_string(&r.centroid))
        }
        Command::Cluster(args) => {
            let lifting = args.lifting.params()?;
            let diagrams = load_diagrams(&args.diagrams)?;
            let r = cluster(&diagrams, args.k, &lifting, args.tmax, args.seed)?;
            let file = ClusterFile {
                k: r.k,
                family: diagrams[0].family(),
                diagrams: diagrams.iter().map(|d| d.source_name().to_string()).collect(),
                mean_diagram_points: diagrams.iter().map(|d| d.len()).sum::<usize>() as f64 / diagrams.len() as f64,
                cluster_sizes: r.cluster_sizes(),
                assignment: r.assignment,
                distances: r.distances,
                inertia: r.inertia,
                iterations: r.iterations,
                converged: r.converged,
                elapsed_seconds: r.elapsed.as_secs_f64(),
                centroids: r.centroids.iter().map(|c| c.points().to_vec()).collect(),
            };
            emit(args.output.as_deref(), &(serde_json::to_string_pretty(&file)? + "\n"))
        }
        Command::Select(args) => {
            let report = select_from_dir(&args.clusterings, args.kmin, args.kmax, args.dim)?;
            emit(None, &(serde_json::to_string_pretty(&report)? + "\n"))
        }
    }
}

/// Scores every clustering JSON in `dir` whose k lies in the given range.
pub fn select_from_dir(
    dir: &Path,
    k_min: Option<usize>,
    k_max: Option<usize>,
    dim: Dim,
) -> Result<topoclust::ScoreReport> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot read {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path)?;
            let file: ClusterFile =
                serde_json::from_str(&text).with_context(|| format!("{} is not a clustering file", path.display()))?;
            if k_min.is_none_or(|lo| file.k >= lo) && k_max.is_none_or(|hi| file.k <= hi) {
                files.push(file);
            }
        }
    }
    if files.is_empty() {
        bail!("no clustering files in range under {}", dir.display());
    }
    files.sort_by_key(|f| f.k);
    let params = match dim {
        Dim::Fixed(d) => ScoreParams::new(d)?,
        Dim::Auto => ScoreParams::new((2.0 * files[0].mean_diagram_points).max(2.0))?,
    };
    let fits: Vec<FitSummary> = files
        .iter()
        .map(|f| FitSummary {
            k: f.k,
            cluster_sizes: f.cluster_sizes.clone(),
            sum_squared: f.inertia,
        })
        .collect();
    Ok(select_k_from_summaries(&fits, params)?)
}

/// Parses arguments, runs the command and maps failures to exit codes: 2
/// for usage errors, 1 for everything else.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
