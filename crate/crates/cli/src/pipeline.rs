//! The `run` pipeline: load or synthesize, compute diagrams, sweep k, score,
//! and write the report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use topoclust::io::{load_ensemble, save_diagram};
use topoclust::selection::{KScore, ScoreParams};
use topoclust::synth::generate_gaussians_ensemble;
use topoclust::{
    compute_diagram, prune_by_persistence, select_k, sweep, ClusteringResult, Ensemble, Family, LiftingParams,
    PersistenceDiagram, ScalarField,
};

use crate::config::{budget_seconds, Dim, FamilySelection, InputSource, RunConfig, Threads, Threshold};

pub const REPORT_FILE: &str = "report.json";
pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub input: String,
    pub n_members: usize,
    pub members: Vec<String>,
    pub config: ConfigReport,
    pub families: Vec<FamilyReport>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigReport {
    pub family: FamilySelection,
    pub k_min: usize,
    pub k_max: usize,
    pub t_max_seconds: Option<f64>,
    pub alpha: f64,
    pub persistence_threshold: String,
    pub dim: String,
    pub include_global_pair: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub family: Family,
    /// Effective dimension used by the criteria.
    pub dim: f64,
    pub mean_diagram_points: f64,
    pub diagrams_dir: String,
    pub selected_k: Option<SelectedK>,
    /// Why no k was selected, when scoring failed.
    pub selection_error: Option<String>,
    pub score_files: Option<ScoreFiles>,
    pub per_k: Vec<KReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectedK {
    pub aic: usize,
    pub bic: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreFiles {
    pub aic: String,
    pub bic: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct KReport {
    pub k: usize,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed_seconds: f64,
    pub log_likelihood: Option<f64>,
    pub sigma2: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub aic_normalized: Option<f64>,
    pub bic_normalized: Option<f64>,
    pub cluster_sizes: Vec<usize>,
    pub assignment: Vec<usize>,
    pub centroids: Vec<String>,
}

/// Extremum diagram of one member, pruned and optionally without its global
/// pair.
pub fn prepare_diagram(
    field: &ScalarField,
    family: Family,
    threshold: Threshold,
    include_global_pair: bool,
) -> PersistenceDiagram {
    let raw = compute_diagram(field, family);
    let cut = match threshold {
        Threshold::Auto(fraction) => {
            let (lo, hi) = field.range();
            fraction * (hi - lo)
        }
        Threshold::Absolute(v) => v,
    };
    let pruned = prune_by_persistence(&raw, cut);
    if include_global_pair {
        pruned
    } else {
        pruned.without_global_pair()
    }
}

pub fn build_pool(threads: Threads) -> Result<rayon::ThreadPool> {
    let n = match threads {
        Threads::Auto => 0,
        Threads::Count(n) => n,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .context("cannot start worker threads")
}

pub fn load_input(input: &InputSource, seed: u64) -> Result<Ensemble> {
    match input {
        InputSource::Path(p) => load_ensemble(p).with_context(|| format!("cannot load ensemble from {}", p.display())),
        InputSource::Synth(s) => generate_gaussians_ensemble(s.n_members, s.n_patterns, s.dims, s.noise, seed)
            .context("cannot generate synthetic ensemble"),
    }
}

/// Runs the whole pipeline inside a dedicated thread pool and writes every
/// output file. The report is written even when scoring fails, in which case
/// the error is returned afterwards.
pub fn run_pipeline(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    build_pool(config.threads)?.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let ensemble = load_input(&config.input, config.seed)?;
    let n = ensemble.len();
    if config.k_max > n {
        bail!("--kmax ({}) exceeds the number of ensemble members ({n})", config.k_max);
    }
    let lifting = LiftingParams::with_alpha(config.alpha)?;
    let out = &config.output;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let mut families = Vec::new();
    let mut failures = Vec::new();
    for family in config.family.families() {
        let report = run_family(config, &ensemble, family, &lifting)?;
        if let Some(e) = &report.selection_error {
            failures.push(format!("{family}: {e}"));
        }
        families.push(report);
    }

    let report = Report {
        format_version: REPORT_FORMAT_VERSION,
        input: config.input.to_string(),
        n_members: n,
        members: ensemble.members().iter().map(|m| m.name().to_string()).collect(),
        config: ConfigReport {
            family: config.family,
            k_min: config.k_min,
            k_max: config.k_max,
            t_max_seconds: budget_seconds(config.t_max),
            alpha: config.alpha,
            persistence_threshold: config.threshold.to_string(),
            dim: config.dim.to_string(),
            include_global_pair: config.include_global_pair,
            seed: config.seed,
        },
        families,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(&path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    if !failures.is_empty() {
        bail!(
            "model selection failed ({}); partial report written to {}",
            failures.join("; "),
            path.display()
        );
    }
    Ok(report)
}

fn run_family(
    config: &RunConfig,
    ensemble: &Ensemble,
    family: Family,
    lifting: &LiftingParams,
) -> Result<FamilyReport> {
    let out = &config.output;
    let diagrams: Vec<PersistenceDiagram> = ensemble
        .members()
        .par_iter()
        .map(|m| prepare_diagram(m, family, config.threshold, config.include_global_pair))
        .collect();
    let diagrams_dir = format!("diagrams/{family}");
    write_diagrams(&out.join(&diagrams_dir), &diagrams)?;

    let params = match config.dim {
        Dim::Auto => ScoreParams::from_diagrams(&diagrams)?,
        Dim::Fixed(d) => ScoreParams::new(d)?,
    };
    let mean_points = diagrams.iter().map(PersistenceDiagram::len).sum::<usize>() as f64 / diagrams.len() as f64;

    let results = sweep(
        &diagrams,
        config.k_min,
        config.k_max,
        lifting,
        config.t_max,
        config.seed,
    )?;
    let selection = select_k(&results, params);

    let mut per_k = Vec::with_capacity(results.len());
    for r in &results {
        let centroids = write_centroids(out, family, r)?;
        let score = selection.as_ref().ok().and_then(|s| s.get(r.k));
        per_k.push(k_report(r, score, centroids));
    }

    let (selected_k, selection_error, score_files) = match &selection {
        Ok(s) => {
            let files = ScoreFiles {
                aic: format!("scores_{family}_aic.dat"),
                bic: format!("scores_{family}_bic.dat"),
            };
            write_scores(&out.join(&files.aic), &s.per_k, |k| k.aic_normalized.unwrap_or(k.aic))?;
            write_scores(&out.join(&files.bic), &s.per_k, |k| k.bic_normalized.unwrap_or(k.bic))?;
            let selected = SelectedK {
                aic: s.selected_k_aic,
                bic: s.selected_k_bic,
            };
            (Some(selected), None, Some(files))
        }
        Err(e) => (None, Some(e.to_string()), None),
    };

    Ok(FamilyReport {
        family,
        dim: params.dim(),
        mean_diagram_points: mean_points,
        diagrams_dir,
        selected_k,
        selection_error,
        score_files,
        per_k,
    })
}

fn k_report(r: &ClusteringResult, score: Option<&KScore>, centroids: Vec<String>) -> KReport {
    KReport {
        k: r.k,
        inertia: r.inertia,
        iterations: r.iterations,
        converged: r.converged,
        elapsed_seconds: r.elapsed.as_secs_f64(),
        log_likelihood: score.map(|s| s.log_likelihood),
        sigma2: score.map(|s| s.sigma2),
        aic: score.map(|s| s.aic),
        bic: score.map(|s| s.bic),
        aic_normalized: score.and_then(|s| s.aic_normalized),
        bic_normalized: score.and_then(|s| s.bic_normalized),
        cluster_sizes: r.cluster_sizes(),
        assignment: r.assignment.clone(),
        centroids,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_diagrams(dir: &Path, diagrams: &[PersistenceDiagram]) -> Result<()> {
    create_dir(dir)?;
    for d in diagrams {
        save_diagram(d, &dir.join(format!("{}.pdiag", d.source_name())))?;
    }
    Ok(())
}

/// Writes the centroids of one clustering and returns their paths relative
/// to the output directory.
fn write_centroids(out: &Path, family: Family, result: &ClusteringResult) -> Result<Vec<String>> {
    let rel_dir = format!("centroids/{family}/k{}", result.k);
    create_dir(&out.join(&rel_dir))?;
    result
        .centroids
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let rel = format!("{rel_dir}/c{j}.pdiag");
            save_diagram(c, &out.join(&rel))?;
            Ok(rel)
        })
        .collect()
}

/// Two-column `k value` plot data.
fn write_scores(path: &Path, per_k: &[KScore], value: impl Fn(&KScore) -> f64) -> Result<()> {
    let mut text = String::from("# k value\n");
    for s in per_k {
        let _ = writeln!(text, "{} {}", s.k, value(s));
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
