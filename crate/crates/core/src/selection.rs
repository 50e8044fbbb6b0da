//! Choosing the number of clusters with information criteria.
//!
//! Under the identical spherical Gaussian model with `d` effective
//! dimensions, a clustering of `n` diagrams into `k` clusters has
//!
//! ```text
//! σ̂² = Σ_i W2(D_i, C_j(i))² / (d (n − k))
//! L  = Σ_j n_j ln n_j − n ln n − (n d / 2) ln(2π σ̂²) − (d / 2)(n − k)
//! ```
//!
//! and is scored as `AIC = −2L + 2kd`, `BIC = −2L + kd ln n`. Lower is
//! better.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringResult;
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    dim: f64,
}

impl ScoreParams {
    pub fn new(dim: f64) -> Result<Self> {
        if !(dim.is_finite() && dim > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "effective dimension {dim} must be positive"
            )));
        }
        Ok(Self { dim })
    }

    /// Twice the mean number of points per diagram, at least 2.
    pub fn from_diagrams(diagrams: &[PersistenceDiagram]) -> Result<Self> {
        if diagrams.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mean = diagrams.iter().map(PersistenceDiagram::len).sum::<usize>() as f64 / diagrams.len() as f64;
        Self::new((2.0 * mean).max(2.0))
    }

    pub fn dim(&self) -> f64 {
        self.dim
    }
}

/// The statistics the criteria need from a clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub k: usize,
    pub cluster_sizes: Vec<usize>,
    /// `Σ_i W2(D_i, C_j(i))²`.
    pub sum_squared: f64,
}

impl FitSummary {
    pub fn n(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }
}

impl From<&ClusteringResult> for FitSummary {
    fn from(r: &ClusteringResult) -> Self {
        Self {
            k: r.k,
            cluster_sizes: r.cluster_sizes(),
            sum_squared: r.distances.iter().map(|d| d * d).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub aic: f64,
    pub bic: f64,
}

/// Returns `(L, σ̂²)`.
pub fn log_likelihood(result: &ClusteringResult, params: ScoreParams) -> Result<(f64, f64)> {
    summary_log_likelihood(&FitSummary::from(result), params)
}

pub fn summary_log_likelihood(fit: &FitSummary, params: ScoreParams) -> Result<(f64, f64)> {
    let n = fit.n();
    let k = fit.k;
    if k >= n {
        return Err(Error::KEqualsN(n));
    }
    let d = params.dim;
    let (nf, kf) = (n as f64, k as f64);
    let sigma2 = fit.sum_squared / (d * (nf - kf));
    if sigma2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let sizes: f64 = fit
        .cluster_sizes
        .iter()
        .filter(|&&nj| nj > 0)
        .map(|&nj| nj as f64 * (nj as f64).ln())
        .sum();
    let l = sizes - nf * nf.ln() - nf * d / 2.0 * (2.0 * PI * sigma2).ln() - d / 2.0 * (nf - kf);
    Ok((l, sigma2))
}

pub fn score(result: &ClusteringResult, params: ScoreParams) -> Result<Scores> {
    summary_score(&FitSummary::from(result), params)
}

pub fn summary_score(fit: &FitSummary, params: ScoreParams) -> Result<Scores> {
    let (l, _) = summary_log_likelihood(fit, params)?;
    Ok(scores_from_likelihood(l, fit.k, fit.n(), params))
}

fn scores_from_likelihood(l: f64, k: usize, n: usize, params: ScoreParams) -> Scores {
    let kd = k as f64 * params.dim;
    Scores {
        aic: -2.0 * l + 2.0 * kd,
        bic: -2.0 * l + kd * (n as f64).ln(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub log_likelihood: f64,
    pub sigma2: f64,
    pub aic: f64,
    pub bic: f64,
    /// `aic / aic(k = 1)`, present when k = 1 was scored.
    pub aic_normalized: Option<f64>,
    pub bic_normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub dim: f64,
    pub n: usize,
    pub per_k: Vec<KScore>,
    pub selected_k_aic: usize,
    pub selected_k_bic: usize,
}

impl ScoreReport {
    pub fn get(&self, k: usize) -> Option<&KScore> {
        self.per_k.iter().find(|s| s.k == k)
    }
}

/// Scores a sweep over consecutive k and picks the minimizer of each
/// criterion, preferring the smaller k on ties.
pub fn select_k(results: &[ClusteringResult], params: ScoreParams) -> Result<ScoreReport> {
    let fits: Vec<FitSummary> = results.iter().map(FitSummary::from).collect();
    select_k_from_summaries(&fits, params)
}

pub fn select_k_from_summaries(fits: &[FitSummary], params: ScoreParams) -> Result<ScoreReport> {
    let first = fits.first().ok_or(Error::EmptyInput)?;
    let n = first.n();
    for (offset, fit) in fits.iter().enumerate() {
        if fit.n() != n {
            return Err(Error::InconsistentInputs(format!(
                "clustering for k = {} covers {} diagrams, expected {n}",
                fit.k,
                fit.n()
            )));
        }
        if fit.k != first.k + offset {
            return Err(Error::InconsistentInputs(format!(
                "k values must be consecutive and increasing; found {} after {}",
                fit.k,
                first.k + offset - 1
            )));
        }
    }

    let mut per_k = Vec::with_capacity(fits.len());
    for fit in fits {
        let (log_likelihood, sigma2) = summary_log_likelihood(fit, params)?;
        let Scores { aic, bic } = scores_from_likelihood(log_likelihood, fit.k, n, params);
        per_k.push(KScore {
            k: fit.k,
            log_likelihood,
            sigma2,
            aic,
            bic,
            aic_normalized: None,
            bic_normalized: None,
        });
    }
    if let Some((aic1, bic1)) = per_k.iter().find(|s| s.k == 1).map(|s| (s.aic, s.bic)) {
        for s in &mut per_k {
            s.aic_normalized = Some(s.aic / aic1);
            s.bic_normalized = Some(s.bic / bic1);
        }
    }

    let selected_k_aic = argmin_k(&per_k, |s| s.aic);
    let selected_k_bic = argmin_k(&per_k, |s| s.bic);
    Ok(ScoreReport {
        dim: params.dim,
        n,
        per_k,
        selected_k_aic,
        selected_k_bic,
    })
}

fn argmin_k(per_k: &[KScore], value: impl Fn(&KScore) -> f64) -> usize {
    per_k
        .iter()
        .fold(None::<&KScore>, |best, s| match best {
            Some(b) if value(b) <= value(s) => Some(b),
            _ => Some(s),
        })
        .map(|s| s.k)
        .expect("non-empty")
}
