//! k-means in the space of persistence diagrams.
//!
//! Centroids are seeded k-means++ style, then Assignment (nearest centroid
//! under W2) and Update (Fréchet mean of each cluster, refined from the
//! current centroid) alternate until the assignment stops changing or the
//! budget runs out.

use std::time::Duration;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

use crate::barycenter::{barycenter_from, median_persistence_index};
use crate::budget::{Deadline, TimeBudget};
use crate::metric::{wasserstein_distance, LiftingParams};
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
/// Fraction of the remaining time handed to each Update phase; the rest is
/// kept for the Assignment that follows.
const UPDATE_SHARE: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub k: usize,
    pub centroids: Vec<PersistenceDiagram>,
    /// Cluster index in `0..k` of every input diagram.
    pub assignment: Vec<usize>,
    /// `W2(D_i, centroids[assignment[i]])`.
    pub distances: Vec<f64>,
    /// `Σ distances²`.
    pub inertia: f64,
    /// Inertia after each completed Assignment phase.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed: Duration,
}

impl ClusteringResult {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &j in &self.assignment {
            sizes[j] += 1;
        }
        sizes
    }
}

struct Snapshot {
    centroids: Vec<PersistenceDiagram>,
    assignment: Vec<usize>,
    distances: Vec<f64>,
}

impl Snapshot {
    fn inertia(&self) -> f64 {
        self.distances.iter().map(|d| d * d).sum()
    }
}

fn check_inputs(diagrams: &[PersistenceDiagram], k: usize) -> Result<()> {
    let first = diagrams.first().ok_or(Error::EmptyInput)?;
    if k == 0 || k > diagrams.len() {
        return Err(Error::InvalidK { k, n: diagrams.len() });
    }
    if let Some(other) = diagrams.iter().find(|d| d.family() != first.family()) {
        return Err(Error::FamilyMismatch(first.family(), other.family()));
    }
    Ok(())
}

/// Clusters `diagrams` into `k` groups.
///
/// Seeding and the first Assignment always complete; after that the budget
/// is checked between distance evaluations, and an interrupted run returns
/// the last state whose distances were fully computed.
pub fn cluster(
    diagrams: &[PersistenceDiagram],
    k: usize,
    lifting: &LiftingParams,
    budget: TimeBudget,
    seed: u64,
) -> Result<ClusteringResult> {
    let deadline = budget.start();
    check_inputs(diagrams, k)?;

    let mut centroids = seed_centroids(diagrams, k, lifting, seed)?;
    let mut previous: Option<Vec<usize>> = None;
    let mut snapshot: Option<Snapshot> = None;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=MAX_ITERATIONS {
        let Some(table) = distance_table(diagrams, &centroids, lifting, &deadline, iteration == 1)? else {
            break;
        };
        let (mut assignment, mut distances) = nearest(&table);
        let repaired = repair_empty_clusters(diagrams, &mut centroids, &mut assignment, &mut distances);

        let state = Snapshot {
            centroids: centroids.clone(),
            assignment,
            distances,
        };
        trace.push(state.inertia());
        let stable = !repaired && previous.as_ref() == Some(&state.assignment);
        let assignment = state.assignment.clone();
        snapshot = Some(state);
        if stable {
            converged = true;
            break;
        }
        if deadline.expired() {
            break;
        }

        let update_budget = deadline.share(UPDATE_SHARE);
        centroids = (0..k)
            .into_par_iter()
            .map(|j| {
                let members: Vec<PersistenceDiagram> = assignment
                    .iter()
                    .zip(diagrams)
                    .filter(|(&c, _)| c == j)
                    .map(|(_, d)| d.clone())
                    .collect();
                barycenter_from(&members, centroids[j].clone(), lifting, update_budget).map(|r| r.centroid)
            })
            .collect::<Result<_>>()?;
        previous = Some(assignment);
    }

    let Snapshot {
        centroids,
        assignment,
        distances,
    } = snapshot.expect("first assignment always completes");
    let inertia = distances.iter().map(|d| d * d).sum();
    Ok(ClusteringResult {
        k,
        centroids,
        assignment,
        distances,
        inertia,
        iterations: trace.len(),
        inertia_trace: trace,
        converged,
        elapsed: deadline.elapsed(),
    })
}

/// Runs [`cluster`] for every k in `k_min..=k_max`, one parallel task per k,
/// each with its own budget. Results are in increasing k.
pub fn sweep(
    diagrams: &[PersistenceDiagram],
    k_min: usize,
    k_max: usize,
    lifting: &LiftingParams,
    budget_per_k: TimeBudget,
    seed: u64,
) -> Result<Vec<ClusteringResult>> {
    if k_min == 0 || k_min > k_max || k_max > diagrams.len() {
        return Err(Error::InvalidK {
            k: if k_min == 0 || k_min > k_max { k_min } else { k_max },
            n: diagrams.len(),
        });
    }
    (k_min..=k_max)
        .into_par_iter()
        .map(|k| cluster(diagrams, k, lifting, budget_per_k, seed))
        .collect()
}

/// k-means++ seeding: the median-persistence diagram first, then diagrams
/// drawn with probability proportional to their squared distance to the
/// nearest seed so far.
fn seed_centroids(
    diagrams: &[PersistenceDiagram],
    k: usize,
    lifting: &LiftingParams,
    seed: u64,
) -> Result<Vec<PersistenceDiagram>> {
    let first = median_persistence_index(diagrams, seed);
    let mut chosen = vec![first];
    let mut nearest_sq = squared_distances_to(diagrams, &diagrams[first], lifting)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    while chosen.len() < k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            (0..diagrams.len()).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(pick);
        let fresh = squared_distances_to(diagrams, &diagrams[pick], lifting)?;
        for (w, f) in nearest_sq.iter_mut().zip(fresh) {
            *w = w.min(f);
        }
        nearest_sq[pick] = 0.0;
    }
    Ok(chosen.into_iter().map(|i| diagrams[i].clone()).collect())
}

fn squared_distances_to(
    diagrams: &[PersistenceDiagram],
    center: &PersistenceDiagram,
    lifting: &LiftingParams,
) -> Result<Vec<f64>> {
    diagrams
        .par_iter()
        .map(|d| wasserstein_distance(d, center, lifting).map(|(w, _)| w * w))
        .collect()
}

/// `table[i][j] = W2(D_i, C_j)`, or `None` if the deadline interrupted it.
fn distance_table(
    diagrams: &[PersistenceDiagram],
    centroids: &[PersistenceDiagram],
    lifting: &LiftingParams,
    deadline: &Deadline,
    force: bool,
) -> Result<Option<Vec<Vec<f64>>>> {
    let k = centroids.len();
    let cells: Vec<Option<f64>> = (0..diagrams.len() * k)
        .into_par_iter()
        .map(|cell| {
            if !force && deadline.expired() {
                return Ok(None);
            }
            wasserstein_distance(&diagrams[cell / k], &centroids[cell % k], lifting).map(|(w, _)| Some(w))
        })
        .collect::<Result<_>>()?;
    let Some(flat) = cells.into_iter().collect::<Option<Vec<f64>>>() else {
        return Ok(None);
    };
    Ok(Some(flat.chunks(k.max(1)).map(<[f64]>::to_vec).collect()))
}

/// Nearest centroid per diagram, ties toward the smaller index.
fn nearest(table: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    table
        .iter()
        .map(|row| {
            row.iter().copied().enumerate().fold(
                (0, f64::INFINITY),
                |best, (j, d)| if d < best.1 { (j, d) } else { best },
            )
        })
        .unzip()
}

/// Gives every empty cluster the worst-fitting diagram among clusters that
/// can spare one. Returns whether anything moved.
fn repair_empty_clusters(
    diagrams: &[PersistenceDiagram],
    centroids: &mut [PersistenceDiagram],
    assignment: &mut [usize],
    distances: &mut [f64],
) -> bool {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &j in assignment.iter() {
        sizes[j] += 1;
    }
    let mut repaired = false;
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let worst = (0..diagrams.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if distances[b] >= distances[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a cluster with two members");
        sizes[assignment[worst]] -= 1;
        sizes[empty] = 1;
        assignment[worst] = empty;
        distances[worst] = 0.0;
        centroids[empty] = diagrams[worst].clone();
        repaired = true;
    }
    repaired
}
