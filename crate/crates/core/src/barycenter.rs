//! Fréchet means of persistence diagrams under the 2-Wasserstein metric.
//!
//! Each iteration matches the current centroid to every input diagram, then
//! moves every centroid point to the mean of its partners, counting a
//! diagonal partner as the point's own diagonal projection. Input points left
//! unmatched spawn a new centroid point at the mean of themselves and `n − 1`
//! copies of their projection. Both moves lower the energy of the current
//! matching, and re-matching can only lower it further, so the energy trace
//! is non-increasing.

use std::time::Duration;

use rand::rngs::ChaCha8Rng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

use crate::budget::{Deadline, TimeBudget};
use crate::metric::{wasserstein_distance, DiagramAssignment, LiftingParams};
use crate::persistence::{DiagramPoint, Family, PairClass, PersistenceDiagram};
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
/// Relative energy decrease below which a stable matching counts as converged.
pub const ENERGY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BarycenterResult {
    pub centroid: PersistenceDiagram,
    /// `Σ_i W2(centroid, D_i)²`.
    pub frechet_energy: f64,
    /// Energy of the centroid at each completed assignment round.
    pub energy_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub elapsed: Duration,
}

/// Barycenter starting from the input of median total persistence.
///
/// The first assignment round always completes; later rounds stop as soon as
/// the budget runs out, and the centroid of the last complete round is
/// returned with `converged = false`.
pub fn barycenter(
    diagrams: &[PersistenceDiagram],
    lifting: &LiftingParams,
    budget: TimeBudget,
    seed: u64,
) -> Result<BarycenterResult> {
    let deadline = budget.start();
    check_inputs(diagrams)?;
    let start = median_persistence_index(diagrams, seed);
    refine(diagrams, diagrams[start].clone(), lifting, deadline)
}

/// Barycenter iterations from a given initial centroid.
pub fn barycenter_from(
    diagrams: &[PersistenceDiagram],
    initial: PersistenceDiagram,
    lifting: &LiftingParams,
    budget: TimeBudget,
) -> Result<BarycenterResult> {
    let deadline = budget.start();
    check_inputs(diagrams)?;
    if initial.family() != diagrams[0].family() {
        return Err(Error::FamilyMismatch(initial.family(), diagrams[0].family()));
    }
    refine(diagrams, initial, lifting, deadline)
}

/// `Σ_i W2(centroid, D_i)²`, summed in input order.
pub fn frechet_energy(
    centroid: &PersistenceDiagram,
    diagrams: &[PersistenceDiagram],
    lifting: &LiftingParams,
) -> Result<f64> {
    let costs = diagrams
        .par_iter()
        .map(|d| wasserstein_distance(centroid, d, lifting).map(|(w, _)| w * w))
        .collect::<Result<Vec<f64>>>()?;
    Ok(costs.iter().sum())
}

fn check_inputs(diagrams: &[PersistenceDiagram]) -> Result<()> {
    let first = diagrams.first().ok_or(Error::EmptyInput)?;
    if let Some(other) = diagrams.iter().find(|d| d.family() != first.family()) {
        return Err(Error::FamilyMismatch(first.family(), other.family()));
    }
    Ok(())
}

/// Index of the diagram with median total persistence. Candidates are ordered
/// by content, so the choice does not depend on input order; the seed picks
/// among diagrams of exactly equal total persistence.
pub(crate) fn median_persistence_index(diagrams: &[PersistenceDiagram], seed: u64) -> usize {
    let totals: Vec<f64> = diagrams.iter().map(PersistenceDiagram::total_persistence).collect();
    let mut order: Vec<usize> = (0..diagrams.len()).collect();
    order.sort_by(|&a, &b| {
        totals[a]
            .total_cmp(&totals[b])
            .then_with(|| diagrams[a].content_cmp(&diagrams[b]))
    });
    let median = order[(order.len() - 1) / 2];
    let tied: Vec<usize> = order.into_iter().filter(|&i| totals[i] == totals[median]).collect();
    if tied.len() == 1 {
        return median;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    tied[rng.random_range(0..tied.len())]
}

fn refine(
    diagrams: &[PersistenceDiagram],
    initial: PersistenceDiagram,
    lifting: &LiftingParams,
    deadline: Deadline,
) -> Result<BarycenterResult> {
    let mut centroid = initial.canonicalized();
    let mut trace = Vec::new();
    let mut previous: Option<(Vec<Vec<Option<usize>>>, f64)> = None;
    let mut best: Option<(PersistenceDiagram, f64)> = None;
    let mut converged = false;

    for iteration in 1..=MAX_ITERATIONS {
        let Some(assignments) = assign_all(&centroid, diagrams, lifting, &deadline, iteration == 1)? else {
            break;
        };
        let energy: f64 = assignments.iter().map(|a| a.cost * a.cost).sum();
        trace.push(energy);
        let partners: Vec<Vec<Option<usize>>> = assignments.iter().map(|a| a.partners_of_a(centroid.len())).collect();

        if best.as_ref().is_none_or(|(_, e)| energy <= *e) {
            best = Some((centroid.clone(), energy));
        }
        let stable = previous.as_ref().is_some_and(|(prev_partners, prev_energy)| {
            *prev_partners == partners && prev_energy - energy <= ENERGY_TOLERANCE * prev_energy
        });
        if energy == 0.0 || stable {
            converged = true;
            break;
        }
        if deadline.expired() {
            break;
        }
        let next = update(&centroid, diagrams, &assignments, &partners);
        previous = Some((partners, energy));
        centroid = next;
    }

    let (centroid, frechet_energy) = best.expect("first assignment round always completes");
    Ok(BarycenterResult {
        centroid,
        frechet_energy,
        iterations: trace.len(),
        energy_trace: trace,
        converged,
        elapsed: deadline.elapsed(),
    })
}

/// Matches the centroid to every diagram. Returns `None` if the deadline
/// passes before all matchings are computed, unless `force` is set.
fn assign_all(
    centroid: &PersistenceDiagram,
    diagrams: &[PersistenceDiagram],
    lifting: &LiftingParams,
    deadline: &Deadline,
    force: bool,
) -> Result<Option<Vec<DiagramAssignment>>> {
    let rounds: Vec<Option<DiagramAssignment>> = diagrams
        .par_iter()
        .map(|d| {
            if !force && deadline.expired() {
                return Ok(None);
            }
            wasserstein_distance(centroid, d, lifting).map(|(_, a)| Some(a))
        })
        .collect::<Result<_>>()?;
    Ok(rounds.into_iter().collect())
}

/// Mean of `values` accumulated in sorted order, independent of input order.
fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn update(
    centroid: &PersistenceDiagram,
    diagrams: &[PersistenceDiagram],
    assignments: &[DiagramAssignment],
    partners: &[Vec<Option<usize>>],
) -> PersistenceDiagram {
    let n = diagrams.len();
    let mut points = Vec::with_capacity(centroid.len());
    let mut buf = Vec::with_capacity(n);

    for (p, c) in centroid.points().iter().enumerate() {
        let matched: Vec<&DiagramPoint> = partners
            .iter()
            .zip(diagrams)
            .filter_map(|(row, d)| row[p].map(|j| &d.points()[j]))
            .collect();
        if matched.is_empty() {
            // the mean is c's own projection, which lies on the diagonal
            continue;
        }
        let on_diagonal = n - matched.len();
        let mid = (c.birth + c.death) / 2.0;
        let mut coord = |get: &dyn Fn(&DiagramPoint) -> f64, fill: f64| {
            buf.clear();
            buf.extend(matched.iter().map(|q| get(q)));
            buf.extend(std::iter::repeat_n(fill, on_diagonal));
            sorted_mean(&mut buf)
        };
        let birth = coord(&|q| q.birth, mid);
        let death = coord(&|q| q.death, mid);
        let birth_location: [f64; 3] = std::array::from_fn(|k| coord(&|q| q.birth_location[k], c.birth_location[k]));
        let death_location: [f64; 3] = std::array::from_fn(|k| coord(&|q| q.death_location[k], c.death_location[k]));
        if death > birth {
            points.push(DiagramPoint {
                birth,
                death,
                birth_location,
                death_location,
                pair_class: c.pair_class,
            });
        }
    }

    let spawned_class = match centroid.family() {
        Family::Minima => PairClass::MinSaddle,
        Family::Maxima => PairClass::SaddleMax,
    };
    let keep = (n - 1) as f64;
    for (assignment, d) in assignments.iter().zip(diagrams) {
        for j in assignment.unmatched_b() {
            let x = &d.points()[j];
            let mid = (x.birth + x.death) / 2.0;
            let birth = (x.birth + keep * mid) / n as f64;
            let death = (x.death + keep * mid) / n as f64;
            if death > birth {
                points.push(DiagramPoint {
                    birth,
                    death,
                    birth_location: x.birth_location,
                    death_location: x.death_location,
                    pair_class: spawned_class,
                });
            }
        }
    }

    PersistenceDiagram::new(centroid.family(), "barycenter", points)
        .expect("means of valid points stay valid")
        .canonicalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(
            Family::Minima,
            "t",
            points
                .iter()
                .map(|&(b, d)| DiagramPoint::new(b, d, PairClass::MinSaddle))
                .collect(),
        )
        .unwrap()
    }

    fn plain() -> LiftingParams {
        LiftingParams::default()
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let d = diagram(&[(0.0, 3.0), (1.0, 2.0)]);
        let r = barycenter(&[d.clone(), d.clone(), d.clone()], &plain(), TimeBudget::Unbounded, 0).unwrap();
        assert_eq!(r.centroid.points(), d.clone().canonicalized().points());
        assert_eq!(r.frechet_energy, 0.0);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn two_single_point_diagrams() {
        let r = barycenter(
            &[diagram(&[(0.0, 2.0)]), diagram(&[(0.0, 4.0)])],
            &plain(),
            TimeBudget::Unbounded,
            3,
        )
        .unwrap();
        assert_eq!(r.centroid.len(), 1);
        let p = r.centroid.points()[0];
        assert!((p.birth - 0.0).abs() < 1e-12 && (p.death - 3.0).abs() < 1e-12);
        assert!((r.frechet_energy - 2.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(
            barycenter(&[], &plain(), TimeBudget::Unbounded, 0),
            Err(Error::EmptyInput)
        ));
        let a = PersistenceDiagram::empty(Family::Minima, "a");
        let b = PersistenceDiagram::empty(Family::Maxima, "b");
        assert!(matches!(
            barycenter(&[a, b], &plain(), TimeBudget::Unbounded, 0),
            Err(Error::FamilyMismatch(..))
        ));
    }

    #[test]
    fn unmatched_points_spawn_centroid_points() {
        // {(0,4)} vs {}: the centroid moves to the energy-optimal (1,3).
        let r = barycenter(
            &[diagram(&[(0.0, 4.0)]), diagram(&[])],
            &plain(),
            TimeBudget::Unbounded,
            0,
        )
        .unwrap();
        let e: f64 = r.frechet_energy;
        // one point at (1,3) costs 2 + 2 = 4, less than 8 for either extreme
        assert!((e - 4.0).abs() < 1e-9, "energy {e}");
    }

    #[test]
    fn median_index_prefers_middle() {
        let ds = vec![diagram(&[(0.0, 9.0)]), diagram(&[(0.0, 1.0)]), diagram(&[(0.0, 5.0)])];
        assert_eq!(median_persistence_index(&ds, 0), 2);
    }

    #[test]
    fn sorted_mean_is_order_free() {
        let mut a = [0.1, 0.2, 0.3, 1e16, -1e16];
        let mut b = [1e16, 0.3, -1e16, 0.2, 0.1];
        assert_eq!(sorted_mean(&mut a), sorted_mean(&mut b));
    }
}
