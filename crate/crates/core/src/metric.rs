//! Distances between persistence diagrams.
//!
//! Points are compared with the Euclidean distance in the birth/death plane,
//! optionally blended with the distance between the extrema's positions in
//! the domain ("geometric lifting"). The 2-Wasserstein distance is the
//! minimum over matchings in which any point may instead be sent to its
//! orthogonal projection onto the diagonal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{self, CostMatrix};
use crate::persistence::{DiagramPoint, Family, PersistenceDiagram};
use crate::{Error, Result};

/// Weights of the geometric lifting.
///
/// `alpha` blends the birth/death distance (`alpha = 0`) with the distance
/// between `λ·death_location + (1−λ)·birth_location` (`alpha = 1`), where λ
/// is `lambda_min` for minima diagrams and `lambda_max` for maxima diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftingParams {
    alpha: f64,
    lambda_min: f64,
    lambda_max: f64,
}

impl Default for LiftingParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda_min: 0.0,
            lambda_max: 1.0,
        }
    }
}

impl LiftingParams {
    pub fn new(alpha: f64, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("lambda_min", lambda_min), ("lambda_max", lambda_max)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(Self {
            alpha,
            lambda_min,
            lambda_max,
        })
    }

    /// Default λ values (extremum location only) with the given `alpha`.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self, family: Family) -> f64 {
        match family {
            Family::Minima => self.lambda_min,
            Family::Maxima => self.lambda_max,
        }
    }

    fn lifted_location(&self, p: &DiagramPoint, family: Family) -> [f64; 3] {
        let l = self.lambda(family);
        std::array::from_fn(|k| l * p.death_location[k] + (1.0 - l) * p.birth_location[k])
    }

    /// Squared lifted distance between two points.
    fn cost(&self, a: &DiagramPoint, b: &DiagramPoint, family: Family) -> f64 {
        if a.is_diagonal() && b.is_diagonal() {
            return 0.0;
        }
        let db = a.birth - b.birth;
        let dd = a.death - b.death;
        let mut total = (1.0 - self.alpha) * (db * db + dd * dd);
        if self.alpha > 0.0 {
            let pa = self.lifted_location(a, family);
            let pb = self.lifted_location(b, family);
            let geo: f64 = pa.iter().zip(&pb).map(|(x, y)| (x - y) * (x - y)).sum();
            total += self.alpha * geo;
        }
        total
    }

    /// Squared cost of sending a point to its own diagonal projection. The
    /// projection keeps the point's locations, so only the birth/death part
    /// contributes.
    fn diagonal_cost(&self, a: &DiagramPoint) -> f64 {
        let p = a.persistence();
        (1.0 - self.alpha) * p * p / 2.0
    }
}

/// Lifted pointwise distance. Two points that both lie on the diagonal are at
/// distance zero.
pub fn pointwise_distance(a: &DiagramPoint, b: &DiagramPoint, lifting: &LiftingParams, family: Family) -> f64 {
    lifting.cost(a, b, family).sqrt()
}

/// Orthogonal projection onto the diagonal, keeping the critical-point
/// locations.
pub fn diagonal_projection(a: &DiagramPoint) -> DiagramPoint {
    let mid = (a.birth + a.death) / 2.0;
    DiagramPoint {
        birth: mid,
        death: mid,
        ..*a
    }
}

/// One matched pair: indices into the two diagrams' point lists, `None`
/// standing for the diagonal.
pub type MatchedPair = (Option<usize>, Option<usize>);

/// An optimal matching between two diagrams.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramAssignment {
    /// Every off-diagonal point of either diagram appears exactly once.
    /// Diagonal-to-diagonal pairs are omitted.
    pub pairs: Vec<MatchedPair>,
    /// The matching's 2-Wasserstein cost.
    pub cost: f64,
}

impl DiagramAssignment {
    /// Recomputes the cost of `pairs` from scratch.
    pub fn recompute_cost(
        pairs: &[MatchedPair],
        a: &PersistenceDiagram,
        b: &PersistenceDiagram,
        lifting: &LiftingParams,
    ) -> f64 {
        let family = a.family();
        pairs
            .iter()
            .map(|&pair| match pair {
                (Some(i), Some(j)) => lifting.cost(&a.points()[i], &b.points()[j], family),
                (Some(i), None) => lifting.diagonal_cost(&a.points()[i]),
                (None, Some(j)) => lifting.diagonal_cost(&b.points()[j]),
                (None, None) => 0.0,
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Partner in `b` of each point of `a`.
    pub fn partners_of_a(&self, a_len: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; a_len];
        for &(i, j) in &self.pairs {
            if let Some(i) = i {
                out[i] = j;
            }
        }
        out
    }

    /// Points of `b` matched to the diagonal.
    pub fn unmatched_b(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs
            .iter()
            .filter_map(|&(i, j)| if i.is_none() { j } else { None })
    }
}

/// Assignment solver behind [`wasserstein_distance_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Solver {
    #[default]
    Exact,
    /// Auction with a certified relative optimality gap.
    Auction { rel_tol: f64 },
}

/// 2-Wasserstein distance with the exact solver.
pub fn wasserstein_distance(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    lifting: &LiftingParams,
) -> Result<(f64, DiagramAssignment)> {
    wasserstein_distance_with(a, b, lifting, Solver::Exact)
}

pub fn wasserstein_distance_with(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
    lifting: &LiftingParams,
    solver: Solver,
) -> Result<(f64, DiagramAssignment)> {
    if a.family() != b.family() {
        return Err(Error::FamilyMismatch(a.family(), b.family()));
    }
    let family = a.family();
    let pa: Vec<usize> = (0..a.len()).filter(|&i| !a.points()[i].is_diagonal()).collect();
    let pb: Vec<usize> = (0..b.len()).filter(|&j| !b.points()[j].is_diagonal()).collect();
    let (na, nb) = (pa.len(), pb.len());

    // Rows: points of `a`, then one diagonal slot per point of `b`.
    // Columns: points of `b`, then one diagonal slot per point of `a`.
    let matrix = CostMatrix::from_fn(na + nb, |r, c| match (r < na, c < nb) {
        (true, true) => lifting.cost(&a.points()[pa[r]], &b.points()[pb[c]], family),
        (true, false) => lifting.diagonal_cost(&a.points()[pa[r]]),
        (false, true) => lifting.diagonal_cost(&b.points()[pb[c]]),
        (false, false) => 0.0,
    });
    let matching = match solver {
        Solver::Exact => assignment::hungarian(&matrix),
        Solver::Auction { rel_tol } => assignment::auction(&matrix, rel_tol),
    };

    let mut pairs = Vec::with_capacity(na + nb);
    for (r, &c) in matching.row_to_col.iter().enumerate() {
        match (r < na, c < nb) {
            (true, true) => pairs.push((Some(pa[r]), Some(pb[c]))),
            (true, false) => pairs.push((Some(pa[r]), None)),
            (false, true) => pairs.push((None, Some(pb[c]))),
            (false, false) => {}
        }
    }
    let cost = DiagramAssignment::recompute_cost(&pairs, a, b, lifting);
    Ok((cost, DiagramAssignment { pairs, cost }))
}

/// Symmetric matrix of pairwise distances, computed in parallel. Entry
/// `[i][j]` does not depend on scheduling.
pub fn distance_matrix(diagrams: &[PersistenceDiagram], lifting: &LiftingParams) -> Result<Vec<Vec<f64>>> {
    let n = diagrams.len();
    let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = upper
        .par_iter()
        .map(|&(i, j)| wasserstein_distance(&diagrams[i], &diagrams[j], lifting).map(|(d, _)| d))
        .collect::<Result<Vec<f64>>>()?;
    let mut m = vec![vec![0.0; n]; n];
    for (&(i, j), d) in upper.iter().zip(values) {
        m[i][j] = d;
        m[j][i] = d;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::PairClass;

    fn pt(b: f64, d: f64) -> DiagramPoint {
        DiagramPoint::new(b, d, PairClass::MinSaddle)
    }

    fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(Family::Minima, "t", points.iter().map(|&(b, d)| pt(b, d)).collect()).unwrap()
    }

    const PLAIN: LiftingParams = LiftingParams {
        alpha: 0.0,
        lambda_min: 0.0,
        lambda_max: 1.0,
    };

    #[test]
    fn pointwise_examples() {
        let a = pt(0.0, 4.0);
        assert_eq!(pointwise_distance(&a, &a, &PLAIN, Family::Minima), 0.0);
        assert_eq!(
            pointwise_distance(&a, &pt(1.0, 3.0), &PLAIN, Family::Minima),
            2f64.sqrt()
        );

        let lifting = LiftingParams::with_alpha(0.5).unwrap();
        let a = pt(0.0, 4.0).with_locations([0.0; 3], [9.0, 9.0, 9.0]);
        let b = pt(0.0, 4.0).with_locations([3.0, 4.0, 0.0], [-1.0, 2.0, 0.0]);
        let d = pointwise_distance(&a, &b, &lifting, Family::Minima);
        assert!((d - (0.5f64 * 25.0).sqrt()).abs() < 1e-15);
        // maxima read the death location instead
        let a = pt(0.0, 4.0).with_locations([9.0; 3], [0.0; 3]);
        let b = pt(0.0, 4.0).with_locations([1.0; 3], [3.0, 4.0, 0.0]);
        assert!((pointwise_distance(&a, &b, &lifting, Family::Maxima) - 12.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn both_on_diagonal_is_zero() {
        let a = pt(1.0, 1.0).with_locations([0.0; 3], [0.0; 3]);
        let b = pt(7.0, 7.0).with_locations([5.0; 3], [5.0; 3]);
        let lifting = LiftingParams::with_alpha(0.7).unwrap();
        assert_eq!(pointwise_distance(&a, &b, &lifting, Family::Minima), 0.0);
    }

    #[test]
    fn lifting_boundaries() {
        let a = pt(0.0, 4.0).with_locations([1.0, 0.0, 0.0], [0.0; 3]);
        let b = pt(2.0, 3.0).with_locations([1.0, 5.0, 0.0], [0.0; 3]);
        let pure = pointwise_distance(&a, &b, &PLAIN, Family::Minima);
        assert_eq!(pure, 5f64.sqrt());
        let geo_only = pointwise_distance(&a, &b, &LiftingParams::with_alpha(1.0).unwrap(), Family::Minima);
        assert_eq!(geo_only, 5.0);
        let c = pt(10.0, 30.0).with_locations([1.0, 5.0, 0.0], [4.0; 3]);
        assert_eq!(
            pointwise_distance(&b, &c, &LiftingParams::with_alpha(1.0).unwrap(), Family::Minima),
            0.0
        );
    }

    #[test]
    fn projection_examples() {
        let p = diagonal_projection(&pt(0.0, 2.0));
        assert_eq!((p.birth, p.death), (1.0, 1.0));
        let q = diagonal_projection(&pt(3.0, 3.0));
        assert_eq!((q.birth, q.death), (3.0, 3.0));
        let a = pt(0.0, 4.0);
        let r = diagonal_projection(&a);
        assert_eq!((r.birth, r.death), (2.0, 2.0));
        assert!((pointwise_distance(&a, &r, &PLAIN, Family::Minima) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_examples() {
        let d = diagram(&[(0.0, 4.0), (1.0, 2.0), (0.5, 3.0)]);
        assert_eq!(wasserstein_distance(&d, &d, &PLAIN).unwrap().0, 0.0);

        let single = diagram(&[(0.0, 4.0)]);
        let empty = diagram(&[]);
        let (w, asg) = wasserstein_distance(&single, &empty, &PLAIN).unwrap();
        assert!((w - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(asg.pairs, vec![(Some(0), None)]);
        assert_eq!(wasserstein_distance(&empty, &empty, &PLAIN).unwrap().0, 0.0);

        let a = diagram(&[(0.0, 4.0), (1.0, 2.0)]);
        let b = diagram(&[(0.0, 3.0)]);
        let (w, asg) = wasserstein_distance(&a, &b, &PLAIN).unwrap();
        assert!((w - 1.5f64.sqrt()).abs() < 1e-15);
        let mut pairs = asg.pairs.clone();
        pairs.sort();
        assert_eq!(pairs, vec![(Some(0), Some(0)), (Some(1), None)]);
    }

    #[test]
    fn family_mismatch() {
        let a = PersistenceDiagram::empty(Family::Minima, "a");
        let b = PersistenceDiagram::empty(Family::Maxima, "b");
        assert!(matches!(
            wasserstein_distance(&a, &b, &PLAIN),
            Err(Error::FamilyMismatch(Family::Minima, Family::Maxima))
        ));
    }

    #[test]
    fn lifting_rejects_out_of_range() {
        assert!(LiftingParams::new(1.5, 0.0, 1.0).is_err());
        assert!(LiftingParams::new(0.5, -0.1, 1.0).is_err());
        assert!(LiftingParams::with_alpha(f64::NAN).is_err());
    }

    #[test]
    fn auction_solver_agrees() {
        let a = diagram(&[(0.0, 4.0), (1.0, 2.5), (0.3, 0.9), (2.0, 6.0)]);
        let b = diagram(&[(0.1, 3.5), (2.2, 5.1), (0.0, 0.4)]);
        let (exact, _) = wasserstein_distance(&a, &b, &PLAIN).unwrap();
        let (approx, asg) = wasserstein_distance_with(&a, &b, &PLAIN, Solver::Auction { rel_tol: 1e-6 }).unwrap();
        assert!((approx - exact) / exact <= 1e-6);
        assert_eq!(DiagramAssignment::recompute_cost(&asg.pairs, &a, &b, &PLAIN), approx);
    }

    #[test]
    fn distance_matrix_is_symmetric() {
        let ds = vec![diagram(&[(0.0, 1.0)]), diagram(&[(0.0, 2.0)]), diagram(&[])];
        let m = distance_matrix(&ds, &PLAIN).unwrap();
        assert_eq!(m[0][1], m[1][0]);
        assert_eq!(m[2][2], 0.0);
        assert!((m[1][2] - 2f64.sqrt()).abs() < 1e-15);
    }
}
