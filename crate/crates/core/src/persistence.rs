//! Extremum persistence diagrams of grid scalar fields.
//!
//! Minimum–saddle pairs come from the sublevel filtration, maximum–saddle
//! pairs from the superlevel filtration (the sublevel filtration of `-f`).
//! Vertices are swept in `(value, index)` order, which acts as a symbolic
//! perturbation, and connected components are tracked with a union-find.
//! When components meet at a vertex, every component but the one holding the
//! oldest (lowest) minimum dies there.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::field::ScalarField;
use crate::{Error, Result};

/// Which extrema a diagram tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Minima,
    Maxima,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Minima => "minima",
            Family::Maxima => "maxima",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minima" | "min" => Ok(Family::Minima),
            "maxima" | "max" => Ok(Family::Maxima),
            _ => Err(Error::InvalidParameter(format!("unknown diagram family '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    MinSaddle,
    SaddleMax,
    /// Global minimum paired with global maximum.
    Global,
}

impl PairClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::MinSaddle => "min_saddle",
            PairClass::SaddleMax => "saddle_max",
            PairClass::Global => "global",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PairClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_saddle" => Ok(PairClass::MinSaddle),
            "saddle_max" => Ok(PairClass::SaddleMax),
            "global" => Ok(PairClass::Global),
            _ => Err(Error::InvalidParameter(format!("unknown pair class '{s}'"))),
        }
    }
}

/// A birth/death pair together with the world positions of its two critical
/// vertices. For the maxima family `birth` is the saddle value and `death`
/// the maximum, so `death >= birth` holds for both families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub birth_location: [f64; 3],
    pub death_location: [f64; 3],
    pub pair_class: PairClass,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64, pair_class: PairClass) -> Self {
        Self {
            birth,
            death,
            birth_location: [0.0; 3],
            death_location: [0.0; 3],
            pair_class,
        }
    }

    pub fn with_locations(mut self, birth_location: [f64; 3], death_location: [f64; 3]) -> Self {
        self.birth_location = birth_location;
        self.death_location = death_location;
        self
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_diagonal(&self) -> bool {
        self.birth == self.death
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        other
            .persistence()
            .total_cmp(&self.persistence())
            .then(self.birth.total_cmp(&other.birth))
            .then_with(|| cmp_coords(&self.birth_location, &other.birth_location))
            .then_with(|| cmp_coords(&self.death_location, &other.death_location))
            .then(self.pair_class.cmp(&other.pair_class))
    }
}

fn cmp_coords(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// A multiset of diagram points of one family.
///
/// Construction drops points with zero persistence; they are
/// indistinguishable from the diagonal under the Wasserstein metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceDiagram {
    family: Family,
    source_name: String,
    points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn new(family: Family, source_name: impl Into<String>, points: Vec<DiagramPoint>) -> Result<Self> {
        for p in &points {
            let finite = p.birth.is_finite()
                && p.death.is_finite()
                && p.birth_location.iter().chain(&p.death_location).all(|c| c.is_finite());
            if !finite {
                return Err(Error::InvalidParameter(format!("diagram point {p:?} is not finite")));
            }
            if p.death < p.birth {
                return Err(Error::InvalidParameter(format!(
                    "diagram point ({}, {}) lies below the diagonal",
                    p.birth, p.death
                )));
            }
        }
        let points = points.into_iter().filter(|p| !p.is_diagonal()).collect();
        Ok(Self {
            family,
            source_name: source_name.into(),
            points,
        })
    }

    pub fn empty(family: Family, source_name: impl Into<String>) -> Self {
        Self {
            family,
            source_name: source_name.into(),
            points: Vec::new(),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_persistence(&self) -> f64 {
        self.points.iter().map(DiagramPoint::persistence).sum()
    }

    pub fn global_pair(&self) -> Option<&DiagramPoint> {
        self.points.iter().find(|p| p.pair_class == PairClass::Global)
    }

    pub fn with_source_name(mut self, name: impl Into<String>) -> Self {
        self.source_name = name.into();
        self
    }

    /// Same points, sorted by decreasing persistence (ties by coordinates).
    pub fn canonicalized(mut self) -> Self {
        self.points.sort_by(DiagramPoint::canonical_cmp);
        self
    }

    /// Drops the global min–max pair.
    pub fn without_global_pair(mut self) -> Self {
        self.points.retain(|p| p.pair_class != PairClass::Global);
        self
    }

    /// Total order on diagram contents, used to break ties deterministically
    /// without depending on input order.
    pub(crate) fn content_cmp(&self, other: &Self) -> Ordering {
        let mut a = self.points.clone();
        let mut b = other.points.clone();
        a.sort_by(DiagramPoint::canonical_cmp);
        b.sort_by(DiagramPoint::canonical_cmp);
        a.iter()
            .zip(&b)
            .map(|(p, q)| p.canonical_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.len().cmp(&b.len()))
    }
}

struct Components {
    parent: Vec<usize>,
    /// Oldest (lowest-ranked) vertex of the component, valid at roots.
    oldest: Vec<usize>,
}

impl Components {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            oldest: (0..len).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }
}

/// Computes the extremum persistence diagram of `field`.
///
/// The global minimum (resp. maximum) never dies; it is reported as a
/// [`PairClass::Global`] point spanning the whole value range. A constant
/// field yields an empty diagram.
pub fn compute_diagram(field: &ScalarField, family: Family) -> PersistenceDiagram {
    let values: Vec<f64> = match family {
        Family::Minima => field.values().to_vec(),
        Family::Maxima => field.values().iter().map(|v| -v).collect(),
    };
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }

    let mut comps = Components::new(n);
    // (youngest extremum, saddle) in sweep-function terms.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut roots: Vec<usize> = Vec::with_capacity(14);

    for &v in &order {
        roots.clear();
        field.for_each_neighbor(v, |u| {
            if rank[u] < rank[v] {
                roots.push(u);
            }
        });
        for r in roots.iter_mut() {
            *r = comps.find(*r);
        }
        roots.sort_unstable_by_key(|&r| rank[comps.oldest[r]]);
        roots.dedup();
        let Some(&elder) = roots.first() else {
            continue;
        };
        for &younger in &roots[1..] {
            pairs.push((comps.oldest[younger], v));
            comps.parent[younger] = elder;
        }
        comps.parent[v] = elder;
    }

    let pos = |v: usize| field.position(v);
    let original = field.values();
    let mut points: Vec<DiagramPoint> = pairs
        .into_iter()
        .map(|(extremum, saddle)| match family {
            Family::Minima => DiagramPoint::new(original[extremum], original[saddle], PairClass::MinSaddle)
                .with_locations(pos(extremum), pos(saddle)),
            Family::Maxima => DiagramPoint::new(original[saddle], original[extremum], PairClass::SaddleMax)
                .with_locations(pos(saddle), pos(extremum)),
        })
        .collect();

    if let (Some(&first), Some(&last)) = (order.first(), order.last()) {
        let (lo, hi) = match family {
            Family::Minima => (first, last),
            Family::Maxima => (last, first),
        };
        points.push(DiagramPoint::new(original[lo], original[hi], PairClass::Global).with_locations(pos(lo), pos(hi)));
    }

    PersistenceDiagram::new(family, field.name(), points)
        .expect("sweep emits finite points above the diagonal")
        .canonicalized()
}

/// Keeps the points whose persistence strictly exceeds `threshold`, plus the
/// global pair. Negative thresholds behave like zero.
pub fn prune_by_persistence(diagram: &PersistenceDiagram, threshold: f64) -> PersistenceDiagram {
    let mut pruned = diagram.clone();
    pruned
        .points
        .retain(|p| p.pair_class == PairClass::Global || p.persistence() > threshold);
    pruned
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_field(values: &[f64]) -> ScalarField {
        ScalarField::from_values("path", [values.len(), 1, 1], values.to_vec()).unwrap()
    }

    fn pairs(d: &PersistenceDiagram) -> Vec<(f64, f64, PairClass)> {
        let mut v: Vec<_> = d.points().iter().map(|p| (p.birth, p.death, p.pair_class)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn path_example_minima() {
        let d = compute_diagram(&path_field(&[2.0, 0.0, 4.0, 1.0, 5.0]), Family::Minima);
        assert_eq!(
            pairs(&d),
            vec![(0.0, 5.0, PairClass::Global), (1.0, 4.0, PairClass::MinSaddle)]
        );
        let young = d
            .points()
            .iter()
            .find(|p| p.pair_class == PairClass::MinSaddle)
            .unwrap();
        assert_eq!(young.birth_location, [3.0, 0.0, 0.0]);
        assert_eq!(young.death_location, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn path_example_maxima() {
        // maxima at 0 (2), 2 (4), 4 (5); saddles at 1 (0) and 3 (1).
        let d = compute_diagram(&path_field(&[2.0, 0.0, 4.0, 1.0, 5.0]), Family::Maxima);
        assert_eq!(
            pairs(&d),
            vec![
                (0.0, 2.0, PairClass::SaddleMax),
                (0.0, 5.0, PairClass::Global),
                (1.0, 4.0, PairClass::SaddleMax)
            ]
        );
    }

    #[test]
    fn constant_field_is_empty() {
        let f = ScalarField::from_values("c", [4, 4, 1], vec![3.5; 16]).unwrap();
        assert!(compute_diagram(&f, Family::Minima).is_empty());
        assert!(compute_diagram(&f, Family::Maxima).is_empty());
    }

    #[test]
    fn plateau_ties_resolve_by_index() {
        // Two equal minima: the one with the lower index is older.
        let d = compute_diagram(&path_field(&[0.0, 3.0, 0.0, 5.0]), Family::Minima);
        let young = d
            .points()
            .iter()
            .find(|p| p.pair_class == PairClass::MinSaddle)
            .unwrap();
        assert_eq!((young.birth, young.death), (0.0, 3.0));
        assert_eq!(young.birth_location, [2.0, 0.0, 0.0]);
    }

    #[test]
    fn prune_examples() {
        let d = compute_diagram(&path_field(&[2.0, 0.0, 4.0, 1.0, 5.0]), Family::Minima);
        assert_eq!(prune_by_persistence(&d, 0.0), d);
        let pruned = prune_by_persistence(&d, 3.0);
        assert_eq!(pairs(&pruned), vec![(0.0, 5.0, PairClass::Global)]);
        let all_gone = prune_by_persistence(&d, 100.0);
        assert_eq!(all_gone.len(), 1);
    }

    #[test]
    fn diagram_rejects_points_below_diagonal() {
        let bad = DiagramPoint::new(3.0, 1.0, PairClass::MinSaddle);
        assert!(PersistenceDiagram::new(Family::Minima, "x", vec![bad]).is_err());
        let diag = DiagramPoint::new(1.0, 1.0, PairClass::MinSaddle);
        assert!(PersistenceDiagram::new(Family::Minima, "x", vec![diag])
            .unwrap()
            .is_empty());
    }
}
