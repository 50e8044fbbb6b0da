//! Slow, independent reference computations used to check `topoclust`.
//!
//! Nothing here calls into the algorithms under test; only the data types are
//! shared.

use rand::{Rng, RngExt};
use topoclust::{DiagramPoint, Family, PairClass, PersistenceDiagram, ScalarField};

/// Squared lifted distance between two off-diagonal points.
fn point_cost(a: &DiagramPoint, b: &DiagramPoint, alpha: f64, lambda: f64) -> f64 {
    let lift = |p: &DiagramPoint| -> [f64; 3] {
        [0, 1, 2].map(|k| lambda * p.death_location[k] + (1.0 - lambda) * p.birth_location[k])
    };
    let (la, lb) = (lift(a), lift(b));
    let geo: f64 = (0..3).map(|k| (la[k] - lb[k]).powi(2)).sum();
    (1.0 - alpha) * ((a.birth - b.birth).powi(2) + (a.death - b.death).powi(2)) + alpha * geo
}

/// Squared cost of moving a point onto its diagonal projection.
fn diagonal_cost(p: &DiagramPoint, alpha: f64) -> f64 {
    let half = (p.death - p.birth) / 2.0;
    (1.0 - alpha) * 2.0 * half * half
}

/// 2-Wasserstein distance by enumerating every partial matching.
///
/// Exponential; keep both diagrams at or below about seven points.
pub fn brute_force_w2(a: &PersistenceDiagram, b: &PersistenceDiagram, alpha: f64, lambda: f64) -> f64 {
    fn search(i: usize, a: &[DiagramPoint], b: &[DiagramPoint], used: &mut [bool], alpha: f64, lambda: f64) -> f64 {
        if i == a.len() {
            return b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(q, _)| diagonal_cost(q, alpha))
                .sum();
        }
        let mut best = diagonal_cost(&a[i], alpha) + search(i + 1, a, b, used, alpha, lambda);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c = point_cost(&a[i], &b[j], alpha, lambda) + search(i + 1, a, b, used, alpha, lambda);
                used[j] = false;
                best = best.min(c);
            }
        }
        best
    }
    let mut used = vec![false; b.len()];
    search(0, a.points(), b.points(), &mut used, alpha, lambda).sqrt()
}

/// Neighbours of a vertex in the Freudenthal triangulation of the grid: all
/// offsets whose nonzero entries are either all +1 or all -1.
pub fn freudenthal_neighbors(dims: [usize; 3], v: usize) -> Vec<usize> {
    let [nx, ny, nz] = dims;
    let (x, y, z) = ((v % nx) as i64, ((v / nx) % ny) as i64, (v / (nx * ny)) as i64);
    let mut out = Vec::new();
    for sign in [1i64, -1] {
        for mask in 1..8u8 {
            let d = [mask & 1, (mask >> 1) & 1, (mask >> 2) & 1].map(|b| b as i64 * sign);
            let (a, b, c) = (x + d[0], y + d[1], z + d[2]);
            if (0..nx as i64).contains(&a) && (0..ny as i64).contains(&b) && (0..nz as i64).contains(&c) {
                out.push(a as usize + nx * (b as usize + ny * c as usize));
            }
        }
    }
    out
}

/// `(birth, death)` pairs of the extremum diagram, found by recomputing the
/// connected components of every sublevel set from scratch.
///
/// Ties in value are broken by vertex index. Zero-persistence pairs are
/// dropped and the result is sorted.
pub fn threshold_set_pairs(field: &ScalarField, family: Family) -> Vec<(f64, f64)> {
    let sign = match family {
        Family::Minima => 1.0,
        Family::Maxima => -1.0,
    };
    let values: Vec<f64> = field.values().iter().map(|v| sign * v).collect();
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let neighbors: Vec<Vec<usize>> = (0..n).map(|v| freudenthal_neighbors(field.dims(), v)).collect();

    let mut active = vec![false; n];
    let mut alive: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    for &v in &order {
        active[v] = true;
        // Representative of each component: its lowest vertex in sweep order.
        let rank = |u: usize| (values[u], u);
        let mut seen = vec![false; n];
        let mut reps = Vec::new();
        for &start in &order {
            if !active[start] || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut rep = start;
            while let Some(u) = stack.pop() {
                if rank(u).0 < rank(rep).0 || (rank(u).0 == rank(rep).0 && u < rep) {
                    rep = u;
                }
                for &w in &neighbors[u] {
                    if active[w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            reps.push(rep);
        }
        for &old in &alive {
            if !reps.contains(&old) {
                pairs.push((values[old], values[v]));
            }
        }
        alive = reps;
    }
    let global_min = values[order[0]];
    let global_max = values[order[n - 1]];
    pairs.push((global_min, global_max));

    let mut out: Vec<(f64, f64)> = pairs
        .into_iter()
        .filter(|(b, d)| d > b)
        .map(|(b, d)| if sign > 0.0 { (b, d) } else { (-d, -b) })
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out
}

/// Sorted `(birth, death)` pairs of a diagram, for comparison with
/// [`threshold_set_pairs`].
pub fn diagram_pairs(diagram: &PersistenceDiagram) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = diagram.points().iter().map(|p| (p.birth, p.death)).collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out
}

/// Log-likelihood and information criteria of a spherical Gaussian mixture
/// with hard assignments, accumulated cluster by cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcReference {
    pub log_likelihood: f64,
    pub sigma2: f64,
    pub aic: f64,
    pub bic: f64,
}

pub fn information_criteria(cluster_sizes: &[usize], sum_squared: f64, dim: f64) -> IcReference {
    let k = cluster_sizes.len() as f64;
    let n: f64 = cluster_sizes.iter().map(|&s| s as f64).sum();
    let sigma2 = sum_squared / (dim * (n - k));
    let log_norm = (2.0 * std::f64::consts::PI * sigma2).ln();
    let log_likelihood = cluster_sizes
        .iter()
        .map(|&s| {
            let nj = s as f64;
            let prior = if s == 0 { 0.0 } else { nj * (nj / n).ln() };
            prior - nj * dim / 2.0 * log_norm - (nj - 1.0) * dim / 2.0
        })
        .sum::<f64>();
    let params = k * dim;
    IcReference {
        log_likelihood,
        sigma2,
        aic: 2.0 * params - 2.0 * log_likelihood,
        bic: params * n.ln() - 2.0 * log_likelihood,
    }
}

/// Minimum of `cost` over every assignment of `n` items to exactly `k`
/// non-empty groups, with the minimizing labels. Exponential in `n`.
pub fn best_partition(n: usize, k: usize, cost: impl Fn(&[Vec<usize>]) -> f64) -> (f64, Vec<usize>) {
    assert!(k >= 1 && k <= n);
    let mut labels = vec![0usize; n];
    let mut best = (f64::INFINITY, Vec::new());
    // Restricted growth strings enumerate each partition once.
    fn rec(
        i: usize,
        used: usize,
        k: usize,
        labels: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
        cost: &dyn Fn(&[Vec<usize>]) -> f64,
    ) {
        let n = labels.len();
        if n - i < k - used {
            return;
        }
        if i == n {
            let mut groups = vec![Vec::new(); k];
            for (item, &l) in labels.iter().enumerate() {
                groups[l].push(item);
            }
            let c = cost(&groups);
            if c < best.0 {
                *best = (c, labels.clone());
            }
            return;
        }
        for l in 0..=used.min(k - 1) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), k, labels, best, cost);
        }
    }
    rec(0, 0, k, &mut labels, &mut best, &cost);
    best
}

/// Random diagram of up to `max_points` off-diagonal points. Values lie on a
/// coarse grid so that ties and coincident points occur; locations are random
/// when `with_locations` is set and zero otherwise.
pub fn random_diagram<R: Rng + ?Sized>(
    rng: &mut R,
    family: Family,
    max_points: usize,
    with_locations: bool,
) -> PersistenceDiagram {
    let class = match family {
        Family::Minima => PairClass::MinSaddle,
        Family::Maxima => PairClass::SaddleMax,
    };
    let count = rng.random_range(0..=max_points);
    let points = (0..count)
        .map(|_| {
            let birth = rng.random_range(0..=32) as f64 * 0.25;
            let death = birth + rng.random_range(1..=16) as f64 * 0.25;
            let mut loc = || {
                [0; 3].map(|_| {
                    if with_locations {
                        rng.random_range(0..=8) as f64 * 0.5
                    } else {
                        0.0
                    }
                })
            };
            let (b, d) = (loc(), loc());
            DiagramPoint::new(birth, death, class).with_locations(b, d)
        })
        .collect();
    PersistenceDiagram::new(family, "random", points).expect("random points are valid")
}

/// Random field whose values are integers in `0..levels`, so that ties are
/// frequent.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, dims: [usize; 3], levels: u32) -> ScalarField {
    let n = dims.iter().product();
    let values = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
    ScalarField::from_values("random", dims, values).expect("valid dims")
}

/// Number of vertices lower than all their neighbours under the
/// `(value, index)` order.
pub fn local_minima_count(field: &ScalarField) -> usize {
    let values = field.values();
    let lower = |a: usize, b: usize| (values[a], a) < (values[b], b);
    (0..values.len())
        .filter(|&v| freudenthal_neighbors(field.dims(), v).into_iter().all(|w| lower(v, w)))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_pairs() {
        let f = ScalarField::from_values("p", [5, 1, 1], vec![2.0, 0.0, 4.0, 1.0, 5.0]).unwrap();
        assert_eq!(threshold_set_pairs(&f, Family::Minima), vec![(0.0, 5.0), (1.0, 4.0)]);
        assert_eq!(
            threshold_set_pairs(&f, Family::Maxima),
            vec![(0.0, 2.0), (0.0, 5.0), (1.0, 4.0)]
        );
    }

    #[test]
    fn neighbor_counts() {
        assert_eq!(freudenthal_neighbors([3, 3, 1], 4).len(), 6);
        assert_eq!(freudenthal_neighbors([3, 3, 3], 13).len(), 14);
        assert_eq!(freudenthal_neighbors([5, 1, 1], 0), vec![1]);
    }

    #[test]
    fn single_points() {
        let d = |b: f64, e: f64| {
            PersistenceDiagram::new(Family::Minima, "", vec![DiagramPoint::new(b, e, PairClass::MinSaddle)]).unwrap()
        };
        assert!((brute_force_w2(&d(0.0, 2.0), &d(1.0, 3.0), 0.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
        let empty = PersistenceDiagram::empty(Family::Minima, "");
        assert!((brute_force_w2(&d(0.0, 2.0), &empty, 0.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn partitions() {
        let xs = [0.0, 0.1, 5.0, 5.2, 9.0];
        let (c, labels) = best_partition(5, 2, |groups| {
            groups
                .iter()
                .map(|g| {
                    let m = g.iter().map(|&i| xs[i]).sum::<f64>() / g.len() as f64;
                    g.iter().map(|&i| (xs[i] - m).powi(2)).sum::<f64>()
                })
                .sum()
        });
        assert_eq!(labels, vec![0, 0, 1, 1, 1]);
        assert!(c > 0.0);
    }
}
