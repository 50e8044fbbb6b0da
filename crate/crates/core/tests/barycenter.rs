use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::rngs::ChaCha8Rng;
use rand::SeedableRng;
use topoclust::barycenter::frechet_energy;
use topoclust::{
    barycenter, compute_diagram, DiagramPoint, Family, LiftingParams, PairClass, PersistenceDiagram, TimeBudget,
};
use topoclust_oracles::{random_diagram, random_field};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sorted_pairs(d: &PersistenceDiagram) -> Vec<(f64, f64)> {
    let mut v: Vec<_> = d.points().iter().map(|p| (p.birth, p.death)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

fn random_set(seed: u64, count: usize, lifting_locations: bool) -> Vec<PersistenceDiagram> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_diagram(&mut r, Family::Maxima, 8, lifting_locations))
        .collect()
}

#[test]
fn grid_search_confirms_two_point_mean() {
    let d = |death: f64| {
        PersistenceDiagram::new(
            Family::Minima,
            "d",
            vec![DiagramPoint::new(0.0, death, PairClass::MinSaddle)],
        )
        .unwrap()
    };
    let inputs = [d(2.0), d(4.0)];
    let plain = LiftingParams::default();
    let r = barycenter(&inputs, &plain, TimeBudget::Unbounded, 0).unwrap();
    assert_eq!(sorted_pairs(&r.centroid), vec![(0.0, 3.0)]);
    assert!((r.frechet_energy - 2.0).abs() < 1e-12);

    let mut best = f64::INFINITY;
    for i in 0..=40 {
        for j in 0..=40 {
            let (b, e) = (-1.0 + i as f64 * 0.05, 1.0 + j as f64 * 0.1);
            if e > b {
                let c =
                    PersistenceDiagram::new(Family::Minima, "c", vec![DiagramPoint::new(b, e, PairClass::MinSaddle)])
                        .unwrap();
                best = best.min(frechet_energy(&c, &inputs, &plain).unwrap());
            }
        }
    }
    assert!(best >= r.frechet_energy - 1e-12);
}

#[test]
fn tiny_budget_on_large_diagrams_stops_early() {
    let mut r = rng(5);
    let diagrams: Vec<PersistenceDiagram> = (0..100)
        .map(|_| compute_diagram(&random_field(&mut r, [16, 16, 1], 1 << 20), Family::Minima))
        .collect();
    let plain = LiftingParams::default();

    let first_round = {
        let t = Instant::now();
        frechet_energy(&diagrams[0], &diagrams, &plain).unwrap();
        t.elapsed()
    };
    let budget = TimeBudget::bounded(Duration::from_micros(1)).unwrap();
    let started_call = Instant::now();
    let result = barycenter(&diagrams, &plain, budget, 0).unwrap();
    let took = started_call.elapsed();
    assert!(!result.converged);
    assert_eq!(result.iterations, 1);
    assert!(
        took <= Duration::from_micros(1) + 3 * first_round + Duration::from_millis(200),
        "{took:?}"
    );
    assert!(result.centroid.points().iter().all(|p| p.death > p.birth));
    let recomputed = frechet_energy(&result.centroid, &diagrams, &plain).unwrap();
    assert!((recomputed - result.frechet_energy).abs() <= 1e-9 * recomputed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_descends_and_matches_centroid(seed in any::<u64>(), alpha in prop::sample::select(vec![0.0, 0.5])) {
        let diagrams = random_set(seed, 5, alpha > 0.0);
        let lifting = LiftingParams::with_alpha(alpha).unwrap();
        let r = barycenter(&diagrams, &lifting, TimeBudget::Unbounded, seed).unwrap();
        for w in r.energy_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "trace {:?}", r.energy_trace);
        }
        let recomputed = frechet_energy(&r.centroid, &diagrams, &lifting).unwrap();
        prop_assert!((recomputed - r.frechet_energy).abs() <= 1e-9 * recomputed.max(1.0));
        prop_assert!(r.centroid.points().iter().all(|p| p.death >= p.birth));
    }

    #[test]
    fn singleton_is_idempotent(seed in any::<u64>()) {
        let d = random_set(seed, 1, true).remove(0);
        let r = barycenter(std::slice::from_ref(&d), &LiftingParams::with_alpha(0.3).unwrap(), TimeBudget::Unbounded, 0)
            .unwrap();
        let expected = d.clone().canonicalized();
        prop_assert_eq!(r.centroid.points(), expected.points());
        prop_assert_eq!(r.frechet_energy, 0.0);
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>()) {
        let diagrams = random_set(seed, 5, false);
        let mut reversed = diagrams.clone();
        reversed.reverse();
        reversed.swap(0, 2);
        let plain = LiftingParams::default();
        let a = barycenter(&diagrams, &plain, TimeBudget::Unbounded, 9).unwrap();
        let b = barycenter(&reversed, &plain, TimeBudget::Unbounded, 9).unwrap();
        prop_assert!((a.frechet_energy - b.frechet_energy).abs() <= 1e-9 * a.frechet_energy.max(1.0));
        let (pa, pb) = (sorted_pairs(&a.centroid), sorted_pairs(&b.centroid));
        prop_assert_eq!(pa.len(), pb.len());
        for (x, y) in pa.iter().zip(&pb) {
            prop_assert!((x.0 - y.0).abs() <= 1e-9 && (x.1 - y.1).abs() <= 1e-9, "{pa:?} vs {pb:?}");
        }
    }

    #[test]
    fn interrupted_energy_is_not_below_unbounded(seed in any::<u64>()) {
        let diagrams = random_set(seed, 6, false);
        let plain = LiftingParams::default();
        let full = barycenter(&diagrams, &plain, TimeBudget::Unbounded, 1).unwrap();
        let short = barycenter(&diagrams, &plain, TimeBudget::bounded(Duration::from_nanos(1)).unwrap(), 1).unwrap();
        prop_assert!(short.frechet_energy >= full.frechet_energy - 1e-9);
        prop_assert!(short.centroid.points().iter().all(|p| p.death >= p.birth));
        let recomputed = frechet_energy(&short.centroid, &diagrams, &plain).unwrap();
        prop_assert!((recomputed - short.frechet_energy).abs() <= 1e-9 * recomputed.max(1.0));
    }
}
