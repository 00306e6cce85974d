use feller_subordinators::ppp::{sample_layer, sample_ppp, stable_layers, stable_shell_mass, stable_small_jump_bound};
use feller_subordinators::{AdditiveReals, LatticeUnion, LevyMeasure, LevyMeasureLayer, MarkLaw, StreamKey};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

const REPLICATES: u64 = 10_000;

fn two_layers() -> LevyMeasure {
    LevyMeasure::new(vec![
        LevyMeasureLayer::new(1.5, MarkLaw::Exponential { rate: 1.0 }).unwrap(),
        LevyMeasureLayer::new(0.5, MarkLaw::Constant { value: 2.0 }).unwrap(),
    ])
}

#[test]
fn mean_counts_match_mass() {
    let m = AdditiveReals::new();
    let measure = two_layers();
    let horizon = 3.0;
    let total: usize = (0..REPLICATES)
        .map(|r| sample_ppp(&m, &measure, horizon, StreamKey::new(5).for_replicate(r)).unwrap().len())
        .sum();
    let mean = total as f64 / REPLICATES as f64;
    let expected = measure.total_mass() * horizon;
    // five standard errors of a Poisson mean
    assert!((mean - expected).abs() < 5.0 * (expected / REPLICATES as f64).sqrt(), "{mean} vs {expected}");
}

/// Counts in `(0, T/2]` and `(T/2, T]` of the merged process against the
/// product of two Poisson laws with the summed rate. Statistical: the
/// threshold p > 0.001 fails for a correct sampler about once in a thousand
/// seeds.
#[test]
fn superposition_counts_are_independent_poisson() {
    let m = AdditiveReals::new();
    let measure = two_layers();
    let horizon = 2.0;
    let half = horizon / 2.0;
    const CELLS: usize = 6; // counts 0..5 and "6 or more"
    let mut observed = [[0f64; CELLS]; CELLS];
    for r in 0..REPLICATES {
        let p = sample_ppp(&m, &measure, horizon, StreamKey::new(9).for_replicate(r)).unwrap();
        let first = p.points.iter().filter(|(t, _)| *t <= half).count();
        let second = p.len() - first;
        observed[first.min(CELLS - 1)][second.min(CELLS - 1)] += 1.0;
    }
    let law = Poisson::new(measure.total_mass() * half).unwrap();
    let cell_p = |k: usize| {
        if k < CELLS - 1 {
            law.pmf(k as u64)
        } else {
            1.0 - (0..CELLS as u64 - 1).map(|j| law.pmf(j)).sum::<f64>()
        }
    };
    let mut chi2 = 0.0;
    for (i, row) in observed.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = REPLICATES as f64 * cell_p(i) * cell_p(j);
            chi2 += (o - e).powi(2) / e;
        }
    }
    let dof = (CELLS * CELLS - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
    assert!(p_value > 0.001, "chi2 = {chi2}, p = {p_value}");
}

/// Given `N = n`, the earliest time divided by `T` is `Beta(1, n)`; the
/// transform `1 − (1 − t_min/T)^n` is uniform. One-sample Kolmogorov–Smirnov
/// at level 0.001 (asymptotic critical value `1.95/√m`).
#[test]
fn earliest_time_given_count_is_uniform_order_statistic() {
    let m = AdditiveReals::new();
    let measure = two_layers();
    let horizon = 1.5;
    let mut u: Vec<f64> = (0..REPLICATES)
        .filter_map(|r| {
            let p = sample_ppp(&m, &measure, horizon, StreamKey::new(21).for_replicate(r)).unwrap();
            let n = p.len() as i32;
            p.points.first().map(|(t, _)| 1.0 - (1.0 - t / horizon).powi(n))
        })
        .collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max);
    assert!(d < 1.95 / n.sqrt(), "KS distance {d} over {n} samples");
}

#[test]
fn times_are_sorted_and_within_horizon() {
    let m = LatticeUnion::new(2, 10).unwrap();
    let measure = LevyMeasure::new(vec![
        LevyMeasureLayer::new(3.0, MarkLaw::UniformSingleton).unwrap(),
        LevyMeasureLayer::new(1.0, MarkLaw::UniformSubset { size: 4 }).unwrap(),
    ]);
    for r in 0..200 {
        let p = sample_ppp(&m, &measure, 2.0, StreamKey::new(1).for_replicate(r)).unwrap();
        assert!(p.points.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!(p.points.iter().all(|(t, x)| *t > 0.0 && *t <= 2.0 && !x.is_empty()));
    }
}

#[test]
fn realizations_do_not_depend_on_worker_count() {
    let m = AdditiveReals::new();
    let measure = two_layers();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            (0..500u64)
                .into_par_iter()
                .map(|r| sample_ppp(&m, &measure, 4.0, StreamKey::new(77).for_replicate(r)).unwrap().points)
                .collect::<Vec<_>>()
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    // evaluation order does not matter either
    let mut backwards: Vec<_> = (0..500u64)
        .rev()
        .map(|r| sample_ppp(&m, &measure, 4.0, StreamKey::new(77).for_replicate(r)).unwrap().points)
        .collect();
    backwards.reverse();
    assert_eq!(one, backwards);
}

#[test]
fn distinct_seeds_and_lanes_give_distinct_streams() {
    let m = AdditiveReals::new();
    let layer = LevyMeasureLayer::new(20.0, MarkLaw::Exponential { rate: 1.0 }).unwrap();
    let a = sample_layer(&m, &layer, 1.0, StreamKey::new(1)).unwrap();
    let b = sample_layer(&m, &layer, 1.0, StreamKey::new(2)).unwrap();
    let c = sample_layer(&m, &layer, 1.0, StreamKey::new(1).with_lane(1)).unwrap();
    let d = sample_layer(&m, &layer, 1.0, StreamKey::new(1).for_replicate(1)).unwrap();
    assert_ne!(a.points, b.points);
    assert_ne!(a.points, c.points);
    assert_ne!(a.points, d.points);
}

#[test]
fn stable_shells_partition_the_truncated_measure() {
    let (alpha, c) = (0.5, 1.0);
    let layers = stable_layers(alpha, c, 10).unwrap();
    let total: f64 = layers.iter().map(|l| l.mass).sum();
    // ∫_{2^{-10}}^∞ c x^{-1-α} dx = (c/α) 2^{10α}
    let exact = c / alpha * 2f64.powf(10.0 * alpha);
    assert!((total - exact).abs() < 1e-9 * exact, "{total} vs {exact}");
    assert!(stable_shell_mass(alpha, c, 0) > 0.0);
    // μ c ε^{1−α}/(1−α) at ε = 2^{-10}, μ = 1
    let bound = stable_small_jump_bound(alpha, c, 2f64.powi(-10), 1.0);
    assert!((bound - 2.0 * 2f64.powf(-5.0)).abs() < 1e-15);
}

#[test]
fn invalid_layers_are_rejected() {
    assert!(LevyMeasureLayer::new(0.0, MarkLaw::Constant { value: 1.0 }).is_err());
    assert!(LevyMeasureLayer::new(f64::INFINITY, MarkLaw::Constant { value: 1.0 }).is_err());
    let m = AdditiveReals::new();
    let bad = LevyMeasure::new(vec![LevyMeasureLayer::new(1.0, MarkLaw::UniformSingleton).unwrap()]);
    assert!(sample_ppp(&m, &bad, 1.0, StreamKey::new(0)).is_err());
    assert!(sample_ppp(&m, &two_layers(), 0.0, StreamKey::new(0)).is_err());
}
