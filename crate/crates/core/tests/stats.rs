//! Aggregation, normality and rate diagnostics on real and synthetic data.

use jamlab::engine::SaturationOptions;
use jamlab::measures::TestFunction;
use jamlab::seed::stream;
use jamlab::stats::{covariance_experiment, ks_normal, rate_fit, sweep_jamming, MeasureKind, RateVerdict, SweepPoint};
use jamlab::Solid;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn exact_normal_draws_are_close() {
    let mut rng = stream(31, "normal", 0);
    let x: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    // sup-distance of 1e5 draws exceeds 0.01 with probability about 1e-86
    assert!(ks_normal(&x).unwrap() < 0.01);
    assert!(ks_normal(&x[..19]).is_err());
}

#[test]
fn constant_covariance_is_the_sweep_variance() {
    let solid = Solid::ball(1, 0.5).unwrap();
    let opts = SaturationOptions::with_epsilon(0.0);
    let cov = covariance_experiment(&[TestFunction::Constant(1.0)], 200.0, 300, 32, MeasureKind::Point, &solid, &opts).unwrap();
    let counts: Vec<f64> = cov.values.iter().map(|r| r[0]).collect();
    let sweep = SweepPoint::from_counts(200.0, counts).unwrap();
    assert_eq!(cov.matrix[0][0], sweep.var_ratio);
}

#[test]
fn sweep_means_converge_at_the_expected_rate() {
    let solid = Solid::ball(1, 0.5).unwrap();
    let grid = [50.0, 100.0, 200.0, 400.0, 800.0];
    let sweep = sweep_jamming(&grid, 2000, &solid, &SaturationOptions::with_epsilon(0.0), 33).unwrap();
    let fit = rate_fit(&sweep, 1).unwrap();
    assert!(fit.verdict == RateVerdict::Inconclusive || fit.exponent <= -0.75, "{fit:?}");
    assert!(fit.verdict != RateVerdict::Fail, "{fit:?}");
    // same seed, same bytes
    let again = sweep_jamming(&grid, 2000, &solid, &SaturationOptions::with_epsilon(0.0), 33).unwrap();
    assert_eq!(serde_json::to_string(&sweep).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn replication_order_is_thread_independent() {
    let solid = Solid::ball(2, 0.2).unwrap();
    let opts = SaturationOptions::with_epsilon(1e-4);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep_jamming(&[20.0, 40.0], 16, &solid, &opts, 34).unwrap())
    };
    assert_eq!(run(1), run(3));
}
