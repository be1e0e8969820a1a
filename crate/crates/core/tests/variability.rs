//! Periodic packed sets, the count inequality, races and conditional
//! variances.

use jamlab::engine::{check_admissible, SaturationOptions};
use jamlab::seed::stream;
use jamlab::variability::{
    auto_delta, build_periodic_packed_set, conditional_variance_experiment, counts_n1_n2_n3, eta_design, find_l0,
    race, reflect_design, run_pipeline, EtaDesign, EtaPreset, VariabilityOptions,
};
use jamlab::Solid;

#[test]
fn count_ratio_approaches_scale_ratio() {
    let solid = Solid::ball(1, 0.2).unwrap();
    let set = build_periodic_packed_set(&solid, 1.0 / 64.0).unwrap();
    let delta = auto_delta(&set);
    let c = counts_n1_n2_n3(&set, delta, 40.0).unwrap();
    let want = (1.0 + 6.0 * delta) / (1.0 + 3.0 * delta);
    let got = c.n1 as f64 / c.n2 as f64;
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
    assert!(counts_n1_n2_n3(&set, delta, 6.0).is_err());
}

#[test]
fn gap_outgrows_shell_bound() {
    // n1 − n2 grows like L^d, the shell bound like L^(d−1)
    for solid in [Solid::ball(1, 0.2).unwrap(), Solid::ball(2, 0.24).unwrap()] {
        let d = solid.dim() as f64;
        let set = build_periodic_packed_set(&solid, 1.0 / 32.0).unwrap();
        let delta = auto_delta(&set);
        let ls = [400.0, 800.0, 1600.0, 3200.0];
        let gap: Vec<f64> = ls.iter().map(|&l| { let c = counts_n1_n2_n3(&set, delta, l).unwrap(); (c.n1 - c.n2) as f64 }).collect();
        let shell: Vec<f64> = ls.iter().map(|&l| counts_n1_n2_n3(&set, delta, l).unwrap().n3_bound as f64).collect();
        let slope = |v: &[f64]| (v[3] / v[0]).ln() / (ls[3] / ls[0]).ln();
        assert!((slope(&gap) - d).abs() < 0.1, "gap slope {}", slope(&gap));
        assert!((slope(&shell) - (d - 1.0)).abs() < 0.1, "shell slope {}", slope(&shell));
        // and L0 is the first length where the inequality holds
        let at = find_l0(&set, delta, 5000.0).unwrap();
        assert!(at.separates());
        assert!(!counts_n1_n2_n3(&set, delta, at.l - 1.0).unwrap().separates());
        // counts are bit-for-bit reproducible
        assert_eq!(at, counts_n1_n2_n3(&set, delta, at.l).unwrap());
    }
}

#[test]
fn symmetric_race_is_a_coin_flip() {
    let e = race(1, 2.5, 2.5, 20_000, 20_000, &mut stream(21, "coin", 0)).unwrap();
    assert!(e.wilson_lo < 0.5 && 0.5 < e.wilson_hi, "{e:?}");
    assert!((e.log_p_exact - 0.5f64.ln()).abs() < 1e-12);
    let all = race(3, 1.0, 0.0, 100, 100, &mut stream(21, "all", 0)).unwrap();
    assert_eq!(all.p_hat, 1.0);
}

#[test]
fn three_intervals_vary() {
    let solid = Solid::ball(1, 0.5).unwrap();
    let empty = EtaDesign { id: "empty".into(), points: vec![] };
    let rows = conditional_variance_experiment(3.0, &solid, &[empty], 400, 0.0, 22).unwrap();
    let r = &rows[0];
    assert!(r.counts.iter().all(|&c| c == 2 || c == 3));
    assert!(r.var_hat > 0.0 && r.lower_95 > 0.0);
    // exact variance p(1 − p), p = (2/3)(2 ln 2 − 1)
    assert!(r.ci_lo < 0.191209 && 0.191209 < r.ci_hi, "{r:?}");
}

#[test]
fn reflected_designs_agree() {
    let solid = Solid::ball(2, 0.24).unwrap();
    let set = build_periodic_packed_set(&solid, 1.0 / 32.0).unwrap();
    let l = 4.0;
    let ring = eta_design(EtaPreset::GreedyRing, &solid, Some(&set), l, 3).unwrap();
    let mirror = reflect_design(&ring, l);
    check_admissible(&solid, &mirror.points).unwrap();
    let eps = SaturationOptions::default().epsilon;
    let rows = conditional_variance_experiment(l, &solid, &[ring, mirror], 400, eps, 23).unwrap();
    let (a, b) = (&rows[0], &rows[1]);
    assert!(a.ci_lo < b.var_hat && b.var_hat < a.ci_hi || b.ci_lo < a.var_hat && a.var_hat < b.ci_hi, "{a:?} {b:?}");
    assert!(a.var_hat > 0.0 && b.var_hat > 0.0);
}

#[test]
fn pipeline_in_one_dimension_is_reproducible() {
    let solid = Solid::ball(1, 0.2).unwrap();
    let opts = VariabilityOptions::default();
    let a = run_pipeline(&solid, &opts, 24).unwrap();
    let b = run_pipeline(&solid, &opts, 24).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.beta < 1.0);
    assert!(a.counts.iter().any(|c| c.l == a.l0 && c.separates()));
    assert!(a.event1.positive() && a.event2.positive());
    assert!((a.event1.log_p_is - a.event1.log_p_exact).abs() < 4.0 * a.event1.log_p_is_se + 1e-6);
    assert!(a.min_lower_95 > 0.0);
}
