use colored_shuffle::mixing;
use colored_shuffle::real::Real;
use colored_shuffle::simulate::{self, ChainConfig, Reference};

fn config(k: usize, seed: u64) -> ChainConfig {
    ChainConfig { n: 3, p: 2, k, trials: 100_000, seed }
}

#[test]
fn empirical_distance_tracks_the_exact_curve() {
    let tolerance = 4.0 * (48.0f64 / 100_000.0).sqrt();
    for (k, seed) in [(2, 1), (5, 2), (10, 3)] {
        let d = simulate::run(&config(k, seed), None).unwrap();
        let empirical = simulate::empirical_tv(&d, &Reference::Uniform).unwrap();
        let exact = Real::from_rational(&mixing::tv_exact(3, 2, k).unwrap()).to_f64();
        assert!((empirical - exact).abs() <= tolerance, "k={k}: {empirical} vs {exact}");
        let against_law = simulate::empirical_tv(&d, &Reference::AfterSteps(k)).unwrap();
        assert!(against_law <= tolerance, "k={k}: {against_law}");
    }
}

#[test]
fn mixed_chain_leaves_only_sampling_noise() {
    let d = simulate::run(&config(30, 4), None).unwrap();
    assert!(simulate::empirical_tv(&d, &Reference::Uniform).unwrap() < 0.05);
}

#[test]
fn summary_row() {
    let (summary, dist) = simulate::summarize(&config(10, 7), Some(2)).unwrap();
    assert_eq!(dist.counts.values().sum::<u64>(), 100_000);
    assert_eq!(summary.abs_error, (summary.empirical_tv - summary.exact_tv).abs());
    assert_eq!(simulate::CSV_HEADER, "k,trials,seed,empirical_tv,exact_tv,abs_error");
}
