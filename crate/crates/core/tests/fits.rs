use kaclab::chaos_metrics::{exp_decay_fit, lln_rate_fit};
use kaclab::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

/// With correctly stated standard errors the 95% interval should cover
/// the true slope in roughly 95% of synthetic experiments.
#[test]
fn rate_interval_coverage() {
    let mut rng = stream(8);
    let ns = [64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0, 4096.0];
    let trials = 1000;
    let mut covered = 0;
    for _ in 0..trials {
        let pts: Vec<(f64, f64, f64)> = ns
            .iter()
            .map(|&n: &f64| {
                let truth = 2.0 * n.powf(-0.5);
                let se = 0.05 * truth;
                (n, truth + se * rng.sample::<f64, _>(StandardNormal), se)
            })
            .collect();
        if lln_rate_fit(&pts, 0.95).unwrap().contains(-0.5) {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    assert!((0.93..=0.995).contains(&rate), "coverage {rate}");
}

#[test]
fn noisy_decay_keeps_high_r_squared() {
    let mut rng = stream(9);
    let t: Vec<f64> = (0..12).map(|k| 0.25 * k as f64).collect();
    let y: Vec<f64> =
        t.iter().map(|s| 0.8 * (-1.3 * s).exp() * (1.0 + 0.02 * rng.sample::<f64, _>(StandardNormal))).collect();
    let f = exp_decay_fit(&t, &y).unwrap();
    assert!((f.rate - 1.3).abs() < 0.05 && f.r_squared > 0.99);
}
