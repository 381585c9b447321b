//! Chaos functionals on synthetic ensembles with a known amount of
//! correlation, plus estimator consistency on Gaussian data.

use kaclab::chaos_metrics::{
    entropy_knn, fisher_rel, lln_rate_fit, omega_inf, omega_j, omega_n, rel_entropy_to_gaussian, spearman,
    EntropyOptions, FisherOptions, OmegaOptions, PointCloud,
};
use kaclab::chaotic_init::{marginal_samples, sample_uniform_boltzmann_sphere, DensitySpec, MarginalMode};
use kaclab::kac_process::{EnsembleLaw, ReplicaRecord, Scheme, TimeScale};
use kaclab::kernels::CollisionKernel;
use kaclab::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

fn ensemble(frames: Vec<Vec<f64>>, n: usize, dim: usize) -> EnsembleLaw {
    EnsembleLaw {
        n,
        dim,
        grid: vec![0.0],
        kernel: CollisionKernel::maxwell_cutoff(),
        time_scale: TimeScale::Ordered,
        scheme: Scheme::Ssa,
        base_seed: 0,
        init: "synthetic".into(),
        replicas: frames
            .into_iter()
            .enumerate()
            .map(|(index, f)| ReplicaRecord {
                index,
                seed: index as u64,
                frames: vec![f],
                collisions: vec![0],
                frozen_at: None,
            })
            .collect(),
        failed: vec![],
    }
}

/// `v_i = √(1-ρ) ξ_i + √ρ Z` per replica: every marginal is `γ`, pairs are
/// correlated with coefficient `ρ`.
fn exchangeable_gaussian(rho: f64, n: usize, r: usize, seed: u64) -> EnsembleLaw {
    let mut rng = stream(seed);
    let frames = (0..r)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (0..n).map(|_| (1.0 - rho).sqrt() * rng.sample::<f64, _>(StandardNormal) + rho.sqrt() * z).collect()
        })
        .collect();
    ensemble(frames, n, 1)
}

#[test]
fn omega_two_and_omega_inf_are_co_monotone() {
    let gamma = DensitySpec::standard_gaussian(1);
    let opts = OmegaOptions::default();
    let (mut o2, mut oi) = (Vec::new(), Vec::new());
    for (k, rho) in [0.0, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0].into_iter().enumerate() {
        let ens = exchangeable_gaussian(rho, 64, 500, 100 + k as u64);
        o2.push(omega_j(&ens, &gamma, 2, 0, &opts).unwrap().value);
        oi.push(omega_inf(&ens, &gamma, 0, &opts).unwrap().value);
    }
    assert!(spearman(&o2, &oi) > 0.95, "{o2:?} {oi:?}");
}

#[test]
fn small_omega_two_means_small_pair_entropy() {
    let gamma = DensitySpec::standard_gaussian(1);
    let opts = OmegaOptions::default();
    let (mut o2, mut h, mut fisher) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rho) in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8].into_iter().enumerate() {
        let ens = exchangeable_gaussian(rho, 8, 1000, 200 + k as u64);
        o2.push(omega_j(&ens, &gamma, 2, 0, &opts).unwrap().value);
        let pairs = marginal_samples(&ens, 2, 0, MarginalMode::FirstCoordinates).unwrap().flattened();
        // Normalized per particle; the product target is 0.
        h.push((rel_entropy_to_gaussian(&pairs, &EntropyOptions::default()).unwrap().value / 2.0).abs());
        fisher.push(fisher_rel(&pairs, &FisherOptions::default()).unwrap().value / 2.0);
    }
    assert!(fisher.iter().all(|f| *f < 5.0), "{fisher:?}");
    assert!(spearman(&o2, &h) > 0.9, "{o2:?} {h:?}");
}

#[test]
fn joint_distance_to_product_decreases_with_n() {
    let gamma = DensitySpec::standard_gaussian(1);
    let opts = OmegaOptions::default();
    let values: Vec<f64> = [2usize, 4, 8]
        .iter()
        .map(|&n| {
            let mut rng = stream(n as u64);
            let frames =
                (0..500).map(|_| sample_uniform_boltzmann_sphere(n, 1, 1.0, &mut rng).unwrap().into_data()).collect();
            let e = omega_n(&ensemble(frames, n, 1), &gamma, 0, &opts).unwrap();
            assert!(e.flags.iter().any(|f| f == "high-bias"));
            e.value
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn product_initial_data_sits_at_the_baseline() {
    let gamma = DensitySpec::standard_gaussian(3);
    let ens = {
        let mut rng = stream(5);
        ensemble((0..600).map(|_| (0..24).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect(), 8, 3)
    };
    let e = omega_j(&ens, &gamma, 2, 0, &OmegaOptions::default()).unwrap();
    assert!(e.value.abs() < 3.0 * e.stderr + 1e-3, "{e:?}");
}

fn gaussian(n: usize, scale: f64, seed: u64) -> PointCloud {
    let mut rng = stream(seed);
    PointCloud::new((0..3 * n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect(), 1, 3).unwrap()
}

/// Root-mean-square error over independent data sets at each size; the
/// error should roughly halve each time `n` quadruples.
fn rmse_by_size(estimate: impl Fn(&PointCloud) -> f64, truth: f64) -> Vec<(f64, f64)> {
    [1000usize, 4000, 16000]
        .iter()
        .map(|&n| {
            let sq: Vec<f64> =
                (0..8).map(|s| (estimate(&gaussian(n, 2f64.sqrt(), 1000 + s)) - truth).powi(2)).collect();
            let m = sq.iter().sum::<f64>() / sq.len() as f64;
            let sd = (sq.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (sq.len() - 1) as f64).sqrt();
            // Standard error of the RMSE by the delta method.
            (m.sqrt(), sd / (2.0 * m.sqrt() * (sq.len() as f64).sqrt()))
        })
        .collect()
}

fn check_halving(errs: &[(f64, f64)]) {
    for w in errs.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        assert!(b <= a / 2.0 + 2.0 * (sa * sa / 4.0 + sb * sb).sqrt(), "{errs:?}");
    }
}

#[test]
fn entropy_estimator_is_consistent() {
    let o = EntropyOptions { bootstrap: 2, ..Default::default() };
    let truth = 1.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * 2.0).ln();
    check_halving(&rmse_by_size(|c| entropy_knn(c, &o).unwrap().value, truth));
}

#[test]
fn fisher_estimator_is_consistent() {
    let o = FisherOptions { bootstrap: 2, ..Default::default() };
    check_halving(&rmse_by_size(|c| fisher_rel(c, &o).unwrap().value, 1.5));
}

#[test]
fn fitter_handles_constant_and_noisy_data() {
    let ns = [64.0, 128.0, 256.0, 512.0, 1024.0];
    let flat: Vec<_> = ns.iter().map(|&n| (n, 0.3, 0.01)).collect();
    assert!(lln_rate_fit(&flat, 0.95).unwrap().slope.abs() < 1e-12);
    let exact: Vec<_> = ns.iter().map(|&n: &f64| (n, 5.0 * n.powf(-1.0 / 3.0), 0.1)).collect();
    assert!((lln_rate_fit(&exact, 0.95).unwrap().slope + 1.0 / 3.0).abs() < 1e-6);
    let mut rng = stream(77);
    let covered = (0..100)
        .filter(|_| {
            let pts: Vec<_> = ns
                .iter()
                .map(|&n: &f64| {
                    let t = n.powf(-1.0 / 3.0);
                    (n, t * (1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal)), 0.1 * t)
                })
                .collect();
            lln_rate_fit(&pts, 0.95).unwrap().contains(-1.0 / 3.0)
        })
        .count();
    assert!(covered >= 90, "{covered}");
}
