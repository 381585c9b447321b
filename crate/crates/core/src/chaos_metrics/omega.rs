//! The chaos measures `Ω_j`, `Ω_∞` and `Ω_N`, estimated from ensembles
//! against i.i.d. reference samples.
//!
//! Empirical-vs-empirical distances carry a sampling floor. Every estimate
//! therefore also reports a same-law baseline: the distance between two
//! independent reference clouds of the same size, using the same first
//! reference cloud as the estimate (common random numbers).
//!
//! `Ω_j` and `Ω_N` subtract the full baseline. `Ω_∞` subtracts half of it:
//! per replica both the estimate `W1(μ_Z, μ_Y)` and the baseline
//! `W1(μ_Y, μ_Y')` are sums of two one-sided floors, and only the floor of
//! `μ_Y` is common to both. Subtracting it in full would cancel the very
//! quantity measured when `Z` is itself an i.i.d. sample.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ot::{w1_empirical, W1Options};
use super::PointCloud;
use crate::chaotic_init::{marginal_samples, DensitySpec, MarginalMode};
use crate::error::{invalid, Result};
use crate::kac_process::EnsembleLaw;
use crate::limit_eq::{BkwProfile, EmpiricalReference};
use crate::rng::{derive_seed, stream, SimRng};

/// A one-particle law that can be sampled.
pub trait OneParticleLaw: Sync {
    fn dim(&self) -> usize;
    fn sample_one(&self, rng: &mut SimRng, out: &mut [f64]);
}

impl OneParticleLaw for DensitySpec {
    fn dim(&self) -> usize {
        DensitySpec::dim(self)
    }
    fn sample_one(&self, rng: &mut SimRng, out: &mut [f64]) {
        self.sample_into(rng, out)
    }
}

impl OneParticleLaw for BkwProfile {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample_one(&self, rng: &mut SimRng, out: &mut [f64]) {
        self.sample_into(rng, out);
    }
}

impl OneParticleLaw for EmpiricalReference {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample_one(&self, rng: &mut SimRng, out: &mut [f64]) {
        self.sample_into(rng, out)
    }
}

/// `law^⊗j`, sampled as `j`-tuples.
pub struct ProductLaw<'a> {
    pub law: &'a dyn OneParticleLaw,
    pub j: usize,
}

impl ProductLaw<'_> {
    pub fn cloud(&self, n: usize, rng: &mut SimRng) -> Result<PointCloud> {
        let d = self.law.dim();
        let mut points = vec![0.0; n * self.j * d];
        for v in points.chunks_exact_mut(d) {
            self.law.sample_one(rng, v);
        }
        PointCloud::new(points, self.j, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Baseline-corrected value.
    pub value: f64,
    pub stderr: f64,
    /// Mean uncorrected distance.
    pub raw: f64,
    /// Mean same-law baseline.
    pub baseline: f64,
    /// Points per cloud.
    pub n: usize,
    /// Rounds or replicas averaged.
    pub replicates: usize,
    pub approximate: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaOptions {
    /// Reference rounds for `Ω_j` and `Ω_N`.
    pub rounds: usize,
    pub w1: W1Options,
    pub seed: u64,
    /// Largest `N` for `Ω_N` without `allow_large_joint`.
    pub max_joint_n: usize,
    pub allow_large_joint: bool,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        Self { rounds: 8, w1: W1Options::default(), seed: 0x0E6A, max_joint_n: 16, allow_large_joint: false }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn resample(c: &PointCloud, rng: &mut SimRng) -> PointCloud {
    let n = c.n();
    let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    c.select(&idx)
}

/// Baseline-subtracted distance between a sample cloud and `law^⊗j`.
///
/// Each round draws two fresh reference clouds `Y`, `Y'` and records
/// `W1(X, Y)` and `W1(Y, Y')`; the value is the mean difference. The
/// standard error is the spread of the same difference recomputed on
/// bootstrap copies, where `X` and two fresh reference clouds are all
/// resampled with replacement so that both terms see the same duplicate
/// structure.
pub fn compare_to_reference(x: &PointCloud, law: &dyn OneParticleLaw, opts: &OmegaOptions) -> Result<Estimate> {
    if law.dim() != x.d() {
        return Err(invalid(format!("reference has dimension {}, samples {}", law.dim(), x.d())));
    }
    let rounds = opts.rounds.max(2);
    let n = x.n();
    let product = ProductLaw { law, j: x.j() };
    let outcomes: Vec<Result<(f64, f64, f64, bool)>> = (0..rounds)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(derive_seed(opts.seed, b as u64));
            let w1 = W1Options { seed: derive_seed(opts.w1.seed, b as u64), ..opts.w1 };
            let y = product.cloud(n, &mut rng)?;
            let y2 = product.cloud(n, &mut rng)?;
            let est = w1_empirical(x, &y, &w1)?;
            let base = w1_empirical(&y, &y2, &w1)?;
            let xb = resample(x, &mut rng);
            let y3 = resample(&product.cloud(n, &mut rng)?, &mut rng);
            let y4 = resample(&product.cloud(n, &mut rng)?, &mut rng);
            let est_b = w1_empirical(&xb, &y3, &w1)?;
            let base_b = w1_empirical(&y3, &y4, &w1)?;
            let approx = est.approximate || base.approximate;
            Ok((est.value, base.value, est_b.value - base_b.value, approx))
        })
        .collect();
    let outcomes: Vec<(f64, f64, f64, bool)> = outcomes.into_iter().collect::<Result<_>>()?;
    let est: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let base: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let boot: Vec<f64> = outcomes.iter().map(|o| o.2).collect();
    let approximate = outcomes.iter().any(|o| o.3);
    let mut flags = Vec::new();
    if approximate {
        flags.push("approximate".into());
    }
    if n < 100 {
        flags.push(format!("small sample: {n} points"));
    }
    Ok(Estimate {
        value: mean(&est) - mean(&base),
        stderr: sample_sd(&boot),
        raw: mean(&est),
        baseline: mean(&base),
        n,
        replicates: rounds,
        approximate,
        flags,
    })
}

/// `Ω_j` at grid index `t_index`: one `j`-tuple per replica against `f^⊗j`.
pub fn omega_j(
    ensemble: &EnsembleLaw,
    law: &dyn OneParticleLaw,
    j: usize,
    t_index: usize,
    opts: &OmegaOptions,
) -> Result<Estimate> {
    let x = marginal_samples(ensemble, j, t_index, MarginalMode::FirstCoordinates)?;
    compare_to_reference(&x, law, opts)
}

/// `Ω_∞`: per replica, the distance between its `N`-point empirical measure
/// and an `N`-point i.i.d. cloud from `f`, minus half the same-law baseline.
pub fn omega_inf(
    ensemble: &EnsembleLaw,
    law: &dyn OneParticleLaw,
    t_index: usize,
    opts: &OmegaOptions,
) -> Result<Estimate> {
    if t_index >= ensemble.grid.len() {
        return Err(invalid(format!("time index {t_index} outside the grid")));
    }
    let clouds: Vec<PointCloud> = (0..ensemble.r())
        .map(|r| PointCloud::new(ensemble.frame(r, t_index).to_vec(), 1, ensemble.dim))
        .collect::<Result<_>>()?;
    omega_inf_clouds(&clouds, law, opts)
}

/// [`omega_inf`] on explicit per-replica clouds of `j`-tuples, compared
/// with `law^⊗j`.
pub fn omega_inf_clouds(clouds: &[PointCloud], law: &dyn OneParticleLaw, opts: &OmegaOptions) -> Result<Estimate> {
    if clouds.is_empty() {
        return Err(invalid("no replicas"));
    }
    let outcomes: Vec<Result<(f64, f64, bool)>> = clouds
        .par_iter()
        .enumerate()
        .map(|(r, z)| {
            if law.dim() != z.d() {
                return Err(invalid(format!("reference has dimension {}, samples {}", law.dim(), z.d())));
            }
            let mut rng = stream(derive_seed(opts.seed, r as u64));
            let w1 = W1Options { seed: derive_seed(opts.w1.seed, r as u64), ..opts.w1 };
            let product = ProductLaw { law, j: z.j() };
            let y = product.cloud(z.n(), &mut rng)?;
            let y2 = product.cloud(z.n(), &mut rng)?;
            let est = w1_empirical(z, &y, &w1)?;
            let base = w1_empirical(&y, &y2, &w1)?;
            Ok((est.value, base.value, est.approximate || base.approximate))
        })
        .collect();
    let outcomes: Vec<(f64, f64, bool)> = outcomes.into_iter().collect::<Result<_>>()?;
    let est: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let base: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let corrected: Vec<f64> = outcomes.iter().map(|o| o.0 - 0.5 * o.1).collect();
    let approximate = outcomes.iter().any(|o| o.2);
    let r = clouds.len();
    let mut flags = Vec::new();
    if approximate {
        flags.push("approximate".into());
    }
    let stderr = if r > 1 {
        sample_sd(&corrected) / (r as f64).sqrt()
    } else {
        flags.push("single replica: no standard error".into());
        f64::NAN
    };
    Ok(Estimate {
        value: mean(&corrected),
        stderr,
        raw: mean(&est),
        baseline: mean(&base),
        n: clouds[0].n(),
        replicates: r,
        approximate,
        flags,
    })
}

/// `Ω_N`: the full `N`-particle law against `f^⊗N` in dimension `N d`.
/// Always flagged as high-bias; refused above `max_joint_n` unless allowed.
pub fn omega_n(
    ensemble: &EnsembleLaw,
    law: &dyn OneParticleLaw,
    t_index: usize,
    opts: &OmegaOptions,
) -> Result<Estimate> {
    if ensemble.n > opts.max_joint_n && !opts.allow_large_joint {
        return Err(invalid(format!(
            "Ω_N with N = {} exceeds the limit {}: the empirical distance in dimension {} is dominated by \
             sampling bias; set allow_large_joint to override",
            ensemble.n,
            opts.max_joint_n,
            ensemble.n * ensemble.dim
        )));
    }
    if ensemble.r() < 2 {
        return Err(invalid("Ω_N needs at least two replicas"));
    }
    let x = marginal_samples(ensemble, ensemble.n, t_index, MarginalMode::FirstCoordinates)?;
    let mut est = compare_to_reference(&x, law, opts)?;
    est.flags.push("high-bias".into());
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kac_process::{ReplicaRecord, Scheme, TimeScale};
    use crate::kernels::CollisionKernel;

    fn synthetic(frames: Vec<Vec<f64>>, n: usize, dim: usize) -> EnsembleLaw {
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

    #[test]
    fn point_masses_give_zero() {
        let law = DensitySpec::PointMass { dim: 3 };
        let ens = synthetic(vec![vec![0.0; 12]; 5], 4, 3);
        let e = omega_inf(&ens, &law, 0, &OmegaOptions::default()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn fully_correlated_pairs_stay_away_from_product() {
        // All coordinates equal Z ~ Unif{-1, 1}; f = Unif{-1, 1}.
        let law = DensitySpec::GaussianMixture {
            dim: 1,
            components: vec![
                crate::chaotic_init::MixtureComponent { weight: 0.5, mean: vec![-1.0], variance: 1e-12 },
                crate::chaotic_init::MixtureComponent { weight: 0.5, mean: vec![1.0], variance: 1e-12 },
            ],
        };
        let mut rng = stream(1);
        let frames = (0..400).map(|_| vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }; 8]).collect();
        let ens = synthetic(frames, 8, 1);
        let e = omega_j(&ens, &law, 2, 0, &OmegaOptions::default()).unwrap();
        // Half of the product mass sits on mixed-sign pairs, each at cost
        // (0 + 1)/2 from the nearest diagonal pair.
        assert!((e.value - 0.25).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn product_data_sits_at_the_floor() {
        let law = DensitySpec::standard_gaussian(1);
        let mut rng = stream(2);
        let frames = (0..300)
            .map(|_| {
                let mut v = vec![0.0; 4];
                v.iter_mut().for_each(|x| law.sample_one(&mut rng, std::slice::from_mut(x)));
                v
            })
            .collect();
        let ens = synthetic(frames, 4, 1);
        let e = omega_j(&ens, &law, 2, 0, &OmegaOptions { rounds: 16, ..Default::default() }).unwrap();
        assert!(e.value.abs() < 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn joint_measure_is_refused_for_large_n() {
        let law = DensitySpec::standard_gaussian(1);
        let ens = synthetic(vec![vec![0.0; 32]; 4], 32, 1);
        assert!(omega_n(&ens, &law, 0, &OmegaOptions::default()).is_err());
        let ok = omega_n(&ens, &law, 0, &OmegaOptions { allow_large_joint: true, ..Default::default() }).unwrap();
        assert!(ok.flags.iter().any(|f| f == "high-bias"));
    }
}
