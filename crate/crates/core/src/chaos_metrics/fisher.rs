//! Relative Fisher information `I(f | γ) = ∫ f |∇ log f + v|²` from samples.
//!
//! The score `∇ log f` is fitted by score matching: for a field `s` the
//! objective `J(s) = E[|s|² + 2 div s]` equals `E|s - ∇log f|² - I(f)`, so
//! `-J` of the best field is a lower estimate of `I(f)` that needs no
//! density. The field is a linear map plus gradients of Gaussian bumps
//! centred at sample points, with the bump bandwidth chosen by two-fold
//! cross-validation of `J`. With the identity `E[v · ∇log f] = -D`,
//! `I(f | γ) = I(f) - 2D + E|v|²`, and each held-out point contributes
//! `-(|s(v)|² + 2 div s(v)) - 2D + |v|²`.
//!
//! A plain plug-in of a kernel density score is strongly inflated by the
//! variance of the ratio `∇f̂ / f̂`; score matching avoids the ratio.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::entropy::block_bootstrap_se;
use super::omega::Estimate;
use super::PointCloud;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherOptions {
    /// Number of bump centres.
    pub centers: usize,
    /// Candidate bandwidths, relative to the per-coordinate spread. An
    /// empty list keeps only the linear part.
    pub bandwidths: Vec<f64>,
    /// Ridge, relative to the mean diagonal of the Gram matrix.
    pub ridge: f64,
    pub bootstrap: usize,
    pub block_size: usize,
    pub seed: u64,
}

impl Default for FisherOptions {
    fn default() -> Self {
        Self {
            centers: 64,
            bandwidths: vec![0.3, 0.45, 0.6, 0.8, 1.1],
            ridge: 1e-6,
            bootstrap: 200,
            block_size: 1,
            seed: 0xF15,
        }
    }
}

pub const MIN_POINTS: usize = 1000;

struct Basis<'a> {
    dim: usize,
    centers: &'a [f64],
    /// `None`: linear part only.
    h: Option<f64>,
}

impl Basis<'_> {
    fn size(&self) -> usize {
        let m = if self.h.is_some() { self.centers.len() / self.dim } else { 0 };
        self.dim + self.dim * self.dim + m
    }

    /// Writes the `D × P` field matrix at `x` into rows `row0..row0+D` of
    /// `phi`, and the divergences into `div`.
    fn eval(&self, x: &[f64], phi: &mut DMatrix<f64>, row0: usize, div: &mut [f64]) {
        let d = self.dim;
        div.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..d {
            phi[(row0 + a, a)] = 1.0;
            for b in 0..d {
                phi[(row0 + a, d + a * d + b)] = x[b];
            }
            div[d + a * d + a] = 1.0;
        }
        if let Some(h) = self.h {
            let h2 = h * h;
            for (m, c) in self.centers.chunks_exact(d).enumerate() {
                let col = d + d * d + m;
                let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                let psi = (-r2 / (2.0 * h2)).exp();
                for a in 0..d {
                    phi[(row0 + a, col)] = -(x[a] - c[a]) / h2 * psi;
                }
                div[col] = psi * (r2 / (h2 * h2) - d as f64 / h2);
            }
        }
    }

    /// Field matrix stacked over points and mean divergences.
    fn design(&self, pts: &[&[f64]]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (d, p) = (self.dim, self.size());
        let mut phi = DMatrix::zeros(pts.len() * d, p);
        let mut divs = DMatrix::zeros(pts.len(), p);
        let mut div = vec![0.0; p];
        for (i, x) in pts.iter().enumerate() {
            self.eval(x, &mut phi, i * d, &mut div);
            for k in 0..p {
                divs[(i, k)] = div[k];
            }
        }
        (phi, divs)
    }
}

/// Fits on `train`, returns per-point contributions `-(|s|² + 2 div s)` on `test`.
fn fit_and_score(basis: &Basis, train: &[&[f64]], test: &[&[f64]], ridge: f64) -> Result<Vec<f64>> {
    let (phi, divs) = basis.design(train);
    let n = train.len() as f64;
    let p = basis.size();
    let mut g = phi.tr_mul(&phi) / n;
    let h: DVector<f64> = DVector::from_iterator(p, (0..p).map(|k| divs.column(k).sum() / n));
    let scale = (0..p).map(|k| g[(k, k)]).sum::<f64>() / p as f64;
    for k in 0..p {
        g[(k, k)] += ridge * scale;
    }
    let chol = g.cholesky().ok_or_else(|| Error::Degenerate("score-matching Gram matrix is singular".into()))?;
    let theta = -chol.solve(&h);
    let (phi_t, divs_t) = basis.design(test);
    let s = &phi_t * &theta;
    let dv = &divs_t * &theta;
    let d = basis.dim;
    Ok((0..test.len())
        .map(|i| {
            let s2: f64 = (0..d).map(|a| s[i * d + a] * s[i * d + a]).sum();
            -(s2 + 2.0 * dv[i])
        })
        .collect())
}

/// Relative Fisher information of the law behind the cloud with respect
/// to the standard Gaussian in `R^{jd}`.
pub fn fisher_rel(cloud: &PointCloud, opts: &FisherOptions) -> Result<Estimate> {
    let n = cloud.n();
    if n < MIN_POINTS {
        return Err(invalid(format!("Fisher estimation needs at least {MIN_POINTS} points, got {n}")));
    }
    let d = cloud.width();
    let pts: Vec<&[f64]> = (0..n).map(|i| cloud.point(i)).collect();
    let folds: [Vec<usize>; 2] = [(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    let spread = {
        let mut var = 0.0;
        for a in 0..d {
            let m = pts.iter().map(|p| p[a]).sum::<f64>() / n as f64;
            var += pts.iter().map(|p| (p[a] - m) * (p[a] - m)).sum::<f64>() / n as f64;
        }
        (var / d as f64).sqrt()
    };
    if !(spread > 0.0) {
        return Err(Error::Degenerate("all points coincide; the Fisher information is infinite".into()));
    }
    let centers_for = |fold: &[usize]| -> Vec<f64> {
        let m = opts.centers.min(fold.len() / 10).max(1);
        let stride = fold.len() / m;
        (0..m).flat_map(|k| pts[fold[k * stride]].to_vec()).collect()
    };
    let centers = [centers_for(&folds[0]), centers_for(&folds[1])];

    let mut candidates: Vec<Option<f64>> = vec![None];
    candidates.extend(opts.bandwidths.iter().map(|b| Some(b * spread)));
    let mut best: Option<(f64, Vec<f64>, Option<f64>)> = None;
    for h in candidates {
        let mut contrib = vec![0.0; n];
        for f in 0..2 {
            let (train, test) = (&folds[f], &folds[1 - f]);
            let basis = Basis { dim: d, centers: &centers[f], h };
            let train_pts: Vec<&[f64]> = train.iter().map(|&i| pts[i]).collect();
            let test_pts: Vec<&[f64]> = test.iter().map(|&i| pts[i]).collect();
            let Ok(scores) = fit_and_score(&basis, &train_pts, &test_pts, opts.ridge) else {
                continue;
            };
            for (&i, s) in test.iter().zip(scores) {
                contrib[i] = s;
            }
        }
        let score = contrib.iter().sum::<f64>() / n as f64;
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, contrib, h));
        }
    }
    let (_, contrib, h) = best.expect("the linear candidate always exists");
    let terms: Vec<f64> =
        contrib.iter().zip(&pts).map(|(c, p)| c - 2.0 * d as f64 + p.iter().map(|x| x * x).sum::<f64>()).collect();
    let value = terms.iter().sum::<f64>() / n as f64;
    let stderr = block_bootstrap_se(&terms, opts.block_size, opts.bootstrap, opts.seed);
    let flags = vec![match h {
        Some(h) => format!("bandwidth {h:.4}"),
        None => "linear score".into(),
    }];
    Ok(Estimate { value, stderr, raw: value, baseline: 0.0, n, replicates: opts.bootstrap, approximate: false, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, scale: f64, seed: u64) -> PointCloud {
        let mut rng = stream(seed);
        PointCloud::new((0..n * d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect(), 1, d).unwrap()
    }

    #[test]
    fn standard_gaussian_has_zero_relative_fisher() {
        let e = fisher_rel(&gaussian(4000, 3, 1.0, 1), &FisherOptions::default()).unwrap();
        assert!(e.value.abs() < 0.1, "{e:?}");
        assert!(e.value > -0.1);
    }

    #[test]
    fn wide_gaussian_matches_closed_form() {
        let e = fisher_rel(&gaussian(16_000, 3, 2f64.sqrt(), 2), &FisherOptions::default()).unwrap();
        assert!((e.value - 1.5).abs() < 0.15, "{e:?}");
    }

    #[test]
    fn bimodal_law_uses_bumps() {
        // Mixture of N(±2, 0.25) in one dimension: far from Gaussian.
        let mut rng = stream(3);
        let pts: Vec<f64> = (0..6000)
            .map(|_| {
                let s = if rng.gen::<bool>() { 2.0 } else { -2.0 };
                s + 0.5 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let e = fisher_rel(&PointCloud::new(pts, 1, 1).unwrap(), &FisherOptions::default()).unwrap();
        // I(f) ≈ 1/0.25 = 4 (modes well separated), E v² = 4.25.
        let target = 4.0 - 2.0 + 4.25;
        assert!((e.value - target).abs() < 0.1 * target, "{e:?}");
        assert!(e.flags[0].starts_with("bandwidth"));
    }

    #[test]
    fn too_few_points() {
        assert!(fisher_rel(&gaussian(100, 3, 1.0, 4), &FisherOptions::default()).is_err());
    }
}
