//! Quantitative chaos functionals and the estimators behind them.

mod assignment;
pub mod entropy;
pub mod fisher;
pub mod fit;
pub mod omega;
pub mod ot;
pub mod report;

pub use assignment::solve as solve_assignment;
pub use entropy::{entropy_knn, rel_entropy_to_gaussian, EntropyOptions};
pub use fisher::{fisher_rel, FisherOptions};
pub use fit::{exp_decay_fit, lln_rate_fit, spearman, ExpFit, RateFit};
pub use omega::{
    compare_to_reference, omega_inf, omega_inf_clouds, omega_j, omega_n, Estimate, OmegaOptions, OneParticleLaw,
    ProductLaw,
};
pub use ot::{cost, w1_1d, w1_brute_force, w1_empirical, W1Options, W1Value};
pub use report::{ChaosReport, Measured, ReportRow};

use crate::error::{invalid, Result};

/// `n` points of `(R^d)^j`, uniformly weighted, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<f64>,
    j: usize,
    d: usize,
}

impl PointCloud {
    pub fn new(points: Vec<f64>, j: usize, d: usize) -> Result<Self> {
        if j == 0 || d == 0 {
            return Err(invalid("point clouds need j >= 1 and d >= 1"));
        }
        if points.is_empty() || !points.len().is_multiple_of(j * d) {
            return Err(invalid(format!(
                "{} values do not form a nonempty cloud of {}-dimensional points",
                points.len(),
                j * d
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("point cloud contains non-finite values"));
        }
        Ok(Self { points, j, d })
    }

    pub fn n(&self) -> usize {
        self.points.len() / self.width()
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `j · d`.
    pub fn width(&self) -> usize {
        self.j * self.d
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.points[k * w..(k + 1) * w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn select(&self, idx: &[usize]) -> PointCloud {
        let mut points = Vec::with_capacity(idx.len() * self.width());
        for &k in idx {
            points.extend_from_slice(self.point(k));
        }
        PointCloud { points, j: self.j, d: self.d }
    }

    /// Reinterprets the points as single vectors of `R^{jd}`.
    pub fn flattened(&self) -> PointCloud {
        PointCloud { points: self.points.clone(), j: 1, d: self.width() }
    }
}
