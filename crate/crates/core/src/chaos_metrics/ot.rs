//! Renormalized truncated Wasserstein distance between point clouds.
//!
//! For `j`-tuples `x = (x_1, …, x_j)` of velocities in `R^d` the cost is
//! `c(x, y) = (1/j) Σ_i min(|x_i - y_i|, 1)`; the distance between two
//! uniform clouds of equal size `n` is `min_π (1/n) Σ_k c(x_k, y_π(k))`.
//! Values are summed in ascending order so equal matchings give equal bits.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{assignment, PointCloud};
use crate::error::{invalid, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Options {
    /// Largest `n` solved exactly.
    pub n_exact: usize,
    /// Random directions for the sliced approximation.
    pub slices: usize,
    /// `min(·, 1)` inside the cost. Off only for diagnostics.
    pub truncated: bool,
    /// Seed for subsampling and slicing.
    pub seed: u64,
}

impl Default for W1Options {
    fn default() -> Self {
        Self { n_exact: 2048, slices: 64, truncated: true, seed: 0x5EED }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Value {
    pub value: f64,
    pub n: usize,
    /// Sliced approximation instead of an exact solve.
    pub approximate: bool,
    /// The larger cloud was subsampled to the size of the smaller one.
    pub resampled: bool,
}

/// Largest `n` for which the one-dimensional solver keeps a traceback.
const TRACEBACK_LIMIT: usize = 2048;
/// Largest `n` whose cost matrix is stored (128 MiB).
const MATRIX_LIMIT: usize = 4096;
/// Largest `n` for the quadratic one-dimensional solver.
const DP_LIMIT: usize = 16384;

#[inline]
fn block_cost(x: &[f64], y: &[f64], j: usize, d: usize, truncated: bool) -> f64 {
    let mut total = 0.0;
    for b in 0..j {
        let mut s = 0.0;
        for k in b * d..(b + 1) * d {
            let diff = x[k] - y[k];
            s += diff * diff;
        }
        let dist = s.sqrt();
        total += if truncated { dist.min(1.0) } else { dist };
    }
    total / j as f64
}

/// Cost between two `j`-tuples.
pub fn cost(x: &[f64], y: &[f64], j: usize, d: usize) -> f64 {
    block_cost(x, y, j, d, true)
}

fn canonical_mean(mut costs: Vec<f64>) -> f64 {
    let n = costs.len();
    costs.sort_by(f64::total_cmp);
    costs.iter().sum::<f64>() / n as f64
}

fn check_shapes(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.j() != y.j() || x.d() != y.d() {
        return Err(invalid(format!(
            "point clouds differ in shape: (j, d) = ({}, {}) vs ({}, {})",
            x.j(),
            x.d(),
            y.j(),
            y.d()
        )));
    }
    Ok(())
}

/// Subsamples the larger cloud so both have the size of the smaller.
fn equalize<'a>(
    x: &'a PointCloud,
    y: &'a PointCloud,
    seed: u64,
) -> (std::borrow::Cow<'a, PointCloud>, std::borrow::Cow<'a, PointCloud>, bool) {
    use std::borrow::Cow;
    let (nx, ny) = (x.n(), y.n());
    if nx == ny {
        return (Cow::Borrowed(x), Cow::Borrowed(y), false);
    }
    let mut rng = stream(seed);
    if nx > ny {
        let idx = sample(&mut rng, nx, ny).into_vec();
        (Cow::Owned(x.select(&idx)), Cow::Borrowed(y), true)
    } else {
        let idx = sample(&mut rng, ny, nx).into_vec();
        (Cow::Borrowed(x), Cow::Owned(y.select(&idx)), true)
    }
}

/// Truncated-cost Wasserstein distance between two uniform clouds.
///
/// Exact for `n ≤ n_exact` (and for scalar clouds up to a larger limit),
/// otherwise the mean cost of `slices` matchings obtained by sorting random
/// one-dimensional projections; such values are upper bounds and flagged.
pub fn w1_empirical(x: &PointCloud, y: &PointCloud, opts: &W1Options) -> Result<W1Value> {
    check_shapes(x, y)?;
    let (x, y, resampled) = equalize(x, y, opts.seed);
    let n = x.n();
    let (j, d) = (x.j(), x.d());
    if j * d == 1 && opts.truncated && n <= DP_LIMIT.max(opts.n_exact) {
        let value = w1_1d_values(x.as_slice(), y.as_slice());
        return Ok(W1Value { value, n, approximate: false, resampled });
    }
    if n <= opts.n_exact {
        let assignment = if n <= MATRIX_LIMIT {
            let mut m = vec![0.0; n * n];
            for (a, row) in m.chunks_exact_mut(n).enumerate() {
                for (b, c) in row.iter_mut().enumerate() {
                    *c = block_cost(x.point(a), y.point(b), j, d, opts.truncated);
                }
            }
            assignment::solve(n, |a, b| m[a * n + b])
        } else {
            assignment::solve(n, |a, b| block_cost(x.point(a), y.point(b), j, d, opts.truncated))
        };
        let costs = assignment
            .iter()
            .enumerate()
            .map(|(a, &b)| block_cost(x.point(a), y.point(b), j, d, opts.truncated))
            .collect();
        return Ok(W1Value { value: canonical_mean(costs), n, approximate: false, resampled });
    }
    let value = sliced(&x, &y, opts);
    Ok(W1Value { value, n, approximate: true, resampled })
}

fn sliced(x: &PointCloud, y: &PointCloud, opts: &W1Options) -> f64 {
    let (n, w) = (x.n(), x.width());
    let mut rng = stream(opts.seed ^ 0xA5A5_5A5A);
    let mut total = 0.0;
    let slices = opts.slices.max(1);
    for _ in 0..slices {
        let mut dir: Vec<f64> = (0..w).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|a| *a /= norm);
        let order = |c: &PointCloud| {
            let proj: Vec<f64> = (0..n).map(|k| c.point(k).iter().zip(&dir).map(|(a, b)| a * b).sum()).collect();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
            idx
        };
        let (ox, oy) = (order(x), order(y));
        let costs = ox
            .iter()
            .zip(&oy)
            .map(|(&a, &b)| block_cost(x.point(a), y.point(b), x.j(), x.d(), opts.truncated))
            .collect();
        total += canonical_mean(costs);
    }
    total / slices as f64
}

/// Exact truncated distance between two scalar samples of equal size.
///
/// With `w(x, y) = (1 - |x - y|)_+` the matching cost is `n - Σ w`, and an
/// optimal matching can be taken non-crossing: among pairs closer than 1
/// the untruncated cost is Monge, and swapping a crossing pair never
/// lowers `Σ w`. A longest-common-subsequence style recursion over the
/// sorted samples then finds the best partial matching. Plain sorted
/// matching is optimal only when the pooled spread is at most 1.
pub fn w1_1d(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_shapes(x, y)?;
    if x.j() != 1 || x.d() != 1 {
        return Err(invalid("w1_1d needs scalar samples (j = 1, d = 1)"));
    }
    if x.n() != y.n() {
        return Err(invalid(format!("w1_1d needs equal sizes, got {} and {}", x.n(), y.n())));
    }
    Ok(w1_1d_values(x.as_slice(), y.as_slice()))
}

fn w1_1d_values(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let lo = xs[0].min(ys[0]);
    let hi = xs[n - 1].max(ys[n - 1]);
    if hi - lo <= 1.0 {
        let costs = xs.iter().zip(&ys).map(|(a, b)| (a - b).abs()).collect();
        return canonical_mean(costs);
    }
    let w = |a: f64, b: f64| (1.0 - (a - b).abs()).max(0.0);
    if n <= TRACEBACK_LIMIT {
        // 0: skip x, 1: skip y, 2: match.
        let mut dir = vec![0u8; n * n];
        let mut prev = vec![0.0f64; n + 1];
        let mut cur = vec![0.0f64; n + 1];
        for i in 1..=n {
            cur[0] = 0.0;
            for k in 1..=n {
                let skip_x = prev[k];
                let skip_y = cur[k - 1];
                let wk = w(xs[i - 1], ys[k - 1]);
                let matched = if wk > 0.0 { prev[k - 1] + wk } else { f64::NEG_INFINITY };
                let (best, code) = if matched > skip_x && matched > skip_y {
                    (matched, 2)
                } else if skip_x >= skip_y {
                    (skip_x, 0)
                } else {
                    (skip_y, 1)
                };
                cur[k] = best;
                dir[(i - 1) * n + (k - 1)] = code;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let mut costs = Vec::with_capacity(n);
        let (mut i, mut k) = (n, n);
        while i > 0 && k > 0 {
            match dir[(i - 1) * n + (k - 1)] {
                2 => {
                    costs.push((xs[i - 1] - ys[k - 1]).abs());
                    i -= 1;
                    k -= 1;
                }
                0 => i -= 1,
                _ => k -= 1,
            }
        }
        costs.resize(n, 1.0);
        return canonical_mean(costs);
    }
    let mut prev = vec![0.0f64; n + 1];
    let mut cur = vec![0.0f64; n + 1];
    for i in 1..=n {
        cur[0] = 0.0;
        for k in 1..=n {
            let wk = w(xs[i - 1], ys[k - 1]);
            cur[k] = prev[k].max(cur[k - 1]).max(prev[k - 1] + wk);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (n as f64 - prev[n]) / n as f64
}

/// Minimum over all `n!` matchings. Test oracle; `n ≤ 9`.
pub fn w1_brute_force(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_shapes(x, y)?;
    let n = x.n();
    if n != y.n() || n > 9 {
        return Err(invalid("brute force needs equal sizes n <= 9"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let eval = |p: &[usize]| {
        canonical_mean(p.iter().enumerate().map(|(a, &b)| cost(x.point(a), y.point(b), x.j(), x.d())).collect())
    };
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn cloud(v: &[f64], j: usize, d: usize) -> PointCloud {
        PointCloud::new(v.to_vec(), j, d).unwrap()
    }

    #[test]
    fn documented_values() {
        let o = W1Options::default();
        let x = cloud(&[0.0, 0.4], 1, 1);
        let y = cloud(&[0.1, 0.5], 1, 1);
        assert!((w1_empirical(&x, &y, &o).unwrap().value - 0.1).abs() < 1e-15);
        assert_eq!(w1_empirical(&cloud(&[0.0], 1, 1), &cloud(&[5.0], 1, 1), &o).unwrap().value, 1.0);
        assert_eq!(w1_empirical(&x, &x, &o).unwrap().value, 0.0);
    }

    #[test]
    fn sorted_matching_is_not_optimal_under_truncation() {
        let x = cloud(&[0.0, 0.99], 1, 1);
        let y = cloud(&[0.99, 1.98], 1, 1);
        let exact = w1_1d(&x, &y).unwrap();
        assert!((exact - 0.5).abs() < 1e-15);
        assert_eq!(exact, w1_brute_force(&x, &y).unwrap());
    }

    #[test]
    fn one_dimensional_solver_matches_brute_force() {
        let mut rng = stream(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let x = cloud(&(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(), 1, 1);
            let y = cloud(&(0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>(), 1, 1);
            assert_eq!(w1_1d(&x, &y).unwrap(), w1_brute_force(&x, &y).unwrap());
        }
    }

    #[test]
    fn large_one_dimensional_paths_agree() {
        let mut rng = stream(4);
        let n = 300;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let dp = w1_1d_values(&x, &y);
        let lap = {
            let (cx, cy) = (cloud(&x, 1, 1), cloud(&y, 1, 1));
            let a = assignment::solve(n, |p, q| cost(cx.point(p), cy.point(q), 1, 1));
            canonical_mean(a.iter().enumerate().map(|(p, &q)| cost(cx.point(p), cy.point(q), 1, 1)).collect())
        };
        assert!((dp - lap).abs() < 1e-12);
    }

    #[test]
    fn translation_of_tight_cloud() {
        let x = cloud(&[0.0, 0.1, 0.2, 0.3], 1, 1);
        let shifted = cloud(&[0.25, 0.35, 0.45, 0.55], 1, 1);
        assert!((w1_1d(&x, &shifted).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sliced_approximation_is_an_upper_bound() {
        let mut rng = stream(5);
        let n = 64;
        let x = cloud(&(0..n * 3).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>(), 1, 3);
        let y = cloud(&(0..n * 3).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>(), 1, 3);
        let exact = w1_empirical(&x, &y, &W1Options::default()).unwrap();
        let approx = w1_empirical(&x, &y, &W1Options { n_exact: 10, ..Default::default() }).unwrap();
        assert!(!exact.approximate && approx.approximate);
        assert!(approx.value >= exact.value - 1e-12);
    }

    #[test]
    fn unequal_sizes_are_resampled() {
        let x = cloud(&[0.0, 0.1, 0.2], 1, 1);
        let y = cloud(&[0.0, 0.1], 1, 1);
        assert!(w1_empirical(&x, &y, &W1Options::default()).unwrap().resampled);
        assert!(w1_empirical(&x, &cloud(&[0.0, 0.0], 1, 2), &W1Options::default()).is_err());
    }
}
