//! Kozachenko–Leonenko nearest-neighbour entropy estimates.
//!
//! `Ĥ = ψ(n) - ψ(k) + log V_D + (D/n) Σ log ε_i`, with `ε_i` the distance
//! from point `i` to its `k`-th nearest neighbour and `V_D` the volume of
//! the unit ball in `R^D`.

use kiddo::float::kdtree::KdTree;
use kiddo::SquaredEuclidean;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use super::omega::{sample_sd, Estimate};
use super::PointCloud;
use crate::error::{invalid, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub k: usize,
    pub bootstrap: usize,
    /// Consecutive points resampled together (e.g. the particles of one
    /// replica); 1 for i.i.d. samples.
    pub block_size: usize,
    pub seed: u64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { k: 4, bootstrap: 200, block_size: 1, seed: 0xE7 }
    }
}

pub const MIN_POINTS: usize = 50;
const JITTER: f64 = 1e-12;

/// Distinct copies of the points: exact duplicates are moved by a
/// deterministic relative offset of order `1e-12`. Returns the number of
/// moved points, or `None` when every point is the same.
fn dejitter(cloud: &PointCloud) -> Option<(Vec<f64>, usize)> {
    let w = cloud.width();
    let n = cloud.n();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        cloud
            .point(a)
            .iter()
            .zip(cloud.point(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut pts = cloud.as_slice().to_vec();
    let mut moved = 0;
    let mut rng = stream(0x717);
    let mut distinct = 1;
    for k in 1..n {
        if cloud.point(idx[k]) == cloud.point(idx[k - 1]) {
            moved += 1;
            let p = &mut pts[idx[k] * w..(idx[k] + 1) * w];
            for x in p.iter_mut() {
                *x += JITTER * (1.0 + x.abs()) * rng.gen_range(-1.0..1.0);
            }
        } else {
            distinct += 1;
        }
    }
    if distinct == 1 {
        None
    } else {
        Some((pts, moved))
    }
}

fn kth_distances<const K: usize>(pts: &[f64], k: usize) -> Vec<f64> {
    let n = pts.len() / K;
    let mut tree: KdTree<f64, u64, K, 256, u32> = KdTree::with_capacity(n);
    let rows: Vec<[f64; K]> = pts.chunks_exact(K).map(|c| c.try_into().unwrap()).collect();
    for (i, p) in rows.iter().enumerate() {
        tree.add(p, i as u64);
    }
    rows.par_iter().map(|p| tree.nearest_n::<SquaredEuclidean>(p, k + 1)[k].distance.sqrt()).collect()
}

fn kth_distances_brute(pts: &[f64], w: usize, k: usize) -> Vec<f64> {
    let n = pts.len() / w;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = &pts[i * w..(i + 1) * w];
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| pts[j * w..(j + 1) * w].iter().zip(pi).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[k - 1].sqrt()
        })
        .collect()
}

/// Distances from each point to its `k`-th nearest neighbour.
pub fn knn_distances(pts: &[f64], w: usize, k: usize) -> Vec<f64> {
    match w {
        1 => kth_distances::<1>(pts, k),
        2 => kth_distances::<2>(pts, k),
        3 => kth_distances::<3>(pts, k),
        4 => kth_distances::<4>(pts, k),
        5 => kth_distances::<5>(pts, k),
        6 => kth_distances::<6>(pts, k),
        _ => kth_distances_brute(pts, w, k),
    }
}

/// Log-volume of the unit ball in `R^D`.
fn log_unit_ball(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

/// Per-point terms `t_i` with `Ĥ = c + mean(t_i)`, plus the constant `c`
/// and the jitter count.
fn entropy_terms(cloud: &PointCloud, opts: &EntropyOptions) -> Result<Option<(f64, Vec<f64>, usize)>> {
    let n = cloud.n();
    if n < MIN_POINTS {
        return Err(invalid(format!("entropy estimation needs at least {MIN_POINTS} points, got {n}")));
    }
    if opts.k == 0 || opts.k >= n {
        return Err(invalid(format!("neighbour order k = {} must lie in 1..{n}", opts.k)));
    }
    let Some((pts, moved)) = dejitter(cloud) else {
        return Ok(None);
    };
    let w = cloud.width();
    let eps = knn_distances(&pts, w, opts.k);
    let constant = digamma(n as f64) - digamma(opts.k as f64) + log_unit_ball(w);
    let terms = eps.iter().map(|e| w as f64 * e.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(Some((constant, terms, moved)))
}

/// Standard error of a mean by block bootstrap.
pub(crate) fn block_bootstrap_se(terms: &[f64], block: usize, rounds: usize, seed: u64) -> f64 {
    let block = block.max(1);
    let blocks: Vec<f64> = terms.chunks(block).map(|c| c.iter().sum::<f64>()).collect();
    let sizes: Vec<usize> = terms.chunks(block).map(|c| c.len()).collect();
    let m = blocks.len();
    if m < 2 || rounds < 2 {
        return f64::NAN;
    }
    let mut rng = stream(seed);
    let means: Vec<f64> = (0..rounds)
        .map(|_| {
            let (mut s, mut c) = (0.0, 0usize);
            for _ in 0..m {
                let b = rng.gen_range(0..m);
                s += blocks[b];
                c += sizes[b];
            }
            s / c as f64
        })
        .collect();
    sample_sd(&means)
}

fn estimate(value: f64, stderr: f64, n: usize, moved: usize, replicates: usize) -> Estimate {
    let mut flags = Vec::new();
    if moved > 0 {
        flags.push(format!("jittered {moved} duplicate points"));
    }
    Estimate { value, stderr, raw: value, baseline: 0.0, n, replicates, approximate: false, flags }
}

fn degenerate(n: usize) -> Estimate {
    Estimate {
        value: f64::NEG_INFINITY,
        stderr: f64::NAN,
        raw: f64::NEG_INFINITY,
        baseline: 0.0,
        n,
        replicates: 0,
        approximate: false,
        flags: vec!["degenerate: all points equal".into()],
    }
}

/// Differential entropy of the law behind the cloud (points of `R^{jd}`).
/// All points equal gives `-∞` with a `degenerate` flag.
pub fn entropy_knn(cloud: &PointCloud, opts: &EntropyOptions) -> Result<Estimate> {
    let Some((c, terms, moved)) = entropy_terms(cloud, opts)? else {
        return Ok(degenerate(cloud.n()));
    };
    let mean = terms.iter().sum::<f64>() / terms.len() as f64;
    let se = block_bootstrap_se(&terms, opts.block_size, opts.bootstrap, opts.seed);
    Ok(estimate(c + mean, se, cloud.n(), moved, opts.bootstrap))
}

/// `H(f | γ) = -H(f) - E_f log γ`, with `γ` the standard Gaussian.
pub fn rel_entropy_to_gaussian(cloud: &PointCloud, opts: &EntropyOptions) -> Result<Estimate> {
    let Some((c, terms, moved)) = entropy_terms(cloud, opts)? else {
        let mut e = degenerate(cloud.n());
        e.value = f64::INFINITY;
        e.raw = f64::INFINITY;
        return Ok(e);
    };
    let w = cloud.width();
    let log_norm = -0.5 * w as f64 * (2.0 * std::f64::consts::PI).ln();
    let combined: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let p = cloud.point(i);
            let log_gamma = log_norm - 0.5 * p.iter().map(|x| x * x).sum::<f64>();
            -t - log_gamma
        })
        .collect();
    let mean = combined.iter().sum::<f64>() / combined.len() as f64;
    let se = block_bootstrap_se(&combined, opts.block_size, opts.bootstrap, opts.seed);
    Ok(estimate(mean - c, se, cloud.n(), moved, opts.bootstrap))
}
