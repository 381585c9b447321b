//! Gauss quadrature rules built with the Golub–Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Nodes and weights of a Gauss rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Golub–Welsch: Jacobi matrix with diagonal `a` and off-diagonal `b`,
/// zeroth moment `mu0`.
fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> Rule {
    let n = a.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = a[i];
        if i + 1 < n {
            j[(i, i + 1)] = b[i];
            j[(i + 1, i)] = b[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}

/// Gauss–Legendre on [-1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    let a = vec![0.0; n];
    let b: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&a, &b, 2.0)
}

/// Gauss–Legendre mapped to [lo, hi].
pub fn gauss_legendre_on(n: usize, lo: f64, hi: f64) -> Rule {
    let base = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Rule {
        nodes: base.nodes.iter().map(|x| mid + half * x).collect(),
        weights: base.weights.iter().map(|w| w * half).collect(),
    }
}

/// Generalized Gauss–Laguerre: weight `x^alpha e^{-x}` on (0, ∞).
pub fn gauss_laguerre(n: usize, alpha: f64) -> Rule {
    let a: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let b: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            (k * (k + alpha)).sqrt()
        })
        .collect();
    golub_welsch(&a, &b, ln_gamma(alpha + 1.0).exp())
}

/// Gauss–Gegenbauer: weight `(1 - x²)^(lambda - 1/2)` on [-1, 1], lambda > -1/2.
pub fn gauss_gegenbauer(n: usize, lambda: f64) -> Rule {
    if lambda.abs() < 1e-15 {
        // Chebyshev of the first kind, lambda = 0 limit.
        let nodes = (0..n).map(|k| -((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()).collect();
        return Rule { nodes, weights: vec![std::f64::consts::PI / n as f64; n] };
    }
    let a = vec![0.0; n];
    let b: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            (k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0))).sqrt()
        })
        .collect();
    let mu0 = (0.5 * std::f64::consts::PI.ln() + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp();
    golub_welsch(&a, &b, mu0)
}

/// Composite Gauss–Legendre on [lo, hi] with `panels` equal panels.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let base = gauss_legendre(order);
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            base.nodes.iter().zip(&base.weights).map(|(x, w)| w * 0.5 * h * f(mid + 0.5 * h * x)).sum::<f64>()
        })
        .sum()
}
