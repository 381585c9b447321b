//! Rate fits: power laws in `N`, exponential decay in time, rank correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};

/// Fit of `est ≈ C · N^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Two-sided confidence interval for the slope.
    pub ci: (f64, f64),
    pub level: f64,
    /// Reduced chi-square of the weighted fit; the covariance is inflated
    /// by it when it exceeds 1.
    pub birge: f64,
    pub used: usize,
    pub warnings: Vec<String>,
}

impl RateFit {
    pub fn contains(&self, slope: f64) -> bool {
        self.ci.0 <= slope && slope <= self.ci.1
    }
}

/// Weighted least squares of `log est` on `log N` with weights
/// `(est / se)²`. Nonpositive estimates are dropped with a warning; at least
/// four distinct `N` spanning two octaves must remain.
pub fn lln_rate_fit(points: &[(f64, f64, f64)], level: f64) -> Result<RateFit> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level {level} must lie in (0, 1)")));
    }
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for &(n, est, se) in points {
        if !(n > 0.0) || !est.is_finite() {
            return Err(invalid(format!("bad point N = {n}, estimate = {est}")));
        }
        if est <= 0.0 {
            warnings.push(format!("dropped nonpositive estimate {est:.3e} at N = {n}"));
            continue;
        }
        kept.push((n, est, se));
    }
    let mut distinct: Vec<f64> = kept.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(invalid(format!("rate fit needs 4 distinct N with positive estimates, got {}", distinct.len())));
    }
    if distinct[distinct.len() - 1] / distinct[0] < 4.0 {
        return Err(invalid("rate fit needs N spanning at least two octaves"));
    }
    let uniform = kept.iter().any(|p| !(p.2 > 0.0 && p.2.is_finite()));
    if uniform {
        warnings.push("missing standard errors; unweighted fit".into());
    }
    let rows: Vec<(f64, f64, f64)> =
        kept.iter().map(|&(n, est, se)| (n.ln(), est.ln(), if uniform { 1.0 } else { (est / se).powi(2) })).collect();
    let sw: f64 = rows.iter().map(|r| r.2).sum();
    let xm = rows.iter().map(|r| r.2 * r.0).sum::<f64>() / sw;
    let ym = rows.iter().map(|r| r.2 * r.1).sum::<f64>() / sw;
    let sxx: f64 = rows.iter().map(|r| r.2 * (r.0 - xm).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| r.2 * (r.0 - xm) * (r.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let m = rows.len();
    let dof = (m - 2) as f64;
    let chi2: f64 = rows.iter().map(|r| r.2 * (r.1 - intercept - slope * r.0).powi(2)).sum();
    let birge = chi2 / dof;
    let inflate = if uniform { birge } else { birge.max(1.0) };
    let slope_se = (inflate / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("dof is positive").inverse_cdf(0.5 + level / 2.0);
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        ci: (slope - t * slope_se, slope + t * slope_se),
        level,
        birge,
        used: m,
        warnings,
    })
}

/// Fit of `y ≈ A e^{-rate · t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub amplitude: f64,
    /// Coefficient of determination of the semi-log fit.
    pub r_squared: f64,
    pub used: usize,
}

/// Ordinary least squares of `log y` on `t`, over points with `y > 0`.
pub fn exp_decay_fit(t: &[f64], y: &[f64]) -> Result<ExpFit> {
    if t.len() != y.len() {
        return Err(invalid("time and value series differ in length"));
    }
    let rows: Vec<(f64, f64)> =
        t.iter().zip(y).filter(|(_, &v)| v > 0.0 && v.is_finite()).map(|(&a, &b)| (a, b.ln())).collect();
    if rows.len() < 3 {
        return Err(invalid(format!("decay fit needs 3 positive values, got {}", rows.len())));
    }
    let m = rows.len() as f64;
    let xm = rows.iter().map(|r| r.0).sum::<f64>() / m;
    let ym = rows.iter().map(|r| r.1).sum::<f64>() / m;
    let sxx: f64 = rows.iter().map(|r| (r.0 - xm).powi(2)).sum();
    let sxy: f64 = rows.iter().map(|r| (r.0 - xm) * (r.1 - ym)).sum();
    let syy: f64 = rows.iter().map(|r| (r.1 - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("decay fit needs distinct times"));
    }
    let b = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExpFit { rate: -b, amplitude: (ym - b * xm).exp(), r_squared, used: rows.len() })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `NaN` when a
/// series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let m = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let vx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [64.0, 128.0, 256.0, 512.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5), 0.01)).collect();
        let f = lln_rate_fit(&pts, 0.95).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.contains(-0.5));
    }

    #[test]
    fn drops_nonpositive_and_requires_span() {
        let mut pts: Vec<_> = [64.0, 128.0, 256.0, 512.0].iter().map(|&n: &f64| (n, n.powf(-1.0), 1e-4)).collect();
        pts.push((1024.0, -1e-4, 1e-4));
        let f = lln_rate_fit(&pts, 0.95).unwrap();
        assert_eq!(f.used, 4);
        assert_eq!(f.warnings.len(), 1);
        let narrow: Vec<_> = [64.0, 80.0, 100.0, 120.0].iter().map(|&n| (n, 1.0 / n, 0.1)).collect();
        assert!(lln_rate_fit(&narrow, 0.95).is_err());
        assert!(lln_rate_fit(&pts[..3], 0.95).is_err());
    }

    #[test]
    fn decay_fit() {
        let t: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|s| 2.0 * (-0.7 * s).exp()).collect();
        let f = exp_decay_fit(&t, &y).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-12 && (f.amplitude - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 2.0]);
        assert!((r - 0.894_427_190_999_915_9).abs() < 1e-12);
    }
}
