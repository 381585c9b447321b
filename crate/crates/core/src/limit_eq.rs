//! Mean-field references: the Maxwellian, the BKW profile and the closed
//! moment equations for Maxwell kernels.
//!
//! Units: mean zero and unit variance per component, so the equilibrium is
//! the standard Gaussian `γ` and the energy per particle is `d`.
//!
//! For a Maxwell kernel the fourth moment obeys
//! `m4' = -λ4 (m4 - (d+2)/d · m2²)` with `λ4 = κ (1 - E cos²θ) / 2`, where
//! `κ` is the per-particle collision rate of the particle system. The BKW
//! family `f = G_K (A + B|v|²)` solves the equation with
//! `1 - K(t) ∝ e^{-λ4 t / 2}`. The rate is never hard-coded: it is
//! calibrated by quadrature of the collision integral on non-Gaussian test
//! states.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kac_process::{EnsembleLaw, TimeScale};
use crate::kernels::{self, CollisionKernel, KernelVariant, OneDimCollision};
use crate::quadrature;

/// Standard Gaussian density in `d = v.len()` dimensions.
pub fn maxwellian_density(v: &[f64]) -> f64 {
    let d = v.len() as f64;
    (2.0 * std::f64::consts::PI).powf(-d / 2.0) * (-0.5 * kernels::dot(v, v)).exp()
}

/// `G_K(v) (A + B|v|²)` with `G_K = N(0, K I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkwProfile {
    pub dim: usize,
    pub k: f64,
    a: f64,
    b: f64,
    /// Variance of the Gaussian proposal.
    proposal_var: f64,
    /// `log` of the peak of `f/g` over `|v|²`, minus the constant factor.
    envelope: f64,
}

impl BkwProfile {
    /// Smallest admissible shape, `d/(d+2)`: below it `A < 0`.
    pub fn k_min(dim: usize) -> f64 {
        dim as f64 / (dim as f64 + 2.0)
    }

    pub fn new(dim: usize, k: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let kmin = Self::k_min(dim);
        if !(k >= kmin - 1e-14 && k <= 1.0) {
            return Err(Error::InvalidInput(format!("BKW shape K = {k} must lie in [{kmin}, 1]")));
        }
        let d = dim as f64;
        let a = (((d + 2.0) * k - d) / (2.0 * k)).max(0.0);
        let b = (1.0 - k) / (2.0 * k * k);
        let mut p = Self { dim, k, a, b, proposal_var: k, envelope: 0.0 };
        if b > 1e-15 {
            let (s2, log_m) = golden_min(|ls2| p.log_bound(ls2.exp()), (k * (1.0 + 1e-6)).ln(), (6.0 * k).ln());
            p.proposal_var = s2.exp();
            p.envelope = log_m;
        }
        Ok(p)
    }

    /// `e^{-c x} (A + B x)` at its maximum over `x = |v|² ≥ 0`, with
    /// `c = (1/K - 1/s²)/2`; returns `(x*, log peak)`.
    fn peak(&self, s2: f64) -> (f64, f64) {
        let c = 0.5 * (1.0 / self.k - 1.0 / s2);
        let x = if self.b > 0.0 { (1.0 / c - self.a / self.b).max(0.0) } else { 0.0 };
        (x, -c * x + (self.a + self.b * x).ln())
    }

    /// `log sup f/g` for a `N(0, s² I)` proposal.
    fn log_bound(&self, s2: f64) -> f64 {
        0.5 * self.dim as f64 * (s2 / self.k).ln() + self.peak(s2).1
    }

    pub fn density(&self, v: &[f64]) -> f64 {
        let r2 = kernels::dot(v, v);
        (2.0 * std::f64::consts::PI * self.k).powf(-(self.dim as f64) / 2.0)
            * (-r2 / (2.0 * self.k)).exp()
            * (self.a + self.b * r2)
    }

    /// `E|v|⁴ = d(d+2) K (2 - K)`.
    pub fn fourth_moment(&self) -> f64 {
        let d = self.dim as f64;
        d * (d + 2.0) * self.k * (2.0 - self.k)
    }

    /// Expected acceptance rate of [`Self::sample_into`].
    pub fn acceptance_rate(&self) -> f64 {
        if self.b <= 1e-15 {
            1.0
        } else {
            (-self.envelope).exp()
        }
    }

    pub fn proposal_variance(&self) -> f64 {
        self.proposal_var
    }

    /// Exact draw by rejection from `N(0, s² I)`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> usize {
        let s = self.proposal_var.sqrt();
        if self.b <= 1e-15 {
            out.iter_mut().for_each(|x| *x = s * rng.sample::<f64, _>(StandardNormal));
            return 1;
        }
        let c = 0.5 * (1.0 / self.k - 1.0 / self.proposal_var);
        let log_peak = self.peak(self.proposal_var).1;
        let mut tries = 0;
        loop {
            tries += 1;
            out.iter_mut().for_each(|x| *x = s * rng.sample::<f64, _>(StandardNormal));
            let x = kernels::dot(out, out);
            let log_ratio = -c * x + (self.a + self.b * x).ln() - log_peak;
            if rng.gen::<f64>().ln() < log_ratio {
                return tries;
            }
        }
    }

    /// `H(f | γ)` by generalized Gauss–Laguerre quadrature in `x = |v|²/(2K)`.
    pub fn relative_entropy(&self, nodes: usize) -> f64 {
        let d = self.dim as f64;
        let k = self.k;
        let rule = quadrature::gauss_laguerre(nodes, d / 2.0 - 1.0);
        rule.integrate(|x| {
            let q = self.a + 2.0 * self.b * k * x;
            if q <= 0.0 {
                return 0.0;
            }
            q * (-0.5 * d * k.ln() - x + k * x + q.ln())
        }) / gamma(d / 2.0)
    }
}

/// Golden-section minimum of a unimodal `f` on `[lo, hi]`: `(argmin, min)`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Per-particle collision rate `κ` of the limit equation.
pub fn collision_frequency(kernel: &CollisionKernel, time_scale: TimeScale, dim: usize) -> f64 {
    let per_pair = match time_scale {
        TimeScale::Ordered => 2.0,
        TimeScale::Half => 1.0,
    };
    per_pair * kernel.angular_mass(dim)
}

/// A centered isotropic Gaussian scale mixture `Σ w_k N(0, s_k² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMixture {
    pub components: Vec<(f64, f64)>,
}

impl ScaleMixture {
    pub fn m2(&self, d: usize) -> f64 {
        self.components.iter().map(|(w, s2)| w * d as f64 * s2).sum()
    }

    pub fn m4(&self, d: usize) -> f64 {
        let d = d as f64;
        self.components.iter().map(|(w, s2)| w * d * (d + 2.0) * s2 * s2).sum()
    }
}

fn check_maxwell(kernel: &CollisionKernel) -> Result<()> {
    if !kernel.is_maxwellian() {
        return Err(Error::Unsupported(
            "moment equations do not close for hard spheres; use an empirical large-N reference".into(),
        ));
    }
    Ok(())
}

/// `⟨Q(f, f), |v|⁴⟩` for a Gaussian scale mixture, by quadrature over
/// `a = |v|²`, `b = |v_*|²` and the cosine between `v` and `v_*`.
pub fn collision_fourth_moment(
    kernel: &CollisionKernel,
    time_scale: TimeScale,
    dim: usize,
    state: &ScaleMixture,
) -> Result<f64> {
    check_maxwell(kernel)?;
    kernel.validate(dim)?;
    let kappa = collision_frequency(kernel, time_scale, dim);
    let d = dim as f64;
    let radial = quadrature::gauss_laguerre(24, d / 2.0 - 1.0);
    let norm = gamma(d / 2.0);
    let mut total = 0.0;
    for &(wi, si) in &state.components {
        for &(wj, sj) in &state.components {
            let mut acc = 0.0;
            for (&x, &wx) in radial.nodes.iter().zip(&radial.weights) {
                for (&y, &wy) in radial.nodes.iter().zip(&radial.weights) {
                    let (a, b) = (2.0 * si * x, 2.0 * sj * y);
                    acc += wx * wy / (norm * norm) * fourth_moment_gain(kernel, dim, a, b)?;
                }
            }
            total += wi * wj * acc;
        }
    }
    Ok(kappa * total)
}

/// `E_σ |v'|⁴ - |v|⁴` averaged over the angle between `v` and `v_*`, given
/// `a = |v|²`, `b = |v_*|²`.
fn fourth_moment_gain(kernel: &CollisionKernel, dim: usize, a: f64, b: f64) -> Result<f64> {
    if dim == 1 {
        return Ok(match kernel.one_dim {
            // (v, w) → rotation by a uniform angle: E v'⁴ = 3/8 (v² + w²)².
            OneDimCollision::KacRotation => 0.375 * (a + b) * (a + b) - a * a,
            // Keeps or swaps with probability 1/2.
            OneDimCollision::Exchange => 0.5 * (b * b - a * a),
        });
    }
    let (m1, m2) = kernel.angular_moments(dim);
    let d = dim as f64;
    let cosines = quadrature::gauss_gegenbauer(12, (d - 2.0) / 2.0);
    let cmass: f64 = cosines.weights.iter().sum();
    // With c = (v+v_*)/2, r = |v - v_*|, u the relative direction:
    // |v'|² = |c|² + r²/4 + r c·σ, r c·u = (a - b)/2, |c|² + r²/4 = (a + b)/2,
    // r²|c|² = ((a + b)² - 4p²)/4 where p = v·v_*.
    Ok(cosines.integrate(|eta| {
        let p2 = a * b * eta * eta;
        let s = 0.5 * (a + b);
        s * s + m1 * (a * a - b * b) / 2.0 + m2 * (a - b) * (a - b) / 4.0 + (1.0 - m2) / (d - 1.0) * (a * b - p2)
            - a * a
    }) / cmass)
}

/// Fourth-moment relaxation rate `λ4`, calibrated on a non-Gaussian test state.
pub fn calibrate_fourth_moment_rate(kernel: &CollisionKernel, time_scale: TimeScale, dim: usize) -> Result<f64> {
    let state = ScaleMixture { components: vec![(0.5, 0.4), (0.5, 1.6)] };
    let q4 = collision_fourth_moment(kernel, time_scale, dim, &state)?;
    let d = dim as f64;
    let excess = state.m4(dim) - (d + 2.0) / d * state.m2(dim).powi(2);
    Ok(-q4 / excess)
}

/// Second and fourth moments at time `t` from `(m2, m4)` at time 0, by RK4
/// integration of the closed moment equations.
pub fn moment_ode(
    kernel: &CollisionKernel,
    time_scale: TimeScale,
    dim: usize,
    initial: (f64, f64),
    t: f64,
) -> Result<(f64, f64)> {
    let lambda = calibrate_fourth_moment_rate(kernel, time_scale, dim)?;
    Ok(integrate_moments(lambda, dim, initial, t))
}

pub(crate) fn integrate_moments(lambda: f64, dim: usize, (m2, m4): (f64, f64), t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (m2, m4);
    }
    let d = dim as f64;
    let target = (d + 2.0) / d * m2 * m2;
    let rhs = |m: f64| -lambda * (m - target);
    let steps = ((t / 1e-3).ceil() as usize).max(1);
    let h = t / steps as f64;
    let mut m = m4;
    for _ in 0..steps {
        let k1 = rhs(m);
        let k2 = rhs(m + 0.5 * h * k1);
        let k3 = rhs(m + 0.5 * h * k2);
        let k4 = rhs(m + h * k3);
        m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    (m2, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    Maxwellian,
    /// `K(t) = 1 - (1 - K_min) e^{-mu (t - t0)}`.
    Bkw {
        mu: f64,
        t0: f64,
    },
    /// Closed second/fourth moment trajectory.
    MomentTrack {
        lambda4: f64,
        m2: f64,
        m4: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub dim: usize,
}

impl ReferenceSolution {
    pub fn maxwellian(dim: usize) -> Self {
        Self { kind: ReferenceKind::Maxwellian, dim }
    }

    /// BKW solution with calibrated rate, starting at `K_min` at time `t0`.
    pub fn bkw(kernel: &CollisionKernel, time_scale: TimeScale, dim: usize, t0: f64) -> Result<Self> {
        if matches!(kernel.variant, KernelVariant::HardSpheres) {
            return Err(Error::Unsupported("the BKW solution exists for Maxwell kernels only".into()));
        }
        let lambda4 = calibrate_fourth_moment_rate(kernel, time_scale, dim)?;
        Ok(Self { kind: ReferenceKind::Bkw { mu: lambda4 / 2.0, t0 }, dim })
    }

    pub fn moment_track(kernel: &CollisionKernel, time_scale: TimeScale, dim: usize, m2: f64, m4: f64) -> Result<Self> {
        let lambda4 = calibrate_fourth_moment_rate(kernel, time_scale, dim)?;
        Ok(Self { kind: ReferenceKind::MomentTrack { lambda4, m2, m4 }, dim })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if let ReferenceKind::Bkw { t0, .. } = self.kind {
            if t < t0 {
                return Err(Error::OutOfValidity { t, t0 });
            }
        }
        Ok(())
    }

    pub fn k_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self.kind {
            ReferenceKind::Bkw { mu, t0 } => 1.0 - (1.0 - BkwProfile::k_min(self.dim)) * (-mu * (t - t0)).exp(),
            _ => 1.0,
        })
    }

    /// The one-particle profile at time `t`.
    pub fn profile(&self, t: f64) -> Result<BkwProfile> {
        match self.kind {
            ReferenceKind::MomentTrack { .. } => Err(Error::Unsupported("a moment track has no density".into())),
            _ => BkwProfile::new(self.dim, self.k_at(t)?),
        }
    }

    pub fn density(&self, t: f64, v: &[f64]) -> Result<f64> {
        Ok(self.profile(t)?.density(v))
    }

    pub fn fourth_moment(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        match self.kind {
            ReferenceKind::MomentTrack { lambda4, m2, m4 } => Ok(integrate_moments(lambda4, self.dim, (m2, m4), t).1),
            _ => Ok(self.profile(t)?.fourth_moment()),
        }
    }
}

/// Pooled one-particle velocities of an ensemble at one grid time, used as
/// the reference `f_t` where no closed form exists (hard spheres).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalReference {
    pub dim: usize,
    pub time: f64,
    pub points: Vec<f64>,
}

impl EmpiricalReference {
    pub fn from_ensemble(ensemble: &EnsembleLaw, t_index: usize) -> Result<Self> {
        if t_index >= ensemble.grid.len() {
            return Err(Error::InvalidInput(format!("time index {t_index} outside the grid")));
        }
        let mut points = Vec::with_capacity(ensemble.r() * ensemble.n * ensemble.dim);
        for r in 0..ensemble.r() {
            points.extend_from_slice(ensemble.frame(r, t_index));
        }
        Ok(Self { dim: ensemble.dim, time: ensemble.grid[t_index], points })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let i = rng.gen_range(0..self.len());
        out.copy_from_slice(&self.points[i * self.dim..(i + 1) * self.dim]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn maxwellian_at_origin_and_moments() {
        let v = maxwellian_density(&[0.0, 0.0, 0.0]);
        assert!((v - (2.0 * std::f64::consts::PI).powf(-1.5)).abs() < 1e-15);
        // Radial quadrature: ∫ γ = 1 and ∫ |v|² γ = 3.
        let area = kernels::sphere_area(3);
        let rule = quadrature::gauss_legendre_on(80, 0.0, 12.0);
        let mass = rule.integrate(|r| area * r * r * maxwellian_density(&[r, 0.0, 0.0]));
        let second = rule.integrate(|r| area * r.powi(4) * maxwellian_density(&[r, 0.0, 0.0]));
        assert!((mass - 1.0).abs() < 1e-8);
        assert!((second / 3.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn three_dimensional_rate_matches_closed_form() {
        let mg = CollisionKernel::maxwell_cutoff();
        let lambda = calibrate_fourth_moment_rate(&mg, TimeScale::Ordered, 3).unwrap();
        assert!((lambda - 2.0 / 3.0).abs() < 1e-12, "{lambda}");
        let half = calibrate_fourth_moment_rate(&mg, TimeScale::Half, 3).unwrap();
        assert!((half - 1.0 / 3.0).abs() < 1e-12);
        let one_d = calibrate_fourth_moment_rate(&mg, TimeScale::Ordered, 1).unwrap();
        assert!((one_d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fourth_moment_equation_closes() {
        // Two different test states give the same rate.
        let mg = CollisionKernel::true_maxwell(0.2, 1.0).unwrap();
        let d = 3;
        let rate = |s: ScaleMixture| {
            let q = collision_fourth_moment(&mg, TimeScale::Ordered, d, &s).unwrap();
            -q / (s.m4(d) - 5.0 / 3.0 * s.m2(d).powi(2))
        };
        let r1 = rate(ScaleMixture { components: vec![(0.5, 0.4), (0.5, 1.6)] });
        let r2 = rate(ScaleMixture { components: vec![(0.2, 0.3), (0.5, 1.0), (0.3, 2.5)] });
        assert!((r1 - r2).abs() < 1e-10 * r1);
        let (_, m2) = mg.angular_moments(3);
        assert!((r1 - (1.0 - m2)).abs() < 1e-10);
        // Gaussian states are fixed points.
        let q = collision_fourth_moment(&mg, TimeScale::Ordered, d, &ScaleMixture { components: vec![(1.0, 1.0)] })
            .unwrap();
        assert!(q.abs() < 1e-12);
    }

    #[test]
    fn hard_spheres_have_no_closed_moments() {
        let hs = CollisionKernel::hard_spheres();
        assert!(matches!(moment_ode(&hs, TimeScale::Ordered, 3, (3.0, 15.0), 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn moment_ode_keeps_energy_and_relaxes() {
        let mg = CollisionKernel::maxwell_cutoff();
        let (m2, m4) = moment_ode(&mg, TimeScale::Ordered, 3, (3.0, 15.0), 4.0).unwrap();
        assert_eq!(m2, 3.0);
        assert!((m4 - 15.0).abs() < 1e-12);
        let (m2, m4) = moment_ode(&mg, TimeScale::Ordered, 3, (3.0, 12.6), 1.0).unwrap();
        assert_eq!(m2, 3.0);
        let exact = 15.0 - 2.4 * (-2.0f64 / 3.0).exp();
        assert!((m4 - exact).abs() < 1e-10);
    }

    #[test]
    fn bkw_boundary_and_limits() {
        assert!((BkwProfile::k_min(3) - 0.6).abs() < 1e-15);
        assert!(BkwProfile::new(3, 0.59).is_err());
        let p = BkwProfile::new(3, 0.6).unwrap();
        assert!(p.density(&[0.0; 3]).abs() < 1e-15);
        let r = ReferenceSolution::bkw(&CollisionKernel::maxwell_cutoff(), TimeScale::Ordered, 3, 0.0).unwrap();
        assert!(matches!(r.k_at(-0.1), Err(Error::OutOfValidity { .. })));
        let v = [0.3, -1.1, 0.7];
        assert!((r.density(60.0, &v).unwrap() - maxwellian_density(&v)).abs() < 1e-10);
        for (t, m4) in [(0.0, 12.6), (0.5, 13.28), (1.0, 13.77), (2.0, 14.37)] {
            assert!((r.fourth_moment(t).unwrap() - m4).abs() < 0.01, "t = {t}");
        }
    }

    #[test]
    fn bkw_fourth_moment_agrees_with_ode() {
        let mg = CollisionKernel::maxwell_cutoff();
        let r = ReferenceSolution::bkw(&mg, TimeScale::Ordered, 3, 0.0).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let (_, m4) = moment_ode(&mg, TimeScale::Ordered, 3, (3.0, 12.6), t).unwrap();
            assert!((r.fourth_moment(t).unwrap() - m4).abs() < 1e-6);
        }
    }

    #[test]
    fn bkw_sampler_moments() {
        let p = BkwProfile::new(3, 0.6).unwrap();
        assert!(p.acceptance_rate() > 0.3 && p.acceptance_rate() <= 1.0);
        let mut rng = stream(1);
        let n = 200_000;
        let mut v = [0.0; 3];
        let (mut s4, mut s8, mut mean) = (0.0, 0.0, [0.0; 3]);
        let mut tries = 0;
        for _ in 0..n {
            tries += p.sample_into(&mut rng, &mut v);
            let r2 = kernels::dot(&v, &v);
            s4 += r2 * r2;
            s8 += r2.powi(4);
            for k in 0..3 {
                mean[k] += v[k] / n as f64;
            }
        }
        let m4 = s4 / n as f64;
        let se = ((s8 / n as f64 - m4 * m4) / n as f64).sqrt();
        assert!((m4 - p.fourth_moment()).abs() < 3.0 * se, "{m4} vs {}", p.fourth_moment());
        for m in mean {
            assert!(m.abs() < 3.0 * (1.0 / n as f64).sqrt());
        }
        let rate = n as f64 / tries as f64;
        assert!((rate - p.acceptance_rate()).abs() < 0.01);
    }

    #[test]
    fn bkw_profile_normalized() {
        let p = BkwProfile::new(3, 0.7).unwrap();
        let area = kernels::sphere_area(3);
        let rule = quadrature::gauss_legendre_on(120, 0.0, 14.0);
        let mass = rule.integrate(|r| area * r * r * p.density(&[r, 0.0, 0.0]));
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bkw_entropy_decreases() {
        let r = ReferenceSolution::bkw(&CollisionKernel::maxwell_cutoff(), TimeScale::Ordered, 3, 0.0).unwrap();
        let h: Vec<f64> = (0..20).map(|i| r.profile(i as f64 * 1.5).unwrap().relative_entropy(96)).collect();
        for w in h.windows(2) {
            assert!(w[1] < w[0] || w[0] < 1e-8, "{:?}", w);
        }
        assert!(h[0] > 0.0);
    }
}
