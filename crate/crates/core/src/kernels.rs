//! Binary collision geometry, cross sections and deflection sampling.
//!
//! A cross section is a product `B(|v_i - v_j|) · b(cos θ)`, where θ is the
//! angle between the scattering direction σ and the pre-collision relative
//! direction `u = (v_i - v_j)/|v_i - v_j|`. Three models are provided:
//!
//! | model | `B(z)` | `b(cos θ)` |
//! |---|---|---|
//! | Maxwell with Grad cutoff | 1 | 1 |
//! | true Maxwell, truncated at ε | 1 | `θ^{-(d-1)-ν}` on `[ε, π]`, 0 below |
//! | hard spheres | `z` | 1 |
//!
//! With the truncated profile the θ-law `b · sin^{d-2}θ` behaves like
//! `θ^{-1-ν}` near grazing angles, which is not integrable without the cutoff.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// A single particle velocity. Components are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity(Vec<f64>);

impl Velocity {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("velocity must have at least one component"));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(invalid("velocity components must be finite"));
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A unit vector on `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringDirection(Vec<f64>);

impl ScatteringDirection {
    pub const UNIT_TOL: f64 = 1e-12;

    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        let norm = norm(&sigma);
        if sigma.is_empty() || (norm - 1.0).abs() > Self::UNIT_TOL {
            return Err(invalid(format!("scattering direction must be a unit vector, |σ| = {norm}")));
        }
        Ok(Self(sigma))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(mut v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if n == 0.0 || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        v.iter_mut().for_each(|c| *c /= n);
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelVariant {
    MaxwellCutoff,
    TrueMaxwellTruncated { eps: f64, nu: f64 },
    HardSpheres,
}

/// How the angular factor is normalized.
///
/// `Normalized` gives the deflection law total mass 1, so the Maxwell cutoff
/// rate per ordered pair is exactly 1. `RawSolidAngle` uses `∫ b dσ` over the
/// unit sphere (4π for `b = 1` in three dimensions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularConvention {
    #[default]
    Normalized,
    RawSolidAngle,
}

/// Pair map used when velocities are scalars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneDimCollision {
    /// Uniform rotation of `(v_i, v_j)` on its energy circle (Kac's walk).
    /// Conserves `v_i² + v_j²` but not `v_i + v_j`.
    #[default]
    KacRotation,
    /// The σ-formula on `S^0 = {-1, +1}`: either keeps or swaps the pair.
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionKernel {
    pub variant: KernelVariant,
    #[serde(default)]
    pub convention: AngularConvention,
    #[serde(default)]
    pub one_dim: OneDimCollision,
}

impl CollisionKernel {
    pub const fn maxwell_cutoff() -> Self {
        Self {
            variant: KernelVariant::MaxwellCutoff,
            convention: AngularConvention::Normalized,
            one_dim: OneDimCollision::KacRotation,
        }
    }

    pub const fn hard_spheres() -> Self {
        Self {
            variant: KernelVariant::HardSpheres,
            convention: AngularConvention::Normalized,
            one_dim: OneDimCollision::KacRotation,
        }
    }

    pub fn true_maxwell(eps: f64, nu: f64) -> Result<Self> {
        let k = Self {
            variant: KernelVariant::TrueMaxwellTruncated { eps, nu },
            convention: AngularConvention::Normalized,
            one_dim: OneDimCollision::KacRotation,
        };
        k.check_parameters()?;
        Ok(k)
    }

    pub fn with_convention(mut self, convention: AngularConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_one_dim(mut self, one_dim: OneDimCollision) -> Self {
        self.one_dim = one_dim;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.variant {
            KernelVariant::MaxwellCutoff => "MG",
            KernelVariant::TrueMaxwellTruncated { .. } => "M",
            KernelVariant::HardSpheres => "HS",
        }
    }

    /// `B` is constant for both Maxwell variants.
    pub fn is_maxwellian(&self) -> bool {
        !matches!(self.variant, KernelVariant::HardSpheres)
    }

    fn check_parameters(&self) -> Result<()> {
        if let KernelVariant::TrueMaxwellTruncated { eps, nu } = self.variant {
            if !(eps > 0.0 && eps < std::f64::consts::PI) {
                return Err(invalid(format!("angular cutoff eps must lie in (0, π), got {eps}")));
            }
            if !(nu > 0.0 && nu < 2.0) {
                return Err(invalid(format!("singularity exponent nu must lie in (0, 2), got {nu}")));
            }
        }
        Ok(())
    }

    /// Checks that the kernel can be used in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        self.check_parameters()?;
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if d == 1 && matches!(self.variant, KernelVariant::TrueMaxwellTruncated { .. }) {
            return Err(Error::Unsupported(
                "the truncated true-Maxwell profile needs a deflection angle, d >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Kinetic factor `B(z)`.
    #[inline]
    pub fn speed_factor(&self, relative_speed: f64) -> f64 {
        match self.variant {
            KernelVariant::HardSpheres => relative_speed,
            _ => 1.0,
        }
    }

    /// Angular mass `m_b`: 1 under `Normalized`, `∫_{S^{d-1}} b dσ` otherwise.
    pub fn angular_mass(&self, d: usize) -> f64 {
        match self.convention {
            AngularConvention::Normalized => 1.0,
            AngularConvention::RawSolidAngle => match self.variant {
                KernelVariant::TrueMaxwellTruncated { eps, nu } => {
                    sphere_area(d - 1) * truncated_theta_mass(eps, nu, d)
                }
                _ => sphere_area(d),
            },
        }
    }

    /// `B(|v_i - v_j|) · m_b`.
    pub fn pair_rate(&self, vi: &[f64], vj: &[f64]) -> f64 {
        self.speed_factor(distance(vi, vj)) * self.angular_mass(vi.len())
    }

    /// Unnormalized deflection density `b(cos θ)` in dimension `d`.
    pub fn deflection_density(&self, cos_theta: f64, d: usize) -> Result<f64> {
        if !(-1.0..=1.0).contains(&cos_theta) {
            return Err(invalid(format!("cos θ must lie in [-1, 1], got {cos_theta}")));
        }
        Ok(match self.variant {
            KernelVariant::TrueMaxwellTruncated { eps, nu } => {
                let theta = cos_theta.acos();
                if theta < eps {
                    0.0
                } else {
                    theta.powf(-((d as f64 - 1.0) + nu))
                }
            }
            _ => 1.0,
        })
    }

    /// Draws σ with density proportional to `b(σ·u)` on `S^{d-1}`.
    pub fn sample_sigma<R: Rng + ?Sized>(&self, u: &[f64], rng: &mut R) -> Result<ScatteringDirection> {
        let d = u.len();
        if d == 0 || (norm(u) - 1.0).abs() > 1e-9 {
            return Err(invalid("relative direction must be a unit vector"));
        }
        self.validate(d)?;
        let mut sigma = vec![0.0; d];
        self.sample_sigma_into(u, rng, &mut sigma);
        Ok(ScatteringDirection(sigma))
    }

    /// Unchecked variant used on the simulation hot path. `u` must be a unit
    /// vector; for the isotropic kernels it is ignored.
    pub(crate) fn sample_sigma_into<R: Rng + ?Sized>(&self, u: &[f64], rng: &mut R, out: &mut [f64]) {
        let d = out.len();
        match self.variant {
            KernelVariant::MaxwellCutoff | KernelVariant::HardSpheres => uniform_on_sphere(rng, out),
            KernelVariant::TrueMaxwellTruncated { eps, nu } => {
                debug_assert!(d >= 2);
                let theta = sample_truncated_theta(eps, nu, d, rng);
                // ω uniform on the unit sphere orthogonal to u.
                loop {
                    for c in out.iter_mut() {
                        *c = rng.sample(StandardNormal);
                    }
                    let proj = dot(out, u);
                    out.iter_mut().zip(u).for_each(|(c, &ui)| *c -= proj * ui);
                    let n = norm(out);
                    if n > 1e-12 {
                        out.iter_mut().for_each(|c| *c /= n);
                        break;
                    }
                }
                let (s, c) = theta.sin_cos();
                out.iter_mut().zip(u).for_each(|(o, &ui)| *o = c * ui + s * *o);
            }
        }
    }

    /// Angular moments `(E cos θ, E cos² θ)` of the normalized deflection law,
    /// by quadrature.
    pub fn angular_moments(&self, d: usize) -> (f64, f64) {
        match self.variant {
            KernelVariant::TrueMaxwellTruncated { eps, nu } => {
                let mass = truncated_theta_mass(eps, nu, d);
                let m1 = truncated_theta_integral(eps, nu, d, f64::cos) / mass;
                let m2 = truncated_theta_integral(eps, nu, d, |t| t.cos().powi(2)) / mass;
                (m1, m2)
            }
            _ => {
                if d == 1 {
                    return (0.0, 1.0);
                }
                // cos θ has density ∝ (1 - x²)^{(d-3)/2} on [-1, 1].
                let rule = quadrature::gauss_gegenbauer(16, (d as f64 - 2.0) / 2.0);
                let mass: f64 = rule.weights.iter().sum();
                (rule.integrate(|x| x) / mass, rule.integrate(|x| x * x) / mass)
            }
        }
    }
}

/// Surface area of the unit sphere `S^{d-1}` in `R^d` (2 points for d = 1).
pub fn sphere_area(d: usize) -> f64 {
    use statrs::function::gamma::gamma;
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// `∫_ε^π g(θ) θ^{-(d-1)-ν} sin^{d-2}θ dθ` on a logarithmic grid.
fn truncated_theta_integral(eps: f64, nu: f64, d: usize, g: impl Fn(f64) -> f64) -> f64 {
    let k = d as f64 - 2.0;
    // θ = ε e^s, dθ = θ ds.
    quadrature::composite_legendre(0.0, (std::f64::consts::PI / eps).ln(), 64, 16, |s| {
        let t = eps * s.exp();
        g(t) * t.powf(-nu) * (t.sin() / t).powf(k)
    })
}

fn truncated_theta_mass(eps: f64, nu: f64, d: usize) -> f64 {
    truncated_theta_integral(eps, nu, d, |_| 1.0)
}

/// θ ∝ θ^{-(d-1)-ν} sin^{d-2}θ on [ε, π]: propose from the Pareto-type law
/// θ^{-1-ν}, accept with probability (sin θ / θ)^{d-2}.
fn sample_truncated_theta<R: Rng + ?Sized>(eps: f64, nu: f64, d: usize, rng: &mut R) -> f64 {
    let lo = eps.powf(-nu);
    let hi = std::f64::consts::PI.powf(-nu);
    loop {
        let u: f64 = rng.gen();
        let theta = (lo - u * (lo - hi)).powf(-1.0 / nu).min(std::f64::consts::PI);
        let accept = (theta.sin() / theta).max(0.0).powi(d as i32 - 2);
        if d == 2 || rng.gen::<f64>() < accept {
            return theta;
        }
    }
}

pub(crate) fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|c| *c /= n);
            return;
        }
    }
}

/// Post-collision velocities
/// `((v_i+v_j)/2 + |v_j-v_i|/2 σ, (v_i+v_j)/2 - |v_j-v_i|/2 σ)`.
pub fn post_collision(vi: &Velocity, vj: &Velocity, sigma: &ScatteringDirection) -> Result<(Velocity, Velocity)> {
    if vi.dim() != vj.dim() || vi.dim() != sigma.0.len() {
        return Err(invalid(format!(
            "dimension mismatch: v_i has {}, v_j has {}, σ has {}",
            vi.dim(),
            vj.dim(),
            sigma.0.len()
        )));
    }
    let mut a = vi.0.clone();
    let mut b = vj.0.clone();
    collide_in_place(&mut a, &mut b, &sigma.0);
    Ok((Velocity(a), Velocity(b)))
}

/// In-place pair update. The second velocity is computed as the pre-collision
/// pair sum minus the first, so the pair momentum is preserved to one rounding.
#[inline]
pub fn collide_in_place(a: &mut [f64], b: &mut [f64], sigma: &[f64]) {
    let half_speed = 0.5 * distance(a, b);
    for k in 0..a.len() {
        let sum = a[k] + b[k];
        let new_a = 0.5 * sum + half_speed * sigma[k];
        a[k] = new_a;
        b[k] = sum - new_a;
    }
}

/// Kac's rotation of a scalar pair by `angle`.
#[inline]
pub fn kac_rotation(a: &mut f64, b: &mut f64, angle: f64) {
    let (s, c) = angle.sin_cos();
    let (x, y) = (*a, *b);
    *a = c * x - s * y;
    *b = s * x + c * y;
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn vel(v: &[f64]) -> Velocity {
        Velocity::new(v.to_vec()).unwrap()
    }

    #[test]
    fn head_on_collision_into_vertical() {
        let s = ScatteringDirection::new(vec![0.0, 0.0, 1.0]).unwrap();
        let (a, b) = post_collision(&vel(&[1.0, 0.0, 0.0]), &vel(&[-1.0, 0.0, 0.0]), &s).unwrap();
        assert_eq!(a.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(b.as_slice(), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn sigma_along_relative_velocity_is_identity() {
        let vi = [0.3, -1.2, 2.0];
        let vj = [1.1, 0.4, -0.5];
        let s = ScatteringDirection::normalized(vi.iter().zip(&vj).map(|(a, b)| a - b).collect()).unwrap();
        let (a, b) = post_collision(&vel(&vi), &vel(&vj), &s).unwrap();
        for k in 0..3 {
            assert!((a.as_slice()[k] - vi[k]).abs() < 1e-14);
            assert!((b.as_slice()[k] - vj[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_velocities_stay_put() {
        let s = ScatteringDirection::new(vec![0.6, 0.8, 0.0]).unwrap();
        let w = [0.5, -0.25, 3.0];
        let (a, b) = post_collision(&vel(&w), &vel(&w), &s).unwrap();
        assert_eq!(a.as_slice(), &w);
        assert_eq!(b.as_slice(), &w);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = ScatteringDirection::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            post_collision(&vel(&[1.0, 0.0, 0.0]), &vel(&[0.0, 1.0, 0.0]), &s),
            Err(Error::InvalidInput(_))
        ));
        assert!(Velocity::new(vec![f64::NAN]).is_err());
        assert!(ScatteringDirection::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn pair_rates() {
        let mg = CollisionKernel::maxwell_cutoff();
        let hs = CollisionKernel::hard_spheres();
        assert_eq!(mg.pair_rate(&[1.0, 2.0, 3.0], &[-4.0, 0.0, 1.0]), 1.0);
        assert_eq!(hs.pair_rate(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]), 2.0);
        assert_eq!(hs.pair_rate(&[0.7, 0.1, 0.0], &[0.7, 0.1, 0.0]), 0.0);
        let raw = mg.with_convention(AngularConvention::RawSolidAngle);
        assert!((raw.pair_rate(&[0.0; 3], &[1.0, 0.0, 0.0]) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn deflection_densities() {
        let mg = CollisionKernel::maxwell_cutoff();
        assert_eq!(mg.deflection_density(0.3, 3).unwrap(), 1.0);
        let m = CollisionKernel::true_maxwell(0.1, 0.5).unwrap();
        assert_eq!(m.deflection_density(1.0, 3).unwrap(), 0.0);
        assert!(m.deflection_density(-1.0, 3).unwrap() > 0.0);
        assert!(mg.deflection_density(1.5, 3).is_err());
        // Truncation makes the angular mass finite.
        let mass = truncated_theta_mass(0.1, 0.5, 3);
        assert!(mass.is_finite() && mass > 0.0);
        // Cross-check the log-grid quadrature against a direct θ-grid one.
        let direct = quadrature::composite_legendre(0.1, std::f64::consts::PI, 4000, 8, |t| t.powf(-2.5) * t.sin());
        assert!((mass - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn invalid_true_maxwell_parameters() {
        assert!(CollisionKernel::true_maxwell(0.0, 0.5).is_err());
        assert!(CollisionKernel::true_maxwell(0.1, 2.5).is_err());
        let m = CollisionKernel::true_maxwell(0.1, 0.5).unwrap();
        assert!(matches!(m.validate(1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn uniform_sigma_mean_vanishes() {
        let mg = CollisionKernel::maxwell_cutoff();
        let mut rng = stream(11);
        let u = [1.0, 0.0, 0.0];
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let s = mg.sample_sigma(&u, &mut rng).unwrap();
            for k in 0..3 {
                mean[k] += s.as_slice()[k] / n as f64;
            }
        }
        // Each component has variance 1/3.
        let se = (1.0 / 3.0 / n as f64).sqrt();
        for m in mean {
            assert!(m.abs() < 3.0 * se, "mean component {m} vs se {se}");
        }
    }

    #[test]
    fn uniform_sigma_passes_chi_squared() {
        let mg = CollisionKernel::maxwell_cutoff();
        let mut rng = stream(12);
        let u = [0.0, 0.6, 0.8];
        let n = 100_000;
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let s = mg.sample_sigma(&u, &mut rng).unwrap();
            // In three dimensions cos θ is uniform on [-1, 1].
            let c = dot(s.as_slice(), &u);
            let b = (((c + 1.0) / 2.0) * bins as f64).floor().min(bins as f64 - 1.0) as usize;
            counts[b] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let crit = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
        assert!(chi2 < crit, "chi2 = {chi2}, critical = {crit}");
    }

    #[test]
    fn truncated_sigma_never_below_cutoff() {
        let m = CollisionKernel::true_maxwell(0.1, 0.5).unwrap();
        let mut rng = stream(13);
        let u = [0.0, 0.0, 1.0];
        let mut below = 0;
        for _ in 0..20_000 {
            let s = m.sample_sigma(&u, &mut rng).unwrap();
            let theta = dot(s.as_slice(), &u).clamp(-1.0, 1.0).acos();
            if theta < 0.1 - 1e-12 {
                below += 1;
            }
            assert!((norm(s.as_slice()) - 1.0).abs() < 1e-12);
        }
        assert_eq!(below, 0);
    }

    #[test]
    fn truncated_sigma_matches_angular_moments() {
        let m = CollisionKernel::true_maxwell(0.2, 1.0).unwrap();
        let (m1, m2) = m.angular_moments(3);
        let mut rng = stream(14);
        let u = [1.0, 0.0, 0.0];
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let c = m.sample_sigma(&u, &mut rng).unwrap().as_slice()[0];
            s1 += c;
            s2 += c * c;
        }
        let (e1, e2) = (s1 / n as f64, s2 / n as f64);
        let se = ((e2 - e1 * e1) / n as f64).sqrt();
        assert!((e1 - m1).abs() < 4.0 * se, "{e1} vs {m1}");
        assert!((e2 - m2).abs() < 0.01, "{e2} vs {m2}");
    }

    #[test]
    fn one_dimensional_sigma_is_a_fair_sign() {
        let hs = CollisionKernel::hard_spheres();
        let mut rng = stream(15);
        let n = 100_000;
        let plus = (0..n).filter(|_| hs.sample_sigma(&[1.0], &mut rng).unwrap().as_slice()[0] == 1.0).count();
        let p = plus as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn isotropic_angular_moments() {
        let mg = CollisionKernel::maxwell_cutoff();
        let (m1, m2) = mg.angular_moments(3);
        assert!(m1.abs() < 1e-14);
        assert!((m2 - 1.0 / 3.0).abs() < 1e-14);
        let (_, m2) = mg.angular_moments(2);
        assert!((m2 - 0.5).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn collisions_conserve_momentum_and_energy(
            vi in proptest::collection::vec(-10.0f64..10.0, 3),
            vj in proptest::collection::vec(-10.0f64..10.0, 3),
            raw in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            prop_assume!(norm(&raw) > 1e-3);
            let sigma = ScatteringDirection::normalized(raw).unwrap();
            let (a, b) = post_collision(&vel(&vi), &vel(&vj), &sigma).unwrap();
            let e0: f64 = dot(&vi, &vi) + dot(&vj, &vj);
            let e1: f64 = dot(a.as_slice(), a.as_slice()) + dot(b.as_slice(), b.as_slice());
            prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0));
            for k in 0..3 {
                let p0 = vi[k] + vj[k];
                let p1 = a.as_slice()[k] + b.as_slice()[k];
                prop_assert!((p0 - p1).abs() <= 1e-12 * (vi[k].abs() + vj[k].abs()).max(1.0));
            }
            // Colliding again along the new relative direction returns the same pair.
            let back = ScatteringDirection::normalized(
                a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect(),
            );
            if let Ok(back) = back {
                let (c, d) = post_collision(&a, &b, &back).unwrap();
                let e2 = dot(c.as_slice(), c.as_slice()) + dot(d.as_slice(), d.as_slice());
                prop_assert!((e2 - e1).abs() <= 1e-12 * e1.max(1.0));
            }
        }

        #[test]
        fn pair_rate_is_symmetric(
            vi in proptest::collection::vec(-5.0f64..5.0, 3),
            vj in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            for k in [CollisionKernel::maxwell_cutoff(), CollisionKernel::hard_spheres()] {
                prop_assert_eq!(k.pair_rate(&vi, &vj), k.pair_rate(&vj, &vi));
            }
        }
    }
}
