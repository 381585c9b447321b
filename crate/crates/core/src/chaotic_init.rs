//! Initial laws: products `f^⊗N`, uniform sphere measures, and products
//! conditioned on the Kac or Boltzmann sphere.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chaos_metrics::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::kac_process::{EnsembleLaw, VelocityState};
use crate::kernels::{self, CollisionKernel};
use crate::limit_eq::BkwProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Isotropic variance per component.
    pub variance: f64,
}

/// One-particle densities used as initial data and references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    PointMass {
        dim: usize,
    },
    /// `N(0, variance · I_d)`; the standard Maxwellian for variance 1.
    Gaussian {
        dim: usize,
        variance: f64,
    },
    GaussianMixture {
        dim: usize,
        components: Vec<MixtureComponent>,
    },
    /// Uniform on `[-half_width, half_width]^d`.
    UniformBox {
        dim: usize,
        half_width: f64,
    },
    /// BKW profile with shape `k`, unit variance per component.
    Bkw {
        dim: usize,
        k: f64,
    },
}

impl DensitySpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        DensitySpec::Gaussian { dim, variance: 1.0 }
    }

    /// Equal-weight mixture of `N(±a e_1, s² I)`, rescaled so that the
    /// energy per particle is `dim`.
    pub fn symmetric_bimodal(dim: usize, separation: f64, variance: f64) -> Result<Self> {
        let energy = separation * separation + dim as f64 * variance;
        let scale = (dim as f64 / energy).sqrt();
        let mut mean = vec![0.0; dim];
        mean[0] = separation * scale;
        let neg: Vec<f64> = mean.iter().map(|x| -x).collect();
        let spec = DensitySpec::GaussianMixture {
            dim,
            components: vec![
                MixtureComponent { weight: 0.5, mean, variance: variance * scale * scale },
                MixtureComponent { weight: 0.5, mean: neg, variance: variance * scale * scale },
            ],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DensitySpec::PointMass { .. } => "point_mass",
            DensitySpec::Gaussian { .. } => "gaussian",
            DensitySpec::GaussianMixture { .. } => "gaussian_mixture",
            DensitySpec::UniformBox { .. } => "uniform_box",
            DensitySpec::Bkw { .. } => "bkw",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensitySpec::PointMass { dim }
            | DensitySpec::Gaussian { dim, .. }
            | DensitySpec::GaussianMixture { dim, .. }
            | DensitySpec::UniformBox { dim, .. }
            | DensitySpec::Bkw { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(invalid("density dimension must be positive"));
        }
        match self {
            DensitySpec::Gaussian { variance, .. } if !(*variance > 0.0) => {
                Err(invalid("gaussian variance must be positive"))
            }
            DensitySpec::UniformBox { half_width, .. } if !(*half_width > 0.0) => {
                Err(invalid("box half width must be positive"))
            }
            DensitySpec::GaussianMixture { components, .. } => {
                if components.is_empty() {
                    return Err(invalid("mixture needs at least one component"));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 || components.iter().any(|c| !(c.weight > 0.0)) {
                    return Err(invalid(format!("mixture weights must be positive and sum to 1, got {total}")));
                }
                for c in components {
                    if c.mean.len() != d || !(c.variance > 0.0) {
                        return Err(invalid("mixture component has a wrong mean length or nonpositive variance"));
                    }
                }
                Ok(())
            }
            DensitySpec::Bkw { k, .. } => {
                BkwProfile::new(d, *k)?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Log-density up to an additive constant; `-∞` off the support.
    /// The point mass has no density.
    pub fn log_density(&self, v: &[f64]) -> Result<f64> {
        Ok(match self {
            DensitySpec::PointMass { .. } => return Err(Error::Unsupported("a point mass has no density".into())),
            DensitySpec::Gaussian { variance, .. } => -kernels::dot(v, v) / (2.0 * variance),
            DensitySpec::GaussianMixture { components, .. } => {
                let d = v.len() as f64;
                let terms: Vec<f64> = components
                    .iter()
                    .map(|c| {
                        let r2: f64 = v.iter().zip(&c.mean).map(|(x, m)| (x - m) * (x - m)).sum();
                        c.weight.ln() - 0.5 * d * c.variance.ln() - r2 / (2.0 * c.variance)
                    })
                    .collect();
                log_sum_exp(&terms)
            }
            DensitySpec::UniformBox { half_width, .. } => {
                if v.iter().all(|x| x.abs() <= *half_width) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            DensitySpec::Bkw { dim, k } => BkwProfile::new(*dim, *k)?.density(v).ln(),
        })
    }

    pub fn has_sampler(&self) -> bool {
        true
    }

    /// Draws one velocity into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            DensitySpec::PointMass { .. } => out.iter_mut().for_each(|x| *x = 0.0),
            DensitySpec::Gaussian { variance, .. } => {
                let s = variance.sqrt();
                out.iter_mut().for_each(|x| *x = s * rng.sample::<f64, _>(StandardNormal));
            }
            DensitySpec::GaussianMixture { components, .. } => {
                let mut u: f64 = rng.gen();
                let mut chosen = &components[components.len() - 1];
                for c in components {
                    if u < c.weight {
                        chosen = c;
                        break;
                    }
                    u -= c.weight;
                }
                let s = chosen.variance.sqrt();
                for (x, m) in out.iter_mut().zip(&chosen.mean) {
                    *x = m + s * rng.sample::<f64, _>(StandardNormal);
                }
            }
            DensitySpec::UniformBox { half_width, .. } => {
                out.iter_mut().for_each(|x| *x = rng.gen_range(-*half_width..=*half_width));
            }
            DensitySpec::Bkw { dim, k } => {
                let profile = BkwProfile::new(*dim, *k).expect("validated profile");
                profile.sample_into(rng, out);
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        match self {
            DensitySpec::GaussianMixture { components, .. } => {
                let mut m = vec![0.0; d];
                for c in components {
                    for k in 0..d {
                        m[k] += c.weight * c.mean[k];
                    }
                }
                m
            }
            _ => vec![0.0; d],
        }
    }

    /// `E|v|²`.
    pub fn energy(&self) -> f64 {
        let d = self.dim() as f64;
        match self {
            DensitySpec::PointMass { .. } => 0.0,
            DensitySpec::Gaussian { variance, .. } => d * variance,
            DensitySpec::GaussianMixture { components, .. } => {
                components.iter().map(|c| c.weight * (kernels::dot(&c.mean, &c.mean) + d * c.variance)).sum()
            }
            DensitySpec::UniformBox { half_width, .. } => d * half_width * half_width / 3.0,
            DensitySpec::Bkw { .. } => d,
        }
    }

    /// `E|v|⁴`.
    pub fn fourth_moment(&self) -> f64 {
        let d = self.dim() as f64;
        match self {
            DensitySpec::PointMass { .. } => 0.0,
            DensitySpec::Gaussian { variance, .. } => d * (d + 2.0) * variance * variance,
            DensitySpec::GaussianMixture { components, .. } => components
                .iter()
                .map(|c| {
                    let m2 = kernels::dot(&c.mean, &c.mean);
                    let s = c.variance;
                    // E|μ + sZ|⁴ for Z ~ N(0, I_d).
                    c.weight * (m2 * m2 + 2.0 * (d + 2.0) * s * m2 + d * (d + 2.0) * s * s)
                })
                .sum(),
            DensitySpec::UniformBox { half_width, .. } => {
                let a2 = half_width * half_width;
                // E x⁴ = a⁴/5, (E x²)² = a⁴/9.
                d * a2 * a2 / 5.0 + d * (d - 1.0) * a2 * a2 / 9.0
            }
            DensitySpec::Bkw { dim, k } => BkwProfile::new(*dim, *k).expect("validated profile").fourth_moment(),
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean().iter().all(|m| m.abs() < 1e-12)
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereVariant {
    /// `Σ v_i² = N e`, scalar velocities only.
    Kac,
    /// `Σ v_i = 0`, `Σ |v_i|² = N e`.
    Boltzmann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub variant: SphereVariant,
    pub n: usize,
    pub dim: usize,
    /// Energy per particle `e`. Unit variance per component means `e = d`;
    /// `e = 1` is the other common normalization.
    pub energy_per_particle: f64,
}

impl SphereSpec {
    pub fn kac(n: usize) -> Self {
        Self { variant: SphereVariant::Kac, n, dim: 1, energy_per_particle: 1.0 }
    }

    pub fn boltzmann(n: usize, dim: usize) -> Self {
        Self { variant: SphereVariant::Boltzmann, n, dim, energy_per_particle: dim as f64 }
    }

    pub fn with_energy_per_particle(mut self, e: f64) -> Self {
        self.energy_per_particle = e;
        self
    }

    pub fn total_energy(&self) -> f64 {
        self.n as f64 * self.energy_per_particle
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("a sphere needs N >= 2, got {}", self.n)));
        }
        if self.dim == 0 {
            return Err(invalid("sphere dimension must be positive"));
        }
        if self.variant == SphereVariant::Kac && self.dim != 1 {
            return Err(Error::Unsupported("the Kac sphere is defined for scalar velocities only".into()));
        }
        if !(self.energy_per_particle > 0.0) {
            return Err(invalid("energy per particle must be positive"));
        }
        Ok(())
    }
}

/// `N` i.i.d. draws from `f`.
pub fn sample_product<R: Rng + ?Sized>(f: &DensitySpec, n: usize, rng: &mut R) -> Result<VelocityState> {
    f.validate()?;
    let d = f.dim();
    let mut data = vec![0.0; n * d];
    for v in data.chunks_exact_mut(d) {
        f.sample_into(rng, v);
    }
    VelocityState::new(data, d, CollisionKernel::maxwell_cutoff())
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn rescale_to(data: &mut [f64], total_energy: f64) -> Result<()> {
    let e: f64 = data.iter().map(|x| x * x).sum();
    if !(e > 0.0) {
        return Err(Error::Degenerate("cannot rescale a zero vector onto the sphere".into()));
    }
    let s = (total_energy / e).sqrt();
    data.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

fn center(data: &mut [f64], d: usize) {
    let n = data.len() / d;
    let mut mean = vec![0.0; d];
    for v in data.chunks_exact(d) {
        for k in 0..d {
            mean[k] += v[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for v in data.chunks_exact_mut(d) {
        for k in 0..d {
            v[k] -= mean[k];
        }
    }
}

/// Uniform draw on `BS^N` with total energy `N e`: a centered and rescaled
/// Gaussian vector.
pub fn sample_uniform_boltzmann_sphere<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    energy_per_particle: f64,
    rng: &mut R,
) -> Result<VelocityState> {
    let sphere = SphereSpec::boltzmann(n, dim).with_energy_per_particle(energy_per_particle);
    sphere.validate()?;
    let mut data = gaussian_vector(n * dim, rng);
    center(&mut data, dim);
    rescale_to(&mut data, sphere.total_energy())?;
    Ok(VelocityState::new(data, dim, CollisionKernel::maxwell_cutoff())?.on_sphere(sphere.total_energy()))
}

/// Uniform draw on `KS^N` with `Σ v_i² = N e`.
pub fn sample_uniform_kac_sphere<R: Rng + ?Sized>(
    n: usize,
    energy_per_particle: f64,
    rng: &mut R,
) -> Result<VelocityState> {
    let sphere = SphereSpec::kac(n).with_energy_per_particle(energy_per_particle);
    sphere.validate()?;
    let mut data = gaussian_vector(n, rng);
    rescale_to(&mut data, sphere.total_energy())?;
    Ok(VelocityState::new(data, 1, CollisionKernel::maxwell_cutoff())?.on_sphere(sphere.total_energy()))
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(sphere: &SphereSpec, rng: &mut R) -> Result<VelocityState> {
    match sphere.variant {
        SphereVariant::Kac => sample_uniform_kac_sphere(sphere.n, sphere.energy_per_particle, rng),
        SphereVariant::Boltzmann => {
            sample_uniform_boltzmann_sphere(sphere.n, sphere.dim, sphere.energy_per_particle, rng)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    /// Proposals before the first kept state.
    pub n_burn: usize,
    /// Proposals between kept states.
    pub n_thin: usize,
}

impl McmcOptions {
    pub fn defaults_for(n: usize) -> Self {
        Self { n_burn: 50 * n, n_thin: 5 * n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcStats {
    pub proposals: usize,
    pub accepted: usize,
    pub restarts: usize,
}

const MAX_RESTARTS: usize = 100;

/// Metropolis chain on the sphere targeting the density `∝ Π f(v_i)` with
/// respect to the uniform sphere measure.
///
/// Proposals move a few particles by a uniformly random isometry that keeps
/// both constraints: a collision with uniform σ (Boltzmann sphere, `d ≥ 2`),
/// a Kac rotation (Kac sphere), or a rotation of three scalars in the plane
/// orthogonal to `(1, 1, 1)` (Boltzmann sphere, `d = 1`). All are symmetric,
/// so the acceptance ratio is `Π f(v') / Π f(v)` over the moved particles.
pub struct ConditionedSampler<'a> {
    f: &'a DensitySpec,
    sphere: SphereSpec,
    state: Vec<f64>,
    log_f: Vec<f64>,
    pub stats: McmcStats,
}

impl<'a> ConditionedSampler<'a> {
    pub fn new<R: Rng + ?Sized>(f: &'a DensitySpec, sphere: SphereSpec, rng: &mut R) -> Result<Self> {
        f.validate()?;
        sphere.validate()?;
        if f.dim() != sphere.dim {
            return Err(invalid(format!("density has dimension {}, sphere {}", f.dim(), sphere.dim)));
        }
        if matches!(f, DensitySpec::PointMass { .. }) {
            return Err(Error::Unsupported("a point mass cannot be conditioned on a sphere".into()));
        }
        if sphere.variant == SphereVariant::Boltzmann && !f.is_centered() {
            return Err(invalid("conditioning on the Boltzmann sphere requires a centered density"));
        }
        let e = f.energy();
        if (e - sphere.energy_per_particle).abs() > 1e-9 * sphere.energy_per_particle {
            return Err(invalid(format!(
                "density energy per particle {e} does not match the sphere energy {}",
                sphere.energy_per_particle
            )));
        }
        let d = sphere.dim;
        let mut restarts = 0;
        loop {
            let state = sample_uniform_sphere(&sphere, rng)?.into_data();
            let log_f: Vec<f64> = state.chunks_exact(d).map(|v| f.log_density(v)).collect::<Result<_>>()?;
            if log_f.iter().all(|l| l.is_finite()) {
                return Ok(Self { f, sphere, state, log_f, stats: McmcStats { proposals: 0, accepted: 0, restarts } });
            }
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err(Error::Sampling(format!(
                    "no positive-density start found on the sphere after {MAX_RESTARTS} attempts"
                )));
            }
        }
    }

    fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.sphere.dim;
        let n = self.sphere.n;
        self.stats.proposals += 1;
        let three = self.sphere.variant == SphereVariant::Boltzmann && d == 1;
        if three && n < 3 {
            // BS^N with d = 1 and N = 2 is the two points ±(a, -a).
            return Ok(());
        }
        let mut idx = [0usize; 3];
        let m = if three { 3 } else { 2 };
        idx[0] = rng.gen_range(0..n);
        loop {
            idx[1] = rng.gen_range(0..n);
            if idx[1] != idx[0] {
                break;
            }
        }
        if three {
            loop {
                idx[2] = rng.gen_range(0..n);
                if idx[2] != idx[0] && idx[2] != idx[1] {
                    break;
                }
            }
        }
        let mut moved: Vec<Vec<f64>> = idx[..m].iter().map(|&i| self.state[i * d..(i + 1) * d].to_vec()).collect();
        match (self.sphere.variant, d, three) {
            (SphereVariant::Kac, _, _) => {
                let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                let (a, b) = moved.split_at_mut(1);
                kernels::kac_rotation(&mut a[0][0], &mut b[0][0], angle);
            }
            (SphereVariant::Boltzmann, _, true) => {
                let (x, y, z) = (moved[0][0], moved[1][0], moved[2][0]);
                let mean = (x + y + z) / 3.0;
                // Orthonormal basis of the plane orthogonal to (1, 1, 1).
                let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
                let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
                let w = [x - mean, y - mean, z - mean];
                let (mut p, mut q) = (kernels::dot(&w, &e1), kernels::dot(&w, &e2));
                kernels::kac_rotation(&mut p, &mut q, rng.gen::<f64>() * std::f64::consts::TAU);
                for k in 0..3 {
                    moved[k][0] = mean + p * e1[k] + q * e2[k];
                }
            }
            (SphereVariant::Boltzmann, _, false) => {
                let mut sigma = vec![0.0; d];
                kernels::uniform_on_sphere(rng, &mut sigma);
                let (a, b) = moved.split_at_mut(1);
                kernels::collide_in_place(&mut a[0], &mut b[0], &sigma);
            }
        }
        let new_log: Vec<f64> = moved.iter().map(|v| self.f.log_density(v)).collect::<Result<_>>()?;
        let delta: f64 = new_log.iter().sum::<f64>() - idx[..m].iter().map(|&i| self.log_f[i]).sum::<f64>();
        if delta >= 0.0 || rng.gen::<f64>().ln() < delta {
            for (k, &i) in idx[..m].iter().enumerate() {
                self.state[i * d..(i + 1) * d].copy_from_slice(&moved[k]);
                self.log_f[i] = new_log[k];
            }
            self.stats.accepted += 1;
        }
        Ok(())
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, proposals: usize, rng: &mut R) -> Result<()> {
        for _ in 0..proposals {
            self.propose(rng)?;
        }
        Ok(())
    }

    pub fn current(&self) -> Result<VelocityState> {
        Ok(VelocityState::new(self.state.clone(), self.sphere.dim, CollisionKernel::maxwell_cutoff())?
            .on_sphere(self.sphere.total_energy()))
    }
}

/// One approximate draw from the product `f^⊗N` conditioned on the sphere:
/// a fresh chain run for `n_burn` proposals.
pub fn sample_conditioned_product<R: Rng + ?Sized>(
    f: &DensitySpec,
    sphere: &SphereSpec,
    rng: &mut R,
    mcmc: McmcOptions,
) -> Result<VelocityState> {
    let mut chain = ConditionedSampler::new(f, *sphere, rng)?;
    chain.advance(mcmc.n_burn, rng)?;
    chain.current()
}

/// `count` draws from one chain, `n_thin` proposals apart after burn-in.
pub fn sample_conditioned_chain<R: Rng + ?Sized>(
    f: &DensitySpec,
    sphere: &SphereSpec,
    rng: &mut R,
    mcmc: McmcOptions,
    count: usize,
) -> Result<(Vec<VelocityState>, McmcStats)> {
    let mut chain = ConditionedSampler::new(f, *sphere, rng)?;
    chain.advance(mcmc.n_burn, rng)?;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k > 0 {
            chain.advance(mcmc.n_thin.max(1), rng)?;
        }
        out.push(chain.current()?);
    }
    Ok((out, chain.stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMode {
    /// Coordinates `1..=j` of each replica: `R` i.i.d. draws of the marginal.
    #[default]
    FirstCoordinates,
    /// All `⌊N/j⌋` disjoint consecutive `j`-tuples of each replica. The
    /// tuples of one replica are correlated.
    Pooled,
}

/// Samples of the `j`-particle marginal at grid index `t_index`.
pub fn marginal_samples(ensemble: &EnsembleLaw, j: usize, t_index: usize, mode: MarginalMode) -> Result<PointCloud> {
    if j == 0 || j > ensemble.n {
        return Err(invalid(format!("marginal order j = {j} must lie in 1..={}", ensemble.n)));
    }
    if t_index >= ensemble.grid.len() {
        return Err(invalid(format!("time index {t_index} is outside the grid of {}", ensemble.grid.len())));
    }
    let d = ensemble.dim;
    let width = j * d;
    let mut points = Vec::new();
    for r in 0..ensemble.r() {
        let frame = ensemble.frame(r, t_index);
        match mode {
            MarginalMode::FirstCoordinates => points.extend_from_slice(&frame[..width]),
            MarginalMode::Pooled => points.extend_from_slice(&frame[..(ensemble.n / j) * width]),
        }
    }
    PointCloud::new(points, j, d)
}
