//! The N-particle Boltzmann–Kac jump process.
//!
//! Each unordered pair `{i, j}` collides at rate `c · B(|v_i - v_j|) · m_b`
//! with `c = 2/N` ([`TimeScale::Ordered`], every ordered pair counted) or
//! `c = 1/N` ([`TimeScale::Half`]). For Maxwell kernels the total rate is
//! `c · m_b · N(N-1)/2`, so `N - 1` under the defaults.
//!
//! Two event schemes are provided. [`KacProcess::step_ssa`] is exact
//! Gillespie sampling with per-particle rate sums kept up to date in O(N)
//! per event. [`KacProcess::step_rejection`] thins a constant majorant built
//! from a bound on the speeds relative to the center of mass.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{self, CollisionKernel, KernelVariant, OneDimCollision};
use crate::rng::{derive_labeled, derive_seed, stream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScale {
    /// Per-pair rate `2/N · B · m_b`.
    #[default]
    Ordered,
    /// Per-pair rate `1/N · B · m_b`.
    Half,
}

impl TimeScale {
    fn prefactor(self, n: usize) -> f64 {
        match self {
            TimeScale::Ordered => 2.0 / n as f64,
            TimeScale::Half => 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Ssa,
    Rejection,
}

/// Microscopic state: `N` velocities in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityState {
    dim: usize,
    data: Vec<f64>,
    pub time: f64,
    pub collisions: u64,
    pub kernel: CollisionKernel,
    /// Total energy of the sphere the state was drawn on, if any.
    pub sphere_energy: Option<f64>,
}

impl VelocityState {
    pub fn new(data: Vec<f64>, dim: usize, kernel: CollisionKernel) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(invalid(format!("{} values do not form rows of dimension {dim}", data.len())));
        }
        if data.len() / dim < 2 {
            return Err(invalid("a state needs at least two particles"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("velocities must be finite"));
        }
        kernel.validate(dim)?;
        Ok(Self { dim, data, time: 0.0, collisions: 0, kernel, sphere_energy: None })
    }

    pub fn on_sphere(mut self, total_energy: f64) -> Self {
        self.sphere_energy = Some(total_energy);
        self
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert_ne!(i, j);
        let d = self.dim;
        let (lo, hi) = (i.min(j), i.max(j));
        let (left, right) = self.data.split_at_mut(hi * d);
        let a = &mut left[lo * d..(lo + 1) * d];
        let b = &mut right[..d];
        if i < j {
            (a, b)
        } else {
            (b, a)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub momentum: Vec<f64>,
    pub energy: f64,
    /// `(|Σ v_i|, |Σ |v_i|² - E|)` where `E` is the sphere energy of the state
    /// (`N` when none was recorded).
    pub sphere_residuals: (f64, f64),
}

pub fn conserved_check(state: &VelocityState) -> Conserved {
    let d = state.dim;
    let mut momentum = vec![0.0; d];
    let mut energy = 0.0;
    for v in state.data.chunks_exact(d) {
        for k in 0..d {
            momentum[k] += v[k];
        }
        energy += kernels::dot(v, v);
    }
    let target = state.sphere_energy.unwrap_or(state.n() as f64);
    let m = kernels::norm(&momentum);
    Conserved { momentum, energy, sphere_residuals: (m, (energy - target).abs()) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// A collision happened after `wait` time units.
    Jump { wait: f64, pair: (usize, usize) },
    /// Thinning only: time advanced by `wait`, velocities unchanged.
    Fictitious { wait: f64 },
    /// All rates vanish; the state never changes again.
    Frozen,
}

/// The jump process around a state, with cached rate data.
#[derive(Debug, Clone)]
pub struct KacProcess {
    state: VelocityState,
    time_scale: TimeScale,
    /// `Σ_j B(|v_i - v_j|)` per particle (hard spheres only).
    row_sums: Vec<f64>,
    events_since_refresh: usize,
    /// Upper bound on `|v_i - center|` (thinning only).
    speed_bound: f64,
    center: Vec<f64>,
    fictitious: u64,
    sigma: Vec<f64>,
    u: Vec<f64>,
}

impl KacProcess {
    pub fn new(state: VelocityState, time_scale: TimeScale) -> Self {
        let d = state.dim;
        let mut p = Self {
            state,
            time_scale,
            row_sums: Vec::new(),
            events_since_refresh: 0,
            speed_bound: 0.0,
            center: vec![0.0; d],
            fictitious: 0,
            sigma: vec![0.0; d],
            u: vec![0.0; d],
        };
        p.refresh();
        p
    }

    pub fn state(&self) -> &VelocityState {
        &self.state
    }

    pub fn into_state(self) -> VelocityState {
        self.state
    }

    pub fn fictitious_jumps(&self) -> u64 {
        self.fictitious
    }

    fn is_hs(&self) -> bool {
        matches!(self.state.kernel.variant, KernelVariant::HardSpheres)
    }

    /// `c · m_b`, the rate of a pair with `B = 1`.
    fn unit_rate(&self) -> f64 {
        self.time_scale.prefactor(self.state.n()) * self.state.kernel.angular_mass(self.state.dim)
    }

    fn refresh(&mut self) {
        let n = self.state.n();
        let d = self.state.dim;
        self.events_since_refresh = 0;
        if self.is_hs() {
            self.row_sums = (0..n)
                .map(|i| {
                    let vi = self.state.velocity(i);
                    (0..n).filter(|&j| j != i).map(|j| kernels::distance(vi, self.state.velocity(j))).sum()
                })
                .collect();
        }
        self.center.iter_mut().for_each(|c| *c = 0.0);
        for v in self.state.data.chunks_exact(d) {
            for k in 0..d {
                self.center[k] += v[k] / n as f64;
            }
        }
        self.speed_bound =
            self.state.data.chunks_exact(d).map(|v| kernels::distance(v, &self.center)).fold(0.0, f64::max);
    }

    /// Exact total jump rate `c · Σ_{i<j} B_ij · m_b`.
    pub fn total_rate(&self) -> f64 {
        let n = self.state.n();
        if self.is_hs() {
            self.unit_rate() * 0.5 * self.row_sums.iter().sum::<f64>()
        } else {
            self.unit_rate() * (n * (n - 1)) as f64 / 2.0
        }
    }

    /// Thinning majorant `c · m_b · N(N-1)/2 · 2 v_max` for hard spheres.
    pub fn majorant(&self) -> f64 {
        let n = self.state.n();
        let pairs = (n * (n - 1)) as f64 / 2.0;
        if self.is_hs() {
            self.unit_rate() * pairs * 2.0 * self.speed_bound
        } else {
            self.unit_rate() * pairs
        }
    }

    fn uniform_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    /// Applies the collision map to `(i, j)`, updating the caches.
    fn collide<R: Rng + ?Sized>(&mut self, i: usize, j: usize, rng: &mut R) {
        let d = self.state.dim;
        let kernel = self.state.kernel;
        let hs = self.is_hs();
        let (old_i, old_j) = if hs {
            (self.state.velocity(i).to_vec(), self.state.velocity(j).to_vec())
        } else {
            (Vec::new(), Vec::new())
        };
        if d == 1 && kernel.one_dim == OneDimCollision::KacRotation {
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            let (a, b) = self.state.pair_mut(i, j);
            kernels::kac_rotation(&mut a[0], &mut b[0], angle);
        } else {
            let (a, b) = {
                let (a, b) = self.state.pair_mut(i, j);
                (a.to_vec(), b.to_vec())
            };
            let r = kernels::distance(&a, &b);
            if r > 0.0 {
                for k in 0..d {
                    self.u[k] = (a[k] - b[k]) / r;
                }
            } else {
                self.u.iter_mut().for_each(|x| *x = 0.0);
                self.u[0] = 1.0;
            }
            kernel.sample_sigma_into(&self.u, rng, &mut self.sigma);
            let sigma = std::mem::take(&mut self.sigma);
            let (a, b) = self.state.pair_mut(i, j);
            kernels::collide_in_place(a, b, &sigma);
            self.sigma = sigma;
        }
        self.state.collisions += 1;

        if hs {
            let n = self.state.n();
            let (new_i, new_j) = (self.state.velocity(i).to_vec(), self.state.velocity(j).to_vec());
            let mut ri = 0.0;
            let mut rj = 0.0;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let vk = self.state.velocity(k);
                let (dni, dnj) = (kernels::distance(vk, &new_i), kernels::distance(vk, &new_j));
                let delta = dni + dnj - kernels::distance(vk, &old_i) - kernels::distance(vk, &old_j);
                self.row_sums[k] += delta;
                ri += dni;
                rj += dnj;
            }
            let dij = kernels::distance(&new_i, &new_j);
            self.row_sums[i] = ri + dij;
            self.row_sums[j] = rj + dij;
            for v in [&new_i, &new_j] {
                self.speed_bound = self.speed_bound.max(kernels::distance(v, &self.center));
            }
        }
        self.events_since_refresh += 1;
        if self.events_since_refresh >= self.state.n() {
            self.refresh();
        }
    }

    fn event_rate(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Ssa => self.total_rate(),
            Scheme::Rejection => self.majorant(),
        }
    }

    /// Samples the next collision exactly (Gillespie).
    pub fn step_ssa<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Step {
        self.step(Scheme::Ssa, rng).expect("the exact scheme cannot violate a majorant")
    }

    /// Samples the next event by thinning a constant majorant.
    pub fn step_rejection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Step> {
        self.step(Scheme::Rejection, rng)
    }

    fn step<R: Rng + ?Sized>(&mut self, scheme: Scheme, rng: &mut R) -> Result<Step> {
        let rate = self.event_rate(scheme);
        if !(rate > 0.0) {
            return Ok(Step::Frozen);
        }
        let wait = {
            let e: f64 = Exp1.sample(rng);
            e
        } / rate;
        self.state.time += wait;
        self.apply_event(scheme, wait, rng)
    }

    /// Selects and applies the event that ends a waiting time.
    fn apply_event<R: Rng + ?Sized>(&mut self, scheme: Scheme, wait: f64, rng: &mut R) -> Result<Step> {
        let n = self.state.n();
        if !self.is_hs() {
            let (i, j) = Self::uniform_pair(n, rng);
            self.collide(i, j, rng);
            return Ok(Step::Jump { wait, pair: (i, j) });
        }
        match scheme {
            Scheme::Ssa => {
                let s: f64 = self.row_sums.iter().sum();
                let i = pick(&self.row_sums, s, rng);
                let vi = self.state.velocity(i).to_vec();
                let weights: Vec<f64> =
                    (0..n).map(|j| if j == i { 0.0 } else { kernels::distance(&vi, self.state.velocity(j)) }).collect();
                let ws: f64 = weights.iter().sum();
                if !(ws > 0.0) {
                    // Particle i sits on every other velocity; its cached row
                    // sum was rounding noise.
                    self.refresh();
                    return self.apply_event(scheme, wait, rng);
                }
                let j = pick(&weights, ws, rng);
                self.collide(i, j, rng);
                Ok(Step::Jump { wait, pair: (i, j) })
            }
            Scheme::Rejection => {
                let (i, j) = Self::uniform_pair(n, rng);
                let speed = kernels::distance(self.state.velocity(i), self.state.velocity(j));
                let cap = 2.0 * self.speed_bound;
                if speed > cap * (1.0 + 1e-12) {
                    let pairs = (n * (n - 1)) as f64 / 2.0;
                    return Err(Error::MajorantViolation {
                        rate: self.unit_rate() * pairs * speed,
                        bound: self.majorant(),
                    });
                }
                if rng.gen::<f64>() * cap < speed {
                    self.collide(i, j, rng);
                    Ok(Step::Jump { wait, pair: (i, j) })
                } else {
                    self.fictitious += 1;
                    self.events_since_refresh += 1;
                    if self.events_since_refresh >= n {
                        self.refresh();
                    }
                    Ok(Step::Fictitious { wait })
                }
            }
        }
    }

    /// Runs until `grid.last()` and records the state at each grid time.
    ///
    /// The state is constant between events, so each grid time sees exactly
    /// the state left by the last event before it.
    pub fn simulate<R: Rng + ?Sized>(&mut self, grid: &[f64], rng: &mut R, scheme: Scheme) -> Result<Trajectory> {
        check_grid(grid, self.state.time)?;
        let mut snapshots = Vec::with_capacity(grid.len());
        let mut frozen_at = None;
        let mut k = 0;
        loop {
            let rate = self.event_rate(scheme);
            let next = if rate > 0.0 {
                self.state.time + {
                    let e: f64 = Exp1.sample(rng);
                    e
                } / rate
            } else {
                f64::INFINITY
            };
            while k < grid.len() && grid[k] < next {
                snapshots.push(Snapshot {
                    time: grid[k],
                    velocities: self.state.data.clone(),
                    collisions: self.state.collisions,
                });
                k += 1;
            }
            if next == f64::INFINITY {
                frozen_at = Some(self.state.time);
            }
            if k == grid.len() {
                break;
            }
            let wait = next - self.state.time;
            self.state.time = next;
            self.apply_event(scheme, wait, rng)?;
        }
        self.state.time = *grid.last().unwrap();
        Ok(Trajectory { dim: self.state.dim, snapshots, frozen_at, fictitious: self.fictitious })
    }
}

fn pick<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut target = rng.gen::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = k;
            if target < w {
                return k;
            }
            target -= w;
        }
    }
    last
}

fn check_grid(grid: &[f64], start: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    if grid[0] < start {
        return Err(invalid(format!("time grid starts at {} before the state time {start}", grid[0])));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("time grid must be finite and strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub velocities: Vec<f64>,
    pub collisions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub snapshots: Vec<Snapshot>,
    /// Time at which all rates vanished, if that happened.
    pub frozen_at: Option<f64>,
    pub fictitious: u64,
}

/// Convenience wrapper around [`KacProcess::simulate`].
pub fn simulate<R: Rng + ?Sized>(
    state0: VelocityState,
    grid: &[f64],
    rng: &mut R,
    scheme: Scheme,
    time_scale: TimeScale,
) -> Result<Trajectory> {
    KacProcess::new(state0, time_scale).simulate(grid, rng, scheme)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub index: usize,
    pub seed: u64,
    /// Row-major `N × d` velocities, one per grid time.
    #[serde(skip)]
    pub frames: Vec<Vec<f64>>,
    pub collisions: Vec<u64>,
    pub frozen_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedReplica {
    pub index: usize,
    pub seed: u64,
    pub error: String,
}

/// `R` independent replicas observed on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleLaw {
    pub n: usize,
    pub dim: usize,
    pub grid: Vec<f64>,
    pub kernel: CollisionKernel,
    pub time_scale: TimeScale,
    pub scheme: Scheme,
    pub base_seed: u64,
    /// Free-form description of the initial law.
    pub init: String,
    pub replicas: Vec<ReplicaRecord>,
    pub failed: Vec<FailedReplica>,
}

#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub n: usize,
    pub replicas: usize,
    pub grid: Vec<f64>,
    pub kernel: CollisionKernel,
    pub time_scale: TimeScale,
    pub scheme: Scheme,
    pub base_seed: u64,
    pub init: String,
}

impl EnsembleLaw {
    pub fn r(&self) -> usize {
        self.replicas.len()
    }

    /// Row-major `N × d` frame of replica `r` at grid index `t`.
    pub fn frame(&self, r: usize, t: usize) -> &[f64] {
        &self.replicas[r].frames[t]
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.replicas.iter().map(|r| r.seed).collect()
    }
}

/// Runs `spec.replicas` independent trajectories.
///
/// Replica `r` uses seed `derive_seed(base_seed, r)`, split into an `"init"`
/// stream passed to `init` and a `"dynamics"` stream. Replicas run in
/// parallel; the result does not depend on scheduling. A replica whose
/// sampler or dynamics fails is recorded in `failed`; the call errors only
/// when every replica fails.
pub fn run_ensemble<F>(spec: &EnsembleSpec, init: F) -> Result<EnsembleLaw>
where
    F: Fn(&mut SimRng) -> Result<VelocityState> + Sync,
{
    if spec.replicas == 0 {
        return Err(invalid("at least one replica is required"));
    }
    check_grid(&spec.grid, 0.0)?;
    let outcomes: Vec<(usize, u64, Result<ReplicaRecord>)> = (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(spec.base_seed, r as u64);
            (r, seed, run_replica(spec, r, seed, &init))
        })
        .collect();
    let mut replicas = Vec::new();
    let mut failed = Vec::new();
    let mut dim = None;
    for (index, seed, out) in outcomes {
        match out {
            Ok(rec) => {
                dim.get_or_insert(rec.frames[0].len() / spec.n);
                replicas.push(rec)
            }
            Err(e) => failed.push(FailedReplica { index, seed, error: e.to_string() }),
        }
    }
    if replicas.is_empty() {
        return Err(Error::Sampling(format!("all {} replicas failed; first error: {}", failed.len(), failed[0].error)));
    }
    Ok(EnsembleLaw {
        n: spec.n,
        dim: dim.unwrap(),
        grid: spec.grid.clone(),
        kernel: spec.kernel,
        time_scale: spec.time_scale,
        scheme: spec.scheme,
        base_seed: spec.base_seed,
        init: spec.init.clone(),
        replicas,
        failed,
    })
}

/// Runs one replica of `spec`; used by [`run_ensemble`] and by resumable runners.
pub fn run_replica<F>(spec: &EnsembleSpec, index: usize, seed: u64, init: &F) -> Result<ReplicaRecord>
where
    F: Fn(&mut SimRng) -> Result<VelocityState>,
{
    let mut init_rng = stream(derive_labeled(seed, "init"));
    let mut state = init(&mut init_rng)?;
    if state.n() != spec.n {
        return Err(invalid(format!("initial sampler produced {} particles, expected {}", state.n(), spec.n)));
    }
    state.kernel = spec.kernel;
    spec.kernel.validate(state.dim())?;
    let mut rng = stream(derive_labeled(seed, "dynamics"));
    let traj = KacProcess::new(state, spec.time_scale).simulate(&spec.grid, &mut rng, spec.scheme)?;
    let collisions = traj.snapshots.iter().map(|s| s.collisions).collect();
    Ok(ReplicaRecord {
        index,
        seed,
        frames: traj.snapshots.into_iter().map(|s| s.velocities).collect(),
        collisions,
        frozen_at: traj.frozen_at,
    })
}

pub const ENSEMBLE_FORMAT: &str = "kaclab-ensemble/1";

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleManifest {
    format: String,
    code_version: String,
    n: usize,
    dim: usize,
    grid: Vec<f64>,
    kernel: CollisionKernel,
    time_scale: TimeScale,
    scheme: Scheme,
    base_seed: u64,
    init: String,
    layout: String,
    replicas: Vec<ReplicaRecord>,
    failed: Vec<FailedReplica>,
}

pub fn frame_file_name(replica: usize, t_index: usize) -> String {
    format!("r{replica:05}_t{t_index:04}.bin")
}

/// Writes `manifest.json` and one little-endian `f64` file per
/// (replica, grid time), row-major `N × d`.
pub fn write_ensemble(law: &EnsembleLaw, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for rec in &law.replicas {
        for (t, frame) in rec.frames.iter().enumerate() {
            let bytes: Vec<u8> = frame.iter().flat_map(|x| x.to_le_bytes()).collect();
            std::fs::write(dir.join(frame_file_name(rec.index, t)), bytes)?;
        }
    }
    let manifest = EnsembleManifest {
        format: ENSEMBLE_FORMAT.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        n: law.n,
        dim: law.dim,
        grid: law.grid.clone(),
        kernel: law.kernel,
        time_scale: law.time_scale,
        scheme: law.scheme,
        base_seed: law.base_seed,
        init: law.init.clone(),
        layout: "row-major N x d, little-endian f64, file r{replica:05}_t{time:04}.bin".into(),
        replicas: law.replicas.clone(),
        failed: law.failed.clone(),
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_ensemble(dir: &Path) -> Result<EnsembleLaw> {
    let manifest: EnsembleManifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
    if manifest.format != ENSEMBLE_FORMAT {
        return Err(Error::Format(format!("unknown ensemble format {:?}", manifest.format)));
    }
    let expected = manifest.n * manifest.dim * 8;
    let mut replicas = manifest.replicas;
    for rec in &mut replicas {
        rec.frames = (0..manifest.grid.len())
            .map(|t| {
                let bytes = std::fs::read(dir.join(frame_file_name(rec.index, t)))?;
                if bytes.len() != expected {
                    return Err(Error::Format(format!(
                        "{} has {} bytes, expected {expected}",
                        frame_file_name(rec.index, t),
                        bytes.len()
                    )));
                }
                Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            })
            .collect::<Result<_>>()?;
    }
    Ok(EnsembleLaw {
        n: manifest.n,
        dim: manifest.dim,
        grid: manifest.grid,
        kernel: manifest.kernel,
        time_scale: manifest.time_scale,
        scheme: manifest.scheme,
        base_seed: manifest.base_seed,
        init: manifest.init,
        replicas,
        failed: manifest.failed,
    })
}
