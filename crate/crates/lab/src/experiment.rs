//! Running experiments: simulation, measurement, summaries and run
//! directories.
//!
//! Every random choice descends from the configured seed. Particle number
//! `N` gets the base seed `derive_labeled(seed, "nN")`, replica `r` the seed
//! `derive_seed(base, r)`, and each metric at grid index `k` its own
//! labelled stream. Replicas and estimator rounds run in parallel but are
//! collected in index order, so results do not depend on the worker count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kaclab::chaos_metrics::{
    compare_to_reference, exp_decay_fit, fisher_rel, lln_rate_fit, omega_inf, omega_inf_clouds, omega_n,
    rel_entropy_to_gaussian, ChaosReport, EntropyOptions, ExpFit, FisherOptions, Measured, OmegaOptions,
    OneParticleLaw, PointCloud, RateFit, ReportRow, W1Options,
};
use kaclab::chaotic_init::{
    marginal_samples, sample_conditioned_product, sample_product, sample_uniform_sphere, DensitySpec, McmcOptions,
    SphereSpec, SphereVariant,
};
use kaclab::kac_process::{run_replica, EnsembleLaw, EnsembleSpec, FailedReplica, ReplicaRecord, VelocityState};
use kaclab::limit_eq::moment_ode;
use kaclab::rng::{derive_labeled, derive_seed, SimRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, InitSpec, ReferenceSpec};
use crate::error::{LabError, LabResult};
use crate::manifest::{
    environment_note, sha256_hex, write_atomic, FailureNote, ReplicaStore, RunManifest, RunStatus, SeedBlock,
    RUN_FORMAT,
};
use crate::plot::{emit_plot, PlotSpec, Scale, Series};

pub const CODE_VERSION: &str = concat!("kaclab ", env!("CARGO_PKG_VERSION"));

/// Largest `N` for which `Ω_N` is computed when enabled.
const MAX_JOINT_N: usize = 16;

pub fn n_seed(cfg: &ExperimentConfig, n: usize) -> u64 {
    derive_labeled(cfg.seed, &format!("n{n}"))
}

pub fn replica_seeds(cfg: &ExperimentConfig, n: usize) -> Vec<u64> {
    let base = n_seed(cfg, n);
    (0..cfg.replicas).map(|r| derive_seed(base, r as u64)).collect()
}

fn sphere_spec(variant: SphereVariant, n: usize, dim: usize, e: f64) -> SphereSpec {
    match variant {
        SphereVariant::Kac => SphereSpec::kac(n),
        SphereVariant::Boltzmann => SphereSpec::boltzmann(n, dim),
    }
    .with_energy_per_particle(e)
}

/// One draw of the initial `N`-particle state.
pub fn sample_initial(cfg: &ExperimentConfig, n: usize, rng: &mut SimRng) -> kaclab::Result<VelocityState> {
    match &cfg.init {
        InitSpec::Product { density } => sample_product(density, n, rng),
        InitSpec::UniformSphere { sphere, energy_per_particle } => {
            sample_uniform_sphere(&sphere_spec(*sphere, n, cfg.dim, *energy_per_particle), rng)
        }
        InitSpec::Conditioned { density, sphere, burn_per_particle } => {
            let spec = sphere_spec(*sphere, n, cfg.dim, density.energy());
            let mcmc = McmcOptions { n_burn: burn_per_particle * n, n_thin: 5 * n };
            sample_conditioned_product(density, &spec, rng, mcmc)
        }
    }
}

fn ensemble_spec(cfg: &ExperimentConfig, n: usize) -> EnsembleSpec {
    EnsembleSpec {
        n,
        replicas: cfg.replicas,
        grid: cfg.grid.clone(),
        kernel: cfg.kernel,
        time_scale: cfg.time_scale,
        scheme: cfg.scheme,
        base_seed: n_seed(cfg, n),
        init: cfg.init.describe(),
    }
}

/// Simulates all replicas at particle number `n`. With a store, finished
/// replicas are loaded instead of recomputed and new ones are saved as
/// soon as they complete.
pub fn simulate(cfg: &ExperimentConfig, n: usize, store: Option<&ReplicaStore>) -> LabResult<EnsembleLaw> {
    let spec = ensemble_spec(cfg, n);
    let init = |rng: &mut SimRng| sample_initial(cfg, n, rng);
    let seeds = replica_seeds(cfg, n);
    let frame_len = n * cfg.dim;
    let outcomes: Vec<LabResult<Result<ReplicaRecord, FailedReplica>>> = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| {
            if let Some(rec) = store.and_then(|s| s.load(index, seed, spec.grid.len(), frame_len)) {
                return Ok(Ok(rec));
            }
            match run_replica(&spec, index, seed, &init) {
                Ok(rec) => {
                    if let Some(s) = store {
                        s.save(&rec)?;
                    }
                    Ok(Ok(rec))
                }
                Err(e) => Ok(Err(FailedReplica { index, seed, error: e.to_string() })),
            }
        })
        .collect();
    let mut replicas = Vec::new();
    let mut failed = Vec::new();
    for o in outcomes {
        match o? {
            Ok(rec) => replicas.push(rec),
            Err(f) => failed.push(f),
        }
    }
    if replicas.len() < 2 {
        let first = failed.first().map_or(String::new(), |f| format!("; first error: {}", f.error));
        return Err(LabError::Runtime(format!("N = {n}: {} of {} replicas failed{first}", failed.len(), cfg.replicas)));
    }
    Ok(EnsembleLaw {
        n,
        dim: cfg.dim,
        grid: spec.grid,
        kernel: spec.kernel,
        time_scale: spec.time_scale,
        scheme: spec.scheme,
        base_seed: spec.base_seed,
        init: spec.init,
        replicas,
        failed,
    })
}

/// The one-particle law chaos is measured against at time `t`.
pub fn reference_law(cfg: &ExperimentConfig, t: f64) -> LabResult<Box<dyn OneParticleLaw>> {
    Ok(match &cfg.reference {
        ReferenceSpec::Maxwellian => Box::new(DensitySpec::standard_gaussian(cfg.dim)),
        ReferenceSpec::Bkw { solution } => Box::new(solution.profile(t)?),
        ReferenceSpec::Initial => match cfg.init.density() {
            Some(d) => Box::new(d.clone()),
            None => return Err(LabError::Runtime("the initial law has no density to compare with".into())),
        },
    })
}

fn reference_m4(cfg: &ExperimentConfig, t: f64) -> Option<f64> {
    let d = cfg.dim as f64;
    match &cfg.reference {
        ReferenceSpec::Maxwellian => Some(d * (d + 2.0)),
        ReferenceSpec::Bkw { solution } => solution.fourth_moment(t).ok(),
        ReferenceSpec::Initial => {
            let f = cfg.init.density()?;
            moment_ode(&cfg.kernel, cfg.time_scale, cfg.dim, (f.energy(), f.fourth_moment()), t).ok().map(|m| m.1)
        }
    }
}

fn omega_options(cfg: &ExperimentConfig, seed: u64) -> OmegaOptions {
    let m = &cfg.metrics;
    OmegaOptions {
        rounds: m.rounds,
        w1: W1Options { n_exact: m.n_exact, slices: m.slices, truncated: true, seed: derive_labeled(seed, "w1") },
        seed,
        max_joint_n: MAX_JOINT_N,
        allow_large_joint: false,
    }
}

/// Evenly spaced subset of at most `cap` points, keeping the order.
fn thin(cloud: PointCloud, cap: usize) -> PointCloud {
    let n = cloud.n();
    if n <= cap {
        return cloud;
    }
    let idx: Vec<usize> = (0..cap).map(|i| i * n / cap).collect();
    cloud.select(&idx)
}

/// Pooled one-particle velocities of whole replicas, at most `cap` points.
fn pooled(ens: &EnsembleLaw, k: usize, cap: usize) -> LabResult<PointCloud> {
    let take = (cap / ens.n).clamp(1, ens.r());
    let mut pts = Vec::with_capacity(take * ens.n * ens.dim);
    for r in 0..take {
        pts.extend_from_slice(ens.frame(r, k));
    }
    Ok(PointCloud::new(pts, 1, ens.dim)?)
}

/// Per-replica second and fourth moments of `|v|`, averaged over particles.
pub fn replica_moments(ens: &EnsembleLaw, k: usize) -> Vec<(f64, f64)> {
    (0..ens.r())
        .map(|r| {
            let (mut m2, mut m4) = (0.0, 0.0);
            for v in ens.frame(r, k).chunks_exact(ens.dim) {
                let s: f64 = v.iter().map(|x| x * x).sum();
                m2 += s;
                m4 += s * s;
            }
            (m2 / ens.n as f64, m4 / ens.n as f64)
        })
        .collect()
}

/// All configured metrics of one ensemble along the grid.
pub fn measure(cfg: &ExperimentConfig, ens: &EnsembleLaw) -> LabResult<ChaosReport> {
    let m = &cfg.metrics;
    let n = ens.n;
    let base = ens.base_seed;
    let mut report = ChaosReport {
        title: format!("{} N={n}", cfg.name),
        n,
        dim: ens.dim,
        j: m.j,
        replicas: ens.r(),
        kernel: cfg.kernel.name().to_string(),
        ..Default::default()
    };
    let mut flags = Vec::new();
    for (k, &t) in ens.grid.iter().enumerate() {
        let law = reference_law(cfg, t)?;
        let mut row = ReportRow::at(t);
        if m.j > 0 && m.j <= n {
            let x = thin(marginal_samples(ens, m.j, k, m.marginal)?, m.n_exact);
            let e = compare_to_reference(
                &x,
                law.as_ref(),
                &omega_options(cfg, derive_labeled(base, &format!("omega_j/{k}"))),
            )?;
            flags.extend(e.flags.iter().map(|f| format!("t={t}: omega_j {f}")));
            row.omega_j = Some(Measured::from(&e));
        }
        if m.omega_inf {
            let opts = omega_options(cfg, derive_labeled(base, &format!("omega_inf/{k}")));
            let e = if cfg.kind == ExperimentKind::ConditionedProductRates && m.j > 1 {
                // Each replica contributes its ⌊N/ℓ⌋ disjoint ℓ-tuples.
                let clouds: Vec<PointCloud> = (0..ens.r())
                    .map(|r| {
                        let w = m.j * ens.dim;
                        PointCloud::new(ens.frame(r, k)[..(n / m.j) * w].to_vec(), m.j, ens.dim)
                    })
                    .collect::<kaclab::Result<_>>()?;
                omega_inf_clouds(&clouds, law.as_ref(), &opts)?
            } else {
                omega_inf(ens, law.as_ref(), k, &opts)?
            };
            flags.extend(e.flags.iter().map(|f| format!("t={t}: omega_inf {f}")));
            row.omega_inf = Some(Measured::from(&e));
        }
        if m.omega_n && n <= MAX_JOINT_N {
            let e = omega_n(ens, law.as_ref(), k, &omega_options(cfg, derive_labeled(base, &format!("omega_n/{k}"))))?;
            report.notes.push(format!("t={t}: omega_N = {:.6e} ± {:.2e} (high bias)", e.value, e.stderr));
        }
        if m.entropy || m.fisher {
            let cloud = pooled(ens, k, m.max_points)?;
            if m.entropy {
                let o = EntropyOptions {
                    k: m.entropy_k,
                    bootstrap: m.bootstrap,
                    block_size: n,
                    seed: derive_labeled(base, &format!("entropy/{k}")),
                };
                row.rel_entropy = Some(Measured::from(&rel_entropy_to_gaussian(&cloud, &o)?));
            }
            if m.fisher {
                let o = FisherOptions {
                    bootstrap: m.bootstrap,
                    block_size: n,
                    seed: derive_labeled(base, &format!("fisher/{k}")),
                    ..Default::default()
                };
                row.rel_fisher = Some(Measured::from(&fisher_rel(&cloud, &o)?));
            }
        }
        let mom = replica_moments(ens, k);
        row.m2 = Some(mom.iter().map(|p| p.0).sum::<f64>() / mom.len() as f64);
        row.m4 = Some(mom.iter().map(|p| p.1).sum::<f64>() / mom.len() as f64);
        row.m4_reference = reference_m4(cfg, t);
        row.mean_collisions = Some(ens.replicas.iter().map(|r| r.collisions[k] as f64).sum::<f64>() / ens.r() as f64);
        report.rows.push(row);
    }
    flags.dedup();
    report.notes.extend(flags);
    if !ens.failed.is_empty() {
        report.notes.push(format!("{} replica(s) failed and were excluded", ens.failed.len()));
    }
    if cfg.kind == ExperimentKind::Equilibration {
        let series = primary_series(cfg, &report);
        if let Some(fit) = tail_decay_fit(&series, m.tail_fraction) {
            report.decay_fits.push((primary_name(cfg).to_string(), fit));
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Summaries

/// The quantity each kind is about.
pub fn primary_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg.kind {
        ExperimentKind::HTheorem => "rel_entropy",
        ExperimentKind::LlnRates | ExperimentKind::ConditionedProductRates => "omega_inf",
        _ if cfg.metrics.j > 0 => "omega_j",
        _ => "omega_inf",
    }
}

pub fn primary_series(cfg: &ExperimentConfig, report: &ChaosReport) -> Vec<(f64, Measured)> {
    let name = primary_name(cfg);
    report
        .rows
        .iter()
        .filter_map(|r| {
            let m = match name {
                "rel_entropy" => r.rel_entropy,
                "omega_inf" => r.omega_inf,
                _ => r.omega_j,
            };
            m.map(|m| (r.time, m))
        })
        .collect()
}

fn tail_decay_fit(series: &[(f64, Measured)], fraction: f64) -> Option<ExpFit> {
    let keep = ((series.len() as f64 * fraction).ceil() as usize).clamp(1, series.len());
    let tail = &series[series.len() - keep..];
    let t: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1.value).collect();
    exp_decay_fit(&t, &y).ok()
}

/// `y_{k+1} ≤ y_k + z·√(se_k² + se_{k+1}²)` for every consecutive pair.
pub fn nonincreasing_within(series: &[(f64, Measured)], z: f64) -> Result<(), String> {
    for w in series.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let tol = z * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        if b.value > a.value + tol {
            return Err(format!(
                "rises from {:.4e} at t={} to {:.4e} at t={} (tolerance {tol:.2e})",
                a.value, w[0].0, b.value, w[1].0
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
    /// Grid time the value refers to.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub kind: ExperimentKind,
    /// Manifest file and configuration hash these results belong to.
    pub manifest: String,
    pub rows: Vec<SummaryRow>,
    pub rate_fit: Option<RateFit>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

pub const SUMMARY_CSV_HEADER: &str = "n,quantity,time,value,stderr";

impl RunSummary {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n{SUMMARY_CSV_HEADER}\n", self.manifest);
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.10e},{:.10e},{:.10e}\n", r.n, r.quantity, r.time, r.value, r.stderr));
        }
        out
    }
}

/// Headline numbers and pass/fail checks of a finished run.
pub fn summarize(cfg: &ExperimentConfig, reports: &[ChaosReport], manifest: &str) -> RunSummary {
    let name = primary_name(cfg);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for rep in reports {
        let series = primary_series(cfg, rep);
        let Some(&last) = series.last() else { continue };
        let (quantity, (time, m)) = match cfg.kind {
            ExperimentKind::ChaosPropagation => {
                let best = series.iter().copied().max_by(|a, b| a.1.value.total_cmp(&b.1.value)).unwrap();
                (format!("sup_t {name}"), best)
            }
            _ => (name.to_string(), last),
        };
        rows.push(SummaryRow { n: rep.n, quantity, value: m.value, stderr: m.stderr, time });
        match cfg.kind {
            ExperimentKind::Equilibration => {
                let mono = nonincreasing_within(&series, 2.0);
                checks.push(Check {
                    name: format!("N={} {name} non-increasing within 2 SE", rep.n),
                    passed: mono.is_ok(),
                    detail: mono.err().unwrap_or_else(|| "ok".into()),
                });
                let (passed, detail) = match rep.decay_fits.first() {
                    Some((_, f)) => (
                        f.r_squared > 0.95 && f.rate > 0.0,
                        format!("rate {:.4}, R² {:.4}, {} points", f.rate, f.r_squared, f.used),
                    ),
                    None => (false, "no usable tail points".into()),
                };
                checks.push(Check { name: format!("N={} exponential tail", rep.n), passed, detail });
            }
            ExperimentKind::HTheorem => {
                let mono = nonincreasing_within(&series, 2.0);
                checks.push(Check {
                    name: format!("N={} relative entropy non-increasing within 2 SE", rep.n),
                    passed: mono.is_ok(),
                    detail: mono.err().unwrap_or_else(|| "ok".into()),
                });
                checks.push(Check {
                    name: format!("N={} final relative entropy below 0.05", rep.n),
                    passed: last.1.value < 0.05,
                    detail: format!("{:.4e} ± {:.2e} at t={}", last.1.value, last.1.stderr, last.0),
                });
            }
            _ => {}
        }
    }
    if cfg.kind == ExperimentKind::ChaosPropagation && rows.len() > 1 {
        let mut ok = true;
        let mut detail = Vec::new();
        for w in rows.windows(2) {
            let pooled = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            let gap = w[0].value - w[1].value;
            ok &= gap > pooled;
            detail.push(format!("N={}→{}: drop {gap:.3e} vs SE {pooled:.3e}", w[0].n, w[1].n));
        }
        checks.push(Check {
            name: "sup over time strictly decreasing in N beyond 1 pooled SE".into(),
            passed: ok,
            detail: detail.join("; "),
        });
    }
    let mut rate_fit = None;
    if cfg.kind.is_static() {
        let pts: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.n as f64, r.value, r.stderr)).collect();
        match lln_rate_fit(&pts, cfg.metrics.level) {
            Ok(f) => {
                checks.push(Check {
                    name: format!("power-law fit of {name} in N"),
                    passed: true,
                    detail: format!("slope {:.4} [{:.4}, {:.4}]", f.slope, f.ci.0, f.ci.1),
                });
                rate_fit = Some(f);
            }
            Err(e) => notes.push(format!("no rate fit: {e}")),
        }
    }
    RunSummary { name: cfg.name.clone(), kind: cfg.kind, manifest: manifest.to_string(), rows, rate_fit, checks, notes }
}

// ---------------------------------------------------------------------------
// In-memory runs

#[derive(Debug, Clone)]
pub struct Outcome {
    pub reports: Vec<ChaosReport>,
    pub summary: RunSummary,
    pub failed: Vec<FailureNote>,
}

/// Runs the experiment without touching the disk.
pub fn run_in_memory(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for &n in &cfg.n {
        let ens = simulate(cfg, n, None)?;
        failed.extend(ens.failed.iter().map(|f| FailureNote { n, replica: f.clone() }));
        reports.push(measure(cfg, &ens)?);
    }
    let summary = summarize(cfg, &reports, "in-memory run");
    Ok(Outcome { reports, summary, failed })
}

// ---------------------------------------------------------------------------
// Run directories

pub fn n_dir(n: usize) -> String {
    format!("n{n:05}")
}

fn manifest_ref(hash: &str) -> String {
    format!("manifest=manifest.json config_sha256={hash}")
}

fn plots(cfg: &ExperimentConfig, reports: &[ChaosReport], summary: &RunSummary) -> Vec<(String, Vec<Series>, Scale)> {
    let name = primary_name(cfg);
    if cfg.kind.is_static() {
        let pts = summary.rows.iter().map(|r| (r.n as f64, r.value, r.stderr)).collect();
        return vec![(format!("{name}_vs_n"), vec![Series { label: name.into(), points: pts }], Scale::LogLog)];
    }
    let scale = match cfg.kind {
        ExperimentKind::ChaosPropagation => Scale::Linear,
        _ => Scale::SemiLogY,
    };
    let series = reports
        .iter()
        .map(|rep| Series {
            label: format!("N = {}", rep.n),
            points: primary_series(cfg, rep).iter().map(|(t, m)| (*t, m.value, m.stderr)).collect(),
        })
        .collect();
    vec![(format!("{name}_vs_t"), series, scale)]
}

/// Renders the plots of a run into `dir`; returns the files written.
pub fn render_plots(
    cfg: &ExperimentConfig,
    reports: &[ChaosReport],
    summary: &mut RunSummary,
    dir: &Path,
) -> Vec<String> {
    let mut written = Vec::new();
    for (stem, series, scale) in plots(cfg, reports, summary) {
        let x_label = if cfg.kind.is_static() { "N" } else { "t" };
        let title = format!("{}: {}", cfg.name, stem.replace('_', " "));
        let spec =
            PlotSpec { title: &title, x_label, y_label: primary_name(cfg), scale, fit: summary.rate_fit.as_ref() };
        let file = format!("{stem}.svg");
        match emit_plot(&series, &spec, &dir.join(&file)) {
            Ok(()) => written.push(file),
            Err(e) => summary.notes.push(format!("plot {file} skipped: {e}")),
        }
    }
    written
}

#[derive(Debug, Default, Serialize)]
struct Timing {
    per_n_seconds: Vec<(usize, f64)>,
    total_seconds: f64,
}

/// Default output directory of a configuration.
pub fn default_output(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name))
}

/// Runs into `dir`, resuming from any replicas already stored there.
///
/// The manifest is written before anything else. A directory holding a
/// run of a different configuration is refused.
pub fn run_to_dir(cfg: &ExperimentConfig, config_text: &str, dir: &Path) -> LabResult<(RunManifest, RunSummary)> {
    let start = Instant::now();
    std::fs::create_dir_all(dir)?;
    let hash = sha256_hex(config_text.as_bytes());
    if RunManifest::path(dir).exists() {
        let old = RunManifest::read(dir)?;
        if old.config_sha256 != hash {
            return Err(LabError::Runtime(format!(
                "{} holds a run of a different configuration (sha256 {}); choose another output directory",
                dir.display(),
                old.config_sha256
            )));
        }
    }
    let mut results: Vec<String> =
        cfg.n.iter().flat_map(|&n| [format!("{}/report.json", n_dir(n)), format!("{}/report.csv", n_dir(n))]).collect();
    results.extend(["summary.json".to_string(), "summary.csv".to_string()]);
    let mut manifest = RunManifest {
        format: RUN_FORMAT.into(),
        code_version: CODE_VERSION.into(),
        experiment: cfg.kind.name().into(),
        name: cfg.name.clone(),
        config_sha256: hash.clone(),
        config: config_text.to_string(),
        seeds: cfg
            .n
            .iter()
            .map(|&n| SeedBlock { n, base_seed: n_seed(cfg, n), replica_seeds: replica_seeds(cfg, n) })
            .collect(),
        environment: environment_note(),
        timing: "timing.json".into(),
        status: RunStatus::Running,
        results: results.clone(),
        failed: Vec::new(),
    };
    manifest.write(dir)?;

    let mref = manifest_ref(&hash);
    let mut reports = Vec::new();
    let mut timing = Timing::default();
    for &n in &cfg.n {
        let t0 = Instant::now();
        let store = ReplicaStore::new(dir, n)?;
        let ens = simulate(cfg, n, Some(&store))?;
        manifest.failed.extend(ens.failed.iter().map(|f| FailureNote { n, replica: f.clone() }));
        let mut report = measure(cfg, &ens)?;
        report.notes.insert(0, mref.clone());
        let sub = dir.join(n_dir(n));
        std::fs::create_dir_all(&sub)?;
        let mut json = report.to_json()?;
        json.push('\n');
        write_atomic(&sub.join("report.json"), json.as_bytes())?;
        write_atomic(&sub.join("report.csv"), format!("# {mref}\n{}", report.to_csv()).as_bytes())?;
        timing.per_n_seconds.push((n, t0.elapsed().as_secs_f64()));
        reports.push(report);
    }
    let mut summary = summarize(cfg, &reports, &mref);
    results.extend(render_plots(cfg, &reports, &mut summary, dir));
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    write_atomic(&dir.join("summary.json"), json.as_bytes())?;
    write_atomic(&dir.join("summary.csv"), summary.to_csv().as_bytes())?;
    timing.total_seconds = start.elapsed().as_secs_f64();
    write_atomic(&dir.join("timing.json"), serde_json::to_string_pretty(&timing)?.as_bytes())?;
    manifest.results = results;
    manifest.status = RunStatus::Complete;
    manifest.write(dir)?;
    Ok((manifest, summary))
}

/// Reports of a finished run directory.
pub fn load_reports(dir: &Path, manifest: &RunManifest) -> LabResult<Vec<ChaosReport>> {
    manifest
        .seeds
        .iter()
        .map(|s| {
            let text = std::fs::read_to_string(dir.join(n_dir(s.n)).join("report.json"))?;
            Ok(ChaosReport::from_json(&text)?)
        })
        .collect()
}
