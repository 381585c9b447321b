//! Experiment configuration: one TOML file per experiment.
//!
//! Parsing is two-staged. The file is first read into optional fields so
//! that every problem can be reported at once; validation then resolves
//! defaults and checks cross-field constraints. Each error names the field
//! and, where it can be found, the line it sits on.

use std::fmt;
use std::path::{Path, PathBuf};

use kaclab::chaotic_init::{DensitySpec, MarginalMode, MixtureComponent, SphereVariant};
use kaclab::kac_process::{Scheme, TimeScale};
use kaclab::kernels::{AngularConvention, CollisionKernel, OneDimCollision};
use kaclab::limit_eq::{BkwProfile, ReferenceSolution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ChaosPropagation,
    Equilibration,
    LlnRates,
    ConditionedProductRates,
    HTheorem,
    PoincareMarginals,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ChaosPropagation,
        ExperimentKind::Equilibration,
        ExperimentKind::LlnRates,
        ExperimentKind::ConditionedProductRates,
        ExperimentKind::HTheorem,
        ExperimentKind::PoincareMarginals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ChaosPropagation => "chaos_propagation",
            ExperimentKind::Equilibration => "equilibration",
            ExperimentKind::LlnRates => "lln_rates",
            ExperimentKind::ConditionedProductRates => "conditioned_product_rates",
            ExperimentKind::HTheorem => "h_theorem",
            ExperimentKind::PoincareMarginals => "poincare_marginals",
        }
    }

    /// Kinds measured at `t = 0` only, as a function of `N`.
    pub fn is_static(self) -> bool {
        matches!(
            self,
            ExperimentKind::LlnRates | ExperimentKind::ConditionedProductRates | ExperimentKind::PoincareMarginals
        )
    }
}

// ---------------------------------------------------------------------------
// Raw file layout

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<ExperimentKind>,
    name: Option<String>,
    seed: Option<u64>,
    n: Option<Vec<usize>>,
    replicas: Option<usize>,
    dim: Option<usize>,
    grid: Option<Vec<f64>>,
    time_scale: Option<TimeScale>,
    scheme: Option<Scheme>,
    output: Option<PathBuf>,
    kernel: Option<RawKernel>,
    init: Option<RawInit>,
    reference: Option<RawReference>,
    metrics: Option<MetricOptions>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    kind: Option<String>,
    eps: Option<f64>,
    nu: Option<f64>,
    convention: Option<AngularConvention>,
    one_dim: Option<OneDimCollision>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    kind: Option<String>,
    density: Option<String>,
    variance: Option<f64>,
    mean: Option<Vec<f64>>,
    separation: Option<f64>,
    half_width: Option<f64>,
    t0: Option<f64>,
    sphere: Option<SphereVariant>,
    energy_per_particle: Option<f64>,
    burn_per_particle: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    kind: Option<String>,
}

// ---------------------------------------------------------------------------
// Validated configuration

/// How each replica's initial state is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// `f^⊗N`.
    Product { density: DensitySpec },
    /// Uniform on the Kac or Boltzmann sphere.
    UniformSphere { sphere: SphereVariant, energy_per_particle: f64 },
    /// `f^⊗N` conditioned on the sphere, by Metropolis.
    Conditioned { density: DensitySpec, sphere: SphereVariant, burn_per_particle: usize },
}

impl InitSpec {
    pub fn density(&self) -> Option<&DensitySpec> {
        match self {
            InitSpec::Product { density } | InitSpec::Conditioned { density, .. } => Some(density),
            InitSpec::UniformSphere { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitSpec::Product { density } => format!("product of {}", density.name()),
            InitSpec::UniformSphere { sphere, .. } => format!("uniform on the {sphere:?} sphere"),
            InitSpec::Conditioned { density, sphere, .. } => {
                format!("product of {} conditioned on the {sphere:?} sphere", density.name())
            }
        }
    }

    /// Energy per particle of the initial law.
    pub fn energy_per_particle(&self) -> f64 {
        match self {
            InitSpec::Product { density } | InitSpec::Conditioned { density, .. } => density.energy(),
            InitSpec::UniformSphere { energy_per_particle, .. } => *energy_per_particle,
        }
    }
}

/// The one-particle law that chaos is measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    /// The standard Gaussian at every time.
    Maxwellian,
    /// The BKW solution through the initial profile.
    Bkw { solution: ReferenceSolution },
    /// The initial density at every time (stationary initial data or `t = 0`).
    Initial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Marginal order for `Ω_j`; 0 disables it.
    pub j: usize,
    pub omega_inf: bool,
    /// `Ω_N`, only for `N ≤ 16`.
    pub omega_n: bool,
    pub entropy: bool,
    pub fisher: bool,
    /// Sampling of the marginal for `Ω_j`.
    pub marginal: MarginalMode,
    pub rounds: usize,
    pub n_exact: usize,
    pub slices: usize,
    pub entropy_k: usize,
    pub bootstrap: usize,
    /// Cap on pooled points for the entropy and Fisher estimators.
    pub max_points: usize,
    /// Fraction of the grid, from the end, used for decay fits.
    pub tail_fraction: f64,
    pub level: f64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            j: 2,
            omega_inf: true,
            omega_n: false,
            entropy: false,
            fisher: false,
            marginal: MarginalMode::FirstCoordinates,
            rounds: 8,
            n_exact: 2048,
            slices: 64,
            entropy_k: 4,
            bootstrap: 200,
            max_points: 65_536,
            tail_fraction: 0.5,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub name: String,
    pub seed: u64,
    /// Particle numbers, strictly increasing.
    pub n: Vec<usize>,
    pub replicas: usize,
    pub dim: usize,
    pub grid: Vec<f64>,
    pub time_scale: TimeScale,
    pub scheme: Scheme,
    pub kernel: CollisionKernel,
    pub init: InitSpec,
    pub reference: ReferenceSpec,
    pub metrics: MetricOptions,
    pub output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Line (1-based) of `key = …` inside `[table]` (or at top level).
fn line_of(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = Some(line.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        let hit = match (table, current.as_deref()) {
            (None, None) => lhs == key,
            (Some(t), Some(c)) => t == c && lhs == key,
            // Dotted keys at top level.
            (Some(t), None) => lhs == format!("{t}.{key}"),
            _ => false,
        };
        if hit {
            return Some(k + 1);
        }
    }
    None
}

struct Collector<'a> {
    text: &'a str,
    errors: Vec<ConfigError>,
}

impl Collector<'_> {
    fn push(&mut self, table: Option<&str>, key: &str, message: impl Into<String>) {
        let field = match table {
            Some(t) => format!("{t}.{key}"),
            None => key.to_string(),
        };
        let line = line_of(self.text, table, key).or_else(|| table.and_then(|t| line_of_table(self.text, t)));
        self.errors.push(ConfigError { field, line, message: message.into() });
    }
}

fn line_of_table(text: &str, table: &str) -> Option<usize> {
    text.lines().position(|l| l.trim() == format!("[{table}]")).map(|k| k + 1)
}

fn toml_line(text: &str, err: &toml::de::Error) -> Option<usize> {
    err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

// ---------------------------------------------------------------------------
// Validation

/// Reads and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigError { field: path.display().to_string(), line: None, message: e.to_string() }])
    })?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            field: "(syntax)".into(),
            line: toml_line(text, &e),
            message: e.message().to_string(),
        }])
    })?;
    let mut c = Collector { text, errors: Vec::new() };

    let kind = raw.kind;
    if kind.is_none() {
        c.push(
            None,
            "kind",
            format!("missing; one of {}", ExperimentKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")),
        );
    }
    let seed = raw.seed;
    if seed.is_none() {
        c.push(None, "seed", "missing; every experiment needs an explicit seed");
    }
    let n = raw.n.unwrap_or_default();
    if n.is_empty() {
        c.push(None, "n", "missing or empty; list the particle numbers");
    } else if n.windows(2).any(|w| w[1] <= w[0]) {
        c.push(None, "n", "particle numbers must be strictly increasing");
    }
    let replicas = raw.replicas.unwrap_or(0);
    if replicas < 2 {
        c.push(None, "replicas", "at least 2 replicas are needed for standard errors");
    }
    let dim = raw.dim.unwrap_or(3);
    if !(1..=6).contains(&dim) {
        c.push(None, "dim", "velocity dimension must lie in 1..=6");
    }
    let grid = match (kind, raw.grid) {
        (Some(k), None) if k.is_static() => vec![0.0],
        (_, Some(g)) => g,
        (_, None) => {
            c.push(None, "grid", "missing; list the observation times");
            vec![0.0]
        }
    };
    if grid.is_empty() || grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| !t.is_finite())
    {
        c.push(None, "grid", "times must be finite, nonnegative and strictly increasing");
    }
    if let Some(k) = kind {
        if k.is_static() && grid != [0.0] {
            c.push(None, "grid", format!("{} measures initial data only; use grid = [0.0] or omit it", k.name()));
        }
    }
    let time_scale = raw.time_scale.unwrap_or_default();
    let scheme = raw.scheme.unwrap_or_default();

    // Kernel.
    let rk = raw.kernel.unwrap_or_default();
    let mut kernel = match rk.kind.as_deref().unwrap_or("maxwell_cutoff") {
        "maxwell_cutoff" => CollisionKernel::maxwell_cutoff(),
        "hard_spheres" => CollisionKernel::hard_spheres(),
        "true_maxwell" => match (rk.eps, rk.nu) {
            (Some(eps), Some(nu)) => CollisionKernel::true_maxwell(eps, nu).unwrap_or_else(|e| {
                c.push(Some("kernel"), "eps", e.to_string());
                CollisionKernel::maxwell_cutoff()
            }),
            _ => {
                c.push(Some("kernel"), "kind", "true_maxwell needs `eps` and `nu`");
                CollisionKernel::maxwell_cutoff()
            }
        },
        other => {
            c.push(
                Some("kernel"),
                "kind",
                format!("unknown kernel `{other}`; use maxwell_cutoff, hard_spheres or true_maxwell"),
            );
            CollisionKernel::maxwell_cutoff()
        }
    };
    if let Some(conv) = rk.convention {
        kernel = kernel.with_convention(conv);
    }
    if let Some(od) = rk.one_dim {
        kernel = kernel.with_one_dim(od);
    }
    if let Err(e) = kernel.validate(dim) {
        c.push(Some("kernel"), "kind", e.to_string());
    }

    // Initial data.
    let ri = raw.init.unwrap_or_default();
    let sphere = ri.sphere.unwrap_or(if dim == 1 { SphereVariant::Kac } else { SphereVariant::Boltzmann });
    if sphere == SphereVariant::Kac && dim != 1 {
        c.push(Some("init"), "sphere", "the Kac sphere needs dim = 1");
    }
    let density = |c: &mut Collector| -> Option<DensitySpec> {
        let name = ri.density.as_deref().unwrap_or("gaussian");
        let spec = match name {
            "gaussian" => match &ri.mean {
                None => DensitySpec::Gaussian { dim, variance: ri.variance.unwrap_or(1.0) },
                Some(mean) if mean.len() == dim => DensitySpec::GaussianMixture {
                    dim,
                    components: vec![MixtureComponent {
                        weight: 1.0,
                        mean: mean.clone(),
                        variance: ri.variance.unwrap_or(1.0),
                    }],
                },
                Some(_) => {
                    c.push(Some("init"), "mean", format!("the mean needs {dim} components"));
                    return None;
                }
            },
            "bimodal" => {
                match DensitySpec::symmetric_bimodal(dim, ri.separation.unwrap_or(2.0), ri.variance.unwrap_or(0.25)) {
                    Ok(s) => s,
                    Err(e) => {
                        c.push(Some("init"), "separation", e.to_string());
                        return None;
                    }
                }
            }
            "uniform_box" => DensitySpec::UniformBox { dim, half_width: ri.half_width.unwrap_or(3f64.sqrt()) },
            "point_mass" => DensitySpec::PointMass { dim },
            "bkw" => {
                let t0 = ri.t0.unwrap_or(0.0);
                match ReferenceSolution::bkw(&kernel, time_scale, dim, t0.min(0.0)).and_then(|r| r.k_at(0.0)) {
                    Ok(k) if t0 <= 0.0 => DensitySpec::Bkw { dim, k },
                    Ok(_) => {
                        c.push(Some("init"), "t0", "the BKW starting time must be <= 0");
                        return None;
                    }
                    Err(e) => {
                        c.push(Some("init"), "density", e.to_string());
                        return None;
                    }
                }
            }
            other => {
                c.push(
                    Some("init"),
                    "density",
                    format!("unknown density `{other}`; use gaussian, bimodal, uniform_box, point_mass or bkw"),
                );
                return None;
            }
        };
        if let Err(e) = spec.validate() {
            c.push(Some("init"), "density", e.to_string());
            return None;
        }
        Some(spec)
    };
    let default_energy = if sphere == SphereVariant::Kac { 1.0 } else { dim as f64 };
    let init = match ri.kind.as_deref().unwrap_or("product") {
        "product" => density(&mut c).map(|density| InitSpec::Product { density }),
        "uniform_sphere" => {
            let e = ri.energy_per_particle.unwrap_or(default_energy);
            if !(e > 0.0) {
                c.push(Some("init"), "energy_per_particle", "must be positive");
            }
            let min_n = if sphere == SphereVariant::Boltzmann { 2 } else { 1 };
            if n.first().is_some_and(|&n0| n0 < min_n) {
                c.push(None, "n", format!("the {sphere:?} sphere needs N >= {min_n}"));
            }
            Some(InitSpec::UniformSphere { sphere, energy_per_particle: e })
        }
        "conditioned" => density(&mut c).and_then(|density| {
            let mut ok = true;
            if matches!(density, DensitySpec::PointMass { .. }) {
                c.push(Some("init"), "density", "a point mass cannot be conditioned on a sphere");
                ok = false;
            }
            if sphere == SphereVariant::Boltzmann && !density.is_centered() {
                c.push(Some("init"), "density", "conditioning on the Boltzmann sphere requires a centered density");
                ok = false;
            }
            if let Some(e) = ri.energy_per_particle {
                if (e - density.energy()).abs() > 1e-9 * e.abs().max(1.0) {
                    c.push(
                        Some("init"),
                        "energy_per_particle",
                        format!("the sphere energy must equal the density energy {}", density.energy()),
                    );
                    ok = false;
                }
            }
            let min_n = if sphere == SphereVariant::Boltzmann && dim == 1 { 3 } else { 2 };
            if n.first().is_some_and(|&n0| n0 < min_n) {
                c.push(None, "n", format!("conditioning on this sphere needs N >= {min_n}"));
                ok = false;
            }
            ok.then(|| InitSpec::Conditioned { density, sphere, burn_per_particle: ri.burn_per_particle.unwrap_or(50) })
        }),
        other => {
            c.push(Some("init"), "kind", format!("unknown init `{other}`; use product, uniform_sphere or conditioned"));
            None
        }
    };
    if kernel.variant == kaclab::kernels::KernelVariant::HardSpheres {
        if let Some(i) = &init {
            if !i.density().is_none_or(|d| d.is_centered()) {
                c.push(Some("init"), "mean", "hard spheres need a centered initial law (zero mean velocity)");
            } else if (i.energy_per_particle() - dim as f64).abs() > 1e-9 * dim as f64 {
                c.push(
                    Some("init"),
                    "variance",
                    "hard spheres need unit variance per component (energy per particle = dim)",
                );
            }
        }
    }

    // Reference.
    let rr = raw.reference.unwrap_or_default();
    let reference = match rr.kind.as_deref().unwrap_or("maxwellian") {
        "maxwellian" => {
            if let Some(i) = &init {
                let e = i.energy_per_particle();
                if (e - dim as f64).abs() > 1e-9 * dim as f64 && kind != Some(ExperimentKind::ConditionedProductRates) {
                    c.push(
                        Some("reference"),
                        "kind",
                        format!("the standard Maxwellian has energy {dim} per particle, the initial law {e}"),
                    );
                }
            }
            Some(ReferenceSpec::Maxwellian)
        }
        "initial" => match &init {
            Some(i) if i.density().is_some() => Some(ReferenceSpec::Initial),
            Some(_) => {
                c.push(Some("reference"), "kind", "`initial` needs an init with a density");
                None
            }
            None => None,
        },
        "bkw" => match init.as_ref().and_then(|i| i.density()) {
            Some(DensitySpec::Bkw { .. }) => {
                match ReferenceSolution::bkw(&kernel, time_scale, dim, ri.t0.unwrap_or(0.0).min(0.0)) {
                    Ok(solution) => Some(ReferenceSpec::Bkw { solution }),
                    Err(e) => {
                        c.push(Some("reference"), "kind", e.to_string());
                        None
                    }
                }
            }
            _ => {
                c.push(Some("reference"), "kind", "the BKW reference needs init.density = \"bkw\"");
                None
            }
        },
        other => {
            c.push(Some("reference"), "kind", format!("unknown reference `{other}`; use maxwellian, bkw or initial"));
            None
        }
    };

    let metrics = raw.metrics.unwrap_or_default();
    if let Some(&n0) = n.first() {
        if metrics.j > n0 {
            c.push(Some("metrics"), "j", format!("marginal order exceeds the smallest N = {n0}"));
        }
    }
    if metrics.rounds < 2 {
        c.push(Some("metrics"), "rounds", "at least 2 rounds are needed");
    }
    if !(metrics.tail_fraction > 0.0 && metrics.tail_fraction <= 1.0) {
        c.push(Some("metrics"), "tail_fraction", "must lie in (0, 1]");
    }
    if !(metrics.level > 0.0 && metrics.level < 1.0) {
        c.push(Some("metrics"), "level", "must lie in (0, 1)");
    }
    if let Some(k) = kind {
        let rate_kind = matches!(k, ExperimentKind::LlnRates | ExperimentKind::ConditionedProductRates);
        if rate_kind && (n.len() < 4 || n.last().zip(n.first()).is_some_and(|(a, b)| (*a as f64) < 4.0 * *b as f64)) {
            c.push(None, "n", "rate fits need at least 4 values of N spanning two octaves");
        }
        if matches!(k, ExperimentKind::Equilibration | ExperimentKind::HTheorem) && grid.len() < 3 {
            c.push(None, "grid", "time-series experiments need at least 3 grid times");
        }
        if k == ExperimentKind::HTheorem && !metrics.entropy {
            c.push(Some("metrics"), "entropy", "h_theorem measures the relative entropy; set entropy = true");
        }
        if k == ExperimentKind::ConditionedProductRates && !matches!(init, Some(InitSpec::Conditioned { .. }) | None) {
            c.push(Some("init"), "kind", "conditioned_product_rates needs init.kind = \"conditioned\"");
        }
        if matches!(k, ExperimentKind::ConditionedProductRates | ExperimentKind::LlnRates)
            && matches!(init, Some(InitSpec::UniformSphere { .. }))
            && matches!(reference, Some(ReferenceSpec::Initial))
        {
            c.push(Some("reference"), "kind", "uniform sphere data has no initial density");
        }
    }

    if !c.errors.is_empty() {
        return Err(ConfigErrors(c.errors));
    }
    Ok(ExperimentConfig {
        kind: kind.unwrap(),
        name: raw.name.unwrap_or_else(|| kind.unwrap().name().to_string()),
        seed: seed.unwrap(),
        n,
        replicas,
        dim,
        grid,
        time_scale,
        scheme,
        kernel,
        init: init.unwrap(),
        reference: reference.unwrap(),
        metrics,
        output: raw.output,
    })
}

impl ExperimentConfig {
    /// Reference profile shape at time `t` (BKW only).
    pub fn bkw_profile(&self, t: f64) -> Option<BkwProfile> {
        match &self.reference {
            ReferenceSpec::Bkw { solution } => solution.profile(t).ok(),
            _ => None,
        }
    }
}
