//! Experiment configuration: one TOML file per experiment.
//!
//! Parsing is strict (unknown keys are rejected) and `validate` reports the
//! offending field by its dotted path.

use std::path::{Path, PathBuf};

use ekch_core::ch::NlchIntegrator;
use ekch_core::ek::Reconstruction;
use ekch_core::potential::{self, DoubleWellSplit, PotentialSpec};
use ekch_core::{Profile, TorusGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.into() }
}

pub const PRESETS: [&str; 4] = ["constant", "single-mode", "double-well-spinodal", "snapshot"];
pub const POTENTIALS: [&str; 3] = ["double-well", "power", "steep-wall"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub ek: EkConfig,
    #[serde(default)]
    pub nlch: NlchConfig,
    #[serde(default)]
    pub lch: LchConfig,
    #[serde(default)]
    pub joint: JointConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub audits: AuditConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "unit")]
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dim: 1, n: default_n(), length: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default)]
    pub eta: Option<f64>,
    /// Strictly decreasing list for sweeps over the kernel width.
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Extra profiles certified by `verify-kernel`.
    #[serde(default)]
    pub profiles: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default = "default_potential")]
    pub name: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub curvature: Option<f64>,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            name: default_potential(),
            gamma: None,
            width: None,
            curvature: None,
            shift: None,
            strength: None,
            scale: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "half")]
    pub mean: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "one_i64")]
    pub mode: i64,
    /// Snapshot file for the `snapshot` preset.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// `zero` or `limit` (the limit velocity of the initial density, which is O(eps)).
    #[serde(default = "default_velocity")]
    pub velocity: String,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            preset: default_preset(),
            mean: 0.5,
            amplitude: default_amplitude(),
            mode: 1,
            path: None,
            velocity: default_velocity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default = "half")]
    pub t_end: f64,
    #[serde(default = "default_interval")]
    pub sample_interval: f64,
    /// Fixed step; automatic when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Write a snapshot every this many samples (0 disables).
    #[serde(default)]
    pub snapshot_stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_end: 0.5, sample_interval: default_interval(), dt: None, snapshot_stride: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkConfig {
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Strictly decreasing list for `sweep-eps`.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub delta_reg: f64,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
    #[serde(default = "default_reconstruction")]
    pub reconstruction: String,
    /// Number of extra step halvings for the energy-budget ladder (needs `time.dt`).
    #[serde(default)]
    pub budget_refinements: usize,
}

impl Default for EkConfig {
    fn default() -> Self {
        EkConfig {
            epsilon: None,
            epsilons: Vec::new(),
            cfl: default_cfl(),
            delta_reg: 0.0,
            density_floor: default_floor(),
            reconstruction: default_reconstruction(),
            budget_refinements: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlchConfig {
    #[serde(default)]
    pub mobility_delta: f64,
    #[serde(default = "half")]
    pub cfl_parabolic: f64,
    /// `rkl2` or `ssp-rk2`.
    #[serde(default = "default_integrator")]
    pub integrator: String,
    #[serde(default = "default_stages")]
    pub stages: usize,
    /// Accuracy cap of automatic RKL2 steps, relative to the current rate of change.
    #[serde(default = "default_rate_fraction")]
    pub rate_fraction: f64,
    /// Lower bound for the envelope audit; defaults to `min rho0`.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Amplitude of the mean-free perturbation for the L1 comparison run.
    #[serde(default)]
    pub contraction_perturbation: Option<f64>,
}

impl Default for NlchConfig {
    fn default() -> Self {
        NlchConfig {
            mobility_delta: 0.0,
            cfl_parabolic: 0.5,
            integrator: default_integrator(),
            stages: default_stages(),
            rate_fraction: default_rate_fraction(),
            sigma: None,
            contraction_perturbation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LchConfig {
    /// Defaults to the Laplacian coefficient of the configured kernel.
    #[serde(default)]
    pub diffusivity: Option<f64>,
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    #[serde(default)]
    pub stabilizer: Option<f64>,
}

impl Default for LchConfig {
    fn default() -> Self {
        LchConfig { diffusivity: None, dt_factor: default_dt_factor(), stabilizer: None }
    }
}

/// Scaling rule `eps_k = min(eps_max, exp(-rule_scale C T / (4 eta^(d+3))))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointConfig {
    #[serde(default = "default_eps_max")]
    pub eps_max: f64,
    #[serde(default = "default_eps_floor")]
    pub eps_floor: f64,
    #[serde(default = "unit")]
    pub rule_scale: f64,
    #[serde(default = "yes")]
    pub run_ek: bool,
}

impl Default for JointConfig {
    fn default() -> Self {
        JointConfig { eps_max: default_eps_max(), eps_floor: default_eps_floor(), rule_scale: 1.0, run_ek: true }
    }
}

/// A potential for `verify-potential` together with the expected verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialCheck {
    pub name: String,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub strength: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    /// Whether the fitted constants are expected to exist.
    #[serde(default = "yes")]
    pub expect_bounded: bool,
}

impl PotentialCheck {
    pub fn potential(&self) -> PotentialConfig {
        PotentialConfig { name: self.name.clone(), gamma: self.gamma, strength: self.strength, scale: self.scale, ..PotentialConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "two")]
    pub range: f64,
    /// Random fields for the Poincare check.
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: usize,
    /// Resolution of the 2D grid used for off-diagonal moments.
    #[serde(default = "default_offdiag_n")]
    pub offdiag_n: usize,
    #[serde(default)]
    pub potentials: Vec<PotentialCheck>,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            samples: default_samples(),
            range: 2.0,
            fields: default_fields(),
            bandwidth: default_bandwidth(),
            offdiag_n: default_offdiag_n(),
            potentials: Vec::new(),
        }
    }
}

/// Pass thresholds of the audits that decide the exit code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default = "default_mass_tol")]
    pub mass_tol: f64,
    #[serde(default = "default_theta_floor")]
    pub theta_floor: f64,
    #[serde(default = "default_envelope_slack")]
    pub envelope_slack: f64,
    /// Accepted range of the budget residual ratio per halving.
    #[serde(default = "default_budget_ratio")]
    pub budget_ratio: [f64; 2],
    /// Accepted range of fitted slopes for `consistency` and `theta0`.
    #[serde(default = "default_consistency_slope")]
    pub consistency_slope: [f64; 2],
    #[serde(default = "default_theta_slope")]
    pub theta0_slope: [f64; 2],
    #[serde(default = "unit")]
    pub min_error_order: f64,
    #[serde(default = "default_moment_tol")]
    pub moment_tol: f64,
    #[serde(default = "default_offdiag_tol")]
    pub offdiag_tol: f64,
    #[serde(default = "default_identical_tol")]
    pub identical_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            mass_tol: default_mass_tol(),
            theta_floor: default_theta_floor(),
            envelope_slack: default_envelope_slack(),
            budget_ratio: default_budget_ratio(),
            consistency_slope: default_consistency_slope(),
            theta0_slope: default_theta_slope(),
            min_error_order: 1.0,
            moment_tol: default_moment_tol(),
            offdiag_tol: default_offdiag_tol(),
            identical_tol: default_identical_tol(),
        }
    }
}

fn one() -> usize {
    1
}
fn one_i64() -> i64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn default_n() -> usize {
    256
}
fn default_profile() -> String {
    "quartic".into()
}
fn default_potential() -> String {
    "double-well".into()
}
fn default_preset() -> String {
    "double-well-spinodal".into()
}
fn default_amplitude() -> f64 {
    0.2
}
fn default_velocity() -> String {
    "zero".into()
}
fn default_interval() -> f64 {
    0.01
}
fn default_cfl() -> f64 {
    0.25
}
fn default_floor() -> f64 {
    1e-10
}
fn default_reconstruction() -> String {
    "upwind5".into()
}
fn default_integrator() -> String {
    "rkl2".into()
}
fn default_stages() -> usize {
    128
}
fn default_rate_fraction() -> f64 {
    ekch_core::ch::DEFAULT_RATE_FRACTION
}
fn default_dt_factor() -> f64 {
    0.05
}
fn default_eps_max() -> f64 {
    0.04
}
fn default_eps_floor() -> f64 {
    0.005
}
fn default_samples() -> usize {
    100_000
}
fn default_fields() -> usize {
    100
}
fn default_bandwidth() -> usize {
    8
}
fn default_offdiag_n() -> usize {
    128
}
fn default_mass_tol() -> f64 {
    1e-10
}
fn default_theta_floor() -> f64 {
    -1e-10
}
fn default_envelope_slack() -> f64 {
    1e-8
}
fn default_budget_ratio() -> [f64; 2] {
    [1.7, 2.3]
}
fn default_consistency_slope() -> [f64; 2] {
    [1.8, 2.2]
}
fn default_theta_slope() -> [f64; 2] {
    [1.9, 2.1]
}
fn default_moment_tol() -> f64 {
    1e-14
}
fn default_offdiag_tol() -> f64 {
    1e-12
}
fn default_identical_tol() -> f64 {
    1e-10
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

fn strictly_decreasing(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    for (i, x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), *x)?;
    }
    if let Some(i) = v.windows(2).position(|w| w[1] >= w[0]) {
        return Err(field_err(field, format!("must be strictly decreasing, but entry {} = {} follows {}", i + 1, v[i + 1], v[i])));
    }
    Ok(())
}

fn range_pair(field: &str, r: [f64; 2]) -> Result<(), ConfigError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(field_err(field, format!("must be an ordered pair [lo, hi], got {r:?}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse(text, Path::new("<inline>"))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::parse(&text, path)?;
        // snapshot paths are relative to the config file
        if let (Some(p), Some(dir)) = (cfg.initial.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) {
            return Err(field_err("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if g.n < 4 || !g.n.is_power_of_two() {
            return Err(field_err("grid.n", format!("must be a power of two >= 4, got {}", g.n)));
        }
        positive("grid.length", g.length)?;

        let k = &self.kernel;
        for (i, name) in std::iter::once(&k.profile).chain(&k.profiles).enumerate() {
            if Profile::from_name(name).is_none() {
                let field = if i == 0 { "kernel.profile".to_string() } else { format!("kernel.profiles[{}]", i - 1) };
                return Err(field_err(&field, format!("unknown profile '{name}' (expected bump or quartic)")));
            }
        }
        match (k.eta, k.etas.is_empty()) {
            (None, true) => return Err(field_err("kernel.eta", "either kernel.eta or kernel.etas is required")),
            (Some(e), _) => positive("kernel.eta", e)?,
            _ => {}
        }
        strictly_decreasing("kernel.etas", &k.etas)?;

        self.potential.to_spec("potential")?;
        for (i, c) in self.checks.potentials.iter().enumerate() {
            c.potential().to_spec(&format!("checks.potentials[{i}]"))?;
        }

        let ini = &self.initial;
        if !PRESETS.contains(&ini.preset.as_str()) {
            return Err(field_err("initial.preset", format!("unknown preset '{}' (expected one of {})", ini.preset, PRESETS.join(", "))));
        }
        if ini.preset == "snapshot" && ini.path.is_none() {
            return Err(field_err("initial.path", "the snapshot preset needs a path"));
        }
        if !ini.mean.is_finite() || !ini.amplitude.is_finite() {
            return Err(field_err("initial.mean", "mean and amplitude must be finite"));
        }
        if ini.mode < 1 {
            return Err(field_err("initial.mode", format!("must be >= 1, got {}", ini.mode)));
        }
        if !(ini.velocity == "zero" || ini.velocity == "limit") {
            return Err(field_err("initial.velocity", format!("expected zero or limit, got '{}'", ini.velocity)));
        }

        let t = &self.time;
        positive("time.t_end", t.t_end)?;
        positive("time.sample_interval", t.sample_interval)?;
        if let Some(dt) = t.dt {
            positive("time.dt", dt)?;
        }
        if ekch_core::run::sample_times(0.0, t.t_end, t.sample_interval).is_err() {
            return Err(field_err("time.sample_interval", format!("{} does not divide t_end = {}", t.sample_interval, t.t_end)));
        }

        let ek = &self.ek;
        if let Some(e) = ek.epsilon {
            positive("ek.epsilon", e)?;
        }
        strictly_decreasing("ek.epsilons", &ek.epsilons)?;
        if !(ek.cfl > 0.0 && ek.cfl < 1.0) {
            return Err(field_err("ek.cfl", format!("must lie in (0, 1), got {}", ek.cfl)));
        }
        if !(ek.delta_reg >= 0.0 && ek.delta_reg.is_finite()) {
            return Err(field_err("ek.delta_reg", format!("must be >= 0, got {}", ek.delta_reg)));
        }
        if !(ek.density_floor >= 0.0) {
            return Err(field_err("ek.density_floor", format!("must be >= 0, got {}", ek.density_floor)));
        }
        self.reconstruction()?;
        if ek.budget_refinements > 0 && t.dt.is_none() {
            return Err(field_err("ek.budget_refinements", "a refinement ladder needs a fixed time.dt"));
        }

        let nl = &self.nlch;
        if !(nl.mobility_delta >= 0.0 && nl.mobility_delta.is_finite()) {
            return Err(field_err("nlch.mobility_delta", format!("must be >= 0, got {}", nl.mobility_delta)));
        }
        positive("nlch.rate_fraction", nl.rate_fraction)?;
        if !(nl.cfl_parabolic > 0.0 && nl.cfl_parabolic < 1.0) {
            return Err(field_err("nlch.cfl_parabolic", format!("must lie in (0, 1), got {}", nl.cfl_parabolic)));
        }
        self.integrator()?;
        if let Some(s) = nl.sigma {
            positive("nlch.sigma", s)?;
        }
        if let Some(p) = nl.contraction_perturbation {
            positive("nlch.contraction_perturbation", p)?;
        }

        if let Some(d) = self.lch.diffusivity {
            positive("lch.diffusivity", d)?;
        }
        positive("lch.dt_factor", self.lch.dt_factor)?;
        if let Some(s) = self.lch.stabilizer {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(field_err("lch.stabilizer", format!("must be >= 0, got {s}")));
            }
        }

        let j = &self.joint;
        positive("joint.eps_max", j.eps_max)?;
        positive("joint.eps_floor", j.eps_floor)?;
        positive("joint.rule_scale", j.rule_scale)?;
        if j.eps_floor > j.eps_max {
            return Err(field_err("joint.eps_floor", format!("exceeds joint.eps_max = {}", j.eps_max)));
        }

        let c = &self.checks;
        if c.samples == 0 {
            return Err(field_err("checks.samples", "must be positive"));
        }
        positive("checks.range", c.range)?;
        if c.bandwidth == 0 || c.bandwidth >= g.n / 2 {
            return Err(field_err("checks.bandwidth", format!("must lie in 1..{}, got {}", g.n / 2, c.bandwidth)));
        }
        if c.offdiag_n < 4 || !c.offdiag_n.is_power_of_two() {
            return Err(field_err("checks.offdiag_n", format!("must be a power of two >= 4, got {}", c.offdiag_n)));
        }

        let a = &self.audits;
        positive("audits.mass_tol", a.mass_tol)?;
        positive("audits.envelope_slack", a.envelope_slack)?;
        range_pair("audits.budget_ratio", a.budget_ratio)?;
        range_pair("audits.consistency_slope", a.consistency_slope)?;
        range_pair("audits.theta0_slope", a.theta0_slope)?;
        Ok(())
    }

    pub fn torus(&self) -> TorusGrid {
        TorusGrid::new(self.grid.dim, self.grid.n, self.grid.length).expect("validated grid")
    }

    pub fn profile(&self) -> Profile {
        Profile::from_name(&self.kernel.profile).expect("validated profile")
    }

    /// The configured widths, largest first.
    pub fn etas(&self) -> Vec<f64> {
        if self.kernel.etas.is_empty() {
            self.kernel.eta.into_iter().collect()
        } else {
            self.kernel.etas.clone()
        }
    }

    /// `kernel.eta`, or the first entry of `kernel.etas`.
    pub fn eta(&self) -> f64 {
        self.kernel.eta.unwrap_or_else(|| self.kernel.etas[0])
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if self.ek.epsilons.is_empty() {
            self.ek.epsilon.into_iter().collect()
        } else {
            self.ek.epsilons.clone()
        }
    }

    pub fn epsilon(&self) -> Result<f64, ConfigError> {
        self.ek.epsilon.or_else(|| self.ek.epsilons.first().copied()).ok_or_else(|| field_err("ek.epsilon", "required for this experiment"))
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        self.potential.to_spec("potential").expect("validated potential")
    }

    pub fn reconstruction(&self) -> Result<Reconstruction, ConfigError> {
        match self.ek.reconstruction.as_str() {
            "upwind5" => Ok(Reconstruction::Upwind5),
            "constant" => Ok(Reconstruction::Constant),
            other => Err(field_err("ek.reconstruction", format!("expected upwind5 or constant, got '{other}'"))),
        }
    }

    pub fn integrator(&self) -> Result<NlchIntegrator, ConfigError> {
        match self.nlch.integrator.as_str() {
            "rkl2" if self.nlch.stages >= 2 => Ok(NlchIntegrator::Rkl2 { stages: self.nlch.stages }),
            "rkl2" => Err(field_err("nlch.stages", format!("must be >= 2, got {}", self.nlch.stages))),
            "ssp-rk2" => Ok(NlchIntegrator::SspRk2),
            other => Err(field_err("nlch.integrator", format!("expected rkl2 or ssp-rk2, got '{other}'"))),
        }
    }
}

impl PotentialConfig {
    /// Builds the potential; `field` prefixes error paths.
    pub fn to_spec(&self, field: &str) -> Result<PotentialSpec, ConfigError> {
        match self.name.as_str() {
            "double-well" => {
                let mut split = DoubleWellSplit::default();
                if let Some(w) = self.width {
                    positive(&format!("{field}.width"), w)?;
                    split.width = w;
                }
                if let Some(c) = self.curvature {
                    positive(&format!("{field}.curvature"), c)?;
                    split.curvature = c;
                }
                if let Some(s) = self.shift {
                    split.shift = s;
                }
                Ok(potential::double_well_with(split))
            }
            "power" => {
                let gamma = self.gamma.ok_or_else(|| field_err(&format!("{field}.gamma"), "required for the power potential"))?;
                potential::builtin_power(gamma).map_err(|e| field_err(&format!("{field}.gamma"), e.to_string()))
            }
            "steep-wall" => {
                let strength = self.strength.unwrap_or(1000.0);
                let scale = self.scale.unwrap_or(0.1);
                positive(&format!("{field}.strength"), strength)?;
                positive(&format!("{field}.scale"), scale)?;
                Ok(potential::steep_wall(strength, scale))
            }
            other => Err(field_err(&format!("{field}.name"), format!("unknown potential '{other}' (expected one of {})", POTENTIALS.join(", ")))),
        }
    }
}
