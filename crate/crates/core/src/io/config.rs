//! Run configuration: JSON with documented defaults, unknown and duplicate
//! keys rejected, and a hash that ignores key order.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{LabError, Result};
use crate::experiments::PdeSettings;
use crate::field::{HolderBallSpec, HolderShape, Kernel, KernelTable};
use crate::io::digest::canonical_hash;
use crate::particle::{F0Spec, Order};
use crate::pde::EnergyWeights;
use crate::rng::sub_seed;

/// The experiment kinds, named as the CLI subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ChaosRate,
    GcSup,
    CouplingDecomp,
    Counterexample,
    Nonuniqueness,
    TimeRegularity,
    UllnKernel,
    EntropyCheck,
    EnergyCheck,
    PdeSelftest,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::ChaosRate,
        ExperimentKind::GcSup,
        ExperimentKind::CouplingDecomp,
        ExperimentKind::Counterexample,
        ExperimentKind::Nonuniqueness,
        ExperimentKind::TimeRegularity,
        ExperimentKind::UllnKernel,
        ExperimentKind::EntropyCheck,
        ExperimentKind::EnergyCheck,
        ExperimentKind::PdeSelftest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ChaosRate => "chaos-rate",
            ExperimentKind::GcSup => "gc-sup",
            ExperimentKind::CouplingDecomp => "coupling-decomp",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Nonuniqueness => "nonuniqueness",
            ExperimentKind::TimeRegularity => "time-regularity",
            ExperimentKind::UllnKernel => "ulln-kernel",
            ExperimentKind::EntropyCheck => "entropy-check",
            ExperimentKind::EnergyCheck => "energy-check",
            ExperimentKind::PdeSelftest => "pde-selftest",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamilyName {
    Zero,
    Constant,
    Sine,
    Displacement,
    HolderPower,
    SobolevSingular,
    Table,
}

fn one_usize() -> usize {
    1
}

/// Kernel description. Keys that the family does not use are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: KernelFamilyName,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<HolderShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    /// CSV table `x,y,K` (d = 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Gaussian smoothing scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify: Option<f64>,
}

impl KernelConfig {
    pub fn new(family: KernelFamilyName) -> Self {
        KernelConfig {
            family,
            dim: 1,
            alpha: None,
            shape: None,
            q: None,
            value: None,
            gain: None,
            cap: None,
            path: None,
            mollify: None,
        }
    }

    pub fn holder(alpha: f64) -> Self {
        KernelConfig { alpha: Some(alpha), ..KernelConfig::new(KernelFamilyName::HolderPower) }
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self.family {
            KernelFamilyName::Zero | KernelFamilyName::Sine => &[],
            KernelFamilyName::Constant => &["value"],
            KernelFamilyName::Displacement => &["gain", "cap"],
            KernelFamilyName::HolderPower => &["alpha", "shape"],
            KernelFamilyName::SobolevSingular => &["alpha", "q"],
            KernelFamilyName::Table => &["path"],
        }
    }

    fn present(&self) -> Vec<&'static str> {
        let mut p = Vec::new();
        if self.alpha.is_some() {
            p.push("alpha");
        }
        if self.shape.is_some() {
            p.push("shape");
        }
        if self.q.is_some() {
            p.push("q");
        }
        if self.value.is_some() {
            p.push("value");
        }
        if self.gain.is_some() {
            p.push("gain");
        }
        if self.cap.is_some() {
            p.push("cap");
        }
        if self.path.is_some() {
            p.push("path");
        }
        p
    }

    /// Validates the keys and builds the kernel.
    pub fn build(&self) -> Result<Kernel> {
        let allowed = self.allowed();
        if let Some(k) = self.present().into_iter().find(|k| !allowed.contains(k)) {
            return Err(LabError::Config(format!("kernel.{k} is not used by family {:?}", self.family)));
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| LabError::Config(format!("kernel.{key} is required for family {:?}", self.family)))
        };
        let wrap = |e: LabError, key: &str| match e {
            LabError::InvalidArgument(m) | LabError::Unsupported(m) => LabError::Config(format!("kernel.{key}: {m}")),
            other => other,
        };
        let d = self.dim;
        let k = match self.family {
            KernelFamilyName::Zero => Kernel::zero(d),
            KernelFamilyName::Sine => Kernel::sine(d),
            KernelFamilyName::Constant => {
                let v = self.value.clone().unwrap_or_else(|| vec![0.0; d]);
                if v.len() != d {
                    return Err(LabError::Config(format!("kernel.value must have {d} entries")));
                }
                Kernel::constant(v)
            }
            KernelFamilyName::Displacement => {
                Kernel::displacement(d, need(self.gain, "gain")?, self.cap.unwrap_or(1.0))
            }
            KernelFamilyName::HolderPower => {
                Kernel::holder_power(d, need(self.alpha, "alpha")?, self.shape.unwrap_or(HolderShape::Radial))
            }
            KernelFamilyName::SobolevSingular => {
                Kernel::sobolev_singular(d, need(self.alpha, "alpha")?, need(self.q, "q")?)
            }
            KernelFamilyName::Table => {
                if d != 1 {
                    return Err(LabError::Config("kernel tables are one-dimensional".into()));
                }
                let path = self.path.as_ref().ok_or_else(|| LabError::Config("kernel.path is required".into()))?;
                Ok(Kernel::tabulated(KernelTable::from_csv(path)?))
            }
        }
        .map_err(|e| wrap(e, if matches!(self.family, KernelFamilyName::HolderPower | KernelFamilyName::SobolevSingular) { "alpha" } else { "dim" }))?;
        match self.mollify {
            Some(scale) => k.mollify(scale).map_err(|e| wrap(e, "mollify")),
            None => Ok(k),
        }
    }
}

fn default_particles() -> Vec<usize> {
    vec![128, 256, 512, 1024]
}
fn default_seed_count() -> usize {
    32
}
fn default_dt() -> f64 {
    1.0 / 512.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_order() -> Order {
    Order::First
}
fn default_c() -> f64 {
    1.0
}
fn default_moment() -> f64 {
    4.0
}
fn default_bootstrap() -> usize {
    200
}
fn default_budget() -> usize {
    4096
}

/// Distance and statistic options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricOptions {
    /// Compensation constant `c`.
    #[serde(default = "default_c")]
    pub compensation: f64,
    /// Moment order of `f0` used for the theoretical exponent.
    #[serde(default = "default_moment")]
    pub moment: f64,
    #[serde(default = "default_budget")]
    pub atom_budget: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Re-run the smallest `N` at half the time step.
    #[serde(default = "yes")]
    pub dt_sensitivity: bool,
}

fn yes() -> bool {
    true
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            compensation: default_c(),
            moment: default_moment(),
            atom_budget: default_budget(),
            bootstrap: default_bootstrap(),
            dt_sensitivity: true,
        }
    }
}

fn default_net_size() -> usize {
    8
}

fn default_net_alpha() -> f64 {
    0.75
}
fn default_net_modes() -> usize {
    3
}
fn default_net_cap() -> f64 {
    4.0
}

/// Field net for the uniform experiments: `size` elements of the Hölder
/// ball of radius `radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    #[serde(default = "default_net_alpha")]
    pub alpha: f64,
    #[serde(default = "default_c")]
    pub radius: f64,
    #[serde(default = "default_net_size")]
    pub size: usize,
    #[serde(default = "default_net_modes")]
    pub mode_count: usize,
    #[serde(default = "default_net_cap")]
    pub frequency_cap: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            alpha: default_net_alpha(),
            radius: default_c(),
            size: default_net_size(),
            mode_count: default_net_modes(),
            frequency_cap: default_net_cap(),
        }
    }
}

impl NetConfig {
    pub fn ball(&self, dim: usize) -> HolderBallSpec {
        HolderBallSpec {
            mode_count: self.mode_count,
            frequency_cap: self.frequency_cap,
            ..HolderBallSpec::new(dim, self.alpha, self.radius)
        }
    }
}

fn default_delta_g() -> f64 {
    0.1
}
fn default_pilots() -> usize {
    8
}
fn default_halvings() -> u32 {
    48
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    #[serde(default = "default_delta_g")]
    pub delta_g: f64,
    #[serde(default = "default_pilots")]
    pub pilot_seeds: usize,
    #[serde(default = "default_halvings")]
    pub eps_halvings: u32,
    #[serde(default = "yes")]
    pub clamp: bool,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            delta_g: default_delta_g(),
            pilot_seeds: default_pilots(),
            eps_halvings: default_halvings(),
            clamp: true,
        }
    }
}

fn default_levels() -> Vec<u32> {
    vec![4, 8, 16]
}
fn default_threshold() -> f64 {
    0.5
}
fn default_ode_dt() -> f64 {
    1.0 / 1024.0
}

fn half() -> f64 {
    0.5
}
fn control() -> Option<f64> {
    Some(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonuniquenessConfig {
    #[serde(default = "half")]
    pub alpha: f64,
    /// Exponent of the comparison run; `null` skips it.
    #[serde(default = "control")]
    pub control_alpha: Option<f64>,
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_ode_dt")]
    pub ode_dt: f64,
}

impl Default for NonuniquenessConfig {
    fn default() -> Self {
        NonuniquenessConfig {
            alpha: half(),
            control_alpha: control(),
            levels: default_levels(),
            threshold: default_threshold(),
            ode_dt: default_ode_dt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// Smoothing scale applied to the kernel of the frozen-field route.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify: Option<f64>,
    /// Also run the zero-kernel ablation.
    #[serde(default = "yes")]
    pub ablation: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { mollify: None, ablation: true }
    }
}

fn default_slices() -> usize {
    5
}
fn default_pairs() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    /// Levels `A`; empty picks them from the data.
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default = "default_pairs")]
    pub pair_count: usize,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig { levels: Vec::new(), slices: default_slices(), pair_count: default_pairs() }
    }
}

fn default_r() -> f64 {
    1.0
}
fn default_q() -> String {
    "2".into()
}
fn default_reference() -> usize {
    8192
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UllnConfig {
    #[serde(default = "default_r")]
    pub r: f64,
    /// `"2"` or `"inf"`.
    #[serde(default = "default_q")]
    pub q: String,
    #[serde(default = "default_reference")]
    pub reference_particles: usize,
}

impl Default for UllnConfig {
    fn default() -> Self {
        UllnConfig { r: default_r(), q: default_q(), reference_particles: default_reference() }
    }
}

impl UllnConfig {
    pub fn q_value(&self) -> Result<f64> {
        match self.q.as_str() {
            "2" => Ok(2.0),
            "inf" | "infinity" => Ok(f64::INFINITY),
            other => Err(LabError::Config(format!("ulln.q must be \"2\" or \"inf\", got {other:?}"))),
        }
    }
}

fn default_eps() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_spaces() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Random spaces for the lemma checks.
    #[serde(default = "default_spaces")]
    pub spaces: usize,
    /// Weight exponent `p` of the Lipschitz-ball net.
    #[serde(default = "default_lip_p")]
    pub weight: f64,
    #[serde(default = "default_lip_l")]
    pub half_width: f64,
}

fn default_lip_p() -> f64 {
    3.0
}
fn default_lip_l() -> f64 {
    8.0
}

impl Default for EntropyConfig {
    fn default() -> Self {
        EntropyConfig {
            eps: default_eps(),
            spaces: default_spaces(),
            weight: default_lip_p(),
            half_width: default_lip_l(),
        }
    }
}

fn default_pairs_energy() -> usize {
    10
}
fn default_energy_q() -> String {
    "inf".into()
}

/// Energy-estimate check over random net pairs. `q` is `"inf"` or a number
/// above 2, written as a string so that infinity survives JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(default = "default_pairs_energy")]
    pub pairs: usize,
    #[serde(default = "default_r")]
    pub p: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_energy_q")]
    pub q: String,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { pairs: default_pairs_energy(), p: 1.0, r: 1.0, q: default_energy_q() }
    }
}

impl EnergyConfig {
    pub fn weights(&self) -> Result<EnergyWeights> {
        let q = match self.q.as_str() {
            "inf" | "infinity" => f64::INFINITY,
            t => t
                .parse::<f64>()
                .ok()
                .filter(|q| *q > 2.0)
                .ok_or_else(|| LabError::Config(format!("energy.q must be \"inf\" or a number above 2, got {t:?}")))?,
        };
        Ok(EnergyWeights { p: self.p, r: self.r, q })
    }
}

/// A complete run description. Only `experiment` and `kernel` are required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub f0: F0Spec,
    #[serde(default)]
    pub v0: F0Spec,
    #[serde(default = "default_particles")]
    pub particles: Vec<usize>,
    /// Explicit seeds; when absent `seed_count` seeds are derived from
    /// `master_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_order")]
    pub order: Order,
    #[serde(default)]
    pub friction: f64,
    #[serde(default)]
    pub grid: PdeSettings,
    #[serde(default)]
    pub metric: MetricOptions,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub nonuniqueness: NonuniquenessConfig,
    #[serde(default)]
    pub regularity: RegularityConfig,
    #[serde(default)]
    pub ulln: UllnConfig,
    #[serde(default)]
    pub entropy: EntropyConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    /// Output directory; defaults to `runs/<experiment>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Counter-based seed `k` of a master seed.
pub fn derived_seed(master: u64, k: usize) -> u64 {
    sub_seed(master, 0x5EED, k as u64)
}

impl RunConfig {
    /// Defaults for `kind` with the given kernel.
    pub fn new(experiment: ExperimentKind, kernel: KernelConfig) -> Self {
        let text = serde_json::json!({ "experiment": experiment, "kernel": kernel });
        serde_json::from_value(text).expect("defaults deserialize")
    }

    /// The built-in configuration used when a subcommand runs without
    /// `--config`.
    pub fn preset(kind: ExperimentKind) -> Self {
        let kernel = match kind {
            ExperimentKind::CouplingDecomp | ExperimentKind::UllnKernel => KernelConfig::new(KernelFamilyName::Sine),
            ExperimentKind::Counterexample | ExperimentKind::Nonuniqueness => {
                KernelConfig::new(KernelFamilyName::Zero)
            }
            _ => KernelConfig::holder(0.5),
        };
        let mut c = RunConfig::new(kind, kernel);
        match kind {
            ExperimentKind::GcSup => c.seed_count = 16,
            ExperimentKind::CouplingDecomp => c.particles = vec![512],
            ExperimentKind::Counterexample => {
                c.particles = vec![16, 64, 256];
                c.seed_count = 64;
                c.horizon = 4.0;
                c.dt = 1.0 / 64.0;
            }
            ExperimentKind::Nonuniqueness => {
                c.seed_count = 50;
                c.horizon = 2.0;
            }
            ExperimentKind::TimeRegularity => c.seed_count = 16,
            ExperimentKind::EnergyCheck => c.grid.cells = 512,
            ExperimentKind::PdeSelftest => c.grid.cells = 512,
            ExperimentKind::UllnKernel => {
                c.seed_count = 16;
                c.dt = 1.0 / 256.0;
                c.grid.cells = 256;
                c.grid.record_every = 16;
            }
            _ => {}
        }
        c
    }

    pub fn resolved_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.seed_count).map(|k| derived_seed(self.master_seed, k)).collect(),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(self.experiment.name()))
    }

    /// SHA-256 of the canonical JSON form; independent of key order in the
    /// source text.
    /// The output directory does not enter the hash.
    pub fn hash(&self) -> Result<String> {
        canonical_hash(&RunConfig { output: None, ..self.clone() })
    }

    /// Checks every constraint and builds nothing.
    pub fn validate(&self) -> Result<()> {
        self.kernel.build()?;
        let bad = |key: &str, why: &str| Err(LabError::Config(format!("{key}: {why}")));
        if !(self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.horizon >= 0.0) {
            return bad("horizon", "must be non-negative");
        }
        if self.particles.is_empty() || self.particles.contains(&0) {
            return bad("particles", "must be a non-empty list of positive counts");
        }
        if self.seeds.as_ref().map_or(self.seed_count == 0, |s| s.is_empty()) {
            return bad("seeds", "need at least one seed");
        }
        if !(self.friction >= 0.0) {
            return bad("friction", "must be non-negative");
        }
        self.f0.validate().map_err(|e| LabError::Config(format!("f0: {e}")))?;
        self.v0.validate().map_err(|e| LabError::Config(format!("v0: {e}")))?;
        self.grid.validate()?;
        self.net.ball(self.kernel.dim).validate().map_err(|e| LabError::Config(format!("net: {e}")))?;
        if self.net.size == 0 {
            return bad("net.size", "must be at least 1");
        }
        self.ulln.q_value()?;
        self.energy.weights()?;
        if self.entropy.eps.iter().any(|e| !(*e > 0.0)) {
            return bad("entropy.eps", "every eps must be positive");
        }
        Ok(())
    }
}

/// Deserialises any JSON value while refusing repeated object keys.
struct NoDuplicates;

impl<'de> DeserializeSeed<'de> for NoDuplicates {
    type Value = ();

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<(), D::Error> {
        d.deserialize_any(self)
    }
}

impl<'de> Visitor<'de> for NoDuplicates {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, _: bool) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_i64<E>(self, _: i64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_u64<E>(self, _: u64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_f64<E>(self, _: f64) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_str<E>(self, _: &str) -> std::result::Result<(), E> {
        Ok(())
    }
    fn visit_unit<E>(self) -> std::result::Result<(), E> {
        Ok(())
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
        while seq.next_element_seed(NoDuplicates)?.is_some() {}
        Ok(())
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<(), A::Error> {
        let mut seen = HashSet::new();
        while let Some(key) = map.next_key::<String>()? {
            if !seen.insert(key.clone()) {
                return Err(de::Error::custom(format!("duplicate key `{key}`")));
            }
            map.next_value_seed(NoDuplicates)?;
        }
        Ok(())
    }
}

/// Parses and validates a configuration from JSON text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    NoDuplicates.deserialize(&mut de).map_err(|e| LabError::Config(e.to_string()))?;
    let config: RunConfig = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment":"chaos-rate","kernel":{"family":"holder_power","alpha":0.5}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.particles, vec![128, 256, 512, 1024]);
        assert_eq!(c.horizon, 1.0);
        assert_eq!(c.dt, 1.0 / 512.0);
        assert_eq!(c.resolved_seeds().len(), 32);
        assert_eq!(c.output_dir(), PathBuf::from("runs/chaos-rate"));
    }

    #[test]
    fn alpha_out_of_range() {
        let e = parse_config_str(r#"{"experiment":"chaos-rate","kernel":{"family":"holder_power","alpha":1.5}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("alpha must lie in (0,1]"), "{e}");
        assert!(e.is_config_error());
    }

    #[test]
    fn duplicate_and_unknown_keys() {
        let dup = r#"{"experiment":"chaos-rate","dt":0.1,"dt":0.2,"kernel":{"family":"sine"}}"#;
        assert!(parse_config_str(dup).unwrap_err().to_string().contains("duplicate key `dt`"));
        let nested = r#"{"experiment":"chaos-rate","kernel":{"family":"sine","family":"zero"}}"#;
        assert!(parse_config_str(nested).is_err());
        let unknown = r#"{"experiment":"chaos-rate","kernel":{"family":"sine"},"colour":1}"#;
        assert!(parse_config_str(unknown).unwrap_err().to_string().contains("colour"));
        let unused = r#"{"experiment":"chaos-rate","kernel":{"family":"sine","alpha":0.5}}"#;
        assert!(parse_config_str(unused).unwrap_err().to_string().contains("kernel.alpha"));
    }

    #[test]
    fn missing_required_keys() {
        assert!(parse_config_str(r#"{"kernel":{"family":"sine"}}"#).unwrap_err().to_string().contains("experiment"));
        assert!(parse_config_str(r#"{"experiment":"gc-sup"}"#).unwrap_err().to_string().contains("kernel"));
    }

    #[test]
    fn round_trip_and_order_free_hash() {
        let c = parse_config_str(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back = parse_config_str(&text).unwrap();
        assert_eq!(back, c);
        let reordered = r#"{"kernel":{"alpha":0.5,"family":"holder_power"},"experiment":"chaos-rate"}"#;
        assert_eq!(parse_config_str(reordered).unwrap().hash().unwrap(), c.hash().unwrap());
        let other = r#"{"experiment":"chaos-rate","kernel":{"family":"holder_power","alpha":0.25}}"#;
        assert_ne!(parse_config_str(other).unwrap().hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn presets_are_valid() {
        for kind in ExperimentKind::ALL {
            let c = RunConfig::preset(kind);
            c.validate().unwrap();
            assert_eq!(c.experiment, kind);
        }
    }

    #[test]
    fn derived_seeds_are_order_free() {
        let a: Vec<u64> = (0..4).map(|k| derived_seed(9, k)).collect();
        let b: Vec<u64> = (0..4).rev().map(|k| derived_seed(9, k)).collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
    }
}
