//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, SceneConfig};
use crate::quantizer::QuantizerSpec;
use crate::wmmse::{BenchmarkTarget, EngineConfig, Method, PrecoderMode, RisCodebook};

/// Validation failure, tagged with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl std::error::Error for ConfigError {}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Fronthaul resolution: a number of levels or `"infinite"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntOrWord", into = "IntOrWord")]
pub enum Levels {
    Finite(usize),
    Infinite,
}

/// Quantiser step: a positive number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FloatOrWord", into = "FloatOrWord")]
pub enum Step {
    /// Gaussian-optimal step for per-component variance `p / (2MK)`.
    Auto,
    Fixed(f64),
}

/// RIS resolution: a number of bits or `"continuous"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IntOrWord", into = "IntOrWord")]
pub enum Resolution {
    Bits(u32),
    Continuous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum IntOrWord {
    Int(u64),
    Word(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum FloatOrWord {
    Float(f64),
    Word(String),
}

impl TryFrom<IntOrWord> for Levels {
    type Error = String;

    fn try_from(v: IntOrWord) -> Result<Self, String> {
        match v {
            IntOrWord::Int(n) => Ok(Self::Finite(n as usize)),
            IntOrWord::Word(w) if w == "infinite" => Ok(Self::Infinite),
            IntOrWord::Word(w) => Err(format!("expected an integer or \"infinite\", got \"{w}\"")),
        }
    }
}

impl From<Levels> for IntOrWord {
    fn from(v: Levels) -> Self {
        match v {
            Levels::Finite(n) => Self::Int(n as u64),
            Levels::Infinite => Self::Word("infinite".into()),
        }
    }
}

impl TryFrom<FloatOrWord> for Step {
    type Error = String;

    fn try_from(v: FloatOrWord) -> Result<Self, String> {
        match v {
            FloatOrWord::Float(x) => Ok(Self::Fixed(x)),
            FloatOrWord::Word(w) if w == "auto" => Ok(Self::Auto),
            FloatOrWord::Word(w) => Err(format!("expected a number or \"auto\", got \"{w}\"")),
        }
    }
}

impl From<Step> for FloatOrWord {
    fn from(v: Step) -> Self {
        match v {
            Step::Auto => Self::Word("auto".into()),
            Step::Fixed(x) => Self::Float(x),
        }
    }
}

impl TryFrom<IntOrWord> for Resolution {
    type Error = String;

    fn try_from(v: IntOrWord) -> Result<Self, String> {
        match v {
            IntOrWord::Int(b) => u32::try_from(b).map(Self::Bits).map_err(|_| format!("{b} bits is out of range")),
            IntOrWord::Word(w) if w == "continuous" => Ok(Self::Continuous),
            IntOrWord::Word(w) => Err(format!("expected an integer or \"continuous\", got \"{w}\"")),
        }
    }
}

impl From<Resolution> for IntOrWord {
    fn from(v: Resolution) -> Self {
        match v {
            Resolution::Bits(b) => Self::Int(b as u64),
            Resolution::Continuous => Self::Word("continuous".into()),
        }
    }
}

impl Resolution {
    pub fn codebook(&self) -> RisCodebook {
        match *self {
            Self::Bits(bits) => RisCodebook::Discrete { bits },
            Self::Continuous => RisCodebook::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub levels: Levels,
    pub step: Step,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self { levels: Levels::Finite(4), step: Step::Auto }
    }
}

impl QuantizerConfig {
    /// Precoder mode for power budget `power_w` with `m` antennas and `k`
    /// users.
    pub fn precoder(&self, power_w: f64, m: usize, k: usize) -> Result<PrecoderMode, ConfigError> {
        let levels = match self.levels {
            Levels::Infinite => return Ok(PrecoderMode::Infinite),
            Levels::Finite(l) => l,
        };
        let spec = match self.step {
            Step::Auto => QuantizerSpec::optimal(levels, power_w / (2.0 * (m * k) as f64)),
            Step::Fixed(step) => QuantizerSpec::new(levels, step),
        };
        spec.map(PrecoderMode::Quantized).map_err(|e| ConfigError::new("quantizer", e.to_string()))
    }

    fn validate(&self, path: &str) -> Result<(), ConfigError> {
        if let Levels::Finite(l) = self.levels {
            if l < 2 {
                return Err(ConfigError::new(format!("{path}.levels"), "must be at least 2"));
            }
        }
        if let Step::Fixed(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(ConfigError::new(format!("{path}.step"), "must be a positive number or \"auto\""));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub bits: Resolution,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self { bits: Resolution::Bits(2) }
    }
}

fn validate_bits(bits: Resolution, path: &str) -> Result<(), ConfigError> {
    match bits {
        Resolution::Bits(b) if !(1..=16).contains(&b) => Err(ConfigError::new(path, "must lie in 1..=16 or be \"continuous\"")),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub powers_dbm: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub benchmark_target: BenchmarkTarget,
    /// Fill the `wall_time_ms` column. Off by default so output is
    /// reproducible byte for byte.
    pub record_wall_time: bool,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            powers_dbm: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            trials: 50,
            seed: 1,
            methods: Method::ALL.to_vec(),
            benchmark_target: BenchmarkTarget::Both,
            record_wall_time: false,
            output: None,
        }
    }
}

/// One curve of the convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeCase {
    pub levels: Levels,
    pub bits: Resolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub power_dbm: f64,
    pub trials: usize,
    pub cases: Vec<ConvergeCase>,
    pub output: Option<PathBuf>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        let case = |levels, bits| ConvergeCase { levels: Levels::Finite(levels), bits };
        Self {
            power_dbm: 30.0,
            trials: 1,
            cases: vec![
                case(4, Resolution::Continuous),
                case(8, Resolution::Continuous),
                case(4, Resolution::Bits(2)),
                case(4, Resolution::Bits(3)),
            ],
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmseConfig {
    pub dimension: usize,
    pub realizations: usize,
    pub etas: Vec<usize>,
    /// Target entries are drawn from `U[0, target_max]`.
    pub target_max: f64,
    pub output: Option<PathBuf>,
}

impl Default for NmseConfig {
    fn default() -> Self {
        Self { dimension: 40, realizations: 100, etas: vec![4, 8, 10], target_max: 20.0, output: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    /// Fixture file; the built-in fixture when absent.
    pub fixture: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub engine: EngineConfig,
    pub quantizer: QuantizerConfig,
    pub codebook: CodebookConfig,
    pub sweep: SweepConfig,
    pub converge: ConvergeConfig,
    pub nmse: NmseConfig,
    pub example1: Example1Config,
}

impl Default for ExperimentConfig {
    /// The full scene with 8-element RIS blocks; exact search over all 64
    /// elements is out of reach.
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            engine: EngineConfig { eta: 8, ..EngineConfig::default() },
            quantizer: QuantizerConfig::default(),
            codebook: CodebookConfig::default(),
            sweep: SweepConfig::default(),
            converge: ConvergeConfig::default(),
            nmse: NmseConfig::default(),
            example1: Example1Config::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            ConfigError::new("", format!("parse error: {msg}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scene.validate().map_err(|e| ConfigError::new("scene", e.0))?;
        self.engine.validate().map_err(|e| ConfigError::new("engine", e.to_string()))?;
        self.quantizer.validate("quantizer")?;
        validate_bits(self.codebook.bits, "codebook.bits")?;
        if let Resolution::Bits(_) = self.codebook.bits {
            if !self.scene.ris_elements().is_multiple_of(self.engine.eta) {
                return Err(ConfigError::new("engine.eta", "must divide the number of RIS elements"));
            }
        }

        let s = &self.sweep;
        if s.powers_dbm.is_empty() {
            return Err(ConfigError::new("sweep.powers_dbm", "must not be empty"));
        }
        if let Some(i) = s.powers_dbm.iter().position(|p| !p.is_finite()) {
            return Err(ConfigError::new(format!("sweep.powers_dbm[{i}]"), "must be finite"));
        }
        if s.trials == 0 {
            return Err(ConfigError::new("sweep.trials", "must be at least 1"));
        }
        if s.methods.is_empty() {
            return Err(ConfigError::new("sweep.methods", "must not be empty"));
        }
        for (i, m) in s.methods.iter().enumerate() {
            if s.methods[..i].contains(m) {
                return Err(ConfigError::new(format!("sweep.methods[{i}]"), format!("{} is listed twice", m.name())));
            }
        }

        let c = &self.converge;
        if !c.power_dbm.is_finite() {
            return Err(ConfigError::new("converge.power_dbm", "must be finite"));
        }
        if c.trials == 0 {
            return Err(ConfigError::new("converge.trials", "must be at least 1"));
        }
        if c.cases.is_empty() {
            return Err(ConfigError::new("converge.cases", "must not be empty"));
        }
        for (i, case) in c.cases.iter().enumerate() {
            let path = format!("converge.cases[{i}]");
            QuantizerConfig { levels: case.levels, step: Step::Auto }.validate(&path)?;
            validate_bits(case.bits, &format!("{path}.bits"))?;
            if let Resolution::Bits(_) = case.bits {
                if !self.scene.ris_elements().is_multiple_of(self.engine.eta) {
                    return Err(ConfigError::new("engine.eta", "must divide the number of RIS elements"));
                }
            }
        }

        let n = &self.nmse;
        if n.dimension == 0 || n.realizations == 0 {
            return Err(ConfigError::new("nmse", "dimension and realizations must be at least 1"));
        }
        if !(n.target_max > 0.0 && n.target_max.is_finite()) {
            return Err(ConfigError::new("nmse.target_max", "must be positive"));
        }
        if n.etas.is_empty() {
            return Err(ConfigError::new("nmse.etas", "must not be empty"));
        }
        for (i, &eta) in n.etas.iter().enumerate() {
            if eta == 0 || !n.dimension.is_multiple_of(eta) {
                return Err(ConfigError::new(format!("nmse.etas[{i}]"), format!("must divide dimension {}", n.dimension)));
            }
        }
        Ok(())
    }

    /// Power budget in watts of sweep point `i`.
    pub fn power_w(&self, i: usize) -> f64 {
        dbm_to_watts(self.sweep.powers_dbm[i])
    }
}
