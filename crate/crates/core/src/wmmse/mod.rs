//! Weighted sum-MSE minimisation for the RIS-assisted downlink.
//!
//! The sum rate is maximised through the equivalent problem
//! `min Σ_k c_k e_k − log₂ c_k` over precoders `W`, RIS coefficients `θ`,
//! receiver gains `β` and weights `c`, by block coordinate descent. Receiver
//! gains and weights have closed forms; precoders come from a Lagrangian
//! relaxation of the power constraint solved per user by sphere decoding
//! (or in closed form without fronthaul quantisation); RIS coefficients come
//! from per-element phase alignment (continuous) or a regularised sphere
//! decoding problem (discrete phases).

mod closed_form;
mod engine;
mod precoding;
mod ris;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelError;
use crate::mils::MilsError;
use crate::quantizer::QuantizerError;

pub use closed_form::{compute_mse, effective_channels, objective, optimal_receiver_gains, optimal_weights};
pub use engine::{
    run, rzf_init, BenchmarkTarget, BlockAudit, EngineInputs, IterationRecord, Method, RunOutcome, WmmseState,
};
pub use precoding::{
    infinite_precoding, precode_bisection, precode_fixed_mu, precoding_objective, precoding_system,
    BisectionOutcome, FixedMuPrecoding, PrecoderMode, PrecodingStrategy,
};
pub use ris::{
    nearest_phase, ris_continuous, ris_coordinate_descent, ris_discrete, ris_objective, ris_quadratic,
    DiscreteRis,
};

#[derive(Debug, Clone, PartialEq)]
pub enum WmmseError {
    Mils(MilsError),
    Quantizer(QuantizerError),
    Channel(ChannelError),
    /// `V` is singular at `μ = 0`; a positive multiplier is needed.
    SingularPrecodingMatrix,
    DimensionMismatch(String),
    InvalidConfig(String),
}

impl std::error::Error for WmmseError {}

impl fmt::Display for WmmseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mils(e) => write!(f, "{e}"),
            Self::Quantizer(e) => write!(f, "{e}"),
            Self::Channel(e) => write!(f, "{e}"),
            Self::SingularPrecodingMatrix => {
                write!(f, "precoding matrix V is singular; use a positive Lagrange multiplier")
            }
            Self::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Self::InvalidConfig(msg) => write!(f, "invalid engine configuration: {msg}"),
        }
    }
}

impl From<MilsError> for WmmseError {
    fn from(e: MilsError) -> Self {
        Self::Mils(e)
    }
}

impl From<QuantizerError> for WmmseError {
    fn from(e: QuantizerError) -> Self {
        Self::Quantizer(e)
    }
}

impl From<ChannelError> for WmmseError {
    fn from(e: ChannelError) -> Self {
        Self::Channel(e)
    }
}

/// RIS coefficient alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisCodebook {
    /// Any unit-modulus value.
    Continuous,
    /// `{e^{jmπ/2^{b−1}} : m = 0, …, 2^b − 1}`.
    Discrete { bits: u32 },
}

impl RisCodebook {
    pub fn bits(&self) -> Option<u32> {
        match self {
            Self::Continuous => None,
            Self::Discrete { bits } => Some(*bits),
        }
    }
}

/// Power bisection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BisectionConfig {
    /// Accept once the power lies in `[power_lo·p, p]`.
    pub power_lo: f64,
    pub max_steps: usize,
    /// Upper bracket end starts at 1 and grows ×10 at most this many times.
    pub max_growth: usize,
    /// Lower bracket end relative to `trace(V|_{μ=0}) / M`.
    pub mu_min_rel: f64,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self { power_lo: 0.99, max_steps: 200, max_growth: 60, mu_min_rel: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Stop when `|f^(l) − f^(l−1)| < epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub bisection: BisectionConfig,
    /// Continuous RIS: sweeps over all elements per outer iteration.
    pub ris_sweeps: usize,
    /// Continuous RIS: stop sweeping when the objective moves less than this.
    pub sweep_tolerance: f64,
    /// Number of blocks for the discrete RIS search.
    pub eta: usize,
    /// Diagonal load for the discrete RIS factorisation, relative to
    /// `trace(A)/N`. With a load far below the nonzero eigenvalues of the
    /// rank-deficient `A`, the trailing rows of the factor carry almost no
    /// information and the block heuristic fills its last blocks by ties.
    pub alpha_scale: f64,
    /// Node budget per sphere-decoding call.
    pub node_cap: u64,
    /// Sweep cap for the coordinate-descent benchmarks.
    pub cd_max_sweeps: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iterations: 100,
            bisection: BisectionConfig::default(),
            ris_sweeps: 20,
            sweep_tolerance: 1e-6,
            eta: 1,
            alpha_scale: 1.0,
            node_cap: crate::mils::DEFAULT_NODE_CAP,
            cd_max_sweeps: 50,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), WmmseError> {
        let fail = |m: &str| Err(WmmseError::InvalidConfig(m.to_string()));
        if !(self.epsilon > 0.0) {
            return fail("epsilon must be positive");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        let lo = self.bisection.power_lo;
        if !(lo > 0.0 && lo <= 1.0) {
            return fail("bisection.power_lo must lie in (0, 1]");
        }
        if self.bisection.max_steps == 0 || !(self.bisection.mu_min_rel > 0.0) {
            return fail("bisection.max_steps and bisection.mu_min_rel must be positive");
        }
        if self.eta == 0 {
            return fail("eta must be at least 1");
        }
        if !(self.alpha_scale > 0.0) {
            return fail("alpha_scale must be positive");
        }
        if self.node_cap == 0 || self.cd_max_sweeps == 0 {
            return fail("node_cap and cd_max_sweeps must be positive");
        }
        Ok(())
    }
}
