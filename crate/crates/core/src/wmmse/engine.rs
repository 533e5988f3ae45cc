//! The alternating optimisation loop and its benchmark variants.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::closed_form::{compute_mse, effective_channels, objective, optimal_receiver_gains, optimal_weights};
use super::precoding::{precode_bisection, PrecoderMode, PrecodingStrategy};
use super::ris::{nearest_phase, ris_continuous, ris_coordinate_descent, ris_discrete, ris_objective, ris_quadratic};
use super::{EngineConfig, RisCodebook, WmmseError};
use crate::channel::ChannelSet;
use crate::linalg::{CMatrix, CVector};
use crate::metrics::{total_power, RateReport};
use crate::mils::{AlphaPolicy, ComplexLabels, SesdOptions};
use crate::seeds::rng_from_seed;

/// Design method. The benchmarks replace the sphere-decoding step of the
/// part selected by [`BenchmarkTarget`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sesd,
    /// Optimise without the discrete constraint, quantise once at the end.
    NearestPoint,
    /// Entry-wise exhaustive search with the other entries fixed.
    CoordinateDescent,
    /// Random RIS configuration, only the precoder is optimised.
    RandomRis,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Sesd, Method::NearestPoint, Method::CoordinateDescent, Method::RandomRis];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sesd => "sesd",
            Self::NearestPoint => "nearest_point",
            Self::CoordinateDescent => "coordinate_descent",
            Self::RandomRis => "random_ris",
        }
    }

    /// Stable numeric id, used in seed derivation and sorting.
    pub fn id(&self) -> u64 {
        *self as u64
    }
}

/// Which discrete variable a benchmark method applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkTarget {
    Precoding,
    Ris,
    #[default]
    Both,
}

impl BenchmarkTarget {
    fn precoding(&self) -> bool {
        matches!(self, Self::Precoding | Self::Both)
    }

    fn ris(&self) -> bool {
        matches!(self, Self::Ris | Self::Both)
    }
}

#[derive(Debug, Clone)]
pub struct EngineInputs<'a> {
    pub channels: &'a ChannelSet,
    /// Noise power `N₀` in watts.
    pub noise: f64,
    /// Power budget `p` in watts.
    pub power: f64,
    pub precoder: PrecoderMode,
    pub codebook: RisCodebook,
    pub config: EngineConfig,
    pub method: Method,
    pub target: BenchmarkTarget,
    /// Seeds the random initial RIS configuration.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub w: CMatrix,
    pub theta: CVector,
    pub beta: Vec<Complex64>,
    pub c: Vec<f64>,
    pub e: Vec<f64>,
    pub mu: f64,
    pub f: f64,
    pub iteration: usize,
}

/// Change of the objective caused by each block update of one iteration.
/// The precoder entry is the change of `f + μ‖W‖²` at the multiplier used,
/// and is `None` when the previous precoder was not in the feasible set
/// (the unquantised initial point), where no decrease is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockAudit {
    pub w: Option<f64>,
    pub theta: f64,
    pub beta: f64,
    pub c: f64,
}

impl BlockAudit {
    pub fn max_increase(&self) -> f64 {
        [self.w.unwrap_or(f64::NEG_INFINITY), self.theta, self.beta, self.c].into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f: f64,
    /// `−Σ log₂ e_k` after the iteration.
    pub sum_rate: f64,
    pub mu: f64,
    pub power: f64,
    pub nodes_visited: u64,
    pub audit: BlockAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: WmmseState,
    pub initial_f: f64,
    pub trace: Vec<IterationRecord>,
    /// Stopped on the `epsilon` rule rather than the iteration cap.
    pub converged: bool,
    /// `−Σ log₂ e_k` of the final state.
    pub sum_rate: f64,
    pub report: RateReport,
    pub nodes_visited: u64,
    pub power_floor_reached: bool,
    pub budget_exhausted: bool,
    pub bisection_violations: usize,
    /// Continuous RIS updates that raised the objective beyond rounding.
    pub ris_increases: usize,
    /// Discrete RIS proposals rejected because they raised the objective.
    pub ris_rejections: usize,
}

/// Regularised zero-forcing `W₀ = H_cᴴ(H_cH_cᴴ + (K N₀/p) I)⁻¹` with
/// `H_c = GΘH`, scaled so that `‖W₀‖²_F = p`.
pub fn rzf_init(chs: &ChannelSet, theta: &CVector, power: f64, noise: f64) -> Result<CMatrix, WmmseError> {
    let f = effective_channels(chs, theta);
    let k = f.len();
    let m = chs.bs_antennas();
    let hc = CMatrix::from_fn(k, m, |i, j| f[i][j]);
    let mut gram = &hc * hc.adjoint();
    for i in 0..k {
        gram[(i, i)] += Complex64::new(k as f64 * noise / power, 0.0);
    }
    let inv = Cholesky::new(gram)
        .ok_or_else(|| WmmseError::DimensionMismatch("RZF Gram matrix is not positive definite".into()))?
        .inverse();
    let w = hc.adjoint() * inv;
    let norm_sq = total_power(&w);
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(WmmseError::DimensionMismatch("RZF precoder vanished".into()));
    }
    Ok(w * Complex64::new((power / norm_sq).sqrt(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RisStep {
    Fixed,
    Continuous,
    Exact,
    CoordinateDescent,
}

fn mse_all(w: &CMatrix, f: &[CVector], beta: &[Complex64], noise: f64) -> Vec<f64> {
    (0..f.len()).map(|k| compute_mse(k, w, f, beta[k], noise)).collect()
}

fn rate_from_mse(e: &[f64]) -> f64 {
    -e.iter().map(|ek| ek.log2()).sum::<f64>()
}

/// Runs the alternating optimisation: per iteration the precoder (power
/// bisection over `μ`), the RIS configuration, the receiver gains and the
/// weights, in that order, until `|f^(l) − f^(l−1)| < epsilon` or the
/// iteration cap.
pub fn run(inputs: &EngineInputs<'_>) -> Result<RunOutcome, WmmseError> {
    inputs.config.validate()?;
    let cfg = &inputs.config;
    let chs = inputs.channels;
    let (noise, power) = (inputs.noise, inputs.power);
    if !(power > 0.0) || !(noise > 0.0) {
        return Err(WmmseError::InvalidConfig("power and noise must be positive".into()));
    }
    let n = chs.ris_elements();
    let k_users = chs.users();
    let labels = match inputs.codebook {
        RisCodebook::Continuous => None,
        RisCodebook::Discrete { bits } => Some(ComplexLabels::phase_set(bits)?),
    };
    if labels.is_some() && !n.is_multiple_of(cfg.eta) {
        return Err(WmmseError::InvalidConfig(format!("eta = {} does not divide N = {n}", cfg.eta)));
    }

    let np_precoding = inputs.method == Method::NearestPoint && inputs.target.precoding();
    let np_ris = inputs.method == Method::NearestPoint && inputs.target.ris() && labels.is_some();
    let loop_precoder = if np_precoding { PrecoderMode::Infinite } else { inputs.precoder.clone() };
    let quantized_loop = matches!(loop_precoder, PrecoderMode::Quantized(_));
    let strategy = if inputs.method == Method::CoordinateDescent && inputs.target.precoding() {
        PrecodingStrategy::CoordinateDescent { max_sweeps: cfg.cd_max_sweeps }
    } else {
        PrecodingStrategy::Sesd
    };
    let ris_step = match (&labels, inputs.method) {
        (_, Method::RandomRis) => RisStep::Fixed,
        (None, _) => RisStep::Continuous,
        (Some(_), _) if np_ris => RisStep::Continuous,
        (Some(_), Method::CoordinateDescent) if inputs.target.ris() => RisStep::CoordinateDescent,
        (Some(_), _) => RisStep::Exact,
    };
    let opts = SesdOptions { node_cap: cfg.node_cap, record_trace: false };

    let mut rng = rng_from_seed(inputs.seed);
    let mut theta = CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()));
    if let (Some(l), false) = (&labels, ris_step == RisStep::Continuous) {
        theta = nearest_phase(&theta, l);
    }
    let mut f_eff = effective_channels(chs, &theta);
    let mut w = rzf_init(chs, &theta, power, noise)?;
    let mut beta = optimal_receiver_gains(&w, &f_eff, noise);
    let mut c = vec![1.0; k_users];
    let mut e = mse_all(&w, &f_eff, &beta, noise);
    let mut f_val = objective(&c, &e);
    let initial_f = f_val;

    let mut trace = Vec::new();
    let mut mu = 0.0;
    let mut nodes_total = 0u64;
    let (mut floor_hit, mut exhausted) = (false, false);
    let (mut violations, mut ris_increases, mut ris_rejections) = (0, 0, 0);
    let mut converged = false;

    for l in 1..=cfg.max_iterations {
        let mut nodes = 0u64;

        let bis = precode_bisection(power, &c, &beta, &f_eff, &loop_precoder, strategy, &cfg.bisection, opts)?;
        mu = bis.mu;
        nodes += bis.nodes_visited;
        floor_hit |= bis.power_floor_reached;
        exhausted |= bis.budget_exhausted;
        violations += bis.monotonicity_violations;
        let old_lagrangian = f_val + mu * total_power(&w);
        w = bis.w;
        e = mse_all(&w, &f_eff, &beta, noise);
        let after_w = objective(&c, &e);
        let audit_w = if l == 1 && quantized_loop { None } else { Some(after_w + mu * total_power(&w) - old_lagrangian) };

        let before_theta = after_w;
        if ris_step != RisStep::Fixed {
            let (a, t) = ris_quadratic(&w, &beta, &c, chs);
            let proposal = match ris_step {
                RisStep::Continuous => {
                    let out = ris_continuous(&a, &t, &theta, cfg.ris_sweeps, cfg.sweep_tolerance);
                    ris_increases += out.increases;
                    out.theta
                }
                RisStep::Exact => {
                    let labels = labels.as_ref().expect("discrete codebook");
                    let out = ris_discrete(&a, &t, labels, cfg.eta, AlphaPolicy::TraceScaled(cfg.alpha_scale), Some(&theta), opts)?;
                    nodes += out.nodes_visited;
                    exhausted |= out.budget_exhausted;
                    out.theta
                }
                RisStep::CoordinateDescent => {
                    let labels = labels.as_ref().expect("discrete codebook");
                    let (th, evals) = ris_coordinate_descent(&a, &t, &theta, labels, cfg.cd_max_sweeps);
                    nodes += evals;
                    th
                }
                RisStep::Fixed => unreachable!(),
            };
            let old_obj = ris_objective(&a, &t, &theta);
            let new_obj = ris_objective(&a, &t, &proposal);
            if ris_step == RisStep::Exact && new_obj > old_obj {
                // the block heuristic can land above the current point
                ris_rejections += 1;
            } else {
                theta = proposal;
            }
            f_eff = effective_channels(chs, &theta);
            e = mse_all(&w, &f_eff, &beta, noise);
        }
        let after_theta = objective(&c, &e);

        beta = optimal_receiver_gains(&w, &f_eff, noise);
        e = mse_all(&w, &f_eff, &beta, noise);
        let after_beta = objective(&c, &e);

        c = optimal_weights(&e);
        let after_c = objective(&c, &e);

        let previous = f_val;
        f_val = after_c;
        nodes_total += nodes;
        trace.push(IterationRecord {
            iteration: l,
            f: f_val,
            sum_rate: rate_from_mse(&e),
            mu,
            power: total_power(&w),
            nodes_visited: nodes,
            audit: BlockAudit {
                w: audit_w,
                theta: after_theta - before_theta,
                beta: after_beta - after_theta,
                c: after_c - after_beta,
            },
        });
        if (f_val - previous).abs() < cfg.epsilon {
            converged = true;
            break;
        }
    }

    if np_ris || np_precoding {
        if np_ris {
            theta = nearest_phase(&theta, labels.as_ref().expect("discrete codebook"));
            f_eff = effective_channels(chs, &theta);
        }
        if np_precoding {
            if let PrecoderMode::Quantized(_) = inputs.precoder {
                let bis = precode_bisection(
                    power,
                    &c,
                    &beta,
                    &f_eff,
                    &inputs.precoder,
                    PrecodingStrategy::NearestPoint,
                    &cfg.bisection,
                    opts,
                )?;
                mu = bis.mu;
                floor_hit |= bis.power_floor_reached;
                w = bis.w;
            }
        }
        beta = optimal_receiver_gains(&w, &f_eff, noise);
        e = mse_all(&w, &f_eff, &beta, noise);
        c = optimal_weights(&e);
        f_val = objective(&c, &e);
    }

    let iteration = trace.len();
    let report = RateReport::new(&w, &theta, chs, noise, power);
    Ok(RunOutcome {
        sum_rate: rate_from_mse(&e),
        state: WmmseState { w, theta, beta, c, e, mu, f: f_val, iteration },
        initial_f,
        trace,
        converged,
        report,
        nodes_visited: nodes_total,
        power_floor_reached: floor_hit,
        budget_exhausted: exhausted,
        bisection_violations: violations,
        ris_increases,
        ris_rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, draw_channels_seeded, SceneConfig};
    use crate::quantizer::QuantizerSpec;

    fn desk(seed: u64) -> (ChannelSet, f64) {
        let cfg = SceneConfig::desk();
        (draw_channels_seeded(&cfg, seed).unwrap(), cfg.noise_power_w())
    }

    fn random_theta(n: usize, seed: u64) -> CVector {
        let mut rng = rng_from_seed(seed);
        CVector::from_fn(n, |_, _| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
    }

    fn quantized(p: f64) -> PrecoderMode {
        PrecoderMode::Quantized(QuantizerSpec::optimal(4, p / 16.0).unwrap())
    }

    fn inputs<'a>(chs: &'a ChannelSet, noise: f64, p: f64, codebook: RisCodebook, method: Method) -> EngineInputs<'a> {
        EngineInputs {
            channels: chs,
            noise,
            power: p,
            precoder: quantized(p),
            codebook,
            config: EngineConfig { eta: 2, ..Default::default() },
            method,
            target: BenchmarkTarget::Both,
            seed: 9,
        }
    }

    #[test]
    fn rzf_zero_forces_at_high_snr() {
        let (chs, _) = desk(1);
        let theta = random_theta(16, 2);
        let w = rzf_init(&chs, &theta, 1.0, 1e-22).unwrap();
        let f = effective_channels(&chs, &theta);
        let hc = CMatrix::from_fn(2, 4, |i, j| f[i][j]);
        let g = &hc * &w;
        let scale = g.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..2 {
            for j in 0..2 {
                if i != j {
                    assert!(g[(i, j)].norm() < 1e-6 * scale);
                }
            }
        }
        assert!(((g[(0, 0)] - g[(1, 1)]).norm()) < 1e-6 * scale);
    }

    #[test]
    fn rzf_meets_power_with_equality() {
        let (chs, noise) = desk(3);
        let p = dbm_to_watts(20.0);
        let w = rzf_init(&chs, &random_theta(16, 4), p, noise).unwrap();
        assert!((total_power(&w) / p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rzf_single_user_is_matched_filter() {
        let cfg = SceneConfig { users: 1, ..SceneConfig::desk() };
        let chs = draw_channels_seeded(&cfg, 5).unwrap();
        let theta = random_theta(16, 6);
        let w = rzf_init(&chs, &theta, 2.0, cfg.noise_power_w()).unwrap();
        let h = effective_channels(&chs, &theta)[0].conjugate();
        let cos = w.column(0).dotc(&h).norm() / (w.column(0).norm() * h.norm());
        assert!((cos - 1.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_outcome() {
        let (chs, noise) = desk(7);
        let p = dbm_to_watts(20.0);
        let inp = inputs(&chs, noise, p, RisCodebook::Discrete { bits: 2 }, Method::Sesd);
        assert_eq!(run(&inp).unwrap(), run(&inp).unwrap());
    }

    #[test]
    fn reported_rate_matches_sinr() {
        let (chs, noise) = desk(8);
        let p = dbm_to_watts(20.0);
        for codebook in [RisCodebook::Continuous, RisCodebook::Discrete { bits: 2 }] {
            for method in Method::ALL {
                let out = run(&inputs(&chs, noise, p, codebook, method)).unwrap();
                assert!((out.sum_rate / out.report.sum_rate - 1.0).abs() < 1e-9, "{method:?}");
            }
        }
    }

    #[test]
    fn sesd_runs_are_blockwise_monotone_and_feasible() {
        for seed in 0..4 {
            let (chs, noise) = desk(10 + seed);
            let p = dbm_to_watts(10.0 + 10.0 * seed as f64);
            let PrecoderMode::Quantized(q) = quantized(p) else { unreachable!() };
            for codebook in [RisCodebook::Continuous, RisCodebook::Discrete { bits: 2 }] {
                let inp = inputs(&chs, noise, p, codebook, Method::Sesd);
                let out = run(&inp).unwrap();
                assert!(out.trace.len() <= inp.config.max_iterations);
                for rec in &out.trace {
                    assert!(rec.audit.max_increase() <= 1e-8, "{rec:?}");
                }
                assert!(out.trace[0].audit.w.is_none());
                assert!(out.trace[1..].iter().all(|r| r.audit.w.is_some()));
                if out.converged {
                    let n = out.trace.len();
                    let prev = if n > 1 { out.trace[n - 2].f } else { out.initial_f };
                    assert!((out.trace[n - 1].f - prev).abs() < inp.config.epsilon);
                }
                assert!(out.report.power_feasible);
                assert!(out.state.w.iter().all(|z| q.contains(*z)));
                assert!(out.state.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
                if let RisCodebook::Discrete { bits } = codebook {
                    let d = ComplexLabels::phase_set(bits).unwrap();
                    assert!(out.state.theta.iter().all(|z| d.contains(z)));
                }
            }
        }
    }

    #[test]
    fn benchmarks_emit_feasible_states() {
        let (chs, noise) = desk(20);
        let p = dbm_to_watts(30.0);
        let PrecoderMode::Quantized(q) = quantized(p) else { unreachable!() };
        let d = ComplexLabels::phase_set(2).unwrap();
        for method in Method::ALL {
            for target in [BenchmarkTarget::Precoding, BenchmarkTarget::Ris, BenchmarkTarget::Both] {
                let inp = EngineInputs { target, ..inputs(&chs, noise, p, RisCodebook::Discrete { bits: 2 }, method) };
                let out = run(&inp).unwrap();
                assert!(out.report.power_feasible, "{method:?} {target:?}");
                assert!(out.state.w.iter().all(|z| q.contains(*z)));
                assert!(out.state.theta.iter().all(|z| d.contains(z)));
            }
        }
    }

    #[test]
    fn random_ris_keeps_initial_configuration() {
        let (chs, noise) = desk(21);
        let p = dbm_to_watts(20.0);
        let a = run(&inputs(&chs, noise, p, RisCodebook::Continuous, Method::RandomRis)).unwrap();
        let b = run(&inputs(&chs, noise, p, RisCodebook::Continuous, Method::Sesd)).unwrap();
        assert_eq!(a.state.theta, random_theta(16, 9));
        assert_ne!(b.state.theta, a.state.theta);
    }

    #[test]
    fn infinite_resolution_uses_the_power_band() {
        let (chs, noise) = desk(22);
        let p = dbm_to_watts(20.0);
        let inp = EngineInputs {
            precoder: PrecoderMode::Infinite,
            ..inputs(&chs, noise, p, RisCodebook::Continuous, Method::Sesd)
        };
        let out = run(&inp).unwrap();
        let ratio = out.report.total_power / p;
        assert!((0.99..=1.0 + 1e-12).contains(&ratio), "{ratio}");
    }

    #[test]
    fn eta_must_divide_surface() {
        let (chs, noise) = desk(23);
        let mut inp = inputs(&chs, noise, 1.0, RisCodebook::Discrete { bits: 1 }, Method::Sesd);
        inp.config.eta = 3;
        assert!(matches!(run(&inp), Err(WmmseError::InvalidConfig(_))));
    }
}
