//! Configuration-driven experiments: Monte-Carlo power sweeps, convergence
//! traces, the block-heuristic NMSE table and the worked sphere-decoding
//! example, with CSV output.
//!
//! Seeds: the channel of trial `t` comes from `derive_seed(seed, [t])` and
//! the engine's random initial RIS configuration at power index `i` from
//! `derive_seed(seed, [t, i])`. The method is deliberately not a key, so all
//! methods of one trial see the same channel and the same starting point.

mod config;
mod csv_out;
mod example1;
mod stats;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub use config::{
    CodebookConfig, ConfigError, ConvergeCase, ConvergeConfig, Example1Config, ExperimentConfig, Levels,
    NmseConfig, QuantizerConfig, Resolution, Step, SweepConfig,
};
pub use csv_out::{
    read_sweep_csv, write_convergence_csv, write_example1_csv, write_nmse_csv, write_sweep_csv, CsvError,
    SCHEMA_LINE,
};
pub use example1::{parse_fixture, run_example1, Example1Report, FixtureError, EXAMPLE1_FIXTURE};
pub use stats::{sign_test, SignTest};

use crate::channel::{dbm_to_watts, draw_channels_seeded, ChannelSet};
use crate::mils::{block_sesd, sesd, RealLabels, SesdOptions, TriangularSystem};
use crate::seeds::{derive_seed, rng_from_seed};
use crate::wmmse::{run, BenchmarkTarget, EngineInputs, Method, RisCodebook, WmmseError};

/// One engine run of a power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub trial: usize,
    pub method: Method,
    pub target: BenchmarkTarget,
    pub codebook: RisCodebook,
    pub levels: Levels,
    pub power_index: usize,
    pub p_dbm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    pub total_power: f64,
    pub power_feasible: bool,
    pub power_floor_reached: bool,
    pub budget_exhausted: bool,
    pub nodes_visited: u64,
    pub wall_time_ms: Option<f64>,
}

/// One iteration of a convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub seed: u64,
    pub trial: usize,
    pub levels: Levels,
    pub codebook: RisCodebook,
    pub p_dbm: f64,
    pub iteration: usize,
    pub f: f64,
    pub sum_rate: f64,
    pub mu: f64,
    pub power: f64,
    pub nodes_visited: u64,
    /// Set on every row of a run that stopped on the threshold rule.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmseRow {
    pub eta: usize,
    pub realizations: usize,
    pub nmse: f64,
    pub mean_nodes: f64,
}

#[derive(Debug)]
pub enum ExpError {
    Config(ConfigError),
    Engine { trial: usize, p_dbm: f64, method: Method, source: WmmseError },
    Channel(String),
    Mils(crate::mils::MilsError),
}

impl std::error::Error for ExpError {}

impl std::fmt::Display for ExpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Engine { trial, p_dbm, method, source } => {
                write!(f, "trial {trial}, {p_dbm} dBm, {}: {source}", method.name())
            }
            Self::Channel(msg) => write!(f, "{msg}"),
            Self::Mils(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for ExpError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<crate::mils::MilsError> for ExpError {
    fn from(e: crate::mils::MilsError) -> Self {
        Self::Mils(e)
    }
}

#[cfg(feature = "parallel")]
fn map_jobs<J: Sync, T: Send>(jobs: &[J], f: impl Fn(&J) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<J, T>(jobs: &[J], f: impl Fn(&J) -> T) -> Vec<T> {
    jobs.iter().map(f).collect()
}

fn draw_trials(cfg: &ExperimentConfig, trials: usize) -> Result<Vec<ChannelSet>, ExpError> {
    let seed = cfg.sweep.seed;
    let idx: Vec<usize> = (0..trials).collect();
    map_jobs(&idx, |&t| draw_channels_seeded(&cfg.scene, derive_seed(seed, &[t as u64])))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| ExpError::Channel(e.to_string()))
}

/// Every `(power, trial, method)` combination of the sweep section, sorted
/// by power index, method and trial.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, ExpError> {
    cfg.validate()?;
    let sweep = &cfg.sweep;
    let channels = draw_trials(cfg, sweep.trials)?;
    let noise = cfg.scene.noise_power_w();
    let codebook = cfg.codebook.bits.codebook();
    let (m, k) = (cfg.scene.bs_antennas, cfg.scene.users);

    let mut jobs = Vec::new();
    for pi in 0..sweep.powers_dbm.len() {
        for &method in &sweep.methods {
            for trial in 0..sweep.trials {
                jobs.push((pi, method, trial));
            }
        }
    }
    let rows = map_jobs(&jobs, |&(pi, method, trial)| -> Result<ResultRow, ExpError> {
        let p_dbm = sweep.powers_dbm[pi];
        let power = cfg.power_w(pi);
        let precoder = cfg.quantizer.precoder(power, m, k)?;
        let inputs = EngineInputs {
            channels: &channels[trial],
            noise,
            power,
            precoder,
            codebook,
            config: cfg.engine,
            method,
            target: sweep.benchmark_target,
            seed: derive_seed(sweep.seed, &[trial as u64, pi as u64]),
        };
        let start = Instant::now();
        let out = run(&inputs).map_err(|source| ExpError::Engine { trial, p_dbm, method, source })?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        Ok(ResultRow {
            seed: sweep.seed,
            trial,
            method,
            target: sweep.benchmark_target,
            codebook,
            levels: cfg.quantizer.levels,
            power_index: pi,
            p_dbm,
            iterations: out.trace.len(),
            converged: out.converged,
            sum_rate: out.report.sum_rate,
            rates: out.report.rates.clone(),
            total_power: out.report.total_power,
            power_feasible: out.report.power_feasible,
            power_floor_reached: out.power_floor_reached,
            budget_exhausted: out.budget_exhausted,
            nodes_visited: out.nodes_visited,
            wall_time_ms: sweep.record_wall_time.then_some(elapsed),
        })
    });
    let mut rows: Vec<ResultRow> = rows.into_iter().collect::<Result<_, _>>()?;
    rows.sort_by_key(|r| (r.power_index, r.method, r.trial));
    Ok(rows)
}

/// Per-iteration traces of the SESD method at `converge.power_dbm` for each
/// configured `(levels, bits)` case. Trial `t` uses the sweep seed's
/// channel of trial `t`, so every case sees the same draws.
pub fn run_convergence_trace(cfg: &ExperimentConfig) -> Result<Vec<TraceRow>, ExpError> {
    cfg.validate()?;
    let conv = &cfg.converge;
    let channels = draw_trials(cfg, conv.trials)?;
    let noise = cfg.scene.noise_power_w();
    let power = dbm_to_watts(conv.power_dbm);
    let (m, k) = (cfg.scene.bs_antennas, cfg.scene.users);
    let seed = cfg.sweep.seed;

    let mut jobs = Vec::new();
    for (ci, case) in conv.cases.iter().enumerate() {
        for trial in 0..conv.trials {
            jobs.push((ci, *case, trial));
        }
    }
    let traces = map_jobs(&jobs, |&(_, case, trial)| -> Result<Vec<TraceRow>, ExpError> {
        let quantizer = QuantizerConfig { levels: case.levels, step: cfg.quantizer.step };
        let codebook = case.bits.codebook();
        let inputs = EngineInputs {
            channels: &channels[trial],
            noise,
            power,
            precoder: quantizer.precoder(power, m, k)?,
            codebook,
            config: cfg.engine,
            method: Method::Sesd,
            target: BenchmarkTarget::Both,
            seed: derive_seed(seed, &[trial as u64, 0]),
        };
        let out = run(&inputs).map_err(|source| ExpError::Engine {
            trial,
            p_dbm: conv.power_dbm,
            method: Method::Sesd,
            source,
        })?;
        Ok(out
            .trace
            .iter()
            .map(|rec| TraceRow {
                seed,
                trial,
                levels: case.levels,
                codebook,
                p_dbm: conv.power_dbm,
                iteration: rec.iteration,
                f: rec.f,
                sum_rate: rec.sum_rate,
                mu: rec.mu,
                power: rec.power,
                nodes_visited: rec.nodes_visited,
                converged: out.converged,
            })
            .collect())
    });
    let mut rows = Vec::new();
    for t in traces {
        rows.extend(t?);
    }
    Ok(rows)
}

/// Random instance of the block-heuristic study: upper-triangular `R` with
/// `U[0, 1]` entries (diagonal included) and `d` with `U[0, target_max]`
/// entries.
pub fn nmse_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, target_max: f64) -> TriangularSystem<f64> {
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = rng.random::<f64>();
        }
    }
    let d = DVector::from_fn(n, |_, _| target_max * rng.random::<f64>());
    TriangularSystem::new(r, d).expect("square system")
}

/// `E{(q⋆ − q̄)² / q⋆²}` of the block heuristic against exact SESD over
/// `{−1, 1}^n`, for each configured `η`. Realization `i` is drawn from
/// `derive_seed(seed, [i])`.
pub fn run_nmse_table(cfg: &ExperimentConfig) -> Result<Vec<NmseRow>, ExpError> {
    cfg.validate()?;
    let nm = &cfg.nmse;
    let labels = RealLabels::real(vec![-1.0, 1.0])?;
    let opts = SesdOptions { node_cap: cfg.engine.node_cap, record_trace: false };
    let idx: Vec<usize> = (0..nm.realizations).collect();
    let per_instance = map_jobs(&idx, |&i| -> Result<Vec<(f64, u64)>, ExpError> {
        let mut rng = rng_from_seed(derive_seed(cfg.sweep.seed, &[i as u64]));
        let sys = nmse_instance(&mut rng, nm.dimension, nm.target_max);
        let exact = sesd(&sys, &labels, opts)?.residual_sq;
        nm.etas
            .iter()
            .map(|&eta| {
                let h = block_sesd(&sys, &labels, eta, opts)?;
                let err = if exact == 0.0 { 0.0 } else { ((exact - h.residual_sq) / exact).powi(2) };
                Ok((err, h.nodes_visited))
            })
            .collect()
    });
    let per_instance: Vec<Vec<(f64, u64)>> = per_instance.into_iter().collect::<Result<_, _>>()?;
    let count = nm.realizations as f64;
    Ok(nm
        .etas
        .iter()
        .enumerate()
        .map(|(j, &eta)| NmseRow {
            eta,
            realizations: nm.realizations,
            nmse: per_instance.iter().map(|v| v[j].0).sum::<f64>() / count,
            mean_nodes: per_instance.iter().map(|v| v[j].1 as f64).sum::<f64>() / count,
        })
        .collect())
}
