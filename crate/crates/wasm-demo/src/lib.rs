//! Browser bindings: three operations returning JSON strings.
//!
//! The plain functions take and return Rust strings so they run natively in
//! tests; the `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ris_sesd::channel::{dbm_to_watts, draw_channels_seeded, SceneConfig};
use ris_sesd::exp::parse_fixture;
use ris_sesd::mils::{brute_force_mils, sesd_real, SesdOptions};
use ris_sesd::quantizer::{gaussian_distortion, optimal_step_size, QuantizerSpec};
use ris_sesd::wmmse::{run, BenchmarkTarget, EngineConfig, EngineInputs, Method, PrecoderMode, RisCodebook};

#[derive(Serialize)]
struct Leaf {
    x: Vec<f64>,
    residual: f64,
}

#[derive(Serialize)]
struct SolveReport {
    x: Vec<f64>,
    residual: f64,
    nodes_visited: u64,
    incumbents: Vec<Leaf>,
    brute_force_residual: Option<f64>,
}

/// Sphere-decodes a fixture (dimension, rows of `R`, `d`, labels) and lists
/// every improving leaf in the order found.
pub fn solve_fixture(text: &str) -> Result<String, String> {
    let (sys, labels) = parse_fixture(text).map_err(|e| e.to_string())?;
    let out = sesd_real(&sys, &labels, SesdOptions { record_trace: true, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let brute = brute_force_mils(sys.r(), sys.d(), &labels).ok().map(|b| b.residual_sq);
    let report = SolveReport {
        x: out.x,
        residual: out.residual_sq,
        nodes_visited: out.nodes_visited,
        incumbents: out
            .incumbent_trace
            .unwrap_or_default()
            .into_iter()
            .map(|(x, residual)| Leaf { x, residual })
            .collect(),
        brute_force_residual: brute,
    };
    Ok(serde_json::to_string(&report).expect("report serialises"))
}

#[derive(Serialize)]
struct TracePoint {
    iteration: usize,
    f: f64,
    sum_rate: f64,
    power: f64,
}

#[derive(Serialize)]
struct TraceReport {
    trace: Vec<TracePoint>,
    sum_rate: f64,
    random_ris_sum_rate: f64,
    power_budget: f64,
    total_power: f64,
    converged: bool,
}

/// SESD design on a desk-scale scene (4 antennas, 4×4 RIS, 2 users).
/// `levels = 0` means unquantised precoding and `bits = 0` a continuous RIS.
pub fn wmmse_trace(levels: u32, bits: u32, p_dbm: f64, seed: u32) -> Result<String, String> {
    if !(-30.0..=60.0).contains(&p_dbm) {
        return Err(format!("power {p_dbm} dBm is outside [-30, 60]"));
    }
    if bits > 4 {
        return Err("at most 4 RIS bits in the demo".to_string());
    }
    let scene = SceneConfig::desk();
    let chs = draw_channels_seeded(&scene, u64::from(seed)).map_err(|e| e.to_string())?;
    let power = dbm_to_watts(p_dbm);
    let precoder = match levels {
        0 => PrecoderMode::Infinite,
        l => {
            let var = power / (2.0 * (scene.bs_antennas * scene.users) as f64);
            PrecoderMode::Quantized(QuantizerSpec::optimal(l as usize, var).map_err(|e| e.to_string())?)
        }
    };
    let codebook = match bits {
        0 => RisCodebook::Continuous,
        b => RisCodebook::Discrete { bits: b },
    };
    let inputs = |method| EngineInputs {
        channels: &chs,
        noise: scene.noise_power_w(),
        power,
        precoder: precoder.clone(),
        codebook,
        config: EngineConfig { eta: 2, ..EngineConfig::default() },
        method,
        target: BenchmarkTarget::Both,
        seed: u64::from(seed),
    };
    let out = run(&inputs(Method::Sesd)).map_err(|e| e.to_string())?;
    let random = run(&inputs(Method::RandomRis)).map_err(|e| e.to_string())?;
    let report = TraceReport {
        trace: out
            .trace
            .iter()
            .map(|r| TracePoint { iteration: r.iteration, f: r.f, sum_rate: r.sum_rate, power: r.power })
            .collect(),
        sum_rate: out.report.sum_rate,
        random_ris_sum_rate: random.report.sum_rate,
        power_budget: power,
        total_power: out.report.total_power,
        converged: out.converged,
    };
    Ok(serde_json::to_string(&report).expect("report serialises"))
}

#[derive(Serialize)]
struct QuantizerReport {
    optimal_step: f64,
    labels: Vec<f64>,
    thresholds: Vec<f64>,
    steps: Vec<f64>,
    distortion: Vec<f64>,
    input: Vec<f64>,
    output: Vec<f64>,
}

/// Distortion against step size for unit-variance Gaussian input, and the
/// transfer characteristic at the optimal step.
pub fn quantizer_curve(levels: u32) -> Result<String, String> {
    let levels = levels as usize;
    if !(2..=64).contains(&levels) {
        return Err(format!("levels must lie in [2, 64], got {levels}"));
    }
    let step = optimal_step_size(levels, 1.0).map_err(|e| e.to_string())?;
    let q = QuantizerSpec::new(levels, step).map_err(|e| e.to_string())?;
    let steps: Vec<f64> = (1..=200).map(|i| step * 2.5 * i as f64 / 200.0).collect();
    let distortion = steps.iter().map(|&s| gaussian_distortion(levels, s)).collect();
    let span = 0.75 * levels as f64 * step;
    let input: Vec<f64> = (0..=400).map(|i| -span + 2.0 * span * i as f64 / 400.0).collect();
    let output = input.iter().map(|&x| q.quantize_real(x).expect("finite input")).collect();
    let report = QuantizerReport {
        optimal_step: step,
        labels: q.labels().to_vec(),
        thresholds: q.thresholds()[1..levels].to_vec(),
        steps,
        distortion,
        input,
        output,
    };
    Ok(serde_json::to_string(&report).expect("report serialises"))
}

#[wasm_bindgen(js_name = solveFixture)]
pub fn solve_fixture_js(text: &str) -> Result<String, JsValue> {
    solve_fixture(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = wmmseTrace)]
pub fn wmmse_trace_js(levels: u32, bits: u32, p_dbm: f64, seed: u32) -> Result<String, JsValue> {
    wmmse_trace(levels, bits, p_dbm, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = quantizerCurve)]
pub fn quantizer_curve_js(levels: u32) -> Result<String, JsValue> {
    quantizer_curve(levels).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = exampleFixture)]
pub fn example_fixture() -> String {
    ris_sesd::exp::EXAMPLE1_FIXTURE.to_string()
}
