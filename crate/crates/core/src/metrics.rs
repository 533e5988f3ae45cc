//! SINR, rate and power accounting.
//!
//! The effective channel of UE `k` is `θᵀF_k` with `F_k = diag(g_k)H`; it is
//! formed here from the cascade directly so that these figures can be
//! cross-checked against the engine's own bookkeeping.

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelSet;
use crate::linalg::{CMatrix, CVector};

/// Gains `θᵀF_k w_i` for all `(k, i)`.
pub fn link_gains(w: &CMatrix, theta: &CVector, chs: &ChannelSet) -> CMatrix {
    let k_users = chs.users();
    let mut gains = CMatrix::zeros(k_users, w.ncols());
    for k in 0..k_users {
        let row = theta.transpose() * chs.cascade(k);
        for i in 0..w.ncols() {
            gains[(k, i)] = (&row * w.column(i))[(0, 0)];
        }
    }
    gains
}

fn sinr_from_gains(gains: &CMatrix, k: usize, noise: f64) -> f64 {
    let signal = gains[(k, k)].norm_sqr();
    let interference: f64 = (0..gains.ncols()).filter(|&i| i != k).map(|i| gains[(k, i)].norm_sqr()).sum();
    signal / (interference + noise)
}

pub fn sinr_k(k: usize, w: &CMatrix, theta: &CVector, chs: &ChannelSet, noise: f64) -> f64 {
    sinr_from_gains(&link_gains(w, theta, chs), k, noise)
}

pub fn sum_rate(w: &CMatrix, theta: &CVector, chs: &ChannelSet, noise: f64) -> f64 {
    RateReport::new(w, theta, chs, noise, f64::INFINITY).sum_rate
}

/// `Σ_k ‖w_k‖²`.
pub fn total_power(w: &CMatrix) -> f64 {
    w.iter().map(Complex64::norm_sqr).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    /// Bits/s/Hz.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub total_power: f64,
    /// `total_power ≤ budget·(1 + 1e−6)`.
    pub power_feasible: bool,
}

impl RateReport {
    pub fn new(w: &CMatrix, theta: &CVector, chs: &ChannelSet, noise: f64, power_budget: f64) -> Self {
        let gains = link_gains(w, theta, chs);
        let sinr: Vec<f64> = (0..chs.users()).map(|k| sinr_from_gains(&gains, k, noise)).collect();
        let rates: Vec<f64> = sinr.iter().map(|s| s.ln_1p() / std::f64::consts::LN_2).collect();
        let sum_rate = rates.iter().sum();
        let total_power = total_power(w);
        Self { sinr, rates, sum_rate, total_power, power_feasible: total_power <= power_budget * (1.0 + 1e-6) }
    }
}
