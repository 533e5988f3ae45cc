use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::linalg::{CMatrix, CVector};

/// `f_k = F_kᵀθ = Hᵀ(g_k ∘ θ)` for every user, so that `θᵀF_k w = f_kᵀw`.
pub fn effective_channels(chs: &ChannelSet, theta: &CVector) -> Vec<CVector> {
    let ht = chs.h.transpose();
    (0..chs.users())
        .map(|k| {
            let gt = CVector::from_fn(theta.len(), |n, _| chs.g[(k, n)] * theta[n]);
            &ht * gt
        })
        .collect()
}

fn dot_t(f: &CVector, w: nalgebra::DVectorView<'_, Complex64>) -> Complex64 {
    f.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
}

/// MSE of user `k` for receiver gain `beta_k`:
/// `|β|²(Σ_i |f_kᵀw_i|² + N₀) − 2Re(β f_kᵀw_k) + 1`.
pub fn compute_mse(k: usize, w: &CMatrix, f: &[CVector], beta_k: Complex64, noise: f64) -> f64 {
    let total: f64 = (0..w.ncols()).map(|i| dot_t(&f[k], w.column(i)).norm_sqr()).sum::<f64>() + noise;
    let s = dot_t(&f[k], w.column(k));
    beta_k.norm_sqr() * total - 2.0 * (beta_k * s).re + 1.0
}

/// MSE-minimising gains `β_k = (f_kᵀw_k)* / (Σ_i |f_kᵀw_i|² + N₀)`.
pub fn optimal_receiver_gains(w: &CMatrix, f: &[CVector], noise: f64) -> Vec<Complex64> {
    (0..f.len())
        .map(|k| {
            let total: f64 = (0..w.ncols()).map(|i| dot_t(&f[k], w.column(i)).norm_sqr()).sum::<f64>() + noise;
            dot_t(&f[k], w.column(k)).conj() / total
        })
        .collect()
}

/// `c_k = 1 / (ln 2 · e_k)`.
pub fn optimal_weights(e: &[f64]) -> Vec<f64> {
    e.iter().map(|ek| 1.0 / (LN_2 * ek)).collect()
}

/// `Σ_k c_k e_k − log₂ c_k`.
pub fn objective(c: &[f64], e: &[f64]) -> f64 {
    c.iter().zip(e).map(|(ck, ek)| ck * ek - ck.log2()).sum()
}
