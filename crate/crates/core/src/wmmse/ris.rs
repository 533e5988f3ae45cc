//! RIS update.
//!
//! With `W`, `β` and `c` fixed, `Σ_k c_k e_k` equals `θᴴAθ − 2Re(tᴴθ)` plus
//! terms independent of `θ`, where `u_{k,i} = β_k* F_k* w_i*`,
//! `A = Σ_k c_k Σ_i u_{k,i}u_{k,i}ᴴ` and `t = Σ_k c_k u_{k,k}`.

use num_complex::Complex64;

use super::WmmseError;
use crate::channel::ChannelSet;
use crate::linalg::{CMatrix, CVector};
use crate::mils::{block_sesd, block_sesd_from, regularize_and_factor, AlphaPolicy, ComplexLabels, SesdOptions};

/// `(A, t)` of the RIS quadratic.
pub fn ris_quadratic(w: &CMatrix, beta: &[Complex64], c: &[f64], chs: &ChannelSet) -> (CMatrix, CVector) {
    let n = chs.ris_elements();
    let hw = &chs.h * w;
    let mut a = CMatrix::zeros(n, n);
    let mut t = CVector::zeros(n);
    for k in 0..chs.users() {
        for i in 0..w.ncols() {
            let u = CVector::from_fn(n, |row, _| (beta[k] * chs.g[(k, row)] * hw[(row, i)]).conj());
            a += (&u * u.adjoint()) * Complex64::new(c[k], 0.0);
            if i == k {
                t += u * Complex64::new(c[k], 0.0);
            }
        }
    }
    (a, t)
}

/// `θᴴAθ − 2Re(tᴴθ)`.
pub fn ris_objective(a: &CMatrix, t: &CVector, theta: &CVector) -> f64 {
    (theta.adjoint() * a * theta)[(0, 0)].re - 2.0 * t.dotc(theta).re
}

/// `s_n = Σ_{m≠n} θ_m* A[m, n] − t_n*`; the objective depends on `θ_n` only
/// through `2Re(θ_n s_n)`.
fn coupling(a: &CMatrix, t: &CVector, theta: &CVector, n: usize) -> Complex64 {
    let mut s = -t[n].conj();
    for m in 0..theta.len() {
        if m != n {
            s += theta[m].conj() * a[(m, n)];
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRis {
    pub theta: CVector,
    pub sweeps: usize,
    /// Single-element updates that raised the objective beyond rounding.
    pub increases: usize,
}

/// Element-wise phase alignment `θ_n = e^{j(π − arg s_n)}`, swept over all
/// elements until a sweep moves the objective by less than `tolerance` or
/// `max_sweeps` is reached. A zero `s_n` leaves `θ_n` unchanged.
pub fn ris_continuous(a: &CMatrix, t: &CVector, theta_init: &CVector, max_sweeps: usize, tolerance: f64) -> ContinuousRis {
    let mut theta = theta_init.clone();
    let mut obj = ris_objective(a, t, &theta);
    let mut increases = 0;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        for n in 0..theta.len() {
            let s = coupling(a, t, &theta, n);
            let mag = s.norm();
            if mag == 0.0 {
                continue;
            }
            let old = theta[n];
            theta[n] = -s.conj() / mag;
            let change = 2.0 * ((theta[n] - old) * s).re;
            if change > 1e-12 * (1.0 + obj.abs()) {
                increases += 1;
            }
        }
        let next = ris_objective(a, t, &theta);
        let moved = (obj - next).abs();
        obj = next;
        if moved < tolerance {
            break;
        }
    }
    ContinuousRis { theta, sweeps, increases }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRis {
    pub theta: CVector,
    pub nodes_visited: u64,
    pub budget_exhausted: bool,
    pub alpha: f64,
}

/// Minimiser over `D^N` of the regularised quadratic
/// `θᴴ(A + αI)θ − 2Re(tᴴθ)`, which on unit-modulus vectors differs from the
/// original objective by the constant `αN`. `eta = 1` is exact; larger
/// values use the block heuristic. A `warm` configuration (snapped to
/// `labels`) seeds the search radius of every block.
pub fn ris_discrete(
    a: &CMatrix,
    t: &CVector,
    labels: &ComplexLabels,
    eta: usize,
    alpha: AlphaPolicy,
    warm: Option<&CVector>,
    opts: SesdOptions,
) -> Result<DiscreteRis, WmmseError> {
    let factored = regularize_and_factor(a, t, alpha)?;
    let out = match warm {
        Some(theta) => {
            let idx: Vec<usize> = theta.iter().map(|z| labels.nearest_index(*z)).collect();
            block_sesd_from(&factored.system, labels, eta, &idx, opts)?
        }
        None => block_sesd(&factored.system, labels, eta, opts)?,
    };
    Ok(DiscreteRis {
        theta: CVector::from_vec(out.x),
        nodes_visited: out.nodes_visited,
        budget_exhausted: out.budget_exhausted,
        alpha: factored.alpha,
    })
}

/// Element-wise exhaustive search over `labels` with the other elements
/// fixed; an element moves only if that strictly lowers the objective.
/// Returns the configuration and the number of candidate evaluations.
pub fn ris_coordinate_descent(
    a: &CMatrix,
    t: &CVector,
    theta_init: &CVector,
    labels: &ComplexLabels,
    max_sweeps: usize,
) -> (CVector, u64) {
    let mut theta = theta_init.clone();
    let mut evals = 0;
    for _ in 0..max_sweeps {
        let mut changed = false;
        for n in 0..theta.len() {
            let s = coupling(a, t, &theta, n);
            let mut best = ((theta[n] * s).re, theta[n]);
            for &cand in labels.values() {
                evals += 1;
                let v = (cand * s).re;
                if v < best.0 {
                    best = (v, cand);
                }
            }
            if best.1 != theta[n] {
                theta[n] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (theta, evals)
}

/// Entry-wise nearest point of `labels`.
pub fn nearest_phase(theta: &CVector, labels: &ComplexLabels) -> CVector {
    theta.map(|z| labels.values()[labels.nearest_index(z)])
}
