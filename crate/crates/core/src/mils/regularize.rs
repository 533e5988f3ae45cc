use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{MilsError, TriangularSystem};
use crate::linalg::{cholesky_upper, hermitian_deviation, max_abs, solve_upper_adjoint, CMatrix, CVector};

const HERMITIAN_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
const PIVOT_REL_TOL: f64 = 1e-13;

/// How the diagonal load `α` is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    /// `α = max(scale · trace(A)/n, ε · trace(A))`.
    TraceScaled(f64),
    Fixed(f64),
}

impl Default for AlphaPolicy {
    fn default() -> Self {
        AlphaPolicy::TraceScaled(1e-3)
    }
}

impl AlphaPolicy {
    pub fn alpha(&self, a: &CMatrix) -> f64 {
        match *self {
            AlphaPolicy::Fixed(alpha) => alpha,
            AlphaPolicy::TraceScaled(scale) => {
                let n = a.nrows().max(1) as f64;
                let trace: f64 = a.diagonal().iter().map(|v| v.re).sum();
                if trace > 0.0 {
                    (scale * trace / n).max(f64::EPSILON * trace)
                } else {
                    // A = 0: any positive load leaves the argmin unchanged
                    1.0
                }
            }
        }
    }
}

/// `(R̃, d̃)` together with the load that produced them.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    pub system: TriangularSystem<Complex64>,
    pub alpha: f64,
}

/// Rewrites `θᴴAθ − 2Re(tᴴθ)` as `‖d̃ − R̃θ‖²` up to a constant.
///
/// `A + αI = R̃ᴴR̃` and `d̃ = R̃⁻ᴴ t`. On unit-modulus alphabets `θᴴθ = n`, so
/// the load shifts the objective by the constant `αn` and the minimiser is
/// unaffected, while a rank-deficient `A` gets strictly positive pivots.
pub fn regularize_and_factor(
    a: &CMatrix,
    t: &CVector,
    policy: AlphaPolicy,
) -> Result<FactoredSystem, MilsError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(MilsError::NotSquare { rows: n, cols: a.ncols() });
    }
    if t.len() != n {
        return Err(MilsError::DimensionMismatch { expected: n, found: t.len() });
    }
    if a.iter().chain(t.iter()).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(MilsError::NonFiniteInput);
    }
    let scale = max_abs(a);
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(MilsError::NotHermitian { deviation });
    }
    if n > 0 && scale > 0.0 {
        let hermitian = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eigenvalue = SymmetricEigen::new(hermitian).eigenvalues.min();
        if min_eigenvalue < -PSD_TOL * scale {
            return Err(MilsError::NotPositiveSemidefinite { min_eigenvalue });
        }
    }

    let alpha = policy.alpha(a);
    let mut loaded = a.clone();
    for i in 0..n {
        loaded[(i, i)] += Complex64::new(alpha, 0.0);
    }
    let r = cholesky_upper(&loaded, PIVOT_REL_TOL)
        .map_err(|(level, pivot)| MilsError::FactorizationFailed { level, pivot })?;
    let d = solve_upper_adjoint(&r, t);
    Ok(FactoredSystem { system: TriangularSystem::new(r, d)?, alpha })
}
