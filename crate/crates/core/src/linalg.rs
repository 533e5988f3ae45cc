//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Upper-triangular `R` with `A = Rᴴ R` and a positive real diagonal.
///
/// On failure returns the level and the offending pivot. A pivot counts as
/// failed when it is not above `rel_tol` times the largest diagonal entry.
pub(crate) fn cholesky_upper(a: &CMatrix, rel_tol: f64) -> Result<CMatrix, (usize, f64)> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    let floor = rel_tol * scale;
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= r[(k, j)].norm_sqr();
        }
        if !(pivot > floor) || !pivot.is_finite() {
            return Err((j, pivot));
        }
        let rjj = pivot.sqrt();
        r[(j, j)] = Complex64::new(rjj, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[(j, i)];
            for k in 0..j {
                acc -= r[(k, j)].conj() * r[(k, i)];
            }
            r[(j, i)] = acc / rjj;
        }
    }
    Ok(r)
}

/// Solves `Rᴴ y = t` for upper-triangular `R`.
pub(crate) fn solve_upper_adjoint(r: &CMatrix, t: &CVector) -> CVector {
    let n = r.nrows();
    let mut y = CVector::zeros(n);
    for i in 0..n {
        let mut acc = t[i];
        for k in 0..i {
            acc -= r[(k, i)].conj() * y[k];
        }
        y[i] = acc / r[(i, i)].conj();
    }
    y
}

/// Largest `|A_ij − conj(A_ji)|`.
pub(crate) fn hermitian_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Real `2n×2n` embedding `[[Re R, −Im R], [Im R, Re R]]`.
pub(crate) fn real_embedding(r: &CMatrix) -> DMatrix<f64> {
    let (rows, cols) = r.shape();
    DMatrix::from_fn(2 * rows, 2 * cols, |i, j| {
        let v = r[(i % rows, j % cols)];
        match (i < rows, j < cols) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

/// `[Re v; Im v]`.
#[cfg(test)]
pub(crate) fn stack_real(v: &CVector) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`stack_real`].
pub(crate) fn unstack_real(v: &[f64]) -> CVector {
    let n = v.len() / 2;
    CVector::from_fn(n, |i, _| Complex64::new(v[i], v[n + i]))
}
