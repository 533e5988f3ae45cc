use nalgebra::{DMatrix, DVector};

use super::{residual_sq, Field, LabelSet, MilsError, SolverOutcome};

/// Largest number of candidate points [`brute_force_mils`] will enumerate.
pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 1 << 20;

/// Exhaustive minimiser of `‖d − R x‖²` for a general square `R`.
///
/// Candidates are enumerated in odometer order with `x[0]` varying fastest;
/// ties keep the first candidate found.
pub fn brute_force_mils<T: Field>(
    r: &DMatrix<T>,
    d: &DVector<T>,
    labels: &LabelSet<T>,
) -> Result<SolverOutcome<T>, MilsError> {
    brute_force_mils_with_cap(r, d, labels, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_mils_with_cap<T: Field>(
    r: &DMatrix<T>,
    d: &DVector<T>,
    labels: &LabelSet<T>,
    cap: u64,
) -> Result<SolverOutcome<T>, MilsError> {
    let n = d.len();
    if r.nrows() != n || r.ncols() != n {
        return Err(MilsError::DimensionMismatch { expected: n, found: r.nrows() });
    }
    let alphabet = labels.values();
    let q = alphabet.len();
    let points = (q as f64).powi(n as i32);
    if points > cap as f64 {
        return Err(MilsError::BruteForceCapExceeded { points, cap });
    }

    let mut idx = vec![0usize; n];
    let mut x: Vec<T> = vec![alphabet[0]; n];
    // running residual d − R x, updated one column at a time
    let mut res: Vec<T> = (0..n)
        .map(|i| {
            let mut acc = d[i];
            for j in 0..n {
                acc = acc - r[(i, j)] * x[j];
            }
            acc
        })
        .collect();

    let mut best_idx = idx.clone();
    let mut best = residual_sq(r, d, &x);
    let mut visited: u64 = 1;

    'outer: loop {
        // advance the odometer
        let mut pos = 0;
        loop {
            if pos == n {
                break 'outer;
            }
            let old = x[pos];
            if idx[pos] + 1 < q {
                idx[pos] += 1;
            } else {
                idx[pos] = 0;
            }
            let new = alphabet[idx[pos]];
            let delta = new - old;
            x[pos] = new;
            for (i, slot) in res.iter_mut().enumerate() {
                *slot = *slot - r[(i, pos)] * delta;
            }
            if idx[pos] != 0 {
                break;
            }
            pos += 1;
        }
        visited += 1;
        let approx: f64 = res.iter().map(|v| v.abs_sq()).sum();
        // the running value drifts; confirm contenders with a direct evaluation
        if approx < best * (1.0 + 1e-9) + 1e-300 {
            let exact = residual_sq(r, d, &x);
            if exact < best {
                best = exact;
                best_idx.copy_from_slice(&idx);
            }
        }
    }

    let x: Vec<T> = best_idx.iter().map(|&i| alphabet[i]).collect();
    Ok(SolverOutcome {
        x,
        label_indices: best_idx,
        residual_sq: best,
        nodes_visited: visited,
        budget_exhausted: false,
        incumbent_trace: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mils::RealLabels;

    #[test]
    fn identity_rounds_per_coordinate() {
        let labels = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        let out = brute_force_mils(
            &DMatrix::identity(2, 2),
            &DVector::from_vec(vec![0.4, -0.9]),
            &labels,
        )
        .unwrap();
        assert_eq!(out.x, vec![1.0, -1.0]);
        assert_eq!(out.nodes_visited, 4);
    }

    #[test]
    fn singleton_alphabet_is_forced() {
        let labels = RealLabels::real(vec![0.25]).unwrap();
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0]);
        let out = brute_force_mils(&r, &DVector::from_vec(vec![1.0, -2.0, 3.0]), &labels).unwrap();
        assert_eq!(out.x, vec![0.25; 3]);
    }

    #[test]
    fn cap_is_an_error() {
        let labels = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        let err = brute_force_mils_with_cap(
            &DMatrix::identity(5, 5),
            &DVector::zeros(5),
            &labels,
            16,
        );
        assert!(matches!(err, Err(MilsError::BruteForceCapExceeded { cap: 16, .. })));
    }
}
