use super::{sesd, sesd_from, Field, LabelSet, MilsError, SesdOptions, SolverOutcome, TriangularSystem};

/// Sequential block heuristic.
///
/// The `n` variables are split into `eta` contiguous blocks of `n / eta`.
/// The last block is solved exactly on its own diagonal sub-system; every
/// earlier block is then solved exactly with the target reduced by the
/// contribution of the blocks already fixed below it. `eta = 1` is plain
/// SESD.
pub fn block_sesd<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    eta: usize,
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    blocks(sys, labels, eta, None, opts)
}

/// [`block_sesd`] with every block search warm-started from the matching
/// block of `incumbent` (label indices), so each block returns a point no
/// worse than the incumbent's block on the same reduced sub-system.
pub fn block_sesd_from<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    eta: usize,
    incumbent: &[usize],
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    if incumbent.len() != sys.dim() || incumbent.iter().any(|&i| i >= labels.len()) {
        return Err(MilsError::InvalidIncumbent);
    }
    blocks(sys, labels, eta, Some(incumbent), opts)
}

fn blocks<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    eta: usize,
    incumbent: Option<&[usize]>,
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    let n = sys.dim();
    if eta == 0 || !n.is_multiple_of(eta) {
        return Err(MilsError::BlockSizeMismatch { n, eta });
    }
    if eta == 1 {
        return match incumbent {
            Some(idx) => sesd_from(sys, labels, idx, opts),
            None => sesd(sys, labels, opts),
        };
    }
    sys.check_diagonal()?;
    let block = n / eta;
    let mut x = vec![T::zero(); n];
    let mut label_indices = vec![0usize; n];
    let mut nodes = 0u64;
    let mut exhausted = false;

    for i in (0..eta).rev() {
        let start = i * block;
        let end = start + block;
        let sub = sys.sub_system(start, end, &x[end..]);
        let remaining = opts.node_cap.saturating_sub(nodes);
        let sub_opts = SesdOptions { node_cap: remaining, record_trace: false };
        let out = match incumbent {
            Some(idx) => sesd_from(&sub, labels, &idx[start..end], sub_opts)?,
            None => sesd(&sub, labels, sub_opts)?,
        };
        nodes += out.nodes_visited;
        exhausted |= out.budget_exhausted;
        x[start..end].copy_from_slice(&out.x);
        label_indices[start..end].copy_from_slice(&out.label_indices);
    }

    let residual_sq = sys.residual_sq(&x);
    Ok(SolverOutcome {
        incumbent_trace: opts.record_trace.then(|| vec![(x.clone(), residual_sq)]),
        x,
        label_indices,
        residual_sq,
        nodes_visited: nodes,
        budget_exhausted: exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mils::RealLabels;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn eta_must_divide() {
        let sys = TriangularSystem::new(DMatrix::<f64>::identity(6, 6), DVector::zeros(6)).unwrap();
        let labels = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        assert_eq!(
            block_sesd(&sys, &labels, 4, SesdOptions::default()),
            Err(MilsError::BlockSizeMismatch { n: 6, eta: 4 })
        );
        assert!(block_sesd(&sys, &labels, 3, SesdOptions::default()).is_ok());
    }

    #[test]
    fn diagonal_system_is_solved_exactly_blockwise() {
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        let d = DVector::from_vec(vec![0.9, -2.2, 2.5, -3.0]);
        let sys = TriangularSystem::new(r, d).unwrap();
        let labels = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        let out = block_sesd(&sys, &labels, 2, SesdOptions::default()).unwrap();
        assert_eq!(out.x, vec![1.0, -1.0, 1.0, -1.0]);
    }
}
