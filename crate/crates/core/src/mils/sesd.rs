//! Schnorr-Euchner depth-first enumeration.
//!
//! Levels are processed from the last row of `R` upward. At each level the
//! candidate labels are visited in increasing order of their contribution to
//! the partial distance, so the first leaf reached is the successive
//! interference cancellation (Babai) point, and a child whose partial
//! distance fails the radius test ends the level: all later children are at
//! least as far.

use num_complex::Complex64;

use super::{ComplexLabels, Field, LabelSet, MilsError, RealLabels, SolverOutcome, TriangularSystem};

/// Default bound on visited nodes before the search gives up.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesdOptions {
    pub node_cap: u64,
    /// Record every improving leaf.
    pub record_trace: bool,
}

impl Default for SesdOptions {
    fn default() -> Self {
        Self { node_cap: DEFAULT_NODE_CAP, record_trace: false }
    }
}

/// Real-alphabet SESD.
pub fn sesd_real(
    sys: &TriangularSystem<f64>,
    labels: &RealLabels,
    opts: SesdOptions,
) -> Result<SolverOutcome<f64>, MilsError> {
    sesd(sys, labels, opts)
}

/// Unit-modulus complex SESD: the search runs over points of the unit
/// circle instead of a line.
pub fn sesd_complex(
    sys: &TriangularSystem<Complex64>,
    labels: &ComplexLabels,
    opts: SesdOptions,
) -> Result<SolverOutcome<Complex64>, MilsError> {
    sesd(sys, labels, opts)
}

/// Exact minimiser of `‖d − R x‖²` over `labels^n`.
pub fn sesd<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    search(sys, labels, None, opts)
}

/// SESD with the search radius initialised to the residual of a known
/// point, given as label indices. Returns that point unless a strictly
/// better one exists; the minimum is the same as [`sesd`], usually with far
/// fewer nodes.
pub fn sesd_from<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    incumbent: &[usize],
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    if incumbent.len() != sys.dim() || incumbent.iter().any(|&i| i >= labels.len()) {
        return Err(MilsError::InvalidIncumbent);
    }
    search(sys, labels, Some(incumbent), opts)
}

fn search<T: Field>(
    sys: &TriangularSystem<T>,
    labels: &LabelSet<T>,
    incumbent: Option<&[usize]>,
    opts: SesdOptions,
) -> Result<SolverOutcome<T>, MilsError> {
    sys.check_diagonal()?;
    let n = sys.dim();
    let alphabet = labels.values();
    let q = alphabet.len();
    if n == 0 {
        return Ok(SolverOutcome {
            x: Vec::new(),
            label_indices: Vec::new(),
            residual_sq: 0.0,
            nodes_visited: 0,
            budget_exhausted: false,
            incumbent_trace: opts.record_trace.then(Vec::new),
        });
    }
    let r = sys.r();
    let d = sys.d();

    let mut current = vec![T::zero(); n];
    let mut current_idx = vec![0usize; n];
    let mut best_idx: Option<Vec<usize>> = incumbent.map(<[usize]>::to_vec);
    let mut best_radius = match incumbent {
        Some(idx) => sys.residual_sq(&idx.iter().map(|&i| alphabet[i]).collect::<Vec<_>>()),
        None => f64::INFINITY,
    };
    // partial[m] is the distance accumulated over levels m..n; partial[n] = 0.
    let mut partial = vec![0.0f64; n + 1];
    let mut order = vec![0usize; n * q];
    let mut dist = vec![0.0f64; n * q];
    let mut next = vec![0usize; n];
    let mut trace = opts.record_trace.then(Vec::new);
    let mut nodes: u64 = 0;
    let mut exhausted = false;

    let expand = |m: usize, current: &[T], order: &mut [usize], dist: &mut [f64]| {
        let mut xi = d[m];
        for j in (m + 1)..n {
            xi = xi - r[(m, j)] * current[j];
        }
        let rmm = r[(m, m)];
        let dist = &mut dist[m * q..(m + 1) * q];
        for (slot, &l) in dist.iter_mut().zip(alphabet) {
            *slot = (xi - rmm * l).abs_sq();
        }
        let order = &mut order[m * q..(m + 1) * q];
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        // stable: equal distances keep label order
        order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    };

    let mut m = n - 1;
    expand(m, &current, &mut order, &mut dist);
    next[m] = 0;

    loop {
        if next[m] < q {
            if nodes >= opts.node_cap {
                exhausted = true;
                break;
            }
            let li = order[m * q + next[m]];
            next[m] += 1;
            nodes += 1;
            let radius = partial[m + 1] + dist[m * q + li];
            if radius < best_radius {
                current[m] = alphabet[li];
                current_idx[m] = li;
                if m == 0 {
                    best_radius = radius;
                    best_idx = Some(current_idx.clone());
                    if let Some(t) = trace.as_mut() {
                        t.push((current.clone(), radius));
                    }
                    // later siblings are no closer
                    next[0] = q;
                } else {
                    partial[m] = radius;
                    m -= 1;
                    expand(m, &current, &mut order, &mut dist);
                    next[m] = 0;
                }
                continue;
            }
            next[m] = q;
        }
        if m == n - 1 {
            break;
        }
        m += 1;
    }

    let label_indices = best_idx.ok_or(MilsError::BudgetExhausted { nodes })?;
    let x: Vec<T> = label_indices.iter().map(|&i| alphabet[i]).collect();
    let residual_sq = sys.residual_sq(&x);
    Ok(SolverOutcome {
        x,
        label_indices,
        residual_sq,
        nodes_visited: nodes,
        budget_exhausted: exhausted,
        incumbent_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn example_one() -> (TriangularSystem<f64>, RealLabels) {
        let r = DMatrix::from_row_slice(
            4,
            4,
            &[16.0, 2.0, 3.0, 13.0, 0.0, 11.0, 10.0, 8.0, 0.0, 0.0, 6.0, 12.0, 0.0, 0.0, 0.0, 1.0],
        );
        let d = DVector::from_vec(vec![2.0, 3.0, 1.0, 3.0]);
        (TriangularSystem::new(r, d).unwrap(), RealLabels::real(vec![-1.0, 1.0, 2.0]).unwrap())
    }

    #[test]
    fn example_one_optimum_and_incumbents() {
        let (sys, labels) = example_one();
        let out = sesd_real(&sys, &labels, SesdOptions { record_trace: true, ..Default::default() })
            .unwrap();
        assert_eq!(out.x, vec![1.0, -1.0, 2.0, -1.0]);
        assert_eq!(out.residual_sq, 46.0);
        let trace = out.incumbent_trace.unwrap();
        assert_eq!(trace[0], (vec![-1.0, -1.0, -1.0, 2.0], 363.0));
        assert_eq!(trace[1], (vec![-1.0, 1.0, -1.0, 1.0], 101.0));
        assert_eq!(trace.last().unwrap().1, 46.0);
        assert!(trace.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn identity_returns_target_when_on_alphabet() {
        let sys = TriangularSystem::new(
            DMatrix::identity(4, 4),
            DVector::from_vec(vec![1.0, 2.0, -1.0, 1.0]),
        )
        .unwrap();
        let labels = RealLabels::real(vec![-1.0, 1.0, 2.0]).unwrap();
        let out = sesd_real(&sys, &labels, SesdOptions::default()).unwrap();
        assert_eq!(out.x, vec![1.0, 2.0, -1.0, 1.0]);
        assert_eq!(out.residual_sq, 0.0);
    }

    #[test]
    fn zero_diagonal_names_level() {
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
        let sys = TriangularSystem::new(r, DVector::from_vec(vec![1.0, 1.0, 1.0])).unwrap();
        let labels = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        assert_eq!(
            sesd_real(&sys, &labels, SesdOptions::default()),
            Err(MilsError::ZeroDiagonal { level: 1 })
        );
    }

    #[test]
    fn single_level_complex_sign() {
        let labels = ComplexLabels::phase_set(1).unwrap();
        for t in [0.3, -0.7, 0.0, 2.5] {
            let sys = TriangularSystem::new(
                DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
                DVector::from_element(1, Complex64::new(t, 0.4)),
            )
            .unwrap();
            let out = sesd_complex(&sys, &labels, SesdOptions::default()).unwrap();
            let expected = if t >= 0.0 { 1.0 } else { -1.0 };
            assert_eq!(out.x, vec![Complex64::new(expected, 0.0)]);
        }
    }

    #[test]
    fn symmetric_tie_goes_to_lower_index() {
        let labels = ComplexLabels::phase_set(2).unwrap();
        let sys = TriangularSystem::new(
            DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
            DVector::from_element(1, Complex64::new(1.0, 1.0)),
        )
        .unwrap();
        let out = sesd_complex(&sys, &labels, SesdOptions::default()).unwrap();
        assert_eq!(out.x, vec![Complex64::new(1.0, 0.0)]);
        assert!((out.residual_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn node_cap_returns_incumbent_flagged() {
        let (sys, labels) = example_one();
        let out = sesd_real(&sys, &labels, SesdOptions { node_cap: 5, record_trace: false }).unwrap();
        assert!(out.budget_exhausted);
        assert_eq!(out.nodes_visited, 5);
        assert_eq!(out.x, vec![-1.0, -1.0, -1.0, 2.0]);
        assert_eq!(
            sesd_real(&sys, &labels, SesdOptions { node_cap: 2, record_trace: false }),
            Err(MilsError::BudgetExhausted { nodes: 2 })
        );
    }
}
