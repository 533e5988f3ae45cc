//! Mixed-integer least squares over finite alphabets.
//!
//! Every solver here minimises `‖d − R x‖²` where each entry of `x` is drawn
//! from a [`LabelSet`]. The exact solvers ([`sesd`], [`brute_force_mils`])
//! return a global minimiser; [`block_sesd`] trades optimality for a search
//! that is exponential only in the block size.
//!
//! The same code serves real alphabets (fronthaul quantisation labels, after
//! real/imaginary stacking) and unit-modulus complex alphabets (discrete RIS
//! reflection coefficients) through the [`Field`] trait.

mod block;
mod brute;
mod labels;
mod regularize;
mod sesd;

pub use block::{block_sesd, block_sesd_from};
pub use brute::{brute_force_mils, brute_force_mils_with_cap, DEFAULT_BRUTE_FORCE_CAP};
pub use labels::{ComplexLabels, LabelSet, RealLabels};
pub use regularize::{regularize_and_factor, AlphaPolicy, FactoredSystem};
pub use sesd::{sesd, sesd_complex, sesd_from, sesd_real, SesdOptions, DEFAULT_NODE_CAP};

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Scalar type a MILS problem can be posed over.
pub trait Field:
    nalgebra::Scalar
    + Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self;
    fn abs_sq(self) -> f64;
}

impl Field for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self * self
    }
}

impl Field for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MilsError {
    /// Matrix and vector shapes do not agree.
    DimensionMismatch { expected: usize, found: usize },
    /// `R` is not square.
    NotSquare { rows: usize, cols: usize },
    /// An entry below the diagonal of a triangular system is nonzero.
    NotUpperTriangular { row: usize, col: usize },
    /// The diagonal entry at `level` is zero, enumeration is undefined there.
    ZeroDiagonal { level: usize },
    EmptyLabelSet,
    DuplicateLabel { index: usize },
    NotUnitModulus { index: usize, modulus: f64 },
    NonFiniteInput,
    /// A warm-start point has the wrong length or an out-of-range label index.
    InvalidIncumbent,
    /// Block count does not divide the problem dimension.
    BlockSizeMismatch { n: usize, eta: usize },
    /// Exhaustive enumeration would exceed the configured point budget.
    BruteForceCapExceeded { points: f64, cap: u64 },
    /// The node budget ran out before any full candidate was reached.
    BudgetExhausted { nodes: u64 },
    NotHermitian { deviation: f64 },
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    /// Cholesky failed even after regularisation.
    FactorizationFailed { level: usize, pivot: f64 },
}

impl std::error::Error for MilsError {}

impl fmt::Display for MilsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Self::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Self::NotUpperTriangular { row, col } => {
                write!(f, "entry ({row}, {col}) below the diagonal is nonzero")
            }
            Self::ZeroDiagonal { level } => write!(f, "zero diagonal entry at level {level}"),
            Self::EmptyLabelSet => write!(f, "label set is empty"),
            Self::DuplicateLabel { index } => write!(f, "label {index} duplicates an earlier label"),
            Self::NotUnitModulus { index, modulus } => {
                write!(f, "label {index} has modulus {modulus}, expected 1")
            }
            Self::NonFiniteInput => write!(f, "input contains NaN or infinite values"),
            Self::InvalidIncumbent => write!(f, "warm-start point does not match the system or label set"),
            Self::BlockSizeMismatch { n, eta } => {
                write!(f, "block count {eta} does not divide dimension {n}")
            }
            Self::BruteForceCapExceeded { points, cap } => {
                write!(f, "exhaustive search over {points} points exceeds cap {cap}")
            }
            Self::BudgetExhausted { nodes } => {
                write!(f, "node budget exhausted after {nodes} nodes without a candidate")
            }
            Self::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (max deviation {deviation:e})")
            }
            Self::NotPositiveSemidefinite { min_eigenvalue } => {
                write!(f, "matrix is not PSD (min eigenvalue {min_eigenvalue:e})")
            }
            Self::FactorizationFailed { level, pivot } => {
                write!(f, "Cholesky failed at level {level}, smallest pivot {pivot:e}")
            }
        }
    }
}

/// An `n×n` upper-triangular system `(R, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularSystem<T: Field> {
    r: DMatrix<T>,
    d: DVector<T>,
}

impl<T: Field> TriangularSystem<T> {
    /// Checks shape and that everything below the diagonal is exactly zero.
    ///
    /// Nonzero diagonal entries are checked by the solvers so that the error
    /// can name the failing level.
    pub fn new(r: DMatrix<T>, d: DVector<T>) -> Result<Self, MilsError> {
        if r.nrows() != r.ncols() {
            return Err(MilsError::NotSquare { rows: r.nrows(), cols: r.ncols() });
        }
        if d.len() != r.nrows() {
            return Err(MilsError::DimensionMismatch { expected: r.nrows(), found: d.len() });
        }
        let zero = T::zero();
        for j in 0..r.ncols() {
            for i in (j + 1)..r.nrows() {
                if r[(i, j)] != zero {
                    return Err(MilsError::NotUpperTriangular { row: i, col: j });
                }
            }
        }
        if r.iter().chain(d.iter()).any(|v| !v.abs_sq().is_finite()) {
            return Err(MilsError::NonFiniteInput);
        }
        Ok(Self { r, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }

    pub fn d(&self) -> &DVector<T> {
        &self.d
    }

    pub(crate) fn check_diagonal(&self) -> Result<(), MilsError> {
        let zero = T::zero();
        for m in 0..self.dim() {
            if self.r[(m, m)] == zero {
                return Err(MilsError::ZeroDiagonal { level: m });
            }
        }
        Ok(())
    }

    /// `‖d − R x‖²` evaluated directly.
    pub fn residual_sq(&self, x: &[T]) -> f64 {
        residual_sq(&self.r, &self.d, x)
    }

    /// The square sub-system on rows and columns `start..end`, with the
    /// target shifted by the already fixed entries `fixed = x[end..]`.
    pub(crate) fn sub_system(&self, start: usize, end: usize, fixed: &[T]) -> Self {
        let n = self.dim();
        debug_assert_eq!(fixed.len(), n - end);
        let size = end - start;
        let r = self.r.view((start, start), (size, size)).into_owned();
        let d = DVector::from_fn(size, |i, _| {
            let row = start + i;
            let mut acc = self.d[row];
            for (j, &x) in fixed.iter().enumerate() {
                acc = acc - self.r[(row, end + j)] * x;
            }
            acc
        });
        Self { r, d }
    }
}

/// `‖d − R x‖²` for a general square `R`.
pub fn residual_sq<T: Field>(r: &DMatrix<T>, d: &DVector<T>, x: &[T]) -> f64 {
    let mut total = 0.0;
    for i in 0..d.len() {
        let mut acc = d[i];
        for (j, &xj) in x.iter().enumerate() {
            acc = acc - r[(i, j)] * xj;
        }
        total += acc.abs_sq();
    }
    total
}

/// Result of a MILS solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome<T: Field> {
    pub x: Vec<T>,
    /// Index of each entry of `x` in the label set.
    pub label_indices: Vec<usize>,
    pub residual_sq: f64,
    pub nodes_visited: u64,
    /// Set when the node budget ran out; `x` is then the best incumbent.
    pub budget_exhausted: bool,
    /// Every improving full candidate in discovery order, when requested.
    pub incumbent_trace: Option<Vec<(Vec<T>, f64)>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonzero_below_diagonal() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 1.0]);
        let d = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(
            TriangularSystem::new(r, d),
            Err(MilsError::NotUpperTriangular { row: 1, col: 0 })
        );
    }

    #[test]
    fn rejects_shape_mismatch() {
        let r = DMatrix::<f64>::identity(3, 3);
        let d = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(
            TriangularSystem::new(r, d),
            Err(MilsError::DimensionMismatch { expected: 3, found: 2 })
        );
        let r = DMatrix::<f64>::zeros(2, 3);
        let d = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(TriangularSystem::new(r, d), Err(MilsError::NotSquare { .. })));
    }

    #[test]
    fn sub_system_shifts_target() {
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 0.0, 4.0, 5.0, 0.0, 0.0, 6.0]);
        let d = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let sys = TriangularSystem::new(r, d).unwrap();
        let sub = sys.sub_system(0, 2, &[2.0]);
        assert_eq!(sub.d().as_slice(), &[1.0 - 6.0, 1.0 - 10.0]);
        assert_eq!(sub.r()[(0, 1)], 2.0);
    }
}
