//! The four-dimensional worked example, read from a small text fixture.
//!
//! Fixture format: whitespace-separated numbers, `#` starts a comment. First
//! the dimension `n`, then the `n` rows of `R`, then the `n` entries of `d`,
//! then the label alphabet (all remaining numbers).

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::mils::{brute_force_mils, sesd_real, MilsError, RealLabels, SesdOptions, TriangularSystem};

pub const EXAMPLE1_FIXTURE: &str = include_str!("../../fixtures/example1.txt");

const EXPECTED_X: [f64; 4] = [1.0, -1.0, 2.0, -1.0];
const EXPECTED_RESIDUAL: f64 = 46.0;

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureError {
    BadNumber { line: usize, token: String },
    TooShort { needed: usize, found: usize },
    Mils(MilsError),
}

impl std::error::Error for FixtureError {}

impl fmt::Display for FixtureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadNumber { line, token } => write!(f, "line {line}: \"{token}\" is not a number"),
            Self::TooShort { needed, found } => write!(f, "fixture needs at least {needed} numbers, found {found}"),
            Self::Mils(e) => write!(f, "{e}"),
        }
    }
}

impl From<MilsError> for FixtureError {
    fn from(e: MilsError) -> Self {
        Self::Mils(e)
    }
}

pub fn parse_fixture(text: &str) -> Result<(TriangularSystem<f64>, RealLabels), FixtureError> {
    let mut nums = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| FixtureError::BadNumber { line: i + 1, token: tok.to_string() })?;
            nums.push(v);
        }
    }
    let n = match nums.first() {
        Some(&v) if v >= 1.0 && v.fract() == 0.0 => v as usize,
        _ => return Err(FixtureError::TooShort { needed: 1, found: nums.len() }),
    };
    let needed = 1 + n * n + n + 1;
    if nums.len() < needed {
        return Err(FixtureError::TooShort { needed, found: nums.len() });
    }
    let r = DMatrix::from_row_slice(n, n, &nums[1..1 + n * n]);
    let d = DVector::from_column_slice(&nums[1 + n * n..1 + n * n + n]);
    let labels = RealLabels::real(nums[1 + n * n + n..].to_vec())?;
    Ok((TriangularSystem::new(r, d)?, labels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Report {
    pub x: Vec<f64>,
    pub residual: f64,
    pub expected_x: Vec<f64>,
    pub expected_residual: f64,
    pub brute_force_residual: f64,
    /// Improving leaves in the order found.
    pub incumbents: Vec<(Vec<f64>, f64)>,
    pub nodes_visited: u64,
}

impl Example1Report {
    pub fn pass(&self) -> bool {
        self.x == self.expected_x
            && (self.residual - self.expected_residual).abs() <= 1e-9
            && self.brute_force_residual == self.residual
    }

    /// Human-readable differences from the expected result; empty on pass.
    pub fn diff(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.x != self.expected_x {
            out.push(format!("x: expected {:?}, got {:?}", self.expected_x, self.x));
        }
        if (self.residual - self.expected_residual).abs() > 1e-9 {
            out.push(format!("residual: expected {}, got {}", self.expected_residual, self.residual));
        }
        if self.brute_force_residual != self.residual {
            out.push(format!("brute force found {}, SESD {}", self.brute_force_residual, self.residual));
        }
        out
    }
}

/// Solves the fixture with SESD and brute force and compares against the
/// known optimum `x = [1, −1, 2, −1]`, residual 46.
pub fn run_example1(fixture: &str) -> Result<Example1Report, FixtureError> {
    let (sys, labels) = parse_fixture(fixture)?;
    let out = sesd_real(&sys, &labels, SesdOptions { record_trace: true, ..Default::default() })?;
    let brute = brute_force_mils(sys.r(), sys.d(), &labels)?;
    Ok(Example1Report {
        x: out.x,
        residual: out.residual_sq,
        expected_x: EXPECTED_X.to_vec(),
        expected_residual: EXPECTED_RESIDUAL,
        brute_force_residual: brute.residual_sq,
        incumbents: out.incumbent_trace.unwrap_or_default(),
        nodes_visited: out.nodes_visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixture_passes() {
        let rep = run_example1(EXAMPLE1_FIXTURE).unwrap();
        assert!(rep.pass(), "{:?}", rep.diff());
        assert!(rep.diff().is_empty());
        assert_eq!(rep.incumbents.len(), 3);
    }

    #[test]
    fn corrupted_target_fails_with_diff() {
        let bad = EXAMPLE1_FIXTURE.replace("2 3 1 3", "2 3 1 30");
        let rep = run_example1(&bad).unwrap();
        assert!(!rep.pass());
        assert!(!rep.diff().is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_fixture("2\n1 0\n0 1\n1"), Err(FixtureError::TooShort { .. })));
        assert!(matches!(parse_fixture("1\nx"), Err(FixtureError::BadNumber { line: 2, .. })));
        assert!(matches!(parse_fixture("2\n1 1\n1 1\n0 0\n1"), Err(FixtureError::Mils(_))));
    }
}
