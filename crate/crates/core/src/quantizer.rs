//! Symmetric uniform fronthaul quantiser.
//!
//! Real and imaginary parts are quantised independently with the same
//! `L`-level mid-rise characteristic. Cells are half-open, `[τ_i, τ_{i+1})`,
//! so an input sitting exactly on a threshold maps to the upper cell.

use std::fmt;

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::mils::RealLabels;

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerError {
    TooFewLevels(usize),
    InvalidStep(f64),
    InvalidVariance(f64),
    NanInput,
}

impl std::error::Error for QuantizerError {}

impl fmt::Display for QuantizerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewLevels(l) => write!(f, "quantizer needs at least 2 levels, got {l}"),
            Self::InvalidStep(d) => write!(f, "step size must be positive and finite, got {d}"),
            Self::InvalidVariance(v) => write!(f, "variance must be positive and finite, got {v}"),
            Self::NanInput => write!(f, "cannot quantize NaN"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    levels: usize,
    step: f64,
    labels: Vec<f64>,
    /// `τ_0 = −∞, τ_1, …, τ_{L−1}, τ_L = +∞`.
    thresholds: Vec<f64>,
}

impl QuantizerSpec {
    /// Labels `l_i = Δ(i − (L−1)/2)` and thresholds `τ_i = Δ(i − L/2)`.
    pub fn new(levels: usize, step: f64) -> Result<Self, QuantizerError> {
        if levels < 2 {
            return Err(QuantizerError::TooFewLevels(levels));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(QuantizerError::InvalidStep(step));
        }
        let half_span = (levels - 1) as f64 / 2.0;
        let labels = (0..levels).map(|i| step * (i as f64 - half_span)).collect();
        let mut thresholds = Vec::with_capacity(levels + 1);
        thresholds.push(f64::NEG_INFINITY);
        let half = levels as f64 / 2.0;
        thresholds.extend((1..levels).map(|i| step * (i as f64 - half)));
        thresholds.push(f64::INFINITY);
        Ok(Self { levels, step, labels, thresholds })
    }

    /// Quantiser whose step minimises mean squared error for a zero-mean
    /// Gaussian component of the given variance.
    pub fn optimal(levels: usize, per_component_variance: f64) -> Result<Self, QuantizerError> {
        Self::new(levels, optimal_step_size(levels, per_component_variance)?)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn label_set(&self) -> RealLabels {
        RealLabels::real(self.labels.clone()).expect("uniform labels are distinct and finite")
    }

    /// Cell index of a real value.
    pub fn cell(&self, x: f64) -> Result<usize, QuantizerError> {
        if x.is_nan() {
            return Err(QuantizerError::NanInput);
        }
        // number of finite thresholds at or below x
        Ok(self.thresholds[1..self.levels].partition_point(|&t| t <= x))
    }

    pub fn quantize_real(&self, x: f64) -> Result<f64, QuantizerError> {
        Ok(self.labels[self.cell(x)?])
    }

    pub fn quantize(&self, x: Complex64) -> Result<Complex64, QuantizerError> {
        Ok(Complex64::new(self.quantize_real(x.re)?, self.quantize_real(x.im)?))
    }

    pub fn contains(&self, v: Complex64) -> bool {
        self.labels.contains(&v.re) && self.labels.contains(&v.im)
    }

    /// Smallest label magnitude; every nonzero entry carries at least this
    /// much per component.
    pub fn min_label_magnitude(&self) -> f64 {
        self.labels.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min)
    }
}

/// `E[(X − Q(X))²]` for `X ~ N(0, 1)` and step `step`, in closed form.
pub fn gaussian_distortion(levels: usize, step: f64) -> f64 {
    let half_span = (levels - 1) as f64 / 2.0;
    let half = levels as f64 / 2.0;
    let mut total = 0.0;
    for i in 0..levels {
        let label = step * (i as f64 - half_span);
        let lo = if i == 0 { f64::NEG_INFINITY } else { step * (i as f64 - half) };
        let hi = if i + 1 == levels { f64::INFINITY } else { step * ((i + 1) as f64 - half) };
        total += cell_moment(lo, hi, label);
    }
    total
}

// ∫_a^b (x − l)² φ(x) dx
fn cell_moment(a: f64, b: f64, l: f64) -> f64 {
    let mass = 0.5 * (erf(b / std::f64::consts::SQRT_2) - erf(a / std::f64::consts::SQRT_2));
    let pdf = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    let xpdf = |x: f64| if x.is_infinite() { 0.0 } else { x * pdf(x) };
    // ∫x²φ = mass + aφ(a) − bφ(b);  ∫xφ = φ(a) − φ(b)
    let second = mass + xpdf(a) - xpdf(b);
    let first = pdf(a) - pdf(b);
    second - 2.0 * l * first + l * l * mass
}

/// Distortion-minimising step size for `N(0, variance)` inputs.
///
/// The search runs on the unit-variance problem and the result is scaled by
/// the standard deviation, so `optimal_step_size(L, σ²) = σ · optimal_step_size(L, 1)`
/// holds bit for bit.
pub fn optimal_step_size(levels: usize, per_component_variance: f64) -> Result<f64, QuantizerError> {
    if levels < 2 {
        return Err(QuantizerError::TooFewLevels(levels));
    }
    if !(per_component_variance > 0.0) || !per_component_variance.is_finite() {
        return Err(QuantizerError::InvalidVariance(per_component_variance));
    }
    Ok(per_component_variance.sqrt() * unit_variance_step(levels))
}

fn unit_variance_step(levels: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 4.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = gaussian_distortion(levels, c);
    let mut fd = gaussian_distortion(levels, d);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gaussian_distortion(levels, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gaussian_distortion(levels, d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_levels_unit_step() {
        let q = QuantizerSpec::new(4, 1.0).unwrap();
        assert_eq!(q.labels(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(q.thresholds(), &[f64::NEG_INFINITY, -1.0, 0.0, 1.0, f64::INFINITY]);
    }

    #[test]
    fn two_and_three_levels() {
        let q = QuantizerSpec::new(2, 2.0).unwrap();
        assert_eq!(q.labels(), &[-1.0, 1.0]);
        assert_eq!(q.thresholds(), &[f64::NEG_INFINITY, 0.0, f64::INFINITY]);
        let q = QuantizerSpec::new(3, 1.0).unwrap();
        assert_eq!(q.labels(), &[-1.0, 0.0, 1.0]);
        assert_eq!(q.thresholds(), &[f64::NEG_INFINITY, -0.5, 0.5, f64::INFINITY]);
    }

    #[test]
    fn interval_lookup_and_boundary() {
        let q = QuantizerSpec::new(4, 1.0).unwrap();
        assert_eq!(q.quantize(Complex64::new(0.3, -1.2)).unwrap(), Complex64::new(0.5, -1.5));
        assert_eq!(q.quantize(Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(1.5, 0.5));
        assert_eq!(q.quantize_real(-1.0).unwrap(), -0.5);
        assert_eq!(q.quantize(Complex64::new(f64::NAN, 0.0)), Err(QuantizerError::NanInput));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(QuantizerSpec::new(1, 1.0), Err(QuantizerError::TooFewLevels(1)));
        assert_eq!(QuantizerSpec::new(4, 0.0), Err(QuantizerError::InvalidStep(0.0)));
        assert_eq!(optimal_step_size(4, -1.0), Err(QuantizerError::InvalidVariance(-1.0)));
    }

    #[test]
    fn two_level_optimum_is_twice_mean_abs() {
        let expected = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((optimal_step_size(2, 1.0).unwrap() - expected).abs() < 1e-7);
    }
}
