use num_complex::Complex64;

use super::{Field, MilsError};

const UNIT_MODULUS_TOL: f64 = 1e-12;

/// A finite, ordered alphabet of pairwise distinct values.
///
/// Order matters: the solvers break ties between equally distant labels in
/// favour of the lower index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet<T: Field> {
    values: Vec<T>,
}

pub type RealLabels = LabelSet<f64>;
pub type ComplexLabels = LabelSet<Complex64>;

impl<T: Field> LabelSet<T> {
    fn checked(values: Vec<T>) -> Result<Self, MilsError> {
        if values.is_empty() {
            return Err(MilsError::EmptyLabelSet);
        }
        if values.iter().any(|v| !v.abs_sq().is_finite()) {
            return Err(MilsError::NonFiniteInput);
        }
        for i in 1..values.len() {
            if values[..i].contains(&values[i]) {
                return Err(MilsError::DuplicateLabel { index: i });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: &T) -> bool {
        self.values.contains(v)
    }

    /// Index of the label closest to `v` (lowest index on ties).
    pub fn nearest_index(&self, v: T) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &l) in self.values.iter().enumerate() {
            let dist = (v - l).abs_sq();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }
}

impl LabelSet<f64> {
    pub fn real(values: Vec<f64>) -> Result<Self, MilsError> {
        Self::checked(values)
    }
}

impl LabelSet<Complex64> {
    /// Unit-modulus complex alphabet.
    pub fn unit_modulus(values: Vec<Complex64>) -> Result<Self, MilsError> {
        for (index, v) in values.iter().enumerate() {
            let modulus = v.norm();
            if (modulus - 1.0).abs() > UNIT_MODULUS_TOL {
                return Err(MilsError::NotUnitModulus { index, modulus });
            }
        }
        Self::checked(values)
    }

    /// The `2^bits` equally spaced phases `e^{jmπ/2^(bits−1)}`, `m = 0..2^bits`.
    ///
    /// Points on the axes are exact (`-1`, `±j` carry no rounding residue).
    pub fn phase_set(bits: u32) -> Result<Self, MilsError> {
        if bits == 0 || bits > 16 {
            return Err(MilsError::EmptyLabelSet);
        }
        let count = 1usize << bits;
        let step = std::f64::consts::PI / f64::from(1u32 << (bits - 1));
        let values = (0..count)
            .map(|m| {
                let (s, c) = (m as f64 * step).sin_cos();
                Complex64::new(snap(c), snap(s))
            })
            .collect();
        Self::unit_modulus(values)
    }
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 {
        0.0
    } else if (v.abs() - 1.0).abs() < 1e-15 {
        v.signum()
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_set_sizes_and_modulus() {
        for bits in 1..=4 {
            let set = ComplexLabels::phase_set(bits).unwrap();
            assert_eq!(set.len(), 1 << bits);
            for v in set.values() {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
        let two = ComplexLabels::phase_set(2).unwrap();
        assert_eq!(
            two.values(),
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, -1.0)
            ]
        );
    }

    #[test]
    fn phase_set_spacing_is_uniform() {
        let set = ComplexLabels::phase_set(3).unwrap();
        let step = std::f64::consts::PI / 4.0;
        for (m, v) in set.values().iter().enumerate() {
            let expected = Complex64::from_polar(1.0, m as f64 * step);
            assert!((v - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sets() {
        assert_eq!(RealLabels::real(vec![]), Err(MilsError::EmptyLabelSet));
        assert_eq!(
            RealLabels::real(vec![1.0, 2.0, 1.0]),
            Err(MilsError::DuplicateLabel { index: 2 })
        );
        assert!(matches!(
            ComplexLabels::unit_modulus(vec![Complex64::new(0.5, 0.0)]),
            Err(MilsError::NotUnitModulus { index: 0, .. })
        ));
    }

    #[test]
    fn nearest_prefers_lower_index() {
        let set = RealLabels::real(vec![-1.0, 1.0]).unwrap();
        assert_eq!(set.nearest_index(0.0), 0);
        assert_eq!(set.nearest_index(0.1), 1);
    }
}
