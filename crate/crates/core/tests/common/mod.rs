//! Instance generators shared by the integration and acceptance targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use ris_sesd::mils::{ComplexLabels, RealLabels, TriangularSystem};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Upper-triangular Gaussian `R` with diagonal bounded away from zero, and a
/// Gaussian target.
pub fn real_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TriangularSystem<f64> {
    let r = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => 0.0,
        std::cmp::Ordering::Equal => 0.2 + normal(rng).abs(),
        std::cmp::Ordering::Less => normal(rng),
    });
    let d = DVector::from_fn(n, |_, _| 2.0 * normal(rng));
    TriangularSystem::new(r, d).unwrap()
}

/// `count` distinct labels drawn uniformly from `[-3, 3]`.
pub fn real_labels<R: Rng + ?Sized>(rng: &mut R, count: usize) -> RealLabels {
    let mut values: Vec<f64> = Vec::with_capacity(count);
    while values.len() < count {
        let v: f64 = rng.random_range(-3.0..3.0);
        if values.iter().all(|u| (u - v).abs() > 1e-3) {
            values.push(v);
        }
    }
    RealLabels::real(values).unwrap()
}

pub fn complex_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> TriangularSystem<Complex64> {
    let r = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => Complex64::new(0.0, 0.0),
        std::cmp::Ordering::Equal => Complex64::new(0.2 + normal(rng).abs(), 0.0),
        std::cmp::Ordering::Less => Complex64::new(normal(rng), normal(rng)),
    });
    let d = DVector::from_fn(n, |_, _| Complex64::new(normal(rng), normal(rng)));
    TriangularSystem::new(r, d).unwrap()
}

pub fn phase_labels(bits: u32) -> ComplexLabels {
    ComplexLabels::phase_set(bits).unwrap()
}
