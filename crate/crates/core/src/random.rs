//! Seeded instance generation. Every random object in the crate is drawn
//! from a `ChaCha8Rng` so that a seed fully determines a run on any platform.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{spectral_norm, ComplexMatrix, LinearMap};
use crate::scalar::Real;

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian (unit expected modulus squared).
pub fn complex<T: Real>(rng: &mut impl Rng) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(
        T::of(re * std::f64::consts::FRAC_1_SQRT_2),
        T::of(im * std::f64::consts::FRAC_1_SQRT_2),
    )
}

pub fn vector<T: Real>(rng: &mut impl Rng, d: usize) -> DVector<Complex<T>> {
    DVector::from_fn(d, |_, _| complex(rng))
}

/// Gaussian vector, scaled to unit expected norm, vanishing beyond the first
/// `support` coordinates.
pub fn supported_vector<T: Real>(rng: &mut impl Rng, d: usize, support: usize) -> DVector<Complex<T>> {
    let support = support.min(d);
    let scale = T::of(1.0 / (support.max(1) as f64).sqrt());
    DVector::from_fn(d, |i, _| {
        if i < support {
            complex::<T>(rng) * scale
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Gaussian matrix scaled so its operator norm is of order one.
pub fn matrix<T: Real>(rng: &mut impl Rng, k: usize) -> ComplexMatrix<T> {
    supported_matrix(rng, k, k)
}

/// Gaussian matrix whose nonzero entries lie in the leading
/// `support x support` block.
pub fn supported_matrix<T: Real>(rng: &mut impl Rng, k: usize, support: usize) -> ComplexMatrix<T> {
    let support = support.min(k);
    let scale = T::of(1.0 / (support.max(1) as f64).sqrt());
    let mut m = DMatrix::zeros(k, k);
    for i in 0..support {
        for j in 0..support {
            m[(i, j)] = complex::<T>(rng) * scale;
        }
    }
    ComplexMatrix::from_dmatrix(m).expect("gaussian entries are finite")
}

/// Random linear map `M_k -> M_m` with coefficients of order `1/k`.
pub fn linear_map<T: Real>(rng: &mut impl Rng, k: usize, m: usize) -> LinearMap<T> {
    let scale = T::of(1.0 / k as f64);
    let matrix = DMatrix::from_fn(m * m, k * k, |_, _| complex::<T>(rng) * scale);
    LinearMap::new(k, m, matrix).expect("shape matches by construction")
}

/// 2-norm condition number.
pub fn condition_number<T: Real>(m: &ComplexMatrix<T>) -> T {
    let sv = m.as_dmatrix().clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= T::zero() {
        T::max_value().unwrap_or_else(|| T::of(f64::MAX))
    } else {
        max / min
    }
}

/// Random invertible matrix with condition number at most `max_condition`,
/// drawn as a perturbation of the identity and rejected until conditioned.
pub fn well_conditioned<T: Real>(
    rng: &mut impl Rng,
    k: usize,
    max_condition: T,
    max_attempts: usize,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    for _ in 0..max_attempts {
        let g: ComplexMatrix<T> = matrix(rng, k);
        let s = &ComplexMatrix::identity(k) + &g;
        if condition_number(&s) > max_condition {
            continue;
        }
        if let Some(inv) = s.as_dmatrix().clone().try_inverse() {
            if spectral_norm(&inv).is_finite() {
                let inv = ComplexMatrix::from_dmatrix(inv)?;
                return Ok((s, inv));
            }
        }
    }
    Err(Error::Generation(format!(
        "no invertible {k}x{k} matrix with condition number <= {max_condition} after {max_attempts} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        let a: ComplexMatrix<f64> = matrix(&mut rng(42), 4);
        let b: ComplexMatrix<f64> = matrix(&mut rng(42), 4);
        assert_eq!(a, b);
        let c: ComplexMatrix<f64> = matrix(&mut rng(43), 4);
        assert_ne!(a, c);
    }

    #[test]
    fn supported_matrix_vanishes_outside_block() {
        let m: ComplexMatrix<f64> = supported_matrix(&mut rng(1), 5, 2);
        for i in 0..5 {
            for j in 0..5 {
                if i >= 2 || j >= 2 {
                    assert_eq!(m.entry(i, j), Complex::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn well_conditioned_respects_bound() {
        let mut r = rng(9);
        for _ in 0..20 {
            let (s, inv) = well_conditioned::<f64>(&mut r, 6, 1e3, 100).unwrap();
            assert!(condition_number(&s) <= 1e3);
            assert!((&s * &inv).max_abs_diff(&ComplexMatrix::identity(6)) < 1e-10);
        }
    }

    #[test]
    fn impossible_bound_fails() {
        let err = well_conditioned::<f64>(&mut rng(9), 4, 0.5, 5).unwrap_err();
        assert!(matches!(err, Error::Generation(_)));
    }
}
