//! Orthogonality, orthogonal additivity, and the representing map of an
//! orthogonally additive polynomial on a full matrix algebra `M_k`.
//!
//! On `M_k` with identity `e`, an orthogonally additive `n`-homogeneous
//! polynomial `P` with symmetric form `phi` is `P(a) = Phi(a^n)` for the
//! unique linear map `Phi(a) = phi(a, e, ..., e)`. The existence part rests
//! on the structure theory of C*-algebras and is not re-derived here; the
//! functions below compute `Phi` and check the representation numerically.

use num_complex::Complex;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{relative_distance, ComplexMatrix, LinearMap};
use crate::multilinear::{HomogeneousPolynomial, SymmetricMultilinearForm};
use crate::random;
use crate::report::Verdict;
use crate::scalar::Real;

/// Condition-number ceiling for the conjugating matrix of generated pairs.
pub const MAX_CONJUGATOR_CONDITION: f64 = 1e3;
const MAX_GENERATION_ATTEMPTS: usize = 100;

/// The full matrix algebra `M_k` with its identity and matrix units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitalMatrixAlgebra {
    order: usize,
}

impl UnitalMatrixAlgebra {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("matrix algebra order must be at least 1".into()));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity<T: Real>(&self) -> ComplexMatrix<T> {
        ComplexMatrix::identity(self.order)
    }

    pub fn unit<T: Real>(&self, i: usize, j: usize) -> ComplexMatrix<T> {
        ComplexMatrix::unit(self.order, i, j)
    }

    /// Matrix units in row-major order of `(i, j)`.
    pub fn basis<T: Real>(&self) -> impl Iterator<Item = ((usize, usize), ComplexMatrix<T>)> + '_ {
        let k = self.order;
        (0..k * k).map(move |idx| ((idx / k, idx % k), ComplexMatrix::unit(k, idx / k, idx % k)))
    }

    /// `E_ij E_pq = delta_jp E_iq` for every quadruple, compared exactly.
    pub fn unit_relations_hold<T: Real>(&self) -> bool {
        let k = self.order;
        let units: Vec<ComplexMatrix<T>> = self.basis().map(|(_, m)| m).collect();
        for i in 0..k {
            for j in 0..k {
                for p in 0..k {
                    for q in 0..k {
                        let lhs = &units[i * k + j] * &units[p * k + q];
                        let rhs = if j == p {
                            units[i * k + q].clone()
                        } else {
                            ComplexMatrix::zeros(k)
                        };
                        if lhs != rhs {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `e a = a e = a`, up to `tol`.
    pub fn is_identity_for<T: Real>(&self, a: &ComplexMatrix<T>, tol: T) -> bool {
        let e = self.identity::<T>();
        (&e * a).max_abs_diff(a) <= tol && (a * &e).max_abs_diff(a) <= tol
    }
}

/// `max(|ab|, |ba|) <= tol * (1 + |a| |b|)`.
pub fn is_orthogonal<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, tol: T) -> Result<bool> {
    a.check_same_dim(b)?;
    let ab = (a * b).norm();
    let ba = (b * a).norm();
    Ok(ab.max(ba) <= tol * (T::one() + a.norm() * b.norm()))
}

/// Two matrices with `ab = ba = 0` (up to tolerance).
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalPair<T: Real> {
    a: ComplexMatrix<T>,
    b: ComplexMatrix<T>,
}

impl<T: Real> OrthogonalPair<T> {
    pub fn new(a: ComplexMatrix<T>, b: ComplexMatrix<T>, tol: T) -> Result<Self> {
        if !is_orthogonal(&a, &b, tol)? {
            return Err(Error::Precondition("pair is not orthogonal".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &ComplexMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix<T> {
        &self.b
    }

    pub fn into_parts(self) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        (self.a, self.b)
    }

    /// `(E_ii, E_jj)` in `M_k`.
    pub fn diagonal_units(k: usize, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= k || j >= k {
            return Err(Error::Precondition(format!(
                "({i}, {j}) are not distinct indices below {k}"
            )));
        }
        Ok(Self {
            a: ComplexMatrix::unit(k, i, i),
            b: ComplexMatrix::unit(k, j, j),
        })
    }
}

/// `(S D1 S^-1, S D2 S^-1)` for diagonals with disjoint supports.
pub fn orthogonal_pair_from_diagonals<T: Real>(
    d1: &[Complex<T>],
    d2: &[Complex<T>],
    s: &ComplexMatrix<T>,
    s_inv: &ComplexMatrix<T>,
) -> Result<OrthogonalPair<T>> {
    let k = s.dim();
    if d1.len() != k || d2.len() != k {
        return Err(Error::Dimension {
            expected: k,
            found: d1.len().max(d2.len()),
        });
    }
    if d1.iter().zip(d2).any(|(x, y)| !x.is_zero() && !y.is_zero()) {
        return Err(Error::Precondition("diagonal supports overlap".into()));
    }
    let a = &(s * &ComplexMatrix::diagonal(d1)) * s_inv;
    let b = &(s * &ComplexMatrix::diagonal(d2)) * s_inv;
    OrthogonalPair::new(a, b, T::identity_tol())
}

/// Random orthogonal pairs in `M_k`: random disjoint diagonal supports,
/// random nonzero diagonal values, conjugated by a random matrix whose
/// condition number is at most [`MAX_CONJUGATOR_CONDITION`].
pub fn generate_orthogonal_pairs<T: Real>(k: usize, count: usize, seed: u64) -> Result<Vec<OrthogonalPair<T>>> {
    let mut rng = random::rng(seed);
    generate_orthogonal_pairs_with(&mut rng, k, count)
}

pub fn generate_orthogonal_pairs_with<T: Real>(
    rng: &mut impl Rng,
    k: usize,
    count: usize,
) -> Result<Vec<OrthogonalPair<T>>> {
    if k < 2 {
        return Err(Error::Precondition("orthogonal pairs need order k >= 2".into()));
    }
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let mut indices: Vec<usize> = (0..k).collect();
        indices.shuffle(rng);
        let first = rng.random_range(1..k);
        let second = rng.random_range(1..=k - first);
        let mut d1 = vec![Complex::zero(); k];
        let mut d2 = vec![Complex::zero(); k];
        for &i in &indices[..first] {
            d1[i] = random::complex(rng);
        }
        for &i in &indices[first..first + second] {
            d2[i] = random::complex(rng);
        }
        let (s, s_inv) = random::well_conditioned(rng, k, T::of(MAX_CONJUGATOR_CONDITION), MAX_GENERATION_ATTEMPTS)?;
        pairs.push(orthogonal_pair_from_diagonals(&d1, &d2, &s, &s_inv)?);
    }
    Ok(pairs)
}

#[derive(Clone, Debug)]
pub struct AdditivityReport<T: Real> {
    /// Largest `|P(a+b) - P(a) - P(b)|` relative to `1 + max operand norm`.
    pub max_residual: T,
    /// Largest absolute `|P(a+b) - P(a) - P(b)|`.
    pub max_abs_residual: T,
    pub verdict: Verdict,
    pub pairs: usize,
    /// First pair whose residual exceeds the tolerance.
    pub witness: Option<OrthogonalPair<T>>,
}

/// Checks `P(a+b) = P(a) + P(b)` on each pair.
pub fn test_orthogonal_additivity<T: Real>(
    p: &HomogeneousPolynomial<T>,
    pairs: &[OrthogonalPair<T>],
    tol: T,
) -> Result<AdditivityReport<T>> {
    let mut max_residual = T::zero();
    let mut max_abs_residual = T::zero();
    let mut witness = None;
    for pair in pairs {
        if !is_orthogonal(&pair.a, &pair.b, T::identity_tol())? {
            return Err(Error::Precondition(
                "additivity test given a non-orthogonal pair".into(),
            ));
        }
        let joint = p.evaluate(&(&pair.a + &pair.b))?;
        let split = &p.evaluate(&pair.a)? + &p.evaluate(&pair.b)?;
        let rel = relative_distance(&joint, &split);
        max_residual = max_residual.max(rel);
        max_abs_residual = max_abs_residual.max((&joint - &split).norm());
        if rel > tol && witness.is_none() {
            witness = Some(pair.clone());
        }
    }
    Ok(AdditivityReport {
        max_residual,
        max_abs_residual,
        verdict: Verdict::from_pass(max_residual <= tol),
        pairs: pairs.len(),
        witness,
    })
}

/// `Phi(a) = phi(a, e, ..., e)`, materialized on the matrix units.
pub fn extract_phi<T: Real>(phi: &SymmetricMultilinearForm<T>, algebra: &UnitalMatrixAlgebra) -> Result<LinearMap<T>> {
    let k = algebra.order();
    if phi.domain_dim() != k {
        return Err(Error::Dimension {
            expected: k,
            found: phi.domain_dim(),
        });
    }
    if phi.arity() == 0 {
        return Err(Error::Invalid("form of arity 0 has no representing map".into()));
    }
    let e = algebra.identity::<T>();
    let mut args = vec![e; phi.arity()];
    LinearMap::from_basis_images(k, phi.codomain_dim(), |i, j| {
        args[0] = algebra.unit(i, j);
        phi.evaluate(&args)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub max_residual: f64,
    pub verdict: Verdict,
    pub samples: usize,
    pub seed: u64,
}

/// Largest `|P(a) - Phi(a^n)|` (relative) over seeded random `a`.
pub fn verify_representation<T: Real>(
    p: &HomogeneousPolynomial<T>,
    phi: &LinearMap<T>,
    samples: usize,
    seed: u64,
    tol: T,
) -> Result<RepresentationReport> {
    if phi.domain_dim() != p.domain_dim() {
        return Err(Error::Dimension {
            expected: p.domain_dim(),
            found: phi.domain_dim(),
        });
    }
    if phi.codomain_dim() != p.codomain_dim() {
        return Err(Error::Dimension {
            expected: p.codomain_dim(),
            found: phi.codomain_dim(),
        });
    }
    let mut rng = random::rng(seed);
    let mut max_residual = T::zero();
    for _ in 0..samples {
        let a = random::matrix(&mut rng, p.domain_dim());
        let lhs = p.evaluate(&a)?;
        let rhs = phi.apply(&a.pow(p.degree()))?;
        max_residual = max_residual.max(relative_distance(&lhs, &rhs));
    }
    Ok(RepresentationReport {
        max_residual: max_residual.to_f64_lossy(),
        verdict: Verdict::from_pass(max_residual <= tol),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilinear::as_symmetric_form;
    use crate::scalar::cx;

    fn e(k: usize, i: usize, j: usize) -> ComplexMatrix<f64> {
        ComplexMatrix::unit(k, i, j)
    }

    #[test]
    fn orthogonality_of_units() {
        assert!(is_orthogonal(&e(2, 0, 0), &e(2, 1, 1), 1e-9).unwrap());
        assert!(!is_orthogonal(&e(2, 0, 0), &e(2, 0, 1), 1e-9).unwrap());
        let a = random::matrix::<f64>(&mut random::rng(1), 3);
        assert!(is_orthogonal(&a, &ComplexMatrix::zeros(3), 1e-9).unwrap());
        assert!(is_orthogonal(&e(2, 0, 0), &e(3, 0, 0), 1e-9).is_err());
    }

    #[test]
    fn identity_conjugator_gives_units() {
        let one = cx::<f64>(1.0, 0.0);
        let zero = cx::<f64>(0.0, 0.0);
        let id = ComplexMatrix::identity(2);
        let pair = orthogonal_pair_from_diagonals(&[one, zero], &[zero, one], &id, &id).unwrap();
        assert_eq!(pair.a(), &e(2, 0, 0));
        assert_eq!(pair.b(), &e(2, 1, 1));
    }

    #[test]
    fn disjoint_diagonals_multiply_to_exact_zero() {
        let mut rng = random::rng(4);
        let zero = cx::<f64>(0.0, 0.0);
        let d1 = [random::complex(&mut rng), zero, zero];
        let d2 = [zero, zero, random::complex(&mut rng)];
        let prod = &ComplexMatrix::diagonal(&d1) * &ComplexMatrix::diagonal(&d2);
        assert!(prod.is_zero());
        let overlapping = [d1[0], zero, d2[2]];
        let id = ComplexMatrix::identity(3);
        assert!(orthogonal_pair_from_diagonals(&d1, &overlapping, &id, &id).is_err());
    }

    #[test]
    fn generated_pairs_are_orthogonal_and_seeded() {
        let pairs = generate_orthogonal_pairs::<f64>(4, 30, 17).unwrap();
        assert_eq!(pairs.len(), 30);
        for pair in &pairs {
            assert!(is_orthogonal(pair.a(), pair.b(), 1e-9).unwrap());
            assert!(!pair.a().is_zero() && !pair.b().is_zero());
        }
        assert_eq!(pairs, generate_orthogonal_pairs::<f64>(4, 30, 17).unwrap());
        assert!(generate_orthogonal_pairs::<f64>(1, 3, 17).is_err());
    }

    #[test]
    fn square_is_additive_on_units() {
        let p = HomogeneousPolynomial::power(2, 2).unwrap();
        let pair = OrthogonalPair::diagonal_units(2, 0, 1).unwrap();
        let report = test_orthogonal_additivity(&p, &[pair], 1e-8).unwrap();
        assert_eq!(report.max_abs_residual, 0.0);
        assert!(report.verdict.passed());
    }

    #[test]
    fn trace_square_fails_with_witness() {
        let p = HomogeneousPolynomial::trace_power(2, 2).unwrap();
        let pair = OrthogonalPair::diagonal_units(2, 0, 1).unwrap();
        let report = test_orthogonal_additivity(&p, &[pair.clone()], 1e-8).unwrap();
        assert!((report.max_abs_residual - 2.0f64).abs() < 1e-14);
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.witness, Some(pair));
    }

    #[test]
    fn non_orthogonal_pair_is_a_precondition_error() {
        let p = HomogeneousPolynomial::power(2, 2).unwrap();
        let bogus = OrthogonalPair {
            a: e(2, 0, 0),
            b: e(2, 0, 1),
        };
        assert!(matches!(
            test_orthogonal_additivity(&p, &[bogus], 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn square_has_identity_representing_map() {
        let algebra = UnitalMatrixAlgebra::new(2).unwrap();
        let p = HomogeneousPolynomial::<f64>::power(2, 2).unwrap();
        let phi = extract_phi(&as_symmetric_form(&p), &algebra).unwrap();
        assert!(phi.max_abs_diff(&LinearMap::identity(2)) < 1e-14);
        let report = verify_representation(&p, &phi, 20, 1, 1e-8).unwrap();
        assert!(report.verdict.passed());
    }

    #[test]
    fn zero_form_has_zero_map() {
        let algebra = UnitalMatrixAlgebra::new(3).unwrap();
        let phi = extract_phi(&SymmetricMultilinearForm::<f64>::zero(2, 3, 2), &algebra).unwrap();
        assert_eq!(phi.max_abs_entry(), 0.0);
    }

    #[test]
    fn trace_square_has_no_representation() {
        let algebra = UnitalMatrixAlgebra::new(2).unwrap();
        let p = HomogeneousPolynomial::<f64>::trace_power(2, 2).unwrap();
        let phi = extract_phi(&as_symmetric_form(&p), &algebra).unwrap();
        let report = verify_representation(&p, &phi, 20, 3, 1e-8).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.max_residual > 1e-3);
    }

    #[test]
    fn unit_relations() {
        for k in 1..=4 {
            let algebra = UnitalMatrixAlgebra::new(k).unwrap();
            assert!(algebra.unit_relations_hold::<f64>());
            let a = random::matrix::<f64>(&mut random::rng(k as u64), k);
            assert!(algebra.is_identity_for(&a, 0.0));
        }
    }
}
