//! Homogeneous polynomials, symmetric multilinear forms, and the
//! polarization formula connecting them.
//!
//! The codomain of every polynomial and form is a complex matrix space
//! `M_m`; scalar-valued maps use `m = 1`.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use nalgebra::ComplexField;
use num_complex::Complex;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{product, ComplexMatrix, LinearMap};
use crate::random;
use crate::scalar::{factorial, Real};

/// Largest supported degree for numeric polynomials.
pub const MAX_DEGREE: usize = 6;
/// Largest supported matrix order for numeric polynomials.
pub const MAX_ORDER: usize = 8;

type PolyFn<T> = dyn Fn(&ComplexMatrix<T>) -> ComplexMatrix<T> + Send + Sync;
type FormFn<T> = dyn Fn(&[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> + Send + Sync;

#[derive(Clone)]
pub enum PolynomialKind<T: Real> {
    /// `a -> phi(a^n)`.
    Canonical(LinearMap<T>),
    /// `a -> a^n`.
    Power,
    /// `a -> (tr a)^n`, scalar valued.
    TracePower,
    /// Arbitrary evaluator. Homogeneity is the caller's promise.
    BlackBox(Arc<PolyFn<T>>),
}

impl<T: Real> PolynomialKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            PolynomialKind::Canonical(_) => "canonical",
            PolynomialKind::Power => "power",
            PolynomialKind::TracePower => "trace_power",
            PolynomialKind::BlackBox(_) => "black_box",
        }
    }
}

/// An `n`-homogeneous polynomial `M_k -> M_m`.
#[derive(Clone)]
pub struct HomogeneousPolynomial<T: Real> {
    degree: usize,
    domain_dim: usize,
    codomain_dim: usize,
    kind: PolynomialKind<T>,
}

impl<T: Real> fmt::Debug for HomogeneousPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousPolynomial")
            .field("degree", &self.degree)
            .field("domain_dim", &self.domain_dim)
            .field("codomain_dim", &self.codomain_dim)
            .field("kind", &self.kind.name())
            .finish()
    }
}

fn check_shape(degree: usize, dims: &[usize]) -> Result<()> {
    if degree == 0 {
        return Err(Error::Invalid("degree must be at least 1".into()));
    }
    if degree > MAX_DEGREE {
        return Err(Error::Capacity {
            what: "degree",
            requested: degree,
            limit: MAX_DEGREE,
        });
    }
    for &k in dims {
        if k == 0 {
            return Err(Error::Invalid("matrix order must be at least 1".into()));
        }
        if k > MAX_ORDER {
            return Err(Error::Capacity {
                what: "matrix order",
                requested: k,
                limit: MAX_ORDER,
            });
        }
    }
    Ok(())
}

impl<T: Real> HomogeneousPolynomial<T> {
    pub fn canonical(degree: usize, phi: LinearMap<T>) -> Result<Self> {
        check_shape(degree, &[phi.domain_dim(), phi.codomain_dim()])?;
        Ok(Self {
            degree,
            domain_dim: phi.domain_dim(),
            codomain_dim: phi.codomain_dim(),
            kind: PolynomialKind::Canonical(phi),
        })
    }

    pub fn power(degree: usize, k: usize) -> Result<Self> {
        check_shape(degree, &[k])?;
        Ok(Self {
            degree,
            domain_dim: k,
            codomain_dim: k,
            kind: PolynomialKind::Power,
        })
    }

    pub fn trace_power(degree: usize, k: usize) -> Result<Self> {
        check_shape(degree, &[k])?;
        Ok(Self {
            degree,
            domain_dim: k,
            codomain_dim: 1,
            kind: PolynomialKind::TracePower,
        })
    }

    pub fn zero(degree: usize, k: usize, m: usize) -> Result<Self> {
        Self::canonical(degree, LinearMap::zero(k, m))
    }

    pub fn black_box(
        degree: usize,
        domain_dim: usize,
        codomain_dim: usize,
        eval: impl Fn(&ComplexMatrix<T>) -> ComplexMatrix<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_shape(degree, &[domain_dim, codomain_dim])?;
        Ok(Self {
            degree,
            domain_dim,
            codomain_dim,
            kind: PolynomialKind::BlackBox(Arc::new(eval)),
        })
    }

    /// `A -> self(embed(A))` on `M_new_dim`, e.g. the restriction of a
    /// polynomial on operators to an embedded matrix subalgebra.
    pub fn pull_back(
        &self,
        new_dim: usize,
        embed: impl Fn(&ComplexMatrix<T>) -> ComplexMatrix<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        let inner = self.clone();
        let codomain = self.codomain_dim;
        Self::black_box(self.degree, new_dim, codomain, move |a| {
            inner
                .evaluate(&embed(a))
                .unwrap_or_else(|_| ComplexMatrix::nan(codomain))
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn kind(&self) -> &PolynomialKind<T> {
        &self.kind
    }

    /// The representing map when it is known from the construction.
    pub fn known_phi(&self) -> Option<LinearMap<T>> {
        match &self.kind {
            PolynomialKind::Canonical(phi) => Some(phi.clone()),
            PolynomialKind::Power => Some(LinearMap::identity(self.domain_dim)),
            PolynomialKind::TracePower if self.degree == 1 => Some(LinearMap::trace(self.domain_dim)),
            _ => None,
        }
    }

    pub fn evaluate(&self, a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if a.dim() != self.domain_dim {
            return Err(Error::Dimension {
                expected: self.domain_dim,
                found: a.dim(),
            });
        }
        let value = match &self.kind {
            PolynomialKind::Canonical(phi) => phi.apply(&a.pow(self.degree))?,
            PolynomialKind::Power => a.pow(self.degree),
            PolynomialKind::TracePower => {
                let t = a.trace();
                let mut acc = Complex::one();
                for _ in 0..self.degree {
                    acc *= t;
                }
                ComplexMatrix::from_fn(1, |_, _| acc)
            }
            PolynomialKind::BlackBox(f) => f(a),
        };
        if value.dim() != self.codomain_dim {
            return Err(Error::Dimension {
                expected: self.codomain_dim,
                found: value.dim(),
            });
        }
        value.ensure_finite("polynomial evaluation")
    }
}

/// Polarization formula:
/// `1/(n! 2^n) * sum over signs eps of eps_1...eps_n * P(eps_1 x_1 + ... + eps_n x_n)`.
///
/// Sign patterns are visited in increasing bit-mask order, so the result is
/// bit-for-bit reproducible.
pub fn polarize<T: Real>(p: &HomogeneousPolynomial<T>, args: &[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> {
    let n = p.degree();
    if args.len() != n {
        return Err(Error::Arity {
            expected: n,
            found: args.len(),
        });
    }
    for a in args {
        if a.dim() != p.domain_dim() {
            return Err(Error::Dimension {
                expected: p.domain_dim(),
                found: a.dim(),
            });
        }
    }
    let k = p.domain_dim();
    let mut acc = ComplexMatrix::zeros(p.codomain_dim());
    for mask in 0u32..(1u32 << n) {
        let mut point = ComplexMatrix::zeros(k);
        for (i, a) in args.iter().enumerate() {
            point = if mask & (1 << i) == 0 { &point + a } else { &point - a };
        }
        let value = p.evaluate(&point)?;
        acc = if mask.count_ones() % 2 == 0 {
            &acc + &value
        } else {
            &acc - &value
        };
    }
    let norm = factorial::<T>(n) * T::of((1u64 << n) as f64);
    acc.scale_real(T::one() / norm).ensure_finite("polarization")
}

/// `sum over sigma in S_n of a_sigma(1) ... a_sigma(n)`, the numeric
/// counterpart of the symmetrized noncommutative product.
pub fn symmetrized_product<T: Real>(args: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
    let k = args.first().map(ComplexMatrix::dim).unwrap_or(1);
    let mut acc = ComplexMatrix::zeros(k);
    for perm in (0..args.len()).permutations(args.len()) {
        acc = &acc + &product(k, perm.iter().map(|&i| &args[i]));
    }
    acc
}

/// A symmetric `n`-linear map `M_k^n -> M_m` given by an evaluator.
#[derive(Clone)]
pub struct SymmetricMultilinearForm<T: Real> {
    arity: usize,
    domain_dim: usize,
    codomain_dim: usize,
    eval: Arc<FormFn<T>>,
}

impl<T: Real> fmt::Debug for SymmetricMultilinearForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricMultilinearForm")
            .field("arity", &self.arity)
            .field("domain_dim", &self.domain_dim)
            .field("codomain_dim", &self.codomain_dim)
            .finish_non_exhaustive()
    }
}

impl<T: Real> SymmetricMultilinearForm<T> {
    /// Wraps an evaluator. Symmetry and multilinearity are the caller's
    /// promise; the argument checks are done here.
    pub fn from_fn(
        arity: usize,
        domain_dim: usize,
        codomain_dim: usize,
        eval: impl Fn(&[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            arity,
            domain_dim,
            codomain_dim,
            eval: Arc::new(eval),
        }
    }

    /// `(T_1..T_n) -> (1/n!) phi(sum_sigma T_sigma(1)...T_sigma(n))`, the
    /// form associated with `a -> phi(a^n)`.
    pub fn from_representing_map(phi: LinearMap<T>, n: usize) -> Self {
        let scale = T::one() / factorial::<T>(n);
        let (k, m) = (phi.domain_dim(), phi.codomain_dim());
        Self::from_fn(n, k, m, move |args| {
            Ok(phi.apply(&symmetrized_product(args))?.scale_real(scale))
        })
    }

    pub fn zero(arity: usize, domain_dim: usize, codomain_dim: usize) -> Self {
        Self::from_fn(arity, domain_dim, codomain_dim, move |_| {
            Ok(ComplexMatrix::zeros(codomain_dim))
        })
    }

    /// `sum_i c_i * form_i`; all forms must share arity and dimensions.
    pub fn linear_combination(terms: Vec<(Complex<T>, SymmetricMultilinearForm<T>)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Invalid("empty linear combination".into()))?;
        let (arity, k, m) = (first.1.arity, first.1.domain_dim, first.1.codomain_dim);
        for (_, form) in &terms {
            if form.arity != arity {
                return Err(Error::Arity {
                    expected: arity,
                    found: form.arity,
                });
            }
            if form.domain_dim != k || form.codomain_dim != m {
                return Err(Error::Dimension {
                    expected: k,
                    found: form.domain_dim,
                });
            }
        }
        Ok(Self::from_fn(arity, k, m, move |args| {
            let mut acc = ComplexMatrix::zeros(m);
            for (c, form) in &terms {
                acc = &acc + &form.evaluate(args)?.scale(*c);
            }
            Ok(acc)
        }))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn evaluate(&self, args: &[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> {
        if args.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: args.len(),
            });
        }
        for a in args {
            if a.dim() != self.domain_dim {
                return Err(Error::Dimension {
                    expected: self.domain_dim,
                    found: a.dim(),
                });
            }
        }
        (self.eval)(args)?.ensure_finite("multilinear form evaluation")
    }

    /// The polynomial `a -> form(a, ..., a)` on the diagonal.
    pub fn diagonal(&self) -> Result<HomogeneousPolynomial<T>> {
        let form = self.clone();
        let m = self.codomain_dim;
        HomogeneousPolynomial::black_box(self.arity, self.domain_dim, m, move |a| {
            let args = vec![a.clone(); form.arity];
            form.evaluate(&args).unwrap_or_else(|_| ComplexMatrix::nan(m))
        })
    }
}

/// The unique symmetric form whose diagonal is `p`, evaluated by
/// polarization.
pub fn as_symmetric_form<T: Real>(p: &HomogeneousPolynomial<T>) -> SymmetricMultilinearForm<T> {
    let poly = p.clone();
    SymmetricMultilinearForm::from_fn(p.degree(), p.domain_dim(), p.codomain_dim(), move |args| {
        polarize(&poly, args)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub max_deviation: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `|P(lambda a) - lambda^n P(a)| / (1 + |lambda|^n |P(a)|)`.
pub fn homogeneity_deviation<T: Real>(
    p: &HomogeneousPolynomial<T>,
    lambda: Complex<T>,
    a: &ComplexMatrix<T>,
) -> Result<T> {
    let n = p.degree() as i32;
    let scaled = p.evaluate(&a.scale(lambda))?;
    let base = p.evaluate(a)?;
    let lambda_n = lambda.powi(n);
    let diff = (&scaled - &base.scale(lambda_n)).norm();
    Ok(diff / (T::one() + lambda_n.modulus() * base.norm()))
}

/// Samples random `(lambda, a)` and reports the largest homogeneity
/// deviation.
pub fn check_homogeneity<T: Real>(
    p: &HomogeneousPolynomial<T>,
    samples: usize,
    seed: u64,
) -> Result<HomogeneityReport> {
    if samples == 0 {
        return Err(Error::Precondition("samples must be at least 1".into()));
    }
    let mut rng = random::rng(seed);
    let mut max_deviation = T::zero();
    for _ in 0..samples {
        let lambda = random::complex::<T>(&mut rng).scale(T::of(2.0));
        let a = random::matrix(&mut rng, p.domain_dim());
        max_deviation = max_deviation.max(homogeneity_deviation(p, lambda, &a)?);
    }
    Ok(HomogeneityReport {
        max_deviation: max_deviation.to_f64_lossy(),
        samples,
        seed,
    })
}

/// Largest observed `|phi(x_1..x_n)| / sup_j |P(u_j)|` over random unit-norm
/// arguments, where `phi` is the polarization of `P`. Reported only; no
/// bound is asserted.
pub fn empirical_polarization_ratio<T: Real>(p: &HomogeneousPolynomial<T>, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = random::rng(seed);
    let unit = |rng: &mut random::InstanceRng| {
        let a: ComplexMatrix<T> = random::matrix(rng, p.domain_dim());
        let n = a.norm();
        if n.is_zero() {
            a
        } else {
            a.scale_real(T::one() / n)
        }
    };
    let mut sup_p = T::zero();
    let mut sup_phi = T::zero();
    for _ in 0..samples.max(1) {
        let x = unit(&mut rng);
        sup_p = sup_p.max(p.evaluate(&x)?.norm());
        let args: Vec<_> = (0..p.degree()).map(|_| unit(&mut rng)).collect();
        sup_phi = sup_phi.max(polarize(p, &args)?.norm());
    }
    if sup_p.is_zero() {
        return Ok(0.0);
    }
    Ok((sup_phi / sup_p).to_f64_lossy())
}
