//! Approximate identities made of finite-rank projections, the derived form
//! `phi'(a_1..a_{n-1}) = lim_r phi(a_1..a_{n-1}, E_r)`, recovery of the
//! representing map as `Phi(T) = lim_r phi(T, E_r, ..., E_r)`, and the
//! end-to-end check that an orthogonally additive polynomial on operators
//! is `T -> Phi(T^n)`.
//!
//! Limits are sequential: `E_1, ..., E_d` followed by the constant tail
//! `E_r = E_d = I`. A limit is accepted once two consecutive steps move the
//! value by at most the stabilization tolerance (relative to
//! `1 + max norm`).

use std::sync::Arc;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_rank::{
    enclosing_system, represent_in_system, represent_via_local_unit, FiniteRankOperator, RankOneOperator,
};
use crate::matrix::{product, relative_distance, ComplexMatrix, LinearMap};
use crate::matrix_rep::{generate_orthogonal_pairs, test_orthogonal_additivity, verify_representation, OrthogonalPair};
use crate::multilinear::{as_symmetric_form, symmetrized_product, HomogeneousPolynomial, SymmetricMultilinearForm};
use crate::random;
use crate::report::Verdict;
use crate::scalar::{factorial, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    /// `E_r` projects onto the first `r` coordinates.
    Truncation,
    /// `E_r` projects onto the span of the first `r` columns of a seeded
    /// random unitary.
    NestedRandom { seed: u64 },
}

/// Nested projections `E_1 <= ... <= E_d = I` of norm one.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproximateIdentitySequence<T: Real> {
    kind: SequenceKind,
    projections: Vec<ComplexMatrix<T>>,
}

impl<T: Real> ApproximateIdentitySequence<T> {
    pub fn truncation(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("approximate identity needs d >= 1".into()));
        }
        let projections = (1..=d)
            .map(|r| {
                ComplexMatrix::from_fn(d, |i, j| {
                    if i == j && i < r {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
            })
            .collect();
        Ok(Self {
            kind: SequenceKind::Truncation,
            projections,
        })
    }

    pub fn nested_random(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Invalid("approximate identity needs d >= 1".into()));
        }
        let mut rng = random::rng(seed);
        let g = DMatrix::from_fn(d, d, |_, _| random::complex::<T>(&mut rng));
        let q = g.qr().q();
        let projections = (1..=d)
            .map(|r| {
                let cols = q.columns(0, r);
                ComplexMatrix::from_dmatrix(&cols * cols.adjoint())
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: SequenceKind::NestedRandom { seed },
            projections,
        })
    }

    pub fn new(d: usize, kind: SequenceKind) -> Result<Self> {
        match kind {
            SequenceKind::Truncation => Self::truncation(d),
            SequenceKind::NestedRandom { seed } => Self::nested_random(d, seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.projections.len()
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    /// Bound `C` with `|E_r| <= C`.
    pub fn bound(&self) -> T {
        T::one()
    }

    /// `E_r` for `r >= 1`; past `d` the sequence stays at `E_d`.
    pub fn get(&self, r: usize) -> &ComplexMatrix<T> {
        assert!(r >= 1, "approximate identity is indexed from 1");
        &self.projections[r.min(self.dim()) - 1]
    }

    pub fn projections(&self) -> &[ComplexMatrix<T>] {
        &self.projections
    }

    /// First index worth scanning for a limit involving `inputs`: for
    /// truncations, the smallest `r` whose block holds every input.
    pub fn start_index(&self, inputs: &[ComplexMatrix<T>]) -> usize {
        match self.kind {
            SequenceKind::Truncation => inputs.iter().map(support_radius).max().unwrap_or(1).max(1),
            SequenceKind::NestedRandom { .. } => 1,
        }
    }

    /// `max_r |E_r^2 - E_r|`.
    pub fn idempotence_residual(&self) -> T {
        self.projections
            .iter()
            .map(|e| (e * e).max_abs_diff(e))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `max_r | |E_r| - 1 |`.
    pub fn norm_residual(&self) -> T {
        self.projections
            .iter()
            .map(|e| (e.norm() - T::one()).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

pub fn make_truncation_ai<T: Real>(d: usize) -> Result<ApproximateIdentitySequence<T>> {
    ApproximateIdentitySequence::truncation(d)
}

/// Smallest `r` such that every nonzero entry of `a` sits in the leading
/// `r x r` block (0 for the zero matrix).
pub fn support_radius<T: Real>(a: &ComplexMatrix<T>) -> usize {
    let k = a.dim();
    let mut r = 0;
    for i in 0..k {
        for j in 0..k {
            let z = a.entry(i, j);
            if !(z.re.is_zero() && z.im.is_zero()) {
                r = r.max(i.max(j) + 1);
            }
        }
    }
    r
}

/// A sequential limit and where it settled.
#[derive(Clone, Debug, PartialEq)]
pub struct Stabilized<T: Real> {
    pub value: ComplexMatrix<T>,
    /// Index `r` at which the value stopped moving.
    pub index: usize,
    pub evaluations: usize,
    pub last_difference: T,
}

/// `lim_r eval(E_r)`, scanning from the start index of `inputs` through
/// `d + 2`.
pub fn stabilized_limit<T: Real>(
    ai: &ApproximateIdentitySequence<T>,
    inputs: &[ComplexMatrix<T>],
    tol: T,
    mut eval: impl FnMut(&ComplexMatrix<T>) -> Result<ComplexMatrix<T>>,
) -> Result<Stabilized<T>> {
    let d = ai.dim();
    let start = ai.start_index(inputs).min(d);
    let mut previous = eval(ai.get(start))?;
    let mut evaluations = 1;
    let mut quiet = 0;
    let mut last_difference = T::zero();
    for r in start + 1..=d + 2 {
        let current = if r <= d {
            evaluations += 1;
            eval(ai.get(r))?
        } else {
            previous.clone()
        };
        last_difference = relative_distance(&previous, &current);
        if !last_difference.is_finite() {
            break;
        }
        if last_difference <= tol {
            quiet += 1;
            if quiet == 2 {
                return Ok(Stabilized {
                    value: current,
                    index: r - 2,
                    evaluations,
                    last_difference,
                });
            }
        } else {
            quiet = 0;
        }
        previous = current;
    }
    Err(Error::Convergence {
        steps: evaluations,
        last_difference: last_difference.to_f64_lossy(),
    })
}

/// `phi'(a_1..a_{n-1}) = lim_r phi(a_1..a_{n-1}, E_r)`.
#[derive(Clone, Debug)]
pub struct DerivedForm<T: Real> {
    base: SymmetricMultilinearForm<T>,
    ai: Arc<ApproximateIdentitySequence<T>>,
    tol: T,
}

pub fn derive_phi_prime<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
) -> Result<DerivedForm<T>> {
    derive_phi_prime_with_tol(phi, ai, T::stabilization_tol())
}

pub fn derive_phi_prime_with_tol<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
    tol: T,
) -> Result<DerivedForm<T>> {
    if phi.arity() < 2 {
        return Err(Error::Precondition(format!(
            "derived form needs arity >= 2, got {}",
            phi.arity()
        )));
    }
    if phi.domain_dim() != ai.dim() {
        return Err(Error::Dimension {
            expected: phi.domain_dim(),
            found: ai.dim(),
        });
    }
    Ok(DerivedForm {
        base: phi.clone(),
        ai: Arc::new(ai.clone()),
        tol,
    })
}

impl<T: Real> DerivedForm<T> {
    pub fn arity(&self) -> usize {
        self.base.arity() - 1
    }

    pub fn base(&self) -> &SymmetricMultilinearForm<T> {
        &self.base
    }

    pub fn sequence(&self) -> &ApproximateIdentitySequence<T> {
        &self.ai
    }

    pub fn evaluate_with_report(&self, args: &[ComplexMatrix<T>]) -> Result<Stabilized<T>> {
        if args.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: args.len(),
            });
        }
        let mut full: Vec<ComplexMatrix<T>> = args.to_vec();
        full.push(ComplexMatrix::zeros(self.base.domain_dim()));
        let last = full.len() - 1;
        stabilized_limit(&self.ai, args, self.tol, |e| {
            full[last] = e.clone();
            self.base.evaluate(&full)
        })
    }

    pub fn evaluate(&self, args: &[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> {
        Ok(self.evaluate_with_report(args)?.value)
    }

    pub fn to_form(&self) -> SymmetricMultilinearForm<T> {
        let this = self.clone();
        SymmetricMultilinearForm::from_fn(
            self.arity(),
            self.base.domain_dim(),
            self.base.codomain_dim(),
            move |args| this.evaluate(args),
        )
    }

    /// `phi'' = (phi')'`.
    pub fn derive(&self) -> Result<DerivedForm<T>> {
        derive_phi_prime_with_tol(&self.to_form(), &self.ai, self.tol)
    }
}

/// `lim_r phi(T, E_r, ..., E_r)`.
pub fn recover_phi<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
    t: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    Ok(recover_phi_with_report(phi, ai, t, T::stabilization_tol())?.value)
}

pub fn recover_phi_with_report<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
    t: &ComplexMatrix<T>,
    tol: T,
) -> Result<Stabilized<T>> {
    if phi.arity() == 0 {
        return Err(Error::Invalid("form of arity 0 has no representing map".into()));
    }
    if phi.domain_dim() != ai.dim() {
        return Err(Error::Dimension {
            expected: phi.domain_dim(),
            found: ai.dim(),
        });
    }
    let n = phi.arity();
    if n == 1 {
        return Ok(Stabilized {
            value: phi.evaluate(std::slice::from_ref(t))?,
            index: 0,
            evaluations: 1,
            last_difference: T::zero(),
        });
    }
    stabilized_limit(ai, std::slice::from_ref(t), tol, |e| {
        let mut args = vec![e.clone(); n];
        args[0] = t.clone();
        phi.evaluate(&args)
    })
}

/// The recovered `Phi` on all of `M_d`, built from the matrix units.
pub fn recover_phi_map<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
    tol: T,
) -> Result<LinearMap<T>> {
    let d = phi.domain_dim();
    LinearMap::from_basis_images(d, phi.codomain_dim(), |i, j| {
        Ok(recover_phi_with_report(phi, ai, &ComplexMatrix::unit(d, i, j), tol)?.value)
    })
}

fn scaled_sum<T: Real>(
    terms: impl Iterator<Item = Result<ComplexMatrix<T>>>,
    m: usize,
    scale: T,
) -> Result<ComplexMatrix<T>> {
    let mut acc = ComplexMatrix::zeros(m);
    for term in terms {
        acc = &acc + &term?;
    }
    Ok(acc.scale_real(scale))
}

/// `(1/m!) sum_sigma small(a_sigma(1), ..., a_sigma(m-1) a_sigma(m))` for
/// `m = args.len() >= 2`, where `small` has arity `m - 1`.
pub fn contracted_symmetrization<T: Real>(
    small: impl Fn(&[ComplexMatrix<T>]) -> Result<ComplexMatrix<T>>,
    args: &[ComplexMatrix<T>],
    codomain_dim: usize,
) -> Result<ComplexMatrix<T>> {
    let m = args.len();
    if m < 2 {
        return Err(Error::Arity { expected: 2, found: m });
    }
    let terms = (0..m).permutations(m).map(|sigma| {
        let mut slots: Vec<ComplexMatrix<T>> = sigma[..m - 2].iter().map(|&i| args[i].clone()).collect();
        slots.push(&args[sigma[m - 2]] * &args[sigma[m - 1]]);
        small(&slots)
    });
    scaled_sum(terms, codomain_dim, T::one() / factorial::<T>(m))
}

fn random_args<T: Real>(rng: &mut impl Rng, count: usize, d: usize) -> Vec<ComplexMatrix<T>> {
    (0..count).map(|_| random::matrix(rng, d)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// `phi(a) = (1/n!) sum_sigma phi'(..., a_sigma(n-1) a_sigma(n))`.
    pub hypothesis_residual: f64,
    /// `phi' = (1/(n-1)!) sum_sigma phi''(..., a_sigma(n-2) a_sigma(n-1))`;
    /// only defined for `n >= 3`.
    pub recursion_residual: Option<f64>,
    pub verdict: Verdict,
}

/// Builds `phi` from `Phi` in the symmetrized-product shape and checks the
/// hypothesis and the one-step recursion of the induction on random
/// samples.
pub fn verify_lemma31_recursion<T: Real>(
    phi_map: &LinearMap<T>,
    n: usize,
    samples: usize,
    seed: u64,
    ai: &ApproximateIdentitySequence<T>,
) -> Result<RecursionReport> {
    if n < 2 {
        return Err(Error::Precondition("recursion needs n >= 2".into()));
    }
    check_degree(n)?;
    let d = phi_map.domain_dim();
    let m = phi_map.codomain_dim();
    let phi = SymmetricMultilinearForm::from_representing_map(phi_map.clone(), n);
    let prime = derive_phi_prime(&phi, ai)?;
    let second = if n >= 3 { Some(prime.derive()?) } else { None };
    let mut rng = random::rng(seed);
    let mut hypothesis = T::zero();
    let mut recursion = T::zero();
    for _ in 0..samples {
        let args = random_args::<T>(&mut rng, n, d);
        let lhs = phi.evaluate(&args)?;
        let rhs = contracted_symmetrization(|s| prime.evaluate(s), &args, m)?;
        hypothesis = hypothesis.max(relative_distance(&lhs, &rhs));
        if let Some(second) = &second {
            let short = &args[..n - 1];
            let lhs = prime.evaluate(short)?;
            let rhs = contracted_symmetrization(|s| second.evaluate(s), short, m)?;
            recursion = recursion.max(relative_distance(&lhs, &rhs));
        }
    }
    let tol = T::verdict_tol();
    Ok(RecursionReport {
        n,
        samples,
        seed,
        hypothesis_residual: hypothesis.to_f64_lossy(),
        recursion_residual: second.as_ref().map(|_| recursion.to_f64_lossy()),
        verdict: Verdict::from_pass(hypothesis <= tol && recursion <= tol),
    })
}

fn check_degree(n: usize) -> Result<()> {
    if n > crate::multilinear::MAX_DEGREE {
        return Err(Error::Capacity {
            what: "polynomial degree",
            requested: n,
            limit: crate::multilinear::MAX_DEGREE,
        });
    }
    Ok(())
}

/// Largest `|phi'(a) - (1/(n-1)!) Phi(pi_{n-1}(a))|` (relative) for the
/// form of `a -> Phi(a^n)`.
pub fn derived_form_identity_residual<T: Real>(
    phi_map: &LinearMap<T>,
    n: usize,
    samples: usize,
    seed: u64,
    ai: &ApproximateIdentitySequence<T>,
) -> Result<T> {
    if n < 2 {
        return Err(Error::Precondition("derived form needs n >= 2".into()));
    }
    check_degree(n)?;
    let phi = SymmetricMultilinearForm::from_representing_map(phi_map.clone(), n);
    let prime = derive_phi_prime(&phi, ai)?;
    let scale = T::one() / factorial::<T>(n - 1);
    let mut rng = random::rng(seed);
    let mut worst = T::zero();
    for _ in 0..samples {
        let args = random_args::<T>(&mut rng, n - 1, phi_map.domain_dim());
        let got = prime.evaluate(&args)?;
        let expected = phi_map.apply(&symmetrized_product(&args))?.scale_real(scale);
        worst = worst.max(relative_distance(&got, &expected));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormBoundReport {
    pub samples: usize,
    pub seed: u64,
    pub bound: f64,
    /// Empirical `|phi|`: the largest `|phi(b)| / prod |b_i|` over random
    /// tuples and every tuple `(a, E_r)` the limits evaluated.
    pub phi_norm: f64,
    /// Largest `|phi'(a)| / prod |a_i|`.
    pub max_ratio: f64,
    pub verdict: Verdict,
}

fn norm_product<T: Real>(args: &[ComplexMatrix<T>]) -> T {
    args.iter().fold(T::one(), |acc, a| acc * a.norm())
}

/// `|phi'(a)| <= (1 + slack) C |phi|_emp prod |a_i|` on random samples.
pub fn check_norm_bound<T: Real>(
    phi: &SymmetricMultilinearForm<T>,
    ai: &ApproximateIdentitySequence<T>,
    samples: usize,
    seed: u64,
    slack: T,
) -> Result<NormBoundReport> {
    let prime = derive_phi_prime(phi, ai)?;
    let d = phi.domain_dim();
    let n = phi.arity();
    let mut rng = random::rng(seed);
    let mut phi_norm = T::zero();
    let mut max_ratio = T::zero();
    let ratio = |value: &ComplexMatrix<T>, args: &[ComplexMatrix<T>]| {
        let denom = norm_product(args);
        if denom.is_zero() {
            T::zero()
        } else {
            value.norm() / denom
        }
    };
    for _ in 0..samples {
        let full = random_args::<T>(&mut rng, n, d);
        phi_norm = phi_norm.max(ratio(&phi.evaluate(&full)?, &full));
        let args = random_args::<T>(&mut rng, n - 1, d);
        let mut tuple = args.clone();
        tuple.push(ComplexMatrix::zeros(d));
        for e in ai.projections() {
            tuple[n - 1] = e.clone();
            phi_norm = phi_norm.max(ratio(&phi.evaluate(&tuple)?, &tuple));
        }
        max_ratio = max_ratio.max(ratio(&prime.evaluate(&args)?, &args));
    }
    let bound = ai.bound();
    Ok(NormBoundReport {
        samples,
        seed,
        bound: bound.to_f64_lossy(),
        phi_norm: phi_norm.to_f64_lossy(),
        max_ratio: max_ratio.to_f64_lossy(),
        verdict: Verdict::from_pass(max_ratio <= (T::one() + slack) * bound * phi_norm),
    })
}

/// Largest `|phi'(a_pi) - phi'(a)|` (relative) over random tuples and
/// random permutations.
pub fn check_symmetry<T: Real>(prime: &DerivedForm<T>, samples: usize, seed: u64) -> Result<T> {
    let mut rng = random::rng(seed);
    let d = prime.base().domain_dim();
    let arity = prime.arity();
    let mut worst = T::zero();
    for _ in 0..samples {
        let args = random_args::<T>(&mut rng, arity, d);
        let mut order: Vec<usize> = (0..arity).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let permuted: Vec<_> = order.iter().map(|&i| args[i].clone()).collect();
        worst = worst.max(relative_distance(&prime.evaluate(&args)?, &prime.evaluate(&permuted)?));
    }
    Ok(worst)
}

/// Largest `|phi'(c a + b, ...) - c phi'(a, ...) - phi'(b, ...)|`
/// (relative), with the varying slot chosen at random.
pub fn check_slot_linearity<T: Real>(prime: &DerivedForm<T>, samples: usize, seed: u64) -> Result<T> {
    let mut rng = random::rng(seed);
    let d = prime.base().domain_dim();
    let arity = prime.arity();
    let mut worst = T::zero();
    for _ in 0..samples {
        let args = random_args::<T>(&mut rng, arity, d);
        let slot = rng.random_range(0..arity);
        let a = random::matrix::<T>(&mut rng, d);
        let b = random::matrix::<T>(&mut rng, d);
        let c = random::complex::<T>(&mut rng);
        let with = |x: ComplexMatrix<T>| {
            let mut v = args.clone();
            v[slot] = x;
            prime.evaluate(&v)
        };
        let joint = with(&a.scale(c) + &b)?;
        let split = &with(a.clone())?.scale(c) + &with(b.clone())?;
        worst = worst.max(relative_distance(&joint, &split));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowReport<T: Real> {
    /// Largest gap, over the scanned `r`, between the combination and
    /// `(1/(n-1)) Phi(sum of words with E_r in an interior gap)`.
    pub step_residual: T,
    /// Gap between the limit of the combination and
    /// `Phi(sum_sigma T_sigma(1)...T_sigma(n))`.
    pub limit_residual: T,
}

/// For `phi` the form of `a -> Phi(a^n)` and operators `T_1..T_n`, the
/// combination
/// `sum phi(.., T_sigma(n) E) + sum phi(.., E T_sigma(n)) - sum phi(.., T_sigma(n-1) T_sigma(n), E)`
/// over `sigma in S_n`, compared step by step and in the limit.
pub fn combination_shadow<T: Real>(
    phi_map: &LinearMap<T>,
    ts: &[ComplexMatrix<T>],
    ai: &ApproximateIdentitySequence<T>,
) -> Result<ShadowReport<T>> {
    let n = ts.len();
    if n < 2 {
        return Err(Error::Precondition("shadow identity needs n >= 2".into()));
    }
    check_degree(n)?;
    let m = phi_map.codomain_dim();
    let phi = SymmetricMultilinearForm::from_representing_map(phi_map.clone(), n);
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let combination = |e: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
        let mut acc = ComplexMatrix::zeros(m);
        for sigma in &perms {
            let t = |i: usize| &ts[sigma[i]];
            let mut right: Vec<ComplexMatrix<T>> = (0..n).map(|i| t(i).clone()).collect();
            right[n - 1] = t(n - 1) * e;
            let mut left = right.clone();
            left[n - 1] = e * t(n - 1);
            let mut contracted: Vec<ComplexMatrix<T>> = (0..n - 2).map(|i| t(i).clone()).collect();
            contracted.push(t(n - 2) * t(n - 1));
            contracted.push(e.clone());
            acc = &(&acc + &phi.evaluate(&right)?) + &phi.evaluate(&left)?;
            acc = &acc - &phi.evaluate(&contracted)?;
        }
        Ok(acc)
    };
    let interior = |e: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
        let mut words = ComplexMatrix::zeros(phi_map.domain_dim());
        for sigma in &perms {
            for gap in 1..n {
                let factors = sigma[..gap]
                    .iter()
                    .map(|&i| &ts[i])
                    .chain(std::iter::once(e))
                    .chain(sigma[gap..].iter().map(|&i| &ts[i]));
                words = &words + &product(phi_map.domain_dim(), factors);
            }
        }
        Ok(phi_map.apply(&words)?.scale_real(T::one() / T::of((n - 1) as f64)))
    };
    let mut step_residual = T::zero();
    let limit = stabilized_limit(ai, ts, T::stabilization_tol(), |e| {
        let value = combination(e)?;
        step_residual = step_residual.max(relative_distance(&value, &interior(e)?));
        Ok(value)
    })?;
    let expected = phi_map.apply(&symmetrized_product(ts))?;
    Ok(ShadowReport {
        step_residual,
        limit_residual: relative_distance(&limit.value, &expected),
    })
}

pub const STAGE_ADDITIVITY: &str = "orthogonal additivity";
pub const STAGE_DERIVED_IDENTITY: &str = "derived-form identity";
pub const STAGE_REPRESENTATION: &str = "representation";
pub const STAGE_UNIQUENESS: &str = "uniqueness";
pub const STAGE_STORED_MAP: &str = "stored map agreement";

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOptions<T: Real> {
    pub samples: usize,
    pub seed: u64,
    pub tol: T,
    pub stabilization_tol: T,
    pub sequence: SequenceKind,
}

impl<T: Real> Default for PipelineOptions<T> {
    fn default() -> Self {
        Self {
            samples: 10,
            seed: 0,
            tol: T::verdict_tol(),
            stabilization_tol: T::stabilization_tol(),
            sequence: SequenceKind::Truncation,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StageReport<T: Real> {
    pub name: &'static str,
    pub residual: T,
    pub pass: bool,
    pub witness: Option<OrthogonalPair<T>>,
}

#[derive(Clone, Debug)]
pub struct PipelineReport<T: Real> {
    pub stages: Vec<StageReport<T>>,
    pub verdict: Verdict,
    /// The recovered representing map, when the pipeline got that far.
    pub phi: Option<LinearMap<T>>,
}

impl<T: Real> PipelineReport<T> {
    pub fn stage(&self, name: &str) -> Option<&StageReport<T>> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn max_residual(&self) -> T {
        self.stages.iter().map(|s| s.residual).fold(T::zero(), |a, b| a.max(b))
    }
}

/// A random operator of rank at most `rank` whose terms live on the first
/// `support` coordinates.
pub fn random_finite_rank<T: Real>(rng: &mut impl Rng, d: usize, rank: usize, support: usize) -> FiniteRankOperator<T> {
    let terms = (0..rank)
        .map(|_| {
            RankOneOperator::new(
                random::supported_vector(rng, d, support),
                random::supported_vector(rng, d, support),
            )
            .expect("gaussian vectors are finite")
        })
        .collect();
    FiniteRankOperator::from_terms(d, terms).expect("terms share the dimension")
}

fn additivity_pairs<T: Real>(d: usize, samples: usize, seed: u64) -> Result<Vec<OrthogonalPair<T>>> {
    if d < 2 {
        return Ok(Vec::new());
    }
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            pairs.push(OrthogonalPair::diagonal_units(d, i, j)?);
        }
    }
    pairs.extend(generate_orthogonal_pairs(d, samples, seed)?);
    Ok(pairs)
}

/// Checks, for `P` on operators over `C^d`: additivity on orthogonal pairs
/// (matrix-unit pairs first, then random ones); the derived-form identity
/// on rank-one tuples; `P(T) = Phi(T^n)` for `Phi` recovered through the
/// approximate identity; agreement of `Phi` with the subalgebra
/// construction and the local-unit formula; and, when `P` carries a stored
/// map, agreement with it. Stops at the first failing stage.
pub fn verify_theorem_pipeline<T: Real>(
    p: &HomogeneousPolynomial<T>,
    options: &PipelineOptions<T>,
) -> Result<PipelineReport<T>> {
    if options.samples == 0 {
        return Err(Error::Precondition("samples must be at least 1".into()));
    }
    let d = p.domain_dim();
    let n = p.degree();
    let m = p.codomain_dim();
    let tol = options.tol;
    let ai = ApproximateIdentitySequence::new(d, options.sequence)?;
    let mut stages = Vec::new();
    let finish = |stages: Vec<StageReport<T>>, phi: Option<LinearMap<T>>| {
        let verdict = Verdict::from_pass(stages.iter().all(|s| s.pass));
        Ok(PipelineReport { stages, verdict, phi })
    };

    let pairs = additivity_pairs::<T>(d, options.samples, options.seed)?;
    let additivity = test_orthogonal_additivity(p, &pairs, tol)?;
    stages.push(StageReport {
        name: STAGE_ADDITIVITY,
        residual: additivity.max_residual,
        pass: additivity.verdict.passed(),
        witness: additivity.witness,
    });
    if !stages[0].pass {
        return finish(stages, None);
    }

    let phi = as_symmetric_form(p);
    let mut rng = random::rng(options.seed.wrapping_add(1));
    let mut identity_residual = T::zero();
    if n >= 2 {
        let prime = derive_phi_prime_with_tol(&phi, &ai, options.stabilization_tol)?;
        for _ in 0..options.samples {
            let ts: Vec<ComplexMatrix<T>> = (0..n)
                .map(|_| {
                    let support = rng.random_range(1..=d);
                    random_finite_rank::<T>(&mut rng, d, 1, support).matrix().clone()
                })
                .collect();
            let lhs = phi.evaluate(&ts)?;
            let rhs = contracted_symmetrization(|s| prime.evaluate(s), &ts, m)?;
            identity_residual = identity_residual.max(relative_distance(&lhs, &rhs));
        }
    }
    stages.push(StageReport {
        name: STAGE_DERIVED_IDENTITY,
        residual: identity_residual,
        pass: identity_residual <= tol,
        witness: None,
    });
    if !stages[1].pass {
        return finish(stages, None);
    }

    let recovered = recover_phi_map(&phi, &ai, options.stabilization_tol)?;
    let representation = verify_representation(p, &recovered, options.samples, options.seed.wrapping_add(2), tol)?;
    let representation_residual = T::of(representation.max_residual);
    stages.push(StageReport {
        name: STAGE_REPRESENTATION,
        residual: representation_residual,
        pass: representation.verdict.passed(),
        witness: None,
    });
    if !representation.verdict.passed() {
        return finish(stages, Some(recovered));
    }

    let mut uniqueness = T::zero();
    for _ in 0..options.samples {
        let rank = rng.random_range(1..=d.min(3));
        let support = rng.random_range(1..=d);
        let t = random_finite_rank::<T>(&mut rng, d, rank, support);
        let via_limit = recovered.apply(t.matrix())?;
        let system = enclosing_system(&t, &[], T::rank_tol())?;
        let via_subalgebra = represent_in_system(p, t.matrix(), &system)?;
        let via_unit = represent_via_local_unit(p, &t)?;
        uniqueness = uniqueness
            .max(relative_distance(&via_limit, &via_subalgebra))
            .max(relative_distance(&via_limit, &via_unit));
    }
    stages.push(StageReport {
        name: STAGE_UNIQUENESS,
        residual: uniqueness,
        pass: uniqueness <= tol,
        witness: None,
    });

    if let Some(stored) = p.known_phi() {
        let gap = recovered.combine(
            Complex::new(T::one(), T::zero()),
            &stored,
            Complex::new(-T::one(), T::zero()),
        )?;
        let residual = gap.max_abs_entry() / (T::one() + stored.max_abs_entry());
        stages.push(StageReport {
            name: STAGE_STORED_MAP,
            residual,
            pass: residual <= tol,
            witness: None,
        });
    }
    finish(stages, Some(recovered))
}
