//! Finite-rank operators on the coordinate space `C^d`, their embedding
//! into a full matrix subalgebra, and the representing map of an
//! orthogonally additive polynomial on them.
//!
//! Functionals act bilinearly: `f(v) = sum_i f_i v_i`, so `x (x) f` has
//! matrix `x f^T`.
//!
//! Given rank-one operators `x_j (x) f_j`, [`build_biorthogonal_system`]
//! returns vectors `y_1..y_k` and functionals `g_1..g_k` with
//! `g_i(y_j) = delta_ij`, every `x_j` in the span of the `y`s and every
//! `f_j` in the span of the `g`s. The operators `y_i (x) g_j` then span a
//! copy of `M_k` containing the inputs, and `T -> [g_i(T y_j)]` is an
//! isomorphism onto `M_k`.
//!
//! Input order matters: basis vectors are selected greedily in input order,
//! so permuting the operators can change the system (not its span).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{spectral_norm, ComplexMatrix};
use crate::matrix_rep::{
    extract_phi, generate_orthogonal_pairs, test_orthogonal_additivity, AdditivityReport, UnitalMatrixAlgebra,
};
use crate::multilinear::{as_symmetric_form, polarize, HomogeneousPolynomial};
use crate::scalar::Real;

type CVector<T> = DVector<Complex<T>>;

/// `x (x) f : v -> f(v) x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankOneOperator<T: Real> {
    x: CVector<T>,
    f: CVector<T>,
}

impl<T: Real> RankOneOperator<T> {
    pub fn new(x: CVector<T>, f: CVector<T>) -> Result<Self> {
        if x.len() != f.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                found: f.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Invalid("rank-one operator on a zero-dimensional space".into()));
        }
        if x.iter()
            .chain(f.iter())
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Numeric("rank-one operator".into()));
        }
        Ok(Self { x, f })
    }

    /// `e_i (x) eps_j`, whose matrix is the unit `E_ij`.
    pub fn basis(d: usize, i: usize, j: usize) -> Self {
        let mut x = CVector::zeros(d);
        let mut f = CVector::zeros(d);
        x[i] = Complex::one();
        f[j] = Complex::one();
        Self { x, f }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &CVector<T> {
        &self.x
    }

    pub fn f(&self) -> &CVector<T> {
        &self.f
    }

    pub fn apply(&self, v: &CVector<T>) -> CVector<T> {
        let fv = self.f.dot(v);
        self.x.map(|z| z * fv)
    }

    pub fn matrix(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_dmatrix(&self.x * self.f.transpose()).expect("outer product is square and finite")
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().all(|z| z.is_zero()) || self.f.iter().all(|z| z.is_zero())
    }
}

/// Finite sum of rank-one operators together with its matrix form.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRankOperator<T: Real> {
    dim: usize,
    terms: Vec<RankOneOperator<T>>,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> FiniteRankOperator<T> {
    pub fn from_terms(dim: usize, terms: Vec<RankOneOperator<T>>) -> Result<Self> {
        let mut matrix = ComplexMatrix::zeros(dim);
        for term in &terms {
            if term.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: term.dim(),
                });
            }
            matrix = &matrix + &term.matrix();
        }
        Ok(Self { dim, terms, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
            matrix: ComplexMatrix::zeros(dim),
        }
    }

    /// Splits a matrix into rank-one terms `s_i u_i (x) conj(v_i)` from its
    /// singular value decomposition, largest singular value first. Singular
    /// values at or below `rank_tol * s_max` are dropped.
    pub fn from_matrix(matrix: &ComplexMatrix<T>, rank_tol: T) -> Self {
        let d = matrix.dim();
        let svd = matrix.as_dmatrix().clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^H");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let s_max = order.first().map(|&i| svd.singular_values[i]).unwrap_or_else(T::zero);
        let mut terms = Vec::new();
        for i in order {
            let s = svd.singular_values[i];
            if s_max.is_zero() || s <= rank_tol * s_max {
                continue;
            }
            let x = u.column(i).map(|z| z * Complex::new(s, T::zero()));
            let f = v_t.row(i).transpose();
            terms.push(RankOneOperator { x, f });
        }
        Self {
            dim: d,
            terms,
            matrix: matrix.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[RankOneOperator<T>] {
        &self.terms
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }

    /// Max entrywise gap between the cached matrix and the sum of the terms.
    pub fn term_residual(&self) -> T {
        let sum = self
            .terms
            .iter()
            .fold(ComplexMatrix::zeros(self.dim), |acc, t| &acc + &t.matrix());
        sum.max_abs_diff(&self.matrix)
    }
}

/// Vectors `y_i` and functionals `g_i` with `g_i(y_j) = delta_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiorthogonalSystem<T: Real> {
    dim: usize,
    ys: Vec<CVector<T>>,
    gs: Vec<CVector<T>>,
}

impl<T: Real> BiorthogonalSystem<T> {
    /// Wraps explicit vectors and functionals, checking biorthogonality
    /// within `tol`.
    pub fn new(ys: Vec<CVector<T>>, gs: Vec<CVector<T>>, tol: T) -> Result<Self> {
        let dim = ys.first().map(|y| y.len()).unwrap_or(0);
        if ys.is_empty() || ys.len() != gs.len() {
            return Err(Error::Invalid(
                "system needs equally many (>= 1) vectors and functionals".into(),
            ));
        }
        if ys.iter().chain(gs.iter()).any(|v| v.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: 0,
            });
        }
        let system = Self { dim, ys, gs };
        if system.biorthogonality_residual() > tol {
            return Err(Error::Precondition("g_i(y_j) != delta_ij".into()));
        }
        Ok(system)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.ys.len()
    }

    pub fn ys(&self) -> &[CVector<T>] {
        &self.ys
    }

    pub fn gs(&self) -> &[CVector<T>] {
        &self.gs
    }

    /// `d x k`, columns `y_j`.
    pub fn y_matrix(&self) -> DMatrix<Complex<T>> {
        DMatrix::from_columns(&self.ys)
    }

    /// `k x d`, rows `g_i`.
    pub fn g_matrix(&self) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(self.k(), self.dim, |i, j| self.gs[i][j])
    }

    /// `max |g_i(y_j) - delta_ij|`.
    pub fn biorthogonality_residual(&self) -> T {
        let gram = self.g_matrix() * self.y_matrix();
        let mut worst = T::zero();
        for i in 0..self.k() {
            for j in 0..self.k() {
                let target = if i == j { Complex::one() } else { Complex::zero() };
                worst = worst.max(nalgebra::ComplexField::modulus(gram[(i, j)] - target));
            }
        }
        worst
    }

    /// Largest relative distance of an input column or functional from the
    /// spans of the `y`s and `g`s.
    pub fn containment_residual(&self, ops: &[RankOneOperator<T>]) -> T {
        let y = self.y_matrix();
        let g = self.g_matrix();
        let proj = &y * &g;
        let mut worst = T::zero();
        for op in ops {
            let rx = (&op.x - &proj * &op.x).norm() / (T::one() + op.x.norm());
            let rf = (op.f.transpose() - op.f.transpose() * &proj).norm() / (T::one() + op.f.norm());
            worst = worst.max(rx).max(rf);
        }
        worst
    }
}

/// Greedy, input-ordered selection of numerically independent vectors.
/// A candidate is kept when the smallest singular value of the kept set
/// plus the candidate exceeds `threshold`.
fn select_independent<T: Real>(vectors: &[CVector<T>], threshold: T) -> Vec<usize> {
    let mut selected: Vec<usize> = Vec::new();
    for (j, v) in vectors.iter().enumerate() {
        if v.norm() <= threshold {
            continue;
        }
        let mut cols: Vec<CVector<T>> = selected.iter().map(|&i| vectors[i].clone()).collect();
        cols.push(v.clone());
        let m = DMatrix::from_columns(&cols);
        if cols.len() > m.nrows() {
            continue;
        }
        let smallest = m.singular_values().min();
        if smallest > threshold {
            selected.push(j);
        }
    }
    selected
}

fn largest_singular_value<T: Real>(vectors: &[CVector<T>]) -> T {
    if vectors.is_empty() {
        return T::zero();
    }
    spectral_norm(&DMatrix::from_columns(vectors))
}

fn pseudo_inverse<T: Real>(m: DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let svd = m.svd(true, true);
    let s_max = svd.singular_values.max();
    svd.pseudo_inverse(T::rank_tol() * s_max * T::of(1e-3))
        .map_err(|e| Error::Numeric(format!("pseudo-inverse: {e}")))
}

/// Builds a biorthogonal system whose span contains every input:
///
/// 1. pick a basis `g_1..g_l` of `span{f_j}` among the `f_j` (input order);
/// 2. take the minimum-norm `y_1..y_l` with `g_i(y_j) = delta_ij`;
/// 3. if some `x_j` leaves `U = span{y_1..y_l}`, project the `x_j` onto the
///    orthogonal complement of `U`, pick a basis of the projections, shift
///    each by an element of `U` so that `g_1..g_l` annihilate it, and take
///    the minimum-norm functionals `g_{l+1}..g_k` vanishing on `U` and
///    biorthogonal to the new vectors.
///
/// Rank decisions cut singular values at `rank_tol` times the largest
/// singular value of the input family.
pub fn build_biorthogonal_system<T: Real>(ops: &[RankOneOperator<T>], rank_tol: T) -> Result<BiorthogonalSystem<T>> {
    let first = ops
        .first()
        .ok_or_else(|| Error::Invalid("no operators to embed".into()))?;
    let d = first.dim();
    if let Some(bad) = ops.iter().find(|op| op.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: bad.dim(),
        });
    }
    if ops.iter().all(RankOneOperator::is_zero) {
        return Err(Error::DegenerateInput("every operator is zero".into()));
    }

    let fs: Vec<CVector<T>> = ops.iter().map(|op| op.f.clone()).collect();
    let f_threshold = rank_tol * largest_singular_value(&fs);
    let f_basis = select_independent(&fs, f_threshold);
    if f_basis.is_empty() {
        return Err(Error::DegenerateInput("functionals span the zero space".into()));
    }
    let mut gs: Vec<CVector<T>> = f_basis.iter().map(|&j| fs[j].clone()).collect();
    let l = gs.len();
    let g_head = DMatrix::from_fn(l, d, |i, j| gs[i][j]);
    let y_head = pseudo_inverse(g_head.clone())?;
    let mut ys: Vec<CVector<T>> = (0..l).map(|j| y_head.column(j).into_owned()).collect();

    let xs: Vec<CVector<T>> = ops.iter().map(|op| op.x.clone()).collect();
    let x_threshold = rank_tol * largest_singular_value(&xs);
    let u_basis = DMatrix::from_columns(&ys).svd(true, false).u.expect("requested U");
    let u_basis = u_basis.columns(0, l).into_owned();
    let complement = DMatrix::<Complex<T>>::identity(d, d) - &u_basis * u_basis.adjoint();
    let projected: Vec<CVector<T>> = xs.iter().map(|x| &complement * x).collect();
    let extension = select_independent(&projected, x_threshold);

    if !extension.is_empty() {
        let k = l + extension.len();
        if k > d {
            return Err(Error::Capacity {
                what: "subalgebra order",
                requested: k,
                limit: d,
            });
        }
        for &j in &extension {
            let w = &projected[j];
            let coeffs = &g_head * w;
            let mut y = w.clone();
            for (i, c) in coeffs.iter().enumerate() {
                y -= &ys[i] * *c;
            }
            let n = y.norm();
            ys.push(y.map(|z| z / Complex::new(n, T::zero())));
        }
        let y_all = DMatrix::from_columns(&ys);
        let dual = pseudo_inverse(y_all)?;
        for i in l..k {
            gs.push(dual.row(i).transpose());
        }
    }

    if ys.len() > d {
        return Err(Error::Capacity {
            what: "subalgebra order",
            requested: ys.len(),
            limit: d,
        });
    }
    Ok(BiorthogonalSystem { dim: d, ys, gs })
}

/// The isomorphism between the subalgebra spanned by `y_i (x) g_j` and
/// `M_k`.
#[derive(Clone, Debug)]
pub struct SubalgebraEmbedding<T: Real> {
    system: BiorthogonalSystem<T>,
    y: DMatrix<Complex<T>>,
    g: DMatrix<Complex<T>>,
}

pub fn embed<T: Real>(system: &BiorthogonalSystem<T>) -> SubalgebraEmbedding<T> {
    SubalgebraEmbedding {
        y: system.y_matrix(),
        g: system.g_matrix(),
        system: system.clone(),
    }
}

impl<T: Real> SubalgebraEmbedding<T> {
    pub fn system(&self) -> &BiorthogonalSystem<T> {
        &self.system
    }

    pub fn order(&self) -> usize {
        self.system.k()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// `T -> [g_i(T y_j)]_ij`.
    pub fn forward(&self, t: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if t.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: t.dim(),
            });
        }
        ComplexMatrix::from_dmatrix(&self.g * t.as_dmatrix() * &self.y)
    }

    /// `M -> sum_ij M_ij y_i (x) g_j`, as a matrix on `C^d`.
    pub fn backward_matrix(&self, m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if m.dim() != self.order() {
            return Err(Error::Dimension {
                expected: self.order(),
                found: m.dim(),
            });
        }
        ComplexMatrix::from_dmatrix(&self.y * m.as_dmatrix() * &self.g)
    }

    pub fn backward(&self, m: &ComplexMatrix<T>) -> Result<FiniteRankOperator<T>> {
        let matrix = self.backward_matrix(m)?;
        let ys = self.system.ys();
        let gs = self.system.gs();
        let mut terms = Vec::new();
        for i in 0..self.order() {
            for j in 0..self.order() {
                let c = m.entry(i, j);
                if !c.is_zero() {
                    terms.push(RankOneOperator {
                        x: ys[i].map(|z| z * c),
                        f: gs[j].clone(),
                    });
                }
            }
        }
        Ok(FiniteRankOperator {
            dim: self.dim(),
            terms,
            matrix,
        })
    }

    /// `max |forward(backward(M)) - M|` over the matrix units.
    pub fn round_trip_residual(&self) -> Result<T> {
        let k = self.order();
        let mut worst = T::zero();
        for i in 0..k {
            for j in 0..k {
                let unit = ComplexMatrix::unit(k, i, j);
                let back = self.forward(&self.backward_matrix(&unit)?)?;
                worst = worst.max(back.max_abs_diff(&unit));
            }
        }
        Ok(worst)
    }

    /// `|backward(forward(T)) - T| / (1 + |T|)`; zero iff `T` lies in the
    /// subalgebra.
    pub fn containment_residual(&self, t: &ComplexMatrix<T>) -> Result<T> {
        let back = self.backward_matrix(&self.forward(t)?)?;
        Ok((&back - t).norm() / (T::one() + t.norm()))
    }
}

/// Biorthogonal system for the rank-one terms of `t`, followed by `extra`.
/// A zero `t` with no extras gets the one-dimensional system
/// `y_1 = e_1, g_1 = eps_1`.
pub fn enclosing_system<T: Real>(
    t: &FiniteRankOperator<T>,
    extra: &[RankOneOperator<T>],
    rank_tol: T,
) -> Result<BiorthogonalSystem<T>> {
    let mut ops: Vec<RankOneOperator<T>> = t.terms().iter().filter(|op| !op.is_zero()).cloned().collect();
    ops.extend(extra.iter().cloned());
    if ops.iter().all(RankOneOperator::is_zero) {
        if t.is_zero() {
            let e1 = RankOneOperator::basis(t.dim(), 0, 0);
            return Ok(BiorthogonalSystem {
                dim: t.dim(),
                ys: vec![e1.x.clone()],
                gs: vec![e1.f],
            });
        }
        return Err(Error::DegenerateInput("operator has no nonzero rank-one terms".into()));
    }
    build_biorthogonal_system(&ops, rank_tol)
}

/// `S = sum_i y_i (x) g_i` for the enclosing system of `t`, so that
/// `TS = ST = T`.
pub fn find_local_unit<T: Real>(t: &FiniteRankOperator<T>) -> Result<FiniteRankOperator<T>> {
    let system = enclosing_system(t, &[], T::rank_tol())?;
    let embedding = embed(&system);
    embedding.backward(&ComplexMatrix::identity(system.k()))
}

/// `Phi_M(T)` for the subalgebra `M` of `system`: restrict `P` to `M_k`
/// through the embedding, take the representing map there, and evaluate it
/// on the image of `T`.
pub fn represent_in_system<T: Real>(
    p: &HomogeneousPolynomial<T>,
    t: &ComplexMatrix<T>,
    system: &BiorthogonalSystem<T>,
) -> Result<ComplexMatrix<T>> {
    if p.domain_dim() != system.dim() {
        return Err(Error::Dimension {
            expected: p.domain_dim(),
            found: system.dim(),
        });
    }
    let embedding = embed(system);
    let image = embedding.forward(t)?;
    let k = embedding.order();
    let restricted = {
        let embedding = embedding.clone();
        p.pull_back(k, move |a| {
            embedding
                .backward_matrix(a)
                .unwrap_or_else(|_| ComplexMatrix::nan(embedding.dim()))
        })?
    };
    let phi_m = extract_phi(&as_symmetric_form(&restricted), &UnitalMatrixAlgebra::new(k)?)?;
    phi_m.apply(&image)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentOptions<T: Real> {
    /// Orthogonal pairs sampled for the additivity pre-check.
    pub oa_pairs: usize,
    pub seed: u64,
    pub tol: T,
    pub rank_tol: T,
}

impl<T: Real> Default for RepresentOptions<T> {
    fn default() -> Self {
        Self {
            oa_pairs: 10,
            seed: 0,
            tol: T::verdict_tol(),
            rank_tol: T::rank_tol(),
        }
    }
}

/// Orthogonal additivity of `p` on random orthogonal pairs of operators on
/// `C^d` (`d >= 2`).
pub fn check_additivity_on_operators<T: Real>(
    p: &HomogeneousPolynomial<T>,
    pairs: usize,
    seed: u64,
    tol: T,
) -> Result<AdditivityReport<T>> {
    let pairs = generate_orthogonal_pairs(p.domain_dim(), pairs, seed)?;
    test_orthogonal_additivity(p, &pairs, tol)
}

/// `Phi(T)` where `P(S) = Phi(S^n)` on finite-rank operators, computed in
/// the subalgebra enclosing `T`'s rank-one terms. Fails with
/// [`Error::NotRepresentable`] when the additivity pre-check fails.
pub fn represent_on_finite_rank<T: Real>(
    p: &HomogeneousPolynomial<T>,
    t: &FiniteRankOperator<T>,
    options: &RepresentOptions<T>,
) -> Result<ComplexMatrix<T>> {
    if p.domain_dim() != t.dim() {
        return Err(Error::Dimension {
            expected: p.domain_dim(),
            found: t.dim(),
        });
    }
    if p.domain_dim() >= 2 && options.oa_pairs > 0 {
        let report = check_additivity_on_operators(p, options.oa_pairs, options.seed, options.tol)?;
        if !report.verdict.passed() {
            return Err(Error::NotRepresentable {
                residual: report.max_residual.to_f64_lossy(),
            });
        }
    }
    if t.is_zero() {
        return Ok(ComplexMatrix::zeros(p.codomain_dim()));
    }
    let system = enclosing_system(t, &[], options.rank_tol)?;
    represent_in_system(p, t.matrix(), &system)
}

/// `phi(T, S, ..., S)` with `S` a local unit of `T`: the value any
/// representing map must take at `T`.
pub fn represent_via_local_unit<T: Real>(
    p: &HomogeneousPolynomial<T>,
    t: &FiniteRankOperator<T>,
) -> Result<ComplexMatrix<T>> {
    let s = find_local_unit(t)?;
    let mut args = vec![s.matrix().clone(); p.degree()];
    args[0] = t.matrix().clone();
    polarize(p, &args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn basis_vec(d: usize, i: usize) -> CVector<f64> {
        let mut v = CVector::zeros(d);
        v[i] = Complex::one();
        v
    }

    #[test]
    fn rank_one_action_matches_matrix() {
        let mut rng = random::rng(2);
        let op = RankOneOperator::new(random::vector::<f64>(&mut rng, 4), random::vector(&mut rng, 4)).unwrap();
        let v = random::vector(&mut rng, 4);
        let direct = op.apply(&v);
        let via_matrix = op.matrix().as_dmatrix() * &v;
        assert!((direct - via_matrix).norm() < 1e-14);
    }

    #[test]
    fn single_diagonal_unit_gives_order_one() {
        let system = build_biorthogonal_system(&[RankOneOperator::<f64>::basis(2, 0, 0)], 1e-10).unwrap();
        assert_eq!(system.k(), 1);
        assert!((&system.ys()[0] - basis_vec(2, 0)).norm() < 1e-15);
        assert!((&system.gs()[0] - basis_vec(2, 0)).norm() < 1e-15);
    }

    #[test]
    fn off_diagonal_unit_needs_quotient_step() {
        let system = build_biorthogonal_system(&[RankOneOperator::<f64>::basis(2, 0, 1)], 1e-10).unwrap();
        assert_eq!(system.k(), 2);
        assert!((&system.ys()[0] - basis_vec(2, 1)).norm() < 1e-15);
        assert!((&system.ys()[1] - basis_vec(2, 0)).norm() < 1e-15);
        assert!((&system.gs()[0] - basis_vec(2, 1)).norm() < 1e-15);
        assert!((&system.gs()[1] - basis_vec(2, 0)).norm() < 1e-15);
        let emb = embed(&system);
        let fwd = emb.forward(&ComplexMatrix::unit(2, 0, 1)).unwrap();
        assert!(fwd.max_abs_diff(&ComplexMatrix::unit(2, 1, 0)) < 1e-15);
    }

    #[test]
    fn forward_of_system_units_is_matrix_unit() {
        let mut rng = random::rng(12);
        let ops: Vec<_> = (0..3)
            .map(|_| RankOneOperator::new(random::vector::<f64>(&mut rng, 6), random::vector(&mut rng, 6)).unwrap())
            .collect();
        let system = build_biorthogonal_system(&ops, 1e-10).unwrap();
        let emb = embed(&system);
        for i in 0..system.k() {
            for j in 0..system.k() {
                let op = RankOneOperator::new(system.ys()[i].clone(), system.gs()[j].clone()).unwrap();
                let img = emb.forward(&op.matrix()).unwrap();
                assert!(img.max_abs_diff(&ComplexMatrix::unit(system.k(), i, j)) < 1e-9);
            }
        }
        let s = emb.backward(&ComplexMatrix::identity(system.k())).unwrap();
        assert!(
            emb.forward(s.matrix())
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(system.k()))
                < 1e-9
        );
    }

    #[test]
    fn degenerate_and_empty_inputs() {
        assert!(matches!(
            build_biorthogonal_system::<f64>(&[], 1e-10),
            Err(Error::Invalid(_))
        ));
        let zero = RankOneOperator::new(CVector::<f64>::zeros(3), CVector::zeros(3)).unwrap();
        assert!(matches!(
            build_biorthogonal_system(&[zero], 1e-10),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn dependent_inputs_do_not_inflate_order() {
        let mut rng = random::rng(30);
        let x = random::vector::<f64>(&mut rng, 5);
        let f = random::vector::<f64>(&mut rng, 5);
        let two = Complex::new(2.0, 0.0);
        let ops = vec![
            RankOneOperator::new(x.clone(), f.clone()).unwrap(),
            RankOneOperator::new(x.map(|z| z * two), f.map(|z| z * two)).unwrap(),
        ];
        let system = build_biorthogonal_system(&ops, 1e-10).unwrap();
        assert!(system.k() <= 2);
        assert!(system.biorthogonality_residual() < 1e-9);
        assert!(system.containment_residual(&ops) < 1e-9);
    }

    #[test]
    fn svd_split_reproduces_matrix() {
        let mut rng = random::rng(5);
        let m: ComplexMatrix<f64> = random::matrix(&mut rng, 4);
        let op = FiniteRankOperator::from_matrix(&m, 1e-10);
        assert_eq!(op.terms().len(), 4);
        assert!(op.term_residual() < 1e-12);
        let rank_one = RankOneOperator::basis(4, 1, 2).matrix();
        assert_eq!(FiniteRankOperator::from_matrix(&rank_one, 1e-10).terms().len(), 1);
    }

    #[test]
    fn local_unit_examples() {
        let t = FiniteRankOperator::from_terms(3, vec![RankOneOperator::<f64>::basis(3, 0, 0)]).unwrap();
        let s = find_local_unit(&t).unwrap();
        assert!(s.matrix().max_abs_diff(&ComplexMatrix::unit(3, 0, 0)) < 1e-15);

        let t = FiniteRankOperator::from_terms(2, vec![RankOneOperator::<f64>::basis(2, 0, 1)]).unwrap();
        let s = find_local_unit(&t).unwrap();
        assert!(s.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);

        let zero = FiniteRankOperator::<f64>::zero(3);
        let s = find_local_unit(&zero).unwrap();
        assert!((zero.matrix() * s.matrix()).is_zero());
    }

    #[test]
    fn square_represents_as_identity() {
        let p = HomogeneousPolynomial::<f64>::power(2, 3).unwrap();
        let t = FiniteRankOperator::from_terms(3, vec![RankOneOperator::basis(3, 0, 0)]).unwrap();
        let value = represent_on_finite_rank(&p, &t, &RepresentOptions::default()).unwrap();
        assert!(value.max_abs_diff(t.matrix()) < 1e-12);
        let zero = represent_on_finite_rank(&p, &FiniteRankOperator::zero(3), &RepresentOptions::default()).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn trace_square_is_not_representable() {
        let p = HomogeneousPolynomial::<f64>::trace_power(2, 3).unwrap();
        let t = FiniteRankOperator::from_terms(3, vec![RankOneOperator::basis(3, 0, 0)]).unwrap();
        assert!(matches!(
            represent_on_finite_rank(&p, &t, &RepresentOptions::default()),
            Err(Error::NotRepresentable { .. })
        ));
    }

    #[test]
    fn enlarged_system_gives_same_value() {
        let mut rng = random::rng(21);
        let phi = random::linear_map::<f64>(&mut rng, 3, 2);
        let p = HomogeneousPolynomial::canonical(3, phi).unwrap();
        let t = FiniteRankOperator::from_terms(3, vec![RankOneOperator::basis(3, 0, 0)]).unwrap();
        let small = enclosing_system(&t, &[], 1e-10).unwrap();
        let big = enclosing_system(&t, &[RankOneOperator::basis(3, 1, 1)], 1e-10).unwrap();
        assert_eq!((small.k(), big.k()), (1, 2));
        let a = represent_in_system(&p, t.matrix(), &small).unwrap();
        let b = represent_in_system(&p, t.matrix(), &big).unwrap();
        assert!(a.relative_distance(&b) < 1e-9);
    }

    #[test]
    fn local_unit_route_matches_stored_map() {
        let mut rng = random::rng(22);
        let phi = random::linear_map::<f64>(&mut rng, 4, 2);
        let p = HomogeneousPolynomial::canonical(3, phi.clone()).unwrap();
        let x = random::vector(&mut rng, 4);
        let f = random::vector(&mut rng, 4);
        let t = FiniteRankOperator::from_terms(4, vec![RankOneOperator::new(x, f).unwrap()]).unwrap();
        let via_unit = represent_via_local_unit(&p, &t).unwrap();
        let stored = phi.apply(t.matrix()).unwrap();
        assert!(via_unit.relative_distance(&stored) < 1e-9);
    }
}
