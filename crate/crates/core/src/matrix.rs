//! Dense complex matrices and linear maps between matrix spaces.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square complex matrix of order `k`.
///
/// Carries elements of the full matrix algebra `M_k` and operators on the
/// coordinate space `C^d` (as their `d x d` matrix form). Entries are always
/// finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real>(DMatrix<Complex<T>>);

impl<T: Real> ComplexMatrix<T> {
    pub fn from_dmatrix(m: DMatrix<Complex<T>>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !is_finite(z)) {
            return Err(Error::Numeric("matrix entries".into()));
        }
        Ok(Self(m))
    }

    /// Builds from row-major rows.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Invalid("matrix must have at least one row".into()));
        }
        for row in rows {
            if row.len() != k {
                return Err(Error::Dimension {
                    expected: k,
                    found: row.len(),
                });
            }
        }
        Self::from_dmatrix(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn zeros(k: usize) -> Self {
        Self(DMatrix::zeros(k, k))
    }

    pub fn identity(k: usize) -> Self {
        Self(DMatrix::identity(k, k))
    }

    /// Matrix unit `E_ij` (zero-based indices).
    pub fn unit(k: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(k, k);
        m[(i, j)] = Complex::one();
        Self(m)
    }

    /// All-NaN matrix, used to propagate failures through infallible closures.
    pub fn nan(k: usize) -> Self {
        let nan = T::of(f64::NAN);
        Self(DMatrix::from_element(k, k, Complex::new(nan, nan)))
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn from_fn(k: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self(DMatrix::from_fn(k, k, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.0[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex<T>> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex<T>> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(is_finite)
    }

    /// Errors with a numeric error if any entry is NaN or infinite.
    pub fn ensure_finite(self, context: &str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Numeric(context.to_string()))
        }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self(self.0.map(|z| z * c))
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(Complex::new(c, T::zero()))
    }

    pub fn trace(&self) -> Complex<T> {
        self.0.trace()
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut acc = Self::identity(self.dim());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.is_zero())
    }

    /// Operator (spectral) norm, the largest singular value.
    pub fn norm(&self) -> T {
        spectral_norm(&self.0)
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).modulus()))
    }

    /// Row-major vectorization, index `i * k + j`.
    pub fn vectorize(&self) -> DVector<Complex<T>> {
        let k = self.dim();
        DVector::from_fn(k * k, |idx, _| self.0[(idx / k, idx % k)])
    }

    pub fn from_vectorized(k: usize, v: &DVector<Complex<T>>) -> Self {
        Self(DMatrix::from_fn(k, k, |i, j| v[i * k + j]))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(self * rhs)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(self + rhs)
    }

    pub fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }

    /// `|self - other| / (1 + max(|self|, |other|))` in operator norm.
    pub fn relative_distance(&self, other: &Self) -> T {
        relative_distance(self, other)
    }
}

pub(crate) fn is_finite<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn spectral_norm<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    if m.iter().all(|z| z.is_zero()) {
        return T::zero();
    }
    m.clone().singular_values().max()
}

/// Residual under the crate-wide tolerance policy: absolute distance over
/// `1 + max operand norm`.
pub fn relative_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    let diff = (a - b).norm();
    diff / (T::one() + a.norm().max(b.norm()))
}

impl<'a, T: Real> Add<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a, T: Real> Sub<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl<'a, T: Real> Mul<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<T: Real> Add for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> Self {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> Self {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl<T: Real> Mul for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> Self {
        ComplexMatrix(self.0 * rhs.0)
    }
}

impl<T: Real> Neg for ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> Self {
        ComplexMatrix(-self.0)
    }
}

/// Product of a sequence of matrices, identity of order `k` when empty.
pub fn product<'a, T: Real>(k: usize, factors: impl IntoIterator<Item = &'a ComplexMatrix<T>>) -> ComplexMatrix<T> {
    let mut iter = factors.into_iter();
    match iter.next() {
        None => ComplexMatrix::identity(k),
        Some(first) => iter.fold(first.clone(), |acc, m| &acc * m),
    }
}

/// Linear map `M_k -> M_m`, stored as the `m^2 x k^2` matrix acting on
/// row-major vectorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap<T: Real> {
    domain_dim: usize,
    codomain_dim: usize,
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> LinearMap<T> {
    pub fn new(domain_dim: usize, codomain_dim: usize, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if matrix.ncols() != domain_dim * domain_dim {
            return Err(Error::Dimension {
                expected: domain_dim * domain_dim,
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain_dim * codomain_dim {
            return Err(Error::Dimension {
                expected: codomain_dim * codomain_dim,
                found: matrix.nrows(),
            });
        }
        if matrix.iter().any(|z| !is_finite(z)) {
            return Err(Error::Numeric("linear map coefficients".into()));
        }
        Ok(Self {
            domain_dim,
            codomain_dim,
            matrix,
        })
    }

    /// Infers both orders from the shape of `matrix`; each side must be a
    /// perfect square.
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let domain = exact_sqrt(matrix.ncols())
            .ok_or_else(|| Error::Invalid(format!("{} columns is not a square count", matrix.ncols())))?;
        let codomain = exact_sqrt(matrix.nrows())
            .ok_or_else(|| Error::Invalid(format!("{} rows is not a square count", matrix.nrows())))?;
        Self::new(domain, codomain, matrix)
    }

    pub fn identity(k: usize) -> Self {
        Self {
            domain_dim: k,
            codomain_dim: k,
            matrix: DMatrix::identity(k * k, k * k),
        }
    }

    pub fn zero(domain_dim: usize, codomain_dim: usize) -> Self {
        Self {
            domain_dim,
            codomain_dim,
            matrix: DMatrix::zeros(codomain_dim * codomain_dim, domain_dim * domain_dim),
        }
    }

    /// `a -> tr(a)` into `M_1`.
    pub fn trace(k: usize) -> Self {
        let mut matrix = DMatrix::zeros(1, k * k);
        for i in 0..k {
            matrix[(0, i * k + i)] = Complex::one();
        }
        Self {
            domain_dim: k,
            codomain_dim: 1,
            matrix,
        }
    }

    /// Materializes a map given by its action on the matrix units `E_ij`.
    pub fn from_basis_images(
        domain_dim: usize,
        codomain_dim: usize,
        mut image: impl FnMut(usize, usize) -> Result<ComplexMatrix<T>>,
    ) -> Result<Self> {
        let k = domain_dim;
        let mut matrix = DMatrix::zeros(codomain_dim * codomain_dim, k * k);
        for i in 0..k {
            for j in 0..k {
                let value = image(i, j)?;
                if value.dim() != codomain_dim {
                    return Err(Error::Dimension {
                        expected: codomain_dim,
                        found: value.dim(),
                    });
                }
                matrix.set_column(i * k + j, &value.vectorize());
            }
        }
        Self::new(domain_dim, codomain_dim, matrix)
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn apply(&self, a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if a.dim() != self.domain_dim {
            return Err(Error::Dimension {
                expected: self.domain_dim,
                found: a.dim(),
            });
        }
        let v = &self.matrix * a.vectorize();
        Ok(ComplexMatrix::from_vectorized(self.codomain_dim, &v))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: Complex<T>, other: &Self, beta: Complex<T>) -> Result<Self> {
        if self.domain_dim != other.domain_dim || self.codomain_dim != other.codomain_dim {
            return Err(Error::Dimension {
                expected: self.domain_dim,
                found: other.domain_dim,
            });
        }
        Ok(Self {
            domain_dim: self.domain_dim,
            codomain_dim: self.codomain_dim,
            matrix: self.matrix.map(|z| z * alpha) + other.matrix.map(|z| z * beta),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).modulus()))
    }

    pub fn max_abs_entry(&self) -> T {
        self.matrix.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n && r > 0).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn unit_products_follow_index_rule() {
        let k = 3;
        for (i, j, p, q) in itertools::iproduct!(0..k, 0..k, 0..k, 0..k) {
            let lhs = &ComplexMatrix::<f64>::unit(k, i, j) * &ComplexMatrix::unit(k, p, q);
            let rhs = if j == p {
                ComplexMatrix::unit(k, i, q)
            } else {
                ComplexMatrix::zeros(k)
            };
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rejects_non_square_and_nan() {
        let rows = vec![vec![cx::<f64>(1.0, 0.0), cx(2.0, 0.0)]];
        assert!(matches!(ComplexMatrix::from_rows(&rows), Err(Error::Dimension { .. })));
        let rows = vec![vec![cx::<f64>(f64::NAN, 0.0)]];
        assert!(matches!(ComplexMatrix::from_rows(&rows), Err(Error::Numeric(_))));
    }

    #[test]
    fn spectral_norm_of_projection_is_one() {
        let p = ComplexMatrix::<f64>::diagonal(&[cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)]);
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert!((p.frobenius_norm() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_map_identity_and_trace() {
        let a = ComplexMatrix::<f64>::from_fn(2, |i, j| cx(i as f64 + 1.0, j as f64));
        assert_eq!(LinearMap::identity(2).apply(&a).unwrap(), a);
        let t = LinearMap::trace(2).apply(&a).unwrap();
        assert_eq!(t.dim(), 1);
        assert_eq!(t.entry(0, 0), a.trace());
    }

    #[test]
    fn from_basis_images_round_trips() {
        let map = LinearMap::<f64>::from_basis_images(2, 2, |i, j| Ok(ComplexMatrix::unit(2, j, i))).unwrap();
        let a = ComplexMatrix::<f64>::from_fn(2, |i, j| cx((2 * i + j) as f64, 1.0));
        let transposed = ComplexMatrix::from_dmatrix(a.as_dmatrix().transpose()).unwrap();
        assert_eq!(map.apply(&a).unwrap(), transposed);
    }

    #[test]
    fn from_matrix_requires_square_counts() {
        assert!(LinearMap::<f64>::from_matrix(DMatrix::zeros(4, 3)).is_err());
        let m = LinearMap::<f64>::from_matrix(DMatrix::zeros(1, 9)).unwrap();
        assert_eq!((m.domain_dim(), m.codomain_dim()), (3, 1));
    }
}
