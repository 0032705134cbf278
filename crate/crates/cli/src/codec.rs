//! JSON encodings. Complex scalars are `[re, im]` pairs (a bare number is
//! read as a real scalar), vectors are arrays of scalars, and matrices are
//! arrays of rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use orthopoly_core::finite_rank::{FiniteRankOperator, RankOneOperator};
use orthopoly_core::matrix::{ComplexMatrix, LinearMap};
use orthopoly_core::multilinear::HomogeneousPolynomial;
use orthopoly_core::scalar::Real;
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] orthopoly_core::Error),
}

type CodecResult<T> = std::result::Result<T, CodecError>;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ScalarRepr {
    Real(f64),
    Complex([f64; 2]),
}

impl ScalarRepr {
    pub fn value(&self) -> Complex<f64> {
        match *self {
            ScalarRepr::Real(re) => Complex::new(re, 0.0),
            ScalarRepr::Complex([re, im]) => Complex::new(re, im),
        }
    }
}

pub fn scalar_json(z: Complex<f64>) -> Value {
    json!([z.re, z.im])
}

pub fn vector_json(v: &DVector<Complex<f64>>) -> Value {
    Value::Array(v.iter().map(|z| scalar_json(*z)).collect())
}

pub fn matrix_json(m: &ComplexMatrix<f64>) -> Value {
    dmatrix_json(m.as_dmatrix())
}

pub fn dmatrix_json(m: &DMatrix<Complex<f64>>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| scalar_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn vector_from(raw: &[ScalarRepr]) -> DVector<Complex<f64>> {
    DVector::from_iterator(raw.len(), raw.iter().map(ScalarRepr::value))
}

pub fn dmatrix_from(rows: &[Vec<ScalarRepr>]) -> CodecResult<DMatrix<Complex<f64>>> {
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || ncols == 0 {
        return Err(CodecError::Shape("matrix has no entries".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CodecError::Shape(format!(
            "row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j].value()))
}

pub fn matrix_from(rows: &[Vec<ScalarRepr>]) -> CodecResult<ComplexMatrix<f64>> {
    Ok(ComplexMatrix::from_dmatrix(dmatrix_from(rows)?)?)
}

/// `{"degree": n, "kind": ..., ...}`:
///
/// * `"canonical"` with `"phi"`, the `m^2 x k^2` matrix of the linear map on
///   row-major vectorizations;
/// * `"power"` / `"trace-power"` with `"dim"`;
/// * `"zero"` with `"dim"` and optional `"codomain_dim"` (default 1).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub degree: usize,
    pub kind: String,
    #[serde(default)]
    pub phi: Option<Vec<Vec<ScalarRepr>>>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub codomain_dim: Option<usize>,
}

impl PolynomialSpec {
    pub fn build(&self) -> CodecResult<HomogeneousPolynomial<f64>> {
        let dim = || {
            self.dim
                .ok_or_else(|| CodecError::Shape(format!("kind {:?} needs \"dim\"", self.kind)))
        };
        Ok(match self.kind.as_str() {
            "canonical" => {
                let rows = self
                    .phi
                    .as_ref()
                    .ok_or_else(|| CodecError::Shape("kind \"canonical\" needs \"phi\"".into()))?;
                let phi = LinearMap::from_matrix(dmatrix_from(rows)?)?;
                HomogeneousPolynomial::canonical(self.degree, phi)?
            }
            "power" => HomogeneousPolynomial::power(self.degree, dim()?)?,
            "trace-power" => HomogeneousPolynomial::trace_power(self.degree, dim()?)?,
            "zero" => HomogeneousPolynomial::zero(self.degree, dim()?, self.codomain_dim.unwrap_or(1))?,
            other => {
                return Err(CodecError::Shape(format!(
                    "unknown polynomial kind {other:?} (expected canonical, power, trace-power or zero)"
                )))
            }
        })
    }
}

pub fn parse_polynomial(text: &str) -> CodecResult<HomogeneousPolynomial<f64>> {
    serde_json::from_str::<PolynomialSpec>(text)?.build()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub x: Vec<ScalarRepr>,
    pub f: Vec<ScalarRepr>,
}

/// `{"dim": d, "terms": [{"x": [...], "f": [...]}]}`, or
/// `{"dim": d, "matrix": [[...]]}` for an operator split by its singular
/// value decomposition.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub dim: usize,
    #[serde(default)]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<ScalarRepr>>>,
}

impl OperatorSpec {
    pub fn build(&self) -> CodecResult<FiniteRankOperator<f64>> {
        match (&self.terms, &self.matrix) {
            (Some(terms), None) => {
                let terms = terms
                    .iter()
                    .map(|t| RankOneOperator::new(vector_from(&t.x), vector_from(&t.f)))
                    .collect::<orthopoly_core::Result<Vec<_>>>()?;
                Ok(FiniteRankOperator::from_terms(self.dim, terms)?)
            }
            (None, Some(rows)) => {
                let m = matrix_from(rows)?;
                if m.dim() != self.dim {
                    return Err(CodecError::Shape(format!(
                        "matrix has order {}, expected dim {}",
                        m.dim(),
                        self.dim
                    )));
                }
                Ok(FiniteRankOperator::from_matrix(&m, f64::rank_tol()))
            }
            _ => Err(CodecError::Shape(
                "operator needs exactly one of \"terms\" or \"matrix\"".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OperatorList {
    Many(Vec<OperatorSpec>),
    Wrapped { operators: Vec<OperatorSpec> },
    One(OperatorSpec),
}

/// A single operator, an array of operators, or `{"operators": [...]}`.
pub fn parse_operators(text: &str) -> CodecResult<Vec<FiniteRankOperator<f64>>> {
    let value: Value = serde_json::from_str(text)?;
    let list: OperatorList = serde_json::from_value(value)
        .map_err(|e| CodecError::Shape(format!("not an operator or operator list: {e}")))?;
    let specs = match list {
        OperatorList::Many(v) | OperatorList::Wrapped { operators: v } => v,
        OperatorList::One(op) => vec![op],
    };
    if specs.is_empty() {
        return Err(CodecError::Shape("operator list is empty".into()));
    }
    specs.iter().map(OperatorSpec::build).collect()
}
