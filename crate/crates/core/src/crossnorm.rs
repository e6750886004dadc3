//! Λ-transformed 2-norms and the (R, R⁻¹) cross norm.
//!
//! For a positive diagonal R acting on Schmidt coefficient vectors the cross
//! norm of ρ equals Σᵢ sᵢ whatever R is; [`decomposition_cost`] evaluates the
//! functional Σₖ pₖ‖R𝒂ᵏ‖‖R⁻¹𝒃ᵏ‖ that every decomposition bounds from above.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::SeparableDecomposition;
use crate::error::{invalid, Error, Result};
use crate::linalg::basis::OperatorBasis;
use crate::linalg::matrix::{vec_norm, ComplexMatrix};
use crate::linalg::svd::svd;
use crate::schmidt::OperatorSchmidt;
use crate::tolerance::Tolerances;

/// Expansion coefficients of a local operator in a Schmidt basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientVector(pub Vec<Complex64>);

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.0)
    }
}

impl From<Vec<Complex64>> for CoefficientVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Positive diagonal R = diag(r₁, …, r_D).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagonalScaling(Vec<f64>);

impl DiagonalScaling {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(invalid("R", "must have at least one entry"));
        }
        if let Some(x) = r.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(invalid("R", format!("entries must be finite and positive, got {x}")));
        }
        Ok(Self(r))
    }

    pub fn identity(d: usize) -> Self {
        Self(vec![1.0; d])
    }

    pub fn uniform(d: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; d])
    }

    /// R = √S.
    pub fn sqrt_s(os: &OperatorSchmidt) -> Result<Self> {
        Self::new(os.s.iter().map(|s| s.sqrt()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|r| 1.0 / r).collect())
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.0.len() {
            return Err(Error::DimensionMismatch(format!("R has size {}, vector has {n}", self.0.len())));
        }
        Ok(())
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(v.len())?;
        Ok(v.iter().zip(&self.0).map(|(z, r)| z * r).collect())
    }

    pub fn apply_inverse(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(v.len())?;
        Ok(v.iter().zip(&self.0).map(|(z, r)| z / r).collect())
    }
}

impl TryFrom<Vec<f64>> for DiagonalScaling {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiagonalScaling> for Vec<f64> {
    fn from(r: DiagonalScaling) -> Self {
        r.0
    }
}

/// Invertible linear map Λ on d×d operators, stored as its matrix L in a
/// fixed basis: coefficients of Λ(X) are L·coefficients(X).
#[derive(Clone, Debug)]
pub struct LinearMap {
    basis: OperatorBasis,
    matrix: ComplexMatrix,
}

impl LinearMap {
    pub fn new(basis: OperatorBasis, matrix: ComplexMatrix) -> Result<Self> {
        let n = basis.len();
        if !basis.is_complete() {
            return Err(invalid("basis", "must be complete"));
        }
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("map matrix must be {n}x{n}")));
        }
        let s = svd(&matrix)?.s;
        let (smax, smin) = (s[0], s[n - 1]);
        if !(smin > 1e-12 * smax) {
            return Err(Error::NotInvertible(smin));
        }
        Ok(Self { basis, matrix })
    }

    pub fn identity(basis: OperatorBasis) -> Self {
        let n = basis.len();
        Self { basis, matrix: ComplexMatrix::identity(n) }
    }

    /// Diagonal map scaling the k-th basis coefficient by rₖ.
    pub fn diagonal(basis: OperatorBasis, r: &DiagonalScaling) -> Result<Self> {
        let m = ComplexMatrix::real_diag(r.entries());
        Self::new(basis, m)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.basis.dim, self.basis.dim) {
            return Err(Error::DimensionMismatch(format!("operator must be {0}x{0}", self.basis.dim)));
        }
        let c = self.basis.coefficients(x);
        Ok(self.basis.synthesize(&self.matrix.apply(&c)))
    }
}

/// ‖X‖_Λ = ‖Λ(X)‖₂.
pub fn lambda_norm(x: &ComplexMatrix, lam: &LinearMap) -> Result<f64> {
    Ok(lam.apply(x)?.norm())
}

/// ‖R·v‖₂, or ‖R⁻¹·v‖₂ when `inverse` is set.
pub fn scaled_vec_norm(v: &CoefficientVector, r: &DiagonalScaling, inverse: bool) -> Result<f64> {
    let w = if inverse { r.apply_inverse(v.as_slice())? } else { r.apply(v.as_slice())? };
    Ok(vec_norm(&w))
}

/// ‖ρ‖_{R,R⁻¹} = Σᵢ sᵢ for any positive diagonal R of matching size.
pub fn cross_norm_value(os: &OperatorSchmidt, r: &DiagonalScaling) -> Result<f64> {
    r.check(os.rank())?;
    Ok(os.s.iter().sum())
}

/// Σₖ pₖ ‖R𝒂ᵏ‖₂ ‖R⁻¹𝒃ᵏ‖₂.
pub fn decomposition_cost(dec: &SeparableDecomposition, r: &DiagonalScaling) -> Result<f64> {
    let (a, b) = match (&dec.a_coeff, &dec.b_coeff) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingCoefficients),
    };
    let mut total = 0.0;
    for ((p, ak), bk) in dec.p.iter().zip(a).zip(b) {
        total += p * scaled_vec_norm(ak, r, false)? * scaled_vec_norm(bk, r, true)?;
    }
    Ok(total)
}

/// Σₖ pₖ ‖Λ(Aᵏ)‖₂ ‖Γ(Bᵏ)‖₂ for arbitrary norm functionals on each side.
pub fn cost_with(
    dec: &SeparableDecomposition,
    mut norm_a: impl FnMut(&ComplexMatrix) -> Result<f64>,
    mut norm_b: impl FnMut(&ComplexMatrix) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for ((p, a), b) in dec.p.iter().zip(&dec.a).zip(&dec.b) {
        total += p * norm_a(a)? * norm_b(b)?;
    }
    Ok(total)
}

/// Fills coefficient vectors by Frobenius projection onto the Schmidt bases,
/// aᵏᵢ = tr(Xᵢ†Aᵏ) and bᵏᵢ = tr(Yᵢ†Bᵏ)*, rejecting operators outside the span.
pub fn project_coefficients(
    dec: &SeparableDecomposition,
    os: &OperatorSchmidt,
    tol: &Tolerances,
) -> Result<SeparableDecomposition> {
    if dec.local_dims() != os.local_dims() {
        return Err(Error::DimensionMismatch("decomposition and Schmidt form disagree on local dims".into()));
    }
    let mut a_coeff = Vec::with_capacity(dec.len());
    let mut b_coeff = Vec::with_capacity(dec.len());
    for (a, b) in dec.a.iter().zip(&dec.b) {
        let (ca, ra) = os.coefficients_a(a);
        let (cb, rb) = os.coefficients_b(b);
        let worst = (ra / a.norm().max(1.0)).max(rb / b.norm().max(1.0));
        if worst > tol.eps {
            return Err(Error::OutsideSchmidtSpan(worst));
        }
        a_coeff.push(CoefficientVector(ca));
        b_coeff.push(CoefficientVector(cb));
    }
    Ok(SeparableDecomposition { a_coeff: Some(a_coeff), b_coeff: Some(b_coeff), ..dec.clone() })
}
