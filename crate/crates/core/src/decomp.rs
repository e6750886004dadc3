//! Generalised separable decompositions ρ = Σₖ pₖ Aᵏ ⊗ Bᵏ.
//!
//! [`theorem1_decompose`] builds the family attaining the (R, R⁻¹) cross norm
//! from Z = √S R⁻¹ U with U a row isometry; [`theorem2_decompose`] restricts
//! U to be unitary and cₖ to one constant, which equalises ‖R𝒂ᵏ‖ and ‖R⁻¹𝒃ᵏ‖
//! across terms and fixes pₖ = Σᵢ|Uᵢₖ|²sᵢ / Σⱼsⱼ.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crossnorm::{scaled_vec_norm, CoefficientVector, DiagonalScaling};
use crate::error::{invalid, Error, Result};
use crate::linalg::basis::{pauli, phase_point_operators, PHASE_POINT_BLOCH};
use crate::linalg::matrix::{kron, ComplexMatrix};
use crate::linalg::random::{random_orthogonal, random_row_isometry, real_to_complex, rng};
use crate::schmidt::OperatorSchmidt;
use crate::tolerance::Tolerances;

/// Smallest admissible weight; constructors divide by √pₖ.
pub const MIN_WEIGHT: f64 = 1e-12;

/// D×N matrix with U·U† = 𝟙_D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct IsometryMatrix(ComplexMatrix);

impl IsometryMatrix {
    pub fn new(u: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(u, Tolerances::default().eps)
    }

    pub fn with_tolerance(u: ComplexMatrix, eps: f64) -> Result<Self> {
        if u.rows() > u.cols() {
            return Err(invalid("U", format!("a {}x{} matrix cannot be a row isometry", u.rows(), u.cols())));
        }
        let residual = (&u * &u.adjoint()).distance(&ComplexMatrix::identity(u.rows()));
        if residual > eps {
            return Err(Error::NotIsometry(residual));
        }
        Ok(Self(u))
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    /// First `rows` rows of a seeded Haar-random `cols`×`cols` unitary.
    pub fn haar(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        if rows == 0 || rows > cols {
            return Err(invalid("U", format!("need 0 < rows <= cols, got {rows}x{cols}")));
        }
        Ok(Self(random_row_isometry(rows, cols, &mut rng(seed))))
    }

    /// Seeded real orthogonal D×D matrix.
    pub fn real_haar(d: usize, seed: u64) -> Self {
        Self(real_to_complex(&random_orthogonal(d, &mut rng(seed))))
    }

    pub fn from_orthogonal(o: &DMatrix<f64>) -> Result<Self> {
        if o.nrows() != o.ncols() {
            return Err(invalid("O", "must be square"));
        }
        let u = Self::new(real_to_complex(o))?;
        u.require_unitary()?;
        Ok(u)
    }

    /// First `rows` rows of the `cols`-point DFT matrix divided by √cols.
    pub fn dft_rows(rows: usize, cols: usize) -> Result<Self> {
        let n = cols as f64;
        let m = ComplexMatrix::from_fn(rows, cols, |j, k| {
            Complex64::from_polar(1.0 / n.sqrt(), 2.0 * std::f64::consts::PI * (j * k) as f64 / n)
        });
        Self::new(m)
    }

    /// Rotation from the canonical Bell Schmidt frame (𝟙, σx, σy, σz)/√2 to
    /// the phase-point frame: column k is (1, nₖ)/2.
    pub fn bell_phase_point() -> Self {
        Self(ComplexMatrix::from_fn(4, 4, |i, k| {
            let v = if i == 0 { 1.0 } else { PHASE_POINT_BLOCH[k][i - 1] };
            Complex64::new(0.5 * v, 0.0)
        }))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn is_unitary(&self) -> bool {
        self.0.is_square()
    }

    fn require_unitary(&self) -> Result<()> {
        if !self.is_unitary() {
            return Err(invalid("U", format!("must be square, got {}x{}", self.rows(), self.cols())));
        }
        let residual = (&self.0.adjoint() * &self.0).distance(&ComplexMatrix::identity(self.cols()));
        if residual > Tolerances::default().eps {
            return Err(Error::NotIsometry(residual));
        }
        Ok(())
    }

    /// Largest deviation of the row and column sums of (|Uᵢₖ|²) from 1.
    pub fn doubly_stochastic_residual(&self) -> f64 {
        let (r, c) = self.0.shape();
        let mut worst: f64 = 0.0;
        for i in 0..r {
            let row: f64 = (0..c).map(|k| self.0[(i, k)].norm_sqr()).sum();
            worst = worst.max((row - 1.0).abs());
        }
        for k in 0..c {
            let col: f64 = (0..r).map(|i| self.0[(i, k)].norm_sqr()).sum();
            worst = worst.max((col - 1.0).abs());
        }
        worst
    }
}

impl TryFrom<ComplexMatrix> for IsometryMatrix {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<IsometryMatrix> for ComplexMatrix {
    fn from(u: IsometryMatrix) -> Self {
        u.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeta {
    #[serde(rename = "R")]
    pub r: DiagonalScaling,
    #[serde(rename = "U")]
    pub u: IsometryMatrix,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableDecomposition {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub p: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<ComplexMatrix>,
    #[serde(rename = "B")]
    pub b: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_coeff: Option<Vec<CoefficientVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_coeff: Option<Vec<CoefficientVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<DecompositionMeta>,
}

impl SeparableDecomposition {
    /// Raw decomposition without coefficient vectors.
    pub fn new(d_a: usize, d_b: usize, p: Vec<f64>, a: Vec<ComplexMatrix>, b: Vec<ComplexMatrix>) -> Result<Self> {
        let dec = Self { d_a, d_b, p, a, b, a_coeff: None, b_coeff: None, meta: None };
        dec.validate()?;
        Ok(dec)
    }

    /// Structural checks: matching lengths and shapes, finite nonnegative weights.
    pub fn validate(&self) -> Result<()> {
        let n = self.p.len();
        if self.a.len() != n || self.b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights, {} A operators, {} B operators",
                n,
                self.a.len(),
                self.b.len()
            )));
        }
        if let Some(w) = self.p.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(invalid("p", format!("weights must be finite and nonnegative, got {w}")));
        }
        if self.a.iter().any(|m| m.shape() != (self.d_a, self.d_a)) {
            return Err(Error::DimensionMismatch(format!("A operators must be {0}x{0}", self.d_a)));
        }
        if self.b.iter().any(|m| m.shape() != (self.d_b, self.d_b)) {
            return Err(Error::DimensionMismatch(format!("B operators must be {0}x{0}", self.d_b)));
        }
        for coeffs in [&self.a_coeff, &self.b_coeff].into_iter().flatten() {
            if coeffs.len() != n {
                return Err(Error::DimensionMismatch("coefficient vector count".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn local_dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn weight_sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Σₖ pₖ Aᵏ ⊗ Bᵏ.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.d_a * self.d_b;
        let mut out = ComplexMatrix::zeros(n, n);
        for ((p, a), b) in self.p.iter().zip(&self.a).zip(&self.b) {
            out += &kron(a, b).scale_re(*p);
        }
        out
    }

    /// ‖ρ − Σₖ pₖ Aᵏ⊗Bᵏ‖₂ / ‖ρ‖₂.
    pub fn relative_residual(&self, rho: &ComplexMatrix) -> f64 {
        self.reconstruct().distance(rho) / rho.norm().max(f64::MIN_POSITIVE)
    }

    /// Worst Hermiticity residual over all local operators.
    pub fn hermiticity_residual(&self) -> f64 {
        self.a.iter().chain(&self.b).map(ComplexMatrix::hermiticity_residual).fold(0.0, f64::max)
    }

    /// Copy with the local operators and coefficient vectors of the given terms removed.
    pub fn without_terms(&self, drop: &[usize]) -> Self {
        let keep = |k: &usize| !drop.contains(k);
        let pick = |v: &Vec<ComplexMatrix>| (0..v.len()).filter(keep).map(|k| v[k].clone()).collect();
        let pick_c = |v: &Option<Vec<CoefficientVector>>| {
            v.as_ref().map(|v| (0..v.len()).filter(keep).map(|k| v[k].clone()).collect())
        };
        Self {
            d_a: self.d_a,
            d_b: self.d_b,
            p: (0..self.len()).filter(keep).map(|k| self.p[k]).collect(),
            a: pick(&self.a),
            b: pick(&self.b),
            a_coeff: pick_c(&self.a_coeff),
            b_coeff: pick_c(&self.b_coeff),
            meta: None,
        }
    }
}

/// Theorem-1 decomposition with
/// aᵏᵢ = (√S R⁻¹U)ᵢₖ / √(pₖcₖ) and bᵏᵢ = √(cₖ/pₖ)·(√S R U)ᵢₖ,
/// so that R⁻¹𝒃ᵏ = cₖ R𝒂ᵏ and the cost equals Σᵢsᵢ.
pub fn theorem1_decompose(
    os: &OperatorSchmidt,
    r: &DiagonalScaling,
    u: &IsometryMatrix,
    p: &[f64],
    c: &[f64],
) -> Result<SeparableDecomposition> {
    let d = os.rank();
    let n = u.cols();
    if r.len() != d {
        return Err(Error::DimensionMismatch(format!("R has size {}, Schmidt rank is {d}", r.len())));
    }
    if u.rows() != d {
        return Err(Error::DimensionMismatch(format!("U has {} rows, Schmidt rank is {d}", u.rows())));
    }
    if p.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch(format!("U has {n} columns, got {} weights and {} scales", p.len(), c.len())));
    }
    if let Some(w) = p.iter().find(|w| !(w.is_finite() && **w >= MIN_WEIGHT)) {
        return Err(invalid("p", format!("weights must be at least {MIN_WEIGHT:e}, got {w}")));
    }
    if let Some(x) = c.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(invalid("c", format!("scales must be finite and positive, got {x}")));
    }
    let um = u.matrix();
    let root_s: Vec<f64> = os.s.iter().map(|s| s.sqrt()).collect();
    let rr = r.entries();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut a_coeff = Vec::with_capacity(n);
    let mut b_coeff = Vec::with_capacity(n);
    for k in 0..n {
        let ka = 1.0 / (p[k] * c[k]).sqrt();
        let kb = (c[k] / p[k]).sqrt();
        let ak: Vec<Complex64> = (0..d).map(|i| um[(i, k)] * (root_s[i] / rr[i] * ka)).collect();
        let bk: Vec<Complex64> = (0..d).map(|i| um[(i, k)] * (root_s[i] * rr[i] * kb)).collect();
        a.push(os.operator_a(&ak));
        b.push(os.operator_b(&bk));
        a_coeff.push(CoefficientVector(ak));
        b_coeff.push(CoefficientVector(bk));
    }
    Ok(SeparableDecomposition {
        d_a: os.d_a,
        d_b: os.d_b,
        p: p.to_vec(),
        a,
        b,
        a_coeff: Some(a_coeff),
        b_coeff: Some(b_coeff),
        meta: Some(DecompositionMeta { r: r.clone(), u: u.clone(), c: c.to_vec() }),
    })
}

/// pₖ = Σᵢ |Uᵢₖ|² sᵢ / Σⱼ sⱼ.
pub fn theorem2_weights(os: &OperatorSchmidt, u: &IsometryMatrix) -> Vec<f64> {
    let total = os.lambda_total;
    (0..u.cols())
        .map(|k| (0..u.rows()).map(|i| u.matrix()[(i, k)].norm_sqr() * os.s[i]).sum::<f64>() / total)
        .collect()
}

/// Theorem-2 equal-norm decomposition: exactly D terms, one scale c.
pub fn theorem2_decompose(
    os: &OperatorSchmidt,
    r: &DiagonalScaling,
    u: &IsometryMatrix,
    c: f64,
) -> Result<SeparableDecomposition> {
    u.require_unitary()?;
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("c", format!("must be finite and positive, got {c}")));
    }
    let p = theorem2_weights(os, u);
    theorem1_decompose(os, r, u, &p, &vec![c; u.cols()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualNormReport {
    /// ‖R𝒂ᵏ‖² per term.
    pub w_a: Vec<f64>,
    /// ‖R⁻¹𝒃ᵏ‖² per term.
    pub w_b: Vec<f64>,
    pub max_deviation_a: f64,
    pub max_deviation_b: f64,
    /// Σᵢsᵢ / Σₖpₖcₖ when scales are recorded.
    pub expected_w: Option<f64>,
    pub expected_deviation: Option<f64>,
    pub pass: bool,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Checks that ‖R𝒂ᵏ‖² and ‖R⁻¹𝒃ᵏ‖² are constant across k, and against
/// Σsᵢ/Σpₖcₖ when both the Schmidt form and the scales are available.
pub fn equal_norm_check(
    dec: &SeparableDecomposition,
    r: &DiagonalScaling,
    os: Option<&OperatorSchmidt>,
    tol: &Tolerances,
) -> Result<EqualNormReport> {
    let (a, b) = match (&dec.a_coeff, &dec.b_coeff) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingCoefficients),
    };
    let w_a = a.iter().map(|v| scaled_vec_norm(v, r, false).map(|x| x * x)).collect::<Result<Vec<_>>>()?;
    let w_b = b.iter().map(|v| scaled_vec_norm(v, r, true).map(|x| x * x)).collect::<Result<Vec<_>>>()?;
    let scale = |w: &[f64]| w.iter().copied().fold(1.0, f64::max);
    let max_deviation_a = spread(&w_a);
    let max_deviation_b = spread(&w_b);
    let mut pass = max_deviation_a <= tol.eps * scale(&w_a) && max_deviation_b <= tol.eps * scale(&w_b);
    let (mut expected_w, mut expected_deviation) = (None, None);
    if let (Some(os), Some(meta)) = (os, &dec.meta) {
        let pc: f64 = dec.p.iter().zip(&meta.c).map(|(p, c)| p * c).sum();
        let w = os.lambda_total / pc;
        let dev = w_a.iter().map(|x| (x - w).abs()).fold(0.0, f64::max);
        pass &= dev <= tol.eps * w.max(1.0);
        expected_w = Some(w);
        expected_deviation = Some(dev);
    }
    Ok(EqualNormReport { w_a, w_b, max_deviation_a, max_deviation_b, expected_w, expected_deviation, pass })
}

/// Theorem-2 decomposition with a real orthogonal rotation, giving Hermitian
/// local operators whenever the Schmidt operators are Hermitian.
pub fn hermitian_variant(
    os: &OperatorSchmidt,
    r: &DiagonalScaling,
    o: &DMatrix<f64>,
    c: f64,
) -> Result<SeparableDecomposition> {
    if !os.hermitian {
        return Err(Error::NotHermitisable);
    }
    let u = IsometryMatrix::from_orthogonal(o)?;
    let mut dec = theorem2_decompose(os, r, &u, c)?;
    let scale = dec.a.iter().chain(&dec.b).map(ComplexMatrix::norm).fold(1.0, f64::max);
    if dec.hermiticity_residual() > Tolerances::default().eps * scale {
        return Err(Error::NotHermitisable);
    }
    for m in dec.a.iter_mut().chain(dec.b.iter_mut()) {
        *m = m.hermitian_part();
    }
    Ok(dec)
}

/// Seeded real orthogonal D×D matrix for [`hermitian_variant`].
pub fn seeded_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    random_orthogonal(d, &mut rng(seed))
}

/// Bell state as ¼(𝟙⊗𝟙 + σx⊗σx + σy⊗σyᵀ + σz⊗σz).
pub fn bell_stabiliser() -> SeparableDecomposition {
    let a: Vec<ComplexMatrix> = (0..4).map(pauli).collect();
    let b = a.iter().map(ComplexMatrix::transpose).collect();
    SeparableDecomposition::new(2, 2, vec![0.25; 4], a, b).expect("fixture is well formed")
}

/// Bell state with √2|0⟩⟨0|, √2|1⟩⟨1| replacing the 𝟙 and σz terms.
pub fn bell_example2() -> SeparableDecomposition {
    let r2 = std::f64::consts::SQRT_2;
    let a = vec![ComplexMatrix::real_diag(&[r2, 0.0]), ComplexMatrix::real_diag(&[0.0, r2]), pauli(1), pauli(2)];
    let b = a.iter().map(ComplexMatrix::transpose).collect();
    SeparableDecomposition::new(2, 2, vec![0.25; 4], a, b).expect("fixture is well formed")
}

/// Bell state as ¼ Σₖ Wₖ ⊗ Wₖᵀ over the phase-point operators.
pub fn bell_phase_point() -> SeparableDecomposition {
    let a = phase_point_operators().ops;
    let b = a.iter().map(ComplexMatrix::transpose).collect();
    SeparableDecomposition::new(2, 2, vec![0.25; 4], a, b).expect("fixture is well formed")
}
