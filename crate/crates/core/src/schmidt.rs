//! Operator-Schmidt decomposition ρ = Σᵢ sᵢ Xᵢ ⊗ Yᵢ.
//!
//! Hermitian operators are expanded in the Hermitian Gell-Mann bases of both
//! sides; the real coefficient matrix is the realignment expressed in those
//! bases, so its singular values are the Schmidt coefficients and its
//! singular vectors give Hermitian Xᵢ, Yᵢ directly, including inside
//! degenerate blocks. Non-Hermitian operators use the complex SVD of the raw
//! realignment followed by a per-pair phase rotation.
//!
//! Output is canonical: within a block of equal coefficients the left
//! vectors are the Gram–Schmidt orthonormalisation of the projected standard
//! basis, every left vector has its first non-negligible entry real and
//! positive, and ties are ordered lexicographically (descending).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crossnorm::CoefficientVector;
use crate::decomp::SeparableDecomposition;
use crate::error::{Error, Result};
use crate::linalg::basis::gell_mann_basis;
use crate::linalg::matrix::{combine, kron, vec_inner, vec_norm, ComplexMatrix, ZERO};
use crate::linalg::state::{realign_operator, BipartiteState};
use crate::linalg::svd::{real_svd, svd};
use crate::tolerance::Tolerances;

pub const DEFAULT_RANK_CUTOFF: f64 = 1e-10;

/// Relative gap below which neighbouring Schmidt coefficients are treated as one block.
const TIE_RELATIVE: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSchmidt {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub s: Vec<f64>,
    #[serde(rename = "X")]
    pub x: Vec<ComplexMatrix>,
    #[serde(rename = "Y")]
    pub y: Vec<ComplexMatrix>,
    pub lambda_total: f64,
    /// Whether every Xᵢ and Yᵢ is Hermitian.
    pub hermitian: bool,
}

impl OperatorSchmidt {
    /// Operator-Schmidt rank D.
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn local_dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    /// aᵢ = tr(Xᵢ† A) and the residual ‖A − Σ aᵢXᵢ‖₂.
    pub fn coefficients_a(&self, a: &ComplexMatrix) -> (Vec<Complex64>, f64) {
        let c: Vec<Complex64> = self.x.iter().map(|x| x.inner(a)).collect();
        let back = combine(c.iter().copied().zip(&self.x), self.d_a, self.d_a);
        (c, back.distance(a))
    }

    /// bᵢ = tr(Yᵢ† B)* so that B = Σ bᵢ* Yᵢ, and the projection residual.
    pub fn coefficients_b(&self, b: &ComplexMatrix) -> (Vec<Complex64>, f64) {
        let c: Vec<Complex64> = self.y.iter().map(|y| y.inner(b).conj()).collect();
        let back = combine(c.iter().map(|z| z.conj()).zip(&self.y), self.d_b, self.d_b);
        (c, back.distance(b))
    }

    pub fn operator_a(&self, a: &[Complex64]) -> ComplexMatrix {
        combine(a.iter().copied().zip(&self.x), self.d_a, self.d_a)
    }

    pub fn operator_b(&self, b: &[Complex64]) -> ComplexMatrix {
        combine(b.iter().map(|z| z.conj()).zip(&self.y), self.d_b, self.d_b)
    }

    /// max |tr(Xᵢ†Xⱼ) − δᵢⱼ| over both sides.
    pub fn orthonormality_residual(&self) -> f64 {
        let side = |ops: &[ComplexMatrix]| {
            let mut worst: f64 = 0.0;
            for (i, a) in ops.iter().enumerate() {
                for (j, b) in ops.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((a.inner(b) - want).norm());
                }
            }
            worst
        };
        side(&self.x).max(side(&self.y))
    }
}

/// Operator-Schmidt decomposition of a state.
pub fn operator_schmidt(state: &BipartiteState, rank_cutoff: f64) -> Result<OperatorSchmidt> {
    operator_schmidt_of(state.rho(), state.d_a(), state.d_b(), rank_cutoff, &Tolerances::default())
}

/// Operator-Schmidt decomposition of an arbitrary operator on ℂ^dA ⊗ ℂ^dB.
pub fn operator_schmidt_of(
    op: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    rank_cutoff: f64,
    tol: &Tolerances,
) -> Result<OperatorSchmidt> {
    if rank_cutoff < 0.0 || !rank_cutoff.is_finite() {
        return Err(crate::error::invalid("rank_cutoff", "must be finite and nonnegative"));
    }
    let realigned = realign_operator(op, d_a, d_b)?;
    if op.is_hermitian(tol.herm) {
        hermitian_route(&realigned, d_a, d_b, rank_cutoff)
    } else {
        complex_route(&realigned, d_a, d_b, rank_cutoff, tol)
    }
}

fn vectorise(ops: &[ComplexMatrix]) -> ComplexMatrix {
    // column k = row-major entries of ops[k]
    let n = ops[0].rows() * ops[0].cols();
    ComplexMatrix::from_fn(n, ops.len(), |i, k| ops[k].entries()[i])
}

fn hermitian_route(m: &ComplexMatrix, d_a: usize, d_b: usize, cutoff: f64) -> Result<OperatorSchmidt> {
    let ga = gell_mann_basis(d_a);
    let gb = gell_mann_basis(d_b);
    // T_αβ = tr(ρ Gα⊗Gβ) = vec(Gα)† M conj(vec(Gβ)) for Hermitian G.
    let t = &(&vectorise(&ga.ops).adjoint() * m) * &vectorise(&gb.ops).conj();
    let t_real = DMatrix::from_fn(t.rows(), t.cols(), |i, j| t[(i, j)].re);
    let r = real_svd(&t_real)?;
    let to_c = |mat: &DMatrix<f64>| {
        ComplexMatrix::from_fn(mat.nrows(), mat.ncols(), |i, j| Complex64::new(mat[(i, j)], 0.0))
    };
    let triples = canonical_triples(&t, &to_c(&r.u), &r.s, &to_c(&r.v), cutoff);
    let mut x = Vec::with_capacity(triples.len());
    let mut y = Vec::with_capacity(triples.len());
    let mut s = Vec::with_capacity(triples.len());
    for (sk, u, v) in triples {
        // Coefficients are real up to rounding; keep the operators exactly Hermitian.
        x.push(combine(u.iter().map(|c| Complex64::new(c.re, 0.0)).zip(&ga.ops), d_a, d_a));
        y.push(combine(v.iter().map(|c| Complex64::new(c.re, 0.0)).zip(&gb.ops), d_b, d_b));
        s.push(sk);
    }
    Ok(finish(d_a, d_b, s, x, y, true))
}

fn complex_route(
    m: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    cutoff: f64,
    tol: &Tolerances,
) -> Result<OperatorSchmidt> {
    let r = svd(m)?;
    let triples = canonical_triples(m, &r.u, &r.s, &r.v, cutoff);
    let mut x = Vec::with_capacity(triples.len());
    let mut y = Vec::with_capacity(triples.len());
    let mut s = Vec::with_capacity(triples.len());
    let mut all_hermitian = true;
    for (sk, u, v) in triples {
        let xi = ComplexMatrix::from_row_major(d_a, d_a, &u);
        let vc: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        let yi = ComplexMatrix::from_row_major(d_b, d_b, &vc);
        let (xi, yi, ok) = hermitise_pair(xi, yi, tol.eps);
        all_hermitian &= ok;
        x.push(xi);
        y.push(yi);
        s.push(sk);
    }
    Ok(finish(d_a, d_b, s, x, y, all_hermitian))
}

fn finish(
    d_a: usize,
    d_b: usize,
    s: Vec<f64>,
    x: Vec<ComplexMatrix>,
    y: Vec<ComplexMatrix>,
    hermitian: bool,
) -> OperatorSchmidt {
    let lambda_total = s.iter().sum();
    OperatorSchmidt { d_a, d_b, s, x, y, lambda_total, hermitian }
}

/// Rotates (X, Y) → (e^{iφ}X, e^{−iφ}Y) with φ minimising ‖e^{iφ}X − (e^{iφ}X)†‖₂,
/// i.e. making tr(X²) real and positive. Returns whether both become Hermitian.
pub fn hermitise_pair(x: ComplexMatrix, y: ComplexMatrix, eps: f64) -> (ComplexMatrix, ComplexMatrix, bool) {
    if x.is_hermitian(eps) && y.is_hermitian(eps) {
        return (x, y, true);
    }
    let t = (&x * &x).trace();
    if t.norm() <= eps {
        return (x, y, false);
    }
    let phase = Complex64::from_polar(1.0, -0.5 * t.arg());
    let x2 = x.scale(phase);
    let y2 = y.scale(phase.conj());
    if x2.is_hermitian(eps) && y2.is_hermitian(eps) {
        (x2.hermitian_part(), y2.hermitian_part(), true)
    } else {
        (x2, y2, false)
    }
}

type Triple = (f64, Vec<Complex64>, Vec<Complex64>);

/// Canonical (s, u, v) with m = Σ s u v†, sorted as described in the module docs.
fn canonical_triples(
    m: &ComplexMatrix,
    u: &ComplexMatrix,
    s: &[f64],
    v: &ComplexMatrix,
    cutoff: f64,
) -> Vec<Triple> {
    let kept: Vec<usize> = (0..s.len()).filter(|&k| s[k] > cutoff).collect();
    if kept.is_empty() {
        return Vec::new();
    }
    let tie = TIE_RELATIVE * s[kept[0]];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &k in &kept {
        match blocks.last_mut() {
            Some(b) if s[*b.last().unwrap()] - s[k] <= tie => b.push(k),
            _ => blocks.push(vec![k]),
        }
    }
    let m_adj = m.adjoint();
    let mut out = Vec::with_capacity(kept.len());
    for block in blocks {
        let mut triples: Vec<Triple> = if block.len() == 1 {
            let k = block[0];
            vec![(s[k], u.column(k), v.column(k))]
        } else {
            let span: Vec<Vec<Complex64>> = block.iter().map(|&k| u.column(k)).collect();
            canonical_span_basis(&span)
                .into_iter()
                .map(|uk| {
                    let w = m_adj.apply(&uk);
                    let sk = vec_norm(&w);
                    let vk = w.into_iter().map(|z| z / sk).collect();
                    (sk, uk, vk)
                })
                .collect()
        };
        for t in triples.iter_mut() {
            fix_phase(t);
        }
        triples.sort_by(|a, b| lex_desc(&a.1, &b.1));
        out.extend(triples);
    }
    out
}

/// Orthonormal basis of span(vs) from Gram–Schmidt on the projections of the
/// standard basis vectors, in index order.
fn canonical_span_basis(vs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = vs[0].len();
    let want = vs.len();
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(want);
    for j in 0..n {
        if out.len() == want {
            break;
        }
        // P e_j = Σ_k v_k (v_k† e_j)
        let mut w = vec![ZERO; n];
        for vk in vs {
            let c = vk[j].conj();
            for (wi, x) in w.iter_mut().zip(vk) {
                *wi += x * c;
            }
        }
        for _ in 0..2 {
            for q in &out {
                let c = vec_inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
        }
        let norm = vec_norm(&w);
        if norm > 1e-6 {
            out.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    out
}

fn fix_phase((_, u, v): &mut Triple) {
    if let Some(lead) = u.iter().find(|z| z.norm() > 1e-8).copied() {
        let phase = lead.conj() / lead.norm();
        for z in u.iter_mut() {
            *z *= phase;
        }
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lex_desc(a: &[Complex64], b: &[Complex64]) -> Ordering {
    const EQ: f64 = 1e-12;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > EQ {
                return q.total_cmp(&p);
            }
        }
    }
    Ordering::Equal
}

/// Σᵢ sᵢ Xᵢ ⊗ Yᵢ.
pub fn reconstruct(os: &OperatorSchmidt) -> ComplexMatrix {
    let n = os.d_a * os.d_b;
    let mut out = ComplexMatrix::zeros(n, n);
    for ((s, x), y) in os.s.iter().zip(&os.x).zip(&os.y) {
        out += &kron(x, y).scale_re(*s);
    }
    out
}

/// ρ = Σᵢ (sᵢ/λ) (√λ Xᵢ) ⊗ (√λ Yᵢ) with λ = Σ sᵢ.
pub fn normalized_form(os: &OperatorSchmidt) -> SeparableDecomposition {
    let lambda = os.lambda_total;
    let root = lambda.sqrt();
    let d = os.rank();
    let p = os.s.iter().map(|s| s / lambda).collect();
    let a = os.x.iter().map(|x| x.scale_re(root)).collect();
    let b = os.y.iter().map(|y| y.scale_re(root)).collect();
    let unit = |k: usize| -> CoefficientVector {
        CoefficientVector((0..d).map(|i| if i == k { Complex64::new(root, 0.0) } else { ZERO }).collect())
    };
    SeparableDecomposition {
        d_a: os.d_a,
        d_b: os.d_b,
        p,
        a,
        b,
        a_coeff: Some((0..d).map(unit).collect()),
        b_coeff: Some((0..d).map(unit).collect()),
        meta: None,
    }
}

/// Operator-Schmidt rank required by constructions that need a full basis.
pub fn require_full_rank(os: &OperatorSchmidt) -> Result<usize> {
    let d = os.d_a;
    if os.d_a != os.d_b {
        return Err(Error::DimensionMismatch(format!("local dimensions {}x{} differ", os.d_a, os.d_b)));
    }
    if os.rank() < d * d {
        return Err(Error::RankDeficient { rank: os.rank(), required: d * d });
    }
    Ok(d)
}
