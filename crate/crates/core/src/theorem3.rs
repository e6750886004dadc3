//! Maps ℰ, ℱ carrying the maximally entangled state Ψ to ρ, unit-trace
//! W-bases, conditions (A) and (B), and the resulting state spaces.
//!
//! With a reference basis {Cⱼ} normalised to tr(Cᵢ†Cⱼ) = dδᵢⱼ,
//! ℰ(σ) = Σⱼ √sⱼ Xⱼ tr(Cⱼ†σ) and ℱ(σ) = Σⱼ √sⱼ Yⱼ tr((Cⱼᵀ)†σ). For any real
//! orthogonal T the operators Wₖ = Σⱼ Tₖⱼ Cⱼ give
//! ρ = (1/d²) Σₖ ℰ(Wₖ) ⊗ ℱ(Wₖᵀ), and choosing T with Te = g makes every
//! local operator unit trace.
//!
//! Quantum-state hulls are only sampled here, so the spaces built by
//! [`build_theorem3_spaces`] can be falsified numerically but never certified.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crossnorm::{cost_with, CoefficientVector};
use crate::decomp::SeparableDecomposition;
use crate::error::{invalid, Error, Result};
use crate::feasibility::{sampled_pure_projectors, SpaceMode, StateSpace};
use crate::linalg::basis::{hermitian_basis, OperatorBasis};
use crate::linalg::matrix::{combine, ComplexMatrix};
use crate::linalg::random::{random_orthogonal, rng};
use crate::linalg::state::two_qubit_schmidt_state;
use crate::schmidt::{operator_schmidt, require_full_rank, OperatorSchmidt, DEFAULT_RANK_CUTOFF};
use crate::tolerance::Tolerances;

/// Default reference basis: Hermitian, κ = d, first element 𝟙.
pub fn default_reference_basis(d: usize) -> OperatorBasis {
    hermitian_basis(d)
}

#[derive(Clone, Debug)]
pub struct SchmidtMaps {
    os: OperatorSchmidt,
    c: OperatorBasis,
    c_t: OperatorBasis,
    root_s: Vec<f64>,
}

/// Stores ℰ, ℱ for a full-rank Schmidt form and a complete κ = d basis.
pub fn build_maps(os: &OperatorSchmidt, c: &OperatorBasis) -> Result<SchmidtMaps> {
    let d = require_full_rank(os)?;
    if c.dim != d || !c.is_complete() {
        return Err(invalid("C", format!("reference basis must be a complete {d}x{d} operator basis")));
    }
    let tol = Tolerances::default();
    if (c.normalization - d as f64).abs() > tol.eps || c.orthogonality_residual() > tol.eps * d as f64 {
        return Err(invalid("C", format!("reference basis must satisfy tr(Ci^† Cj) = {d} δij")));
    }
    Ok(SchmidtMaps {
        os: os.clone(),
        c: c.clone(),
        c_t: c.transposed(),
        root_s: os.s.iter().map(|s| s.sqrt()).collect(),
    })
}

impl SchmidtMaps {
    pub fn dim(&self) -> usize {
        self.c.dim
    }

    pub fn schmidt(&self) -> &OperatorSchmidt {
        &self.os
    }

    pub fn reference_basis(&self) -> &OperatorBasis {
        &self.c
    }

    fn check(&self, sigma: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if sigma.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("operator must be {d}x{d}")));
        }
        Ok(())
    }

    /// ℰ(σ) = Σⱼ √sⱼ Xⱼ tr(Cⱼ†σ).
    pub fn apply_e(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(sigma)?;
        let coeffs: Vec<Complex64> = self.c.ops.iter().zip(&self.root_s).map(|(c, r)| c.inner(sigma) * r).collect();
        Ok(combine(coeffs.into_iter().zip(&self.os.x), self.dim(), self.dim()))
    }

    /// ℱ(σ) = Σⱼ √sⱼ Yⱼ tr((Cⱼᵀ)†σ).
    pub fn apply_f(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(sigma)?;
        let coeffs: Vec<Complex64> = self.c_t.ops.iter().zip(&self.root_s).map(|(c, r)| c.inner(sigma) * r).collect();
        Ok(combine(coeffs.into_iter().zip(&self.os.y), self.dim(), self.dim()))
    }

    /// ℰ⁻¹(σ) = Σₖ Cₖ tr(Xₖ†σ) / (d√sₖ).
    pub fn apply_e_inverse(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(sigma)?;
        let d = self.dim() as f64;
        let coeffs: Vec<Complex64> = self.os.x.iter().zip(&self.root_s).map(|(x, r)| x.inner(sigma) / (d * r)).collect();
        Ok(combine(coeffs.into_iter().zip(&self.c.ops), self.dim(), self.dim()))
    }

    /// ℱ⁻¹(σ) = Σₖ Cₖᵀ tr(Yₖ†σ) / (d√sₖ).
    pub fn apply_f_inverse(&self, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check(sigma)?;
        let d = self.dim() as f64;
        let coeffs: Vec<Complex64> = self.os.y.iter().zip(&self.root_s).map(|(y, r)| y.inner(sigma) / (d * r)).collect();
        Ok(combine(coeffs.into_iter().zip(&self.c_t.ops), self.dim(), self.dim()))
    }

    /// ℰ†(𝟙) = Σⱼ √sⱼ tr(Xⱼ)* Cⱼ; equals 𝟙 iff ℰ is trace preserving.
    pub fn e_adjoint_identity(&self) -> ComplexMatrix {
        let coeffs = self.os.x.iter().zip(&self.root_s).map(|(x, r)| x.trace().conj() * *r);
        combine(coeffs.zip(&self.c.ops), self.dim(), self.dim())
    }

    pub fn f_adjoint_identity(&self) -> ComplexMatrix {
        let coeffs = self.os.y.iter().zip(&self.root_s).map(|(y, r)| y.trace().conj() * *r);
        combine(coeffs.zip(&self.c_t.ops), self.dim(), self.dim())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionAReport {
    /// eⱼ = √sⱼ tr(Xⱼ).
    pub e: Vec<f64>,
    /// fⱼ = √sⱼ tr(Yⱼ).
    pub f: Vec<f64>,
    pub distance: f64,
    pub norm_e: f64,
    pub norm_f: f64,
    /// Largest imaginary part among the traces (nonzero only for non-Hermitian frames).
    pub imaginary_residual: f64,
    /// ℰ†(𝟙) = 𝟙 and ℱ†(𝟙) = 𝟙 with the default reference basis.
    pub e_trace_preserving: bool,
    pub f_trace_preserving: bool,
    pub pass: bool,
}

/// Condition (A): e = f and both are unit vectors.
pub fn check_condition_a(os: &OperatorSchmidt, tol: &Tolerances) -> Result<ConditionAReport> {
    let d = require_full_rank(os)?;
    let mut imaginary_residual: f64 = 0.0;
    let mut side = |ops: &[ComplexMatrix]| -> Vec<f64> {
        ops.iter()
            .zip(&os.s)
            .map(|(x, s)| {
                let t = x.trace() * s.sqrt();
                imaginary_residual = imaginary_residual.max(t.im.abs());
                t.re
            })
            .collect()
    };
    let e = side(&os.x);
    let f = side(&os.y);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let distance = e.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let (norm_e, norm_f) = (norm(&e), norm(&f));
    let maps = build_maps(os, &default_reference_basis(d))?;
    let id = ComplexMatrix::identity(d);
    let e_trace_preserving = maps.e_adjoint_identity().distance(&id) <= tol.eps;
    let f_trace_preserving = maps.f_adjoint_identity().distance(&id) <= tol.eps;
    let pass = distance <= tol.eps
        && (norm_e - 1.0).abs() <= tol.eps
        && (norm_f - 1.0).abs() <= tol.eps
        && imaginary_residual <= tol.eps;
    Ok(ConditionAReport { e, f, distance, norm_e, norm_f, imaginary_residual, e_trace_preserving, f_trace_preserving, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceAlignment {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Rows of the orthogonal matrix T.
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

impl TraceAlignment {
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.t.len();
        DMatrix::from_fn(n, n, |i, j| self.t[i][j])
    }

    /// ‖Te − g‖₂.
    pub fn alignment_residual(&self) -> f64 {
        let t = self.matrix();
        (t * DVector::from_column_slice(&self.e) - DVector::from_column_slice(&self.g)).norm()
    }

    /// ‖TᵀT − 𝟙‖₂.
    pub fn orthogonality_residual(&self) -> f64 {
        let t = self.matrix();
        let n = t.nrows();
        (t.transpose() * &t - DMatrix::identity(n, n)).norm()
    }
}

/// Reflection mapping unit vector `from` to unit vector `to`; identity when they coincide.
fn householder(from: &DVector<f64>, to: &DVector<f64>) -> DMatrix<f64> {
    let n = from.len();
    let v = from - to;
    let vv = v.dot(&v);
    if vv.sqrt() < 1e-14 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv)
}

/// Orthogonal T with Te = g, from the Householder reflection through e − g.
/// A seed pre-composes a random rotation of the complement of e, giving a
/// different valid T per seed.
pub fn construct_t(condition_a: &ConditionAReport, seed: Option<u64>) -> Result<TraceAlignment> {
    if !condition_a.pass {
        return Err(Error::ConditionFailed {
            condition: 'A',
            detail: format!("|e - f| = {:.3e}, |e| = {:.12}", condition_a.distance, condition_a.norm_e),
        });
    }
    let n = condition_a.e.len();
    let d = (n as f64).sqrt();
    let e = DVector::from_column_slice(&condition_a.e);
    let e = &e / e.norm();
    let g = DVector::from_element(n, 1.0 / d);
    let mut t = householder(&e, &g);
    if let Some(seed) = seed {
        // Columns 1.. of the reflection e₁ ↔ e span the complement of e.
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        let basis = householder(&e1, &e);
        let v = basis.columns(1, n - 1).into_owned();
        let o = random_orthogonal(n - 1, &mut rng(seed));
        let q = &e * e.transpose() + &v * o * v.transpose();
        t *= q;
    }
    Ok(TraceAlignment {
        e: condition_a.e.clone(),
        f: condition_a.f.clone(),
        g: g.iter().copied().collect(),
        t: (0..n).map(|i| t.row(i).iter().copied().collect()).collect(),
    })
}

/// Wₖ = Σⱼ Tₖⱼ Cⱼ.
pub fn build_w_basis(maps: &SchmidtMaps, ta: &TraceAlignment) -> Result<OperatorBasis> {
    let c = maps.reference_basis();
    if ta.t.len() != c.len() {
        return Err(Error::DimensionMismatch(format!("T is {0}x{0}, basis has {1} elements", ta.t.len(), c.len())));
    }
    let ops = ta
        .t
        .iter()
        .map(|row| combine(row.iter().map(|&x| Complex64::new(x, 0.0)).zip(&c.ops), c.dim, c.dim))
        .collect();
    OperatorBasis::new(c.dim, ops, c.normalization)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionBReport {
    pub min_s: f64,
    /// 1/(d·minₖsₖ), the ceiling on ‖ℰ⁻¹(σ)‖₂² over quantum states.
    pub bound: f64,
    /// 1/d².
    pub threshold: f64,
    /// minₖsₖ > 1/d² (strict).
    pub pass: bool,
    /// minₖsₖ equals 1/d² within ε.
    pub marginal: bool,
    pub samples: usize,
    /// Largest sampled ‖ℰ⁻¹(σ)‖₂ and ‖ℱ⁻¹(σ)‖₂ over pure σ.
    pub max_sampled_e_norm: f64,
    pub max_sampled_f_norm: f64,
    /// Every sampled norm is below √d.
    pub sampled_pass: bool,
}

/// Condition (B) by the sufficient spectral test and a sampled direct check.
pub fn check_condition_b(os: &OperatorSchmidt, samples: usize, seed: u64, tol: &Tolerances) -> Result<ConditionBReport> {
    let d = require_full_rank(os)?;
    let df = d as f64;
    let min_s = os.s.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = 1.0 / (df * df);
    let maps = build_maps(os, &default_reference_basis(d))?;
    let mut max_e: f64 = 0.0;
    let mut max_f: f64 = 0.0;
    for sigma in sampled_pure_projectors(d, samples, seed) {
        max_e = max_e.max(maps.apply_e_inverse(&sigma)?.norm());
        max_f = max_f.max(maps.apply_f_inverse(&sigma)?.norm());
    }
    Ok(ConditionBReport {
        min_s,
        bound: 1.0 / (df * min_s),
        threshold,
        pass: min_s > threshold,
        marginal: (min_s - threshold).abs() <= tol.eps,
        samples: samples + d,
        max_sampled_e_norm: max_e,
        max_sampled_f_norm: max_f,
        sampled_pass: max_e < df.sqrt() && max_f < df.sqrt(),
    })
}

/// ρ = (1/d²) Σₖ ℰ(Wₖ) ⊗ ℱ(Wₖᵀ), with coefficient vectors in the Schmidt bases.
pub fn theorem3_decompose(maps: &SchmidtMaps, w: &OperatorBasis, tol: &Tolerances) -> Result<SeparableDecomposition> {
    let d = maps.dim();
    if w.dim != d || w.len() != d * d {
        return Err(invalid("W", format!("must hold {} operators of size {d}x{d}", d * d)));
    }
    let os = maps.schmidt();
    let a = w.ops.iter().map(|wk| maps.apply_e(wk)).collect::<Result<Vec<_>>>()?;
    let b = w.ops.iter().map(|wk| maps.apply_f(&wk.transpose())).collect::<Result<Vec<_>>>()?;
    let a_coeff = a.iter().map(|m| CoefficientVector(os.coefficients_a(m).0)).collect();
    let b_coeff = b.iter().map(|m| CoefficientVector(os.coefficients_b(m).0)).collect();
    let n = d * d;
    let dec = SeparableDecomposition {
        d_a: d,
        d_b: d,
        p: vec![1.0 / n as f64; n],
        a,
        b,
        a_coeff: Some(a_coeff),
        b_coeff: Some(b_coeff),
        meta: None,
    };
    let rho = crate::schmidt::reconstruct(os);
    let residual = dec.relative_residual(&rho);
    if residual > tol.recon {
        return Err(Error::Reconstruction(residual));
    }
    Ok(dec)
}

/// Σₖ pₖ ‖ℰ⁻¹(Aᵏ)‖₂ ‖ℱ⁻¹(Bᵏ)‖₂.
pub fn transported_cost(maps: &SchmidtMaps, dec: &SeparableDecomposition) -> Result<f64> {
    cost_with(dec, |a| Ok(maps.apply_e_inverse(a)?.norm()), |b| Ok(maps.apply_f_inverse(b)?.norm()))
}

/// Local spaces generated by {ℰ(Wᵢ)} and {ℱ(Wᵢᵀ)} together with the quantum
/// states: convex hulls for unit-trace mode, cones for positive-trace mode.
pub fn build_theorem3_spaces(
    maps: &SchmidtMaps,
    w: &OperatorBasis,
    mode: SpaceMode,
    tol: &Tolerances,
) -> Result<(StateSpace, StateSpace)> {
    if mode == SpaceMode::Convex {
        return Err(invalid("mode", "expected convex-unit-trace or conic-positive-trace"));
    }
    let os = maps.schmidt();
    let a_rep = check_condition_a(os, tol)?;
    if !a_rep.pass {
        return Err(Error::ConditionFailed { condition: 'A', detail: format!("|e - f| = {:.3e}", a_rep.distance) });
    }
    let b_rep = check_condition_b(os, 0, 0, tol)?;
    if !b_rep.pass {
        return Err(Error::ConditionFailed {
            condition: 'B',
            detail: format!("min s = {:.6e} is not above {:.6e}", b_rep.min_s, b_rep.threshold),
        });
    }
    let d = maps.dim();
    let a = w.ops.iter().map(|wk| maps.apply_e(wk)).collect::<Result<Vec<_>>>()?;
    let b = w.ops.iter().map(|wk| maps.apply_f(&wk.transpose())).collect::<Result<Vec<_>>>()?;
    Ok((
        StateSpace::with_tolerances(d, a, mode, true, tol)?,
        StateSpace::with_tolerances(d, b, mode, true, tol)?,
    ))
}

/// Condition (B) verdict for cos θ|00⟩ + sin θ|11⟩.
pub fn condition_b_at(theta: f64) -> Result<ConditionBReport> {
    let os = operator_schmidt(&two_qubit_schmidt_state(theta), DEFAULT_RANK_CUTOFF)?;
    check_condition_b(&os, 0, 0, &Tolerances::default())
}

/// Bisects for the θ at which condition (B) starts to hold on
/// cos θ|00⟩ + sin θ|11⟩, given `fail_at` failing and `pass_at` passing.
pub fn condition_b_boundary(fail_at: f64, pass_at: f64, tol: f64) -> Result<f64> {
    if condition_b_at(fail_at)?.pass || !condition_b_at(pass_at)?.pass {
        return Err(invalid("theta", "bracket must fail at its first end and pass at its second"));
    }
    let (mut lo, mut hi) = (fail_at, pass_at);
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if condition_b_at(mid)?.pass {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis::{pauli_basis, phase_point_operators};
    use crate::linalg::matrix::kron;
    use crate::linalg::random::{haar_vector, random_probabilities};
    use crate::linalg::state::{bell_state, max_entangled, random_density, random_pure_state, BipartiteState};
    use rand::Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn os(st: &BipartiteState) -> OperatorSchmidt {
        operator_schmidt(st, DEFAULT_RANK_CUTOFF).unwrap()
    }

    fn bell_maps() -> SchmidtMaps {
        build_maps(&os(&bell_state()), &default_reference_basis(2)).unwrap()
    }

    #[test]
    fn maps_act_on_reference_basis() {
        let o = os(&bell_state());
        let maps = build_maps(&o, &pauli_basis()).unwrap();
        for (k, c) in pauli_basis().ops.iter().enumerate() {
            let want = o.x[k].scale_re(2f64.sqrt());
            assert!(maps.apply_e(c).unwrap().distance(&want) < 1e-12);
            let want = o.y[k].scale_re(2f64.sqrt());
            assert!(maps.apply_f(&c.transpose()).unwrap().distance(&want) < 1e-12);
        }
        let psi = os(&max_entangled(3));
        let maps = build_maps(&psi, &default_reference_basis(3)).unwrap();
        for (k, c) in maps.reference_basis().ops.iter().enumerate() {
            assert!(maps.apply_e(c).unwrap().distance(&psi.x[k].scale_re(3f64.sqrt())) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let half = ComplexMatrix::identity(2).scale_re(0.5);
        let prod = os(&crate::linalg::state::product_state(&half, &half).unwrap());
        assert!(matches!(build_maps(&prod, &pauli_basis()), Err(Error::RankDeficient { .. })));
        let o = os(&bell_state());
        assert!(build_maps(&o, &crate::linalg::basis::gell_mann_basis(2)).is_err());
    }

    #[test]
    fn maps_push_psi_to_rho() {
        for seed in 0..10 {
            let st = random_density(seed, 2, 2);
            let o = os(&st);
            let maps = build_maps(&o, &default_reference_basis(2)).unwrap();
            let c = maps.reference_basis();
            let mut out = ComplexMatrix::zeros(4, 4);
            for ck in &c.ops {
                out += &kron(&maps.apply_e(ck).unwrap(), &maps.apply_f(&ck.transpose()).unwrap()).scale_re(0.25);
            }
            assert!(out.distance(st.rho()) < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trip_and_linearity() {
        let maps = build_maps(&os(&random_density(3, 2, 2)), &default_reference_basis(2)).unwrap();
        let mut g = rng(12);
        for _ in 0..20 {
            let sigma = crate::linalg::random::ginibre(2, 2, &mut g).hermitian_part();
            let tau = crate::linalg::random::ginibre(2, 2, &mut g).hermitian_part();
            assert!(maps.apply_e_inverse(&maps.apply_e(&sigma).unwrap()).unwrap().distance(&sigma) < 1e-10);
            assert!(maps.apply_f_inverse(&maps.apply_f(&sigma).unwrap()).unwrap().distance(&sigma) < 1e-10);
            let lhs = maps.apply_e(&(&sigma.scale_re(2.0) + &tau.scale_re(-0.5))).unwrap();
            let rhs = &maps.apply_e(&sigma).unwrap().scale_re(2.0) + &maps.apply_e(&tau).unwrap().scale_re(-0.5);
            assert!(lhs.distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn inverse_norm_formula_on_bell() {
        let maps = bell_maps();
        let o = maps.schmidt();
        let sigma = ComplexMatrix::real_diag(&[1.0, 0.0]);
        let direct: f64 = o.x.iter().zip(&o.s).map(|(x, s)| x.inner(&sigma).norm_sqr() / (2.0 * s)).sum();
        let n = maps.apply_e_inverse(&sigma).unwrap().norm();
        assert!((n * n - direct).abs() < 1e-12);
        assert!((n * n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_condition_a() {
        let r = check_condition_a(&os(&bell_state()), &tol()).unwrap();
        assert!(r.pass);
        assert!(r.e_trace_preserving && r.f_trace_preserving);
        assert!((r.e[0] - 1.0).abs() < 1e-12 && r.e[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn pure_states_satisfy_condition_a() {
        for seed in 0..10 {
            for d in [2, 3] {
                let r = check_condition_a(&os(&random_pure_state(seed, d, d)), &tol()).unwrap();
                assert!(r.pass, "seed {seed} d {d}: {}", r.distance);
            }
        }
    }

    #[test]
    fn amplitude_damping_breaks_condition_a() {
        let gamma: f64 = 0.3;
        let k0 = kron(&ComplexMatrix::real_diag(&[1.0, (1.0 - gamma).sqrt()]), &ComplexMatrix::identity(2));
        let mut k1a = ComplexMatrix::zeros(2, 2);
        k1a[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
        let k1 = kron(&k1a, &ComplexMatrix::identity(2));
        let rho = bell_state();
        let out = &(&(&k0 * rho.rho()) * &k0.adjoint()) + &(&(&k1 * rho.rho()) * &k1.adjoint());
        let st = BipartiteState::new(2, 2, out).unwrap();
        let r = check_condition_a(&os(&st), &tol()).unwrap();
        assert!(!r.pass);
        assert!(r.distance > 1e-3, "{}", r.distance);
        assert!(construct_t(&r, None).is_err());
    }

    #[test]
    fn householder_alignment() {
        let r = check_condition_a(&os(&bell_state()), &tol()).unwrap();
        let t = construct_t(&r, None).unwrap();
        assert!(t.alignment_residual() < 1e-12);
        assert!(t.orthogonality_residual() < 1e-12);
        let t1 = construct_t(&r, Some(1)).unwrap();
        let t2 = construct_t(&r, Some(2)).unwrap();
        assert_ne!(t1.t, t2.t);
        for t in [&t1, &t2] {
            assert!(t.alignment_residual() < 1e-12);
            assert!(t.orthogonality_residual() < 1e-12);
        }
        // e = g needs no reflection
        let fixed = ConditionAReport { e: vec![0.5; 4], f: vec![0.5; 4], ..r };
        let t = construct_t(&fixed, None).unwrap();
        assert!((t.matrix() - DMatrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn bell_w_basis_is_phase_point_set() {
        let maps = bell_maps();
        let r = check_condition_a(maps.schmidt(), &tol()).unwrap();
        let w = build_w_basis(&maps, &construct_t(&r, None).unwrap()).unwrap();
        assert!(w.orthogonality_residual() < 1e-12);
        for wk in &w.ops {
            assert!((maps.apply_e(wk).unwrap().trace().re - 1.0).abs() < 1e-12);
            assert!((maps.apply_f(&wk.transpose()).unwrap().trace().re - 1.0).abs() < 1e-12);
            let n = maps.apply_e_inverse(&maps.apply_e(wk).unwrap()).unwrap().norm();
            assert!((n - 2f64.sqrt()).abs() < 1e-12);
        }
        // Each W is a unit-trace operator ½(𝟙 + n·σ) with |nᵢ| = 1.
        for wk in &w.ops {
            for axis in 1..4 {
                let c = wk.inner(&crate::linalg::basis::pauli(axis)).re;
                assert!((c.abs() - 1.0).abs() < 1e-12);
            }
        }
        let dec = theorem3_decompose(&maps, &w, &tol()).unwrap();
        assert!(dec.relative_residual(bell_state().rho()) < 1e-12);
        assert!((transported_cost(&maps, &dec).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psi_with_w_equal_to_c() {
        let maps = bell_maps();
        let c = maps.reference_basis().clone();
        let dec = theorem3_decompose(&maps, &c, &tol()).unwrap();
        for (a, ck) in dec.a.iter().zip(&c.ops) {
            assert!(a.distance(ck) < 1e-12);
        }
        let w = phase_point_operators().rescaled(2.0);
        let dec = theorem3_decompose(&maps, &w, &tol()).unwrap();
        for (k, wk) in w.ops.iter().enumerate() {
            assert!(dec.a[k].distance(wk) < 1e-12);
            assert!(dec.b[k].distance(&wk.transpose()) < 1e-12);
        }
    }

    #[test]
    fn seeded_w_basis_at_d3() {
        let st = max_entangled(3);
        let maps = build_maps(&os(&st), &default_reference_basis(3)).unwrap();
        let r = check_condition_a(maps.schmidt(), &tol()).unwrap();
        let w = build_w_basis(&maps, &construct_t(&r, Some(5)).unwrap()).unwrap();
        let g = w.gram();
        assert!(g.distance(&ComplexMatrix::identity(9).scale_re(3.0)) < 1e-10);
        let dec = theorem3_decompose(&maps, &w, &tol()).unwrap();
        assert!(dec.a.iter().chain(&dec.b).all(|m| (m.trace().re - 1.0).abs() < 1e-10));
        assert!((transported_cost(&maps, &dec).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn condition_b_cases() {
        for d in [2, 3] {
            let r = check_condition_b(&os(&max_entangled(d)), 50, 1, &tol()).unwrap();
            assert!(r.pass && r.sampled_pass);
            assert!((r.min_s - 1.0 / d as f64).abs() < 1e-12);
        }
        let bell = check_condition_b(&os(&bell_state()), 50, 1, &tol()).unwrap();
        assert!((bell.bound - 1.0).abs() < 1e-12);
        assert!(!condition_b_at(0.1).unwrap().pass);
        let boundary = condition_b_boundary(0.1, std::f64::consts::FRAC_PI_4 - 1e-3, 1e-9).unwrap();
        assert!((boundary - std::f64::consts::FRAC_PI_6).abs() < 1e-8);
    }

    #[test]
    fn norm_ceiling_on_sampled_states() {
        let st = random_pure_state(4, 2, 2);
        let o = os(&st);
        let rb = check_condition_b(&o, 0, 0, &tol()).unwrap();
        let st = if rb.pass { st } else { bell_state() };
        let o = os(&st);
        let rb = check_condition_b(&o, 0, 0, &tol()).unwrap();
        let maps = build_maps(&o, &default_reference_basis(2)).unwrap();
        let ceiling = rb.bound.sqrt();
        let mut g = rng(40);
        for _ in 0..500 {
            let v = haar_vector(2, &mut g);
            let sigma = ComplexMatrix::outer(&v, &v);
            let n = maps.apply_e_inverse(&sigma).unwrap().norm();
            assert!(n <= ceiling + 1e-12 && ceiling < 2f64.sqrt());
        }
    }

    #[test]
    fn norm_attainment_is_exclusive() {
        let maps = bell_maps();
        let r = check_condition_a(maps.schmidt(), &tol()).unwrap();
        let w = build_w_basis(&maps, &construct_t(&r, None).unwrap()).unwrap();
        let images: Vec<ComplexMatrix> = w.ops.iter().map(|wk| maps.apply_e(wk).unwrap()).collect();
        let quantum = sampled_pure_projectors(2, 20, 3);
        let pool: Vec<&ComplexMatrix> = images.iter().chain(&quantum).collect();
        let mut g = rng(41);
        let root_d = 2f64.sqrt();
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let i = g.random_range(0..pool.len());
            let j = (i + g.random_range(1..pool.len())) % pool.len();
            let lam = random_probabilities(2, &mut g);
            let v = &pool[i].scale_re(lam[0]) + &pool[j].scale_re(lam[1]);
            worst = worst.max(maps.apply_e_inverse(&v).unwrap().norm());
        }
        assert!(worst < root_d - 1e-6, "worst {worst}");
    }

    #[test]
    fn spaces_for_bell() {
        let maps = bell_maps();
        let r = check_condition_a(maps.schmidt(), &tol()).unwrap();
        let w = build_w_basis(&maps, &construct_t(&r, None).unwrap()).unwrap();
        for mode in [SpaceMode::ConvexUnitTrace, SpaceMode::ConicPositiveTrace] {
            let (va, vb) = build_theorem3_spaces(&maps, &w, mode, &tol()).unwrap();
            assert!(va.include_quantum && vb.include_quantum);
            assert!(va.generators.iter().all(|g| g.trace().re > 0.0));
            let res = crate::feasibility::quantum_augmented_feasible(&bell_state(), &va, &vb, 50, 0, &tol()).unwrap();
            assert!(res.result.feasible);
            assert!(res.max_quantum_weight < 1e-8, "{}", res.max_quantum_weight);
        }
        assert!(build_theorem3_spaces(&maps, &w, SpaceMode::Convex, &tol()).is_err());
    }
}
