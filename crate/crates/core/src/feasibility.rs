//! Membership of a state in the product of finitely generated local state
//! spaces, decided by nonnegative least squares over all generator pairs.
//!
//! A state is (𝒱_A, 𝒱_B)-separable for finite generator sets iff
//! ρ = Σᵢⱼ qᵢⱼ Aᵢ⊗Bⱼ with q ≥ 0, plus Σq = 1 when both sides are convex hulls.
//! Quantum-state augmentation samples pure projectors, so a feasible answer
//! certifies membership while an infeasible one is only evidence.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decomp::SeparableDecomposition;
use crate::error::{invalid, Error, Result};
use crate::linalg::matrix::{kron, ComplexMatrix};
use crate::linalg::random::{haar_vector, rng};
use crate::linalg::state::BipartiteState;
use crate::nnls::{default_iteration_cap, nnls};
use crate::tolerance::Tolerances;

/// Relative weight of the Σq = 1 penalty row against the largest column norm.
const SUM_ROW_WEIGHT: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceMode {
    /// Convex hull of unit-trace generators.
    ConvexUnitTrace,
    /// Cone over generators of positive trace.
    ConicPositiveTrace,
    /// Convex hull with no trace restriction on the generators.
    Convex,
}

impl SpaceMode {
    fn is_convex(self) -> bool {
        matches!(self, Self::ConvexUnitTrace | Self::Convex)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub dim: usize,
    pub generators: Vec<ComplexMatrix>,
    pub mode: SpaceMode,
    pub include_quantum: bool,
}

impl StateSpace {
    pub fn new(dim: usize, generators: Vec<ComplexMatrix>, mode: SpaceMode, include_quantum: bool) -> Result<Self> {
        Self::with_tolerances(dim, generators, mode, include_quantum, &Tolerances::default())
    }

    pub fn with_tolerances(
        dim: usize,
        generators: Vec<ComplexMatrix>,
        mode: SpaceMode,
        include_quantum: bool,
        tol: &Tolerances,
    ) -> Result<Self> {
        if let Some(k) = generators.iter().position(|g| g.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!("generator {k} is not {dim}x{dim}")));
        }
        for (k, g) in generators.iter().enumerate() {
            let t = g.trace();
            match mode {
                SpaceMode::ConvexUnitTrace if (t.re - 1.0).abs() > tol.trace || t.im.abs() > tol.trace => {
                    return Err(invalid("generators", format!("generator {k} has trace {t}, expected 1")));
                }
                SpaceMode::ConicPositiveTrace if t.re <= tol.trace || t.im.abs() > tol.trace => {
                    return Err(invalid("generators", format!("generator {k} has trace {t}, expected > 0")));
                }
                _ => {}
            }
        }
        Ok(Self { dim, generators, mode, include_quantum })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Same space with generator `k` removed.
    pub fn without(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.generators.remove(k);
        out
    }

    /// Local operator sets of a decomposition as convex spaces.
    pub fn pair_from_decomposition(dec: &SeparableDecomposition) -> (Self, Self) {
        let side = |dim, ops: &[ComplexMatrix]| Self {
            dim,
            generators: ops.to_vec(),
            mode: SpaceMode::Convex,
            include_quantum: false,
        };
        (side(dec.d_a, &dec.a), side(dec.d_b, &dec.b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub feasible: bool,
    /// qᵢⱼ for generator i of A and j of B.
    pub weights: Vec<Vec<f64>>,
    /// ‖ρ − Σᵢⱼ qᵢⱼ Aᵢ⊗Bⱼ‖₂.
    pub residual: f64,
    pub weight_sum: f64,
    pub iterations: usize,
}

impl FeasibilityResult {
    pub fn reconstruct(&self, va: &StateSpace, vb: &StateSpace) -> ComplexMatrix {
        let n = va.dim * vb.dim;
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, row) in self.weights.iter().enumerate() {
            for (j, &q) in row.iter().enumerate() {
                if q != 0.0 {
                    out += &kron(&va.generators[i], &vb.generators[j]).scale_re(q);
                }
            }
        }
        out
    }
}

fn embed(m: &ComplexMatrix) -> impl Iterator<Item = f64> + '_ {
    m.entries().iter().map(|z| z.re).chain(m.entries().iter().map(|z| z.im))
}

fn check_dims(rho: &BipartiteState, va: &StateSpace, vb: &StateSpace) -> Result<()> {
    if (va.dim, vb.dim) != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, spaces are {}x{}",
            rho.d_a(),
            rho.d_b(),
            va.dim,
            vb.dim
        )));
    }
    Ok(())
}

/// Nearest point of the finitely generated separable set, by NNLS over the
/// real embedding of vec(Aᵢ⊗Bⱼ).
pub fn separable_feasible(
    rho: &BipartiteState,
    va: &StateSpace,
    vb: &StateSpace,
    tol: &Tolerances,
) -> Result<FeasibilityResult> {
    if va.include_quantum || vb.include_quantum {
        return Err(invalid("include_quantum", "finite generator sets only; use the quantum-augmented test"));
    }
    solve(rho, va, vb, tol)
}

fn solve(rho: &BipartiteState, va: &StateSpace, vb: &StateSpace, tol: &Tolerances) -> Result<FeasibilityResult> {
    check_dims(rho, va, vb)?;
    let (na, nb) = (va.len(), vb.len());
    let n2 = rho.rho().rows() * rho.rho().cols();
    let constrained = va.mode.is_convex() && vb.mode.is_convex();
    let rows = 2 * n2 + usize::from(constrained);
    let cols = na * nb;
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for i in 0..na {
        for j in 0..nb {
            let col = i * nb + j;
            for (r, v) in embed(&kron(&va.generators[i], &vb.generators[j])).enumerate() {
                a[(r, col)] = v;
            }
        }
    }
    let mut b: Vec<f64> = embed(rho.rho()).collect();
    if constrained {
        let scale = (0..cols).map(|c| a.column(c).norm()).fold(0.0, f64::max).max(1.0) * SUM_ROW_WEIGHT;
        for c in 0..cols {
            a[(rows - 1, c)] = scale;
        }
        b.push(scale);
    }
    let sol = nnls(&a, &b, default_iteration_cap(cols))?;
    let weights: Vec<Vec<f64>> = (0..na).map(|i| sol.x[i * nb..(i + 1) * nb].to_vec()).collect();
    let weight_sum = sol.x.iter().sum();
    let mut out = FeasibilityResult { feasible: false, weights, residual: 0.0, weight_sum, iterations: sol.iterations };
    out.residual = out.reconstruct(va, vb).distance(rho.rho());
    out.feasible = out.residual <= tol.feas && (!constrained || (weight_sum - 1.0).abs() <= tol.feas);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deletion {
    pub side: char,
    pub index: usize,
    pub residual: f64,
    pub infeasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub base: FeasibilityResult,
    pub deletions: Vec<Deletion>,
    /// Smallest residual over all deletions.
    pub min_deletion_residual: f64,
    /// The full spaces are feasible and every single deletion is infeasible.
    pub pass: bool,
}

/// Re-solves with each generator removed in turn.
pub fn deletion_minimality(
    rho: &BipartiteState,
    va: &StateSpace,
    vb: &StateSpace,
    tol: &Tolerances,
) -> Result<MinimalityReport> {
    let base = separable_feasible(rho, va, vb, tol)?;
    let jobs: Vec<(char, usize)> =
        (0..va.len()).map(|k| ('A', k)).chain((0..vb.len()).map(|k| ('B', k))).collect();
    let outcomes: Vec<Result<Deletion>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(side, index)| {
                scope.spawn(move || {
                    let (a, b) = if side == 'A' { (va.without(index), vb.clone()) } else { (va.clone(), vb.without(index)) };
                    let r = separable_feasible(rho, &a, &b, tol)?;
                    Ok(Deletion { side, index, residual: r.residual, infeasible: !r.feasible })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("deletion worker panicked")).collect()
    });
    let deletions = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let min_deletion_residual = deletions.iter().map(|d| d.residual).fold(f64::INFINITY, f64::min);
    let pass = base.feasible && deletions.iter().all(|d| d.infeasible);
    Ok(MinimalityReport { base, deletions, min_deletion_residual, pass })
}

/// Projectors onto `budget` seeded Haar-random pure states followed by the
/// computational basis projectors.
pub fn sampled_pure_projectors(dim: usize, budget: usize, seed: u64) -> Vec<ComplexMatrix> {
    let mut g = rng(seed);
    let mut out: Vec<ComplexMatrix> = (0..budget)
        .map(|_| {
            let v = haar_vector(dim, &mut g);
            ComplexMatrix::outer(&v, &v)
        })
        .collect();
    for k in 0..dim {
        let mut e = ComplexMatrix::zeros(dim, dim);
        e[(k, k)] = crate::linalg::matrix::ONE;
        out.push(e);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedResult {
    pub result: FeasibilityResult,
    /// Number of leading generators on each side that came from the spaces
    /// themselves; later indices are sampled quantum states.
    pub finite_generators: (usize, usize),
    /// Largest weight placed on any pair involving a sampled quantum state.
    pub max_quantum_weight: f64,
}

/// Feasibility against spaces whose quantum-state part is replaced by a
/// seeded sample of pure projectors (`budget` per side plus the standard basis).
pub fn quantum_augmented_feasible(
    rho: &BipartiteState,
    va: &StateSpace,
    vb: &StateSpace,
    sample_budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<AugmentedResult> {
    if !(va.include_quantum || vb.include_quantum) {
        return Err(invalid("include_quantum", "at least one side must include the quantum states"));
    }
    let augment = |v: &StateSpace, side_seed: u64| {
        let mut out = v.clone();
        if v.include_quantum {
            out.generators.extend(sampled_pure_projectors(v.dim, sample_budget, side_seed));
        }
        out.include_quantum = false;
        out
    };
    let a = augment(va, seed);
    let b = augment(vb, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let result = solve(rho, &a, &b, tol)?;
    let (fa, fb) = (va.len(), vb.len());
    let mut max_quantum_weight: f64 = 0.0;
    for (i, row) in result.weights.iter().enumerate() {
        for (j, &q) in row.iter().enumerate() {
            if i >= fa || j >= fb {
                max_quantum_weight = max_quantum_weight.max(q);
            }
        }
    }
    Ok(AugmentedResult { result, finite_generators: (fa, fb), max_quantum_weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{bell_phase_point, bell_stabiliser};
    use crate::linalg::basis::phase_point_operators;
    use crate::linalg::random::{gaussian, SeededRng};
    use crate::linalg::state::{bell_state, maximally_mixed, product_state, random_density};
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn w_spaces() -> (StateSpace, StateSpace) {
        let w = phase_point_operators().ops;
        let wt = w.iter().map(ComplexMatrix::transpose).collect();
        (
            StateSpace::new(2, w, SpaceMode::ConvexUnitTrace, false).unwrap(),
            StateSpace::new(2, wt, SpaceMode::ConvexUnitTrace, false).unwrap(),
        )
    }

    #[test]
    fn bell_in_phase_point_spaces() {
        let (va, vb) = w_spaces();
        let r = separable_feasible(&bell_state(), &va, &vb, &tol()).unwrap();
        assert!(r.feasible, "residual {}", r.residual);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((r.weights[i][j] - want).abs() < 1e-9);
            }
        }
        let r = separable_feasible(&bell_state(), &va.without(0), &vb, &tol()).unwrap();
        assert!(r.residual > 0.1);
    }

    #[test]
    fn product_state_singletons() {
        let a = ComplexMatrix::real_diag(&[0.7, 0.3]);
        let b = ComplexMatrix::real_diag(&[0.2, 0.8]);
        let st = product_state(&a, &b).unwrap();
        let va = StateSpace::new(2, vec![a], SpaceMode::ConvexUnitTrace, false).unwrap();
        let vb = StateSpace::new(2, vec![b], SpaceMode::ConvexUnitTrace, false).unwrap();
        let r = separable_feasible(&st, &va, &vb, &tol()).unwrap();
        assert!(r.feasible);
        assert!((r.weights[0][0] - 1.0).abs() < 1e-12);
        let m = deletion_minimality(&st, &va, &vb, &tol()).unwrap();
        assert!(m.pass);
    }

    #[test]
    fn decomposition_spaces_are_minimal() {
        for dec in [bell_stabiliser(), bell_phase_point()] {
            let (va, vb) = StateSpace::pair_from_decomposition(&dec);
            let m = deletion_minimality(&bell_state(), &va, &vb, &tol()).unwrap();
            assert!(m.pass);
            assert!(m.min_deletion_residual > 1e-3);
        }
    }

    #[test]
    fn redundant_generator_breaks_minimality() {
        let (va, vb) = w_spaces();
        let mut gens = va.generators.clone();
        gens.push(ComplexMatrix::identity(2));
        let va = StateSpace::new(2, gens, SpaceMode::ConicPositiveTrace, false).unwrap();
        let vb = StateSpace { mode: SpaceMode::ConicPositiveTrace, ..vb };
        let m = deletion_minimality(&bell_state(), &va, &vb, &tol()).unwrap();
        assert!(m.base.feasible);
        assert!(!m.pass);
        let d = m.deletions.iter().find(|d| d.side == 'A' && d.index == 4).unwrap();
        assert!(!d.infeasible);
    }

    #[test]
    fn mode_invariants_enforced() {
        assert!(StateSpace::new(2, vec![ComplexMatrix::identity(2)], SpaceMode::ConvexUnitTrace, false).is_err());
        assert!(StateSpace::new(2, vec![crate::linalg::basis::pauli(1)], SpaceMode::ConicPositiveTrace, false).is_err());
        assert!(StateSpace::new(3, vec![ComplexMatrix::identity(2)], SpaceMode::Convex, false).is_err());
        let (va, vb) = w_spaces();
        let q = StateSpace { include_quantum: true, ..va.clone() };
        assert!(separable_feasible(&bell_state(), &q, &vb, &tol()).is_err());
        assert!(quantum_augmented_feasible(&bell_state(), &va, &vb, 4, 0, &tol()).is_err());
    }

    #[test]
    fn quantum_samples_alone() {
        let empty = StateSpace::new(2, vec![], SpaceMode::ConvexUnitTrace, true).unwrap();
        let mixed = quantum_augmented_feasible(&maximally_mixed(2, 2), &empty, &empty, 4, 1, &tol()).unwrap();
        assert!(mixed.result.feasible);
        let bell = quantum_augmented_feasible(&bell_state(), &empty, &empty, 200, 1, &tol()).unwrap();
        assert!(bell.result.residual > 1e-3, "residual {}", bell.result.residual);
    }

    #[test]
    fn residual_monotone_under_growth() {
        let st = random_density(6, 2, 2);
        let gens = sampled_pure_projectors(2, 6, 3);
        let mut last = f64::INFINITY;
        for n in 1..=gens.len() {
            let v = StateSpace::new(2, gens[..n].to_vec(), SpaceMode::ConvexUnitTrace, false).unwrap();
            let r = separable_feasible(&st, &v, &v, &tol()).unwrap();
            assert!(r.residual <= last + 1e-12);
            last = r.residual;
        }
    }

    /// Accelerated projected gradient on the same penalised problem.
    fn projected_gradient(rho: &BipartiteState, va: &StateSpace, vb: &StateSpace) -> f64 {
        let (na, nb) = (va.len(), vb.len());
        let n2 = rho.rho().rows() * rho.rho().cols();
        let cols = na * nb;
        let mut a = DMatrix::<f64>::zeros(2 * n2, cols);
        for i in 0..na {
            for j in 0..nb {
                for (r, v) in embed(&kron(&va.generators[i], &vb.generators[j])).enumerate() {
                    a[(r, i * nb + j)] = v;
                }
            }
        }
        let b = DVector::from_iterator(2 * n2, embed(rho.rho()));
        let lip = crate::linalg::svd::real_svd(&a).unwrap().s[0].powi(2);
        let ata = a.tr_mul(&a);
        let atb = a.tr_mul(&b);
        let mut x = DVector::<f64>::zeros(cols);
        let mut y = x.clone();
        let mut t = 1.0f64;
        for _ in 0..200_000 {
            let grad = &ata * &y - &atb;
            let next = (&y - grad / lip).map(|v| v.max(0.0));
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &x) * ((t - 1.0) / tn);
            x = next;
            t = tn;
        }
        (&a * &x - &b).norm()
    }

    fn random_space(g: &mut SeededRng, n: usize) -> StateSpace {
        let generators = (0..n)
            .map(|_| ComplexMatrix::from_fn(2, 2, |_, _| Complex64::new(gaussian(g), gaussian(g))).hermitian_part())
            .collect();
        StateSpace { dim: 2, generators, mode: SpaceMode::ConicPositiveTrace, include_quantum: false }
    }

    #[test]
    fn agrees_with_projected_gradient() {
        let mut g = crate::linalg::random::rng(77);
        let mut checked = 0;
        while checked < 20 {
            let va = random_space(&mut g, 3);
            let vb = random_space(&mut g, 3);
            let st = random_density(checked as u64, 2, 2);
            let r = separable_feasible(&st, &va, &vb, &tol()).unwrap();
            let pg = projected_gradient(&st, &va, &vb);
            assert!(r.residual <= pg + 1e-12, "nnls {} pg {}", r.residual, pg);
            assert!((r.residual - pg).abs() < 1e-7, "nnls {} pg {}", r.residual, pg);
            checked += 1;
        }
    }
}
