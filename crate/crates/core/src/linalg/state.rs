//! Bipartite states, POVMs, realignment and canonical fixtures.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::basis::bloch_operator;
use super::matrix::{kron, ComplexMatrix, ONE, ZERO};
use super::random::{ginibre, haar_vector, rng};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Density operator on ℂ^dA ⊗ ℂ^dB.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteState {
    d_a: usize,
    d_b: usize,
    rho: ComplexMatrix,
}

impl BipartiteState {
    /// Validates Hermiticity, unit trace and positivity with default tolerances.
    pub fn new(d_a: usize, d_b: usize, rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(d_a, d_b, rho, &Tolerances::default(), true)
    }

    /// Hermitian unit-trace operator without the positivity check.
    pub fn operator(d_a: usize, d_b: usize, rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(d_a, d_b, rho, &Tolerances::default(), false)
    }

    pub fn with_tolerances(
        d_a: usize,
        d_b: usize,
        rho: ComplexMatrix,
        tol: &Tolerances,
        check_psd: bool,
    ) -> Result<Self> {
        let n = d_a * d_b;
        if d_a == 0 || d_b == 0 || rho.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "state of shape {:?} for local dimensions {d_a}x{d_b}",
                rho.shape()
            )));
        }
        let herm = rho.hermiticity_residual();
        if herm > tol.herm {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace is {:.12} (expected 1)", tr.re)));
        }
        if check_psd {
            let min = rho.hermitian_eigenvalues()[0];
            if min < -tol.psd {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
            }
        }
        Ok(Self { d_a, d_b, rho })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        self.rho.inner(&self.rho).re
    }
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
    #[serde(rename = "dA")]
    d_a: usize,
    #[serde(rename = "dB")]
    d_b: usize,
}

impl Serialize for BipartiteState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRepr {
            rows: self.rho.rows(),
            cols: self.rho.cols(),
            entries: self.rho.entries().iter().map(|z| [z.re, z.im]).collect(),
            d_a: self.d_a,
            d_b: self.d_b,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = StateRepr::deserialize(d)?;
        let entries = r.entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        let rho = ComplexMatrix::new(r.rows, r.cols, entries).map_err(D::Error::custom)?;
        BipartiteState::new(r.d_a, r.d_b, rho).map_err(D::Error::custom)
    }
}

/// Realignment M[(i,k),(j,l)] = ⟨ij|ρ|kl⟩ of an operator on ℂ^dA ⊗ ℂ^dB,
/// giving a dA² × dB² matrix.
pub fn realign_operator(op: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    let n = d_a * d_b;
    if op.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("cannot realign {:?} as {d_a}x{d_b}", op.shape())));
    }
    Ok(ComplexMatrix::from_fn(d_a * d_a, d_b * d_b, |r, c| {
        let (i, k) = (r / d_a, r % d_a);
        let (j, l) = (c / d_b, c % d_b);
        op[(i * d_b + j, k * d_b + l)]
    }))
}

pub fn realign(state: &BipartiteState) -> ComplexMatrix {
    realign_operator(&state.rho, state.d_a, state.d_b).expect("state dimensions are consistent")
}

/// Inverse of [`realign_operator`].
pub fn unrealign(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    if m.shape() != (d_a * d_a, d_b * d_b) {
        return Err(Error::DimensionMismatch(format!("cannot unrealign {:?} as {d_a}x{d_b}", m.shape())));
    }
    let n = d_a * d_b;
    Ok(ComplexMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / d_b, row % d_b);
        let (k, l) = (col / d_b, col % d_b);
        m[(i * d_a + k, j * d_b + l)]
    }))
}

/// |ψ⟩⟨ψ| for a normalised vector on ℂ^dA ⊗ ℂ^dB.
pub fn pure_state(psi: &[Complex64], d_a: usize, d_b: usize) -> Result<BipartiteState> {
    if psi.len() != d_a * d_b {
        return Err(Error::DimensionMismatch(format!("vector of length {} for {d_a}x{d_b}", psi.len())));
    }
    let n = super::matrix::vec_norm(psi);
    if n == 0.0 {
        return Err(Error::InvalidState("zero vector".into()));
    }
    let psi: Vec<Complex64> = psi.iter().map(|z| z / n).collect();
    BipartiteState::new(d_a, d_b, ComplexMatrix::outer(&psi, &psi))
}

/// |Ψ⟩ = (1/√d) Σᵢ |ii⟩.
pub fn max_entangled(d: usize) -> BipartiteState {
    let mut psi = vec![ZERO; d * d];
    for i in 0..d {
        psi[i * d + i] = ONE;
    }
    pure_state(&psi, d, d).expect("valid fixture")
}

/// |φ⁺⟩ = (|00⟩ + |11⟩)/√2.
pub fn bell_state() -> BipartiteState {
    max_entangled(2)
}

/// cos θ |00⟩ + sin θ |11⟩.
pub fn two_qubit_schmidt_state(theta: f64) -> BipartiteState {
    let psi = [Complex64::new(theta.cos(), 0.0), ZERO, ZERO, Complex64::new(theta.sin(), 0.0)];
    pure_state(&psi, 2, 2).expect("valid fixture")
}

pub fn product_state(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<BipartiteState> {
    BipartiteState::new(a.rows(), b.rows(), kron(a, b))
}

pub fn maximally_mixed(d_a: usize, d_b: usize) -> BipartiteState {
    let n = d_a * d_b;
    BipartiteState::new(d_a, d_b, ComplexMatrix::identity(n).scale_re(1.0 / n as f64)).expect("valid fixture")
}

/// Haar-random pure state.
pub fn random_pure_state(seed: u64, d_a: usize, d_b: usize) -> BipartiteState {
    let psi = haar_vector(d_a * d_b, &mut rng(seed));
    pure_state(&psi, d_a, d_b).expect("valid fixture")
}

/// Random mixed state G G† / tr(G G†) with G a square Ginibre matrix.
pub fn random_density(seed: u64, d_a: usize, d_b: usize) -> BipartiteState {
    let n = d_a * d_b;
    let g = ginibre(n, n, &mut rng(seed));
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    BipartiteState::new(d_a, d_b, gg.hermitian_part().scale_re(1.0 / tr)).expect("PSD by construction")
}

/// Local measurement: PSD effects summing to 𝟙.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    pub dim: usize,
    pub effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(dim: usize, effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerances(dim, effects, &Tolerances::default())
    }

    pub fn with_tolerances(dim: usize, effects: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidArgument { field: "effects".into(), reason: "empty POVM".into() });
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (k, e) in effects.iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!("effect {k} is not {dim}x{dim}")));
            }
            if !e.is_hermitian(tol.herm) || e.hermitian_eigenvalues()[0] < -tol.psd {
                return Err(Error::InvalidState(format!("effect {k} is not positive semidefinite")));
            }
            sum += e;
        }
        let dev = sum.distance(&ComplexMatrix::identity(dim));
        if dev > tol.eps {
            return Err(Error::InvalidState(format!("effects sum to identity only within {dev:.3e}")));
        }
        Ok(Self { dim, effects })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// The one-outcome measurement {𝟙}.
    pub fn trivial(dim: usize) -> Self {
        Self { dim, effects: vec![ComplexMatrix::identity(dim)] }
    }

    /// Projective measurement of a qubit Pauli observable (axis 1, 2, 3 =
    /// x, y, z); outcome 0 is the +1 eigenprojector.
    pub fn pauli(axis: usize) -> Self {
        assert!((1..=3).contains(&axis), "Pauli axis must be 1, 2 or 3");
        let mut n = [0.0; 3];
        n[axis - 1] = 1.0;
        Self::qubit_projective(n)
    }

    /// Projective qubit measurement along the unit Bloch vector `n`.
    pub fn qubit_projective(n: [f64; 3]) -> Self {
        let minus = [-n[0], -n[1], -n[2]];
        Self { dim: 2, effects: vec![bloch_operator(1.0, n), bloch_operator(1.0, minus)] }
    }

    /// {c|m⟩⟨m|, 𝟙 − c|m⟩⟨m|} with |m⟩ the pure state of Bloch vector `m`.
    pub fn qubit_two_outcome(c: f64, m: [f64; 3]) -> Result<Self> {
        let proj = bloch_operator(1.0, m);
        let e0 = proj.scale_re(c);
        let e1 = &ComplexMatrix::identity(2) - &e0;
        Self::new(2, vec![e0, e1])
    }

    pub fn transposed(&self) -> Self {
        Self { dim: self.dim, effects: self.effects.iter().map(ComplexMatrix::transpose).collect() }
    }
}
