//! Local hidden variable models from generalised separable decompositions.
//!
//! For ρ = Σᵢ qᵢ Aᵢ⊗Bᵢ and POVMs {Mₖ}, {Nₗ} the model is
//! pᵢ = qᵢ tr(Aᵢ) tr(Bᵢ), r(k|i) = tr(AᵢMₖ)/tr(Aᵢ), s(l|i) = tr(BᵢNₗ)/tr(Bᵢ).
//! Every local operator must give nonnegative responses; terms with a
//! traceless factor are then dropped, and the finished model is checked
//! against Born statistics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::SeparableDecomposition;
use crate::error::{invalid, Error, Result};
use crate::linalg::matrix::{kron, ComplexMatrix};
use crate::linalg::random::{haar_unitary, rng};
use crate::linalg::state::{BipartiteState, Povm};
use crate::tolerance::Tolerances;

/// Bloch vector of the magic state |m⟩.
pub const MAGIC_BLOCH: [f64; 3] = [
    0.577_350_269_189_625_8,
    0.577_350_269_189_625_8,
    0.577_350_269_189_625_8,
];

/// Agreement required between model and Born probabilities.
pub const BORN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhvModel {
    /// pᵢ; zero for dropped terms.
    pub hidden_weights: Vec<f64>,
    /// r(k|i) indexed [i][k]; all-zero rows for dropped terms.
    pub response_a: Vec<Vec<f64>>,
    /// s(l|i) indexed [i][l].
    pub response_b: Vec<Vec<f64>>,
    /// Terms omitted because tr(Aᵢ) or tr(Bᵢ) vanishes.
    pub dropped: Vec<usize>,
}

impl LhvModel {
    pub fn outcomes(&self) -> (usize, usize) {
        let first = |t: &Vec<Vec<f64>>| t.first().map_or(0, Vec::len);
        (first(&self.response_a), first(&self.response_b))
    }
}

/// tr(x·Mₖ) ≥ −ε for every effect and tr(x) > ε.
pub fn generalized_positive(x: &ComplexMatrix, povm: &Povm, tol: &Tolerances) -> bool {
    x.shape() == (povm.dim, povm.dim)
        && x.trace().re > tol.eps
        && povm.effects.iter().all(|m| (x * m).trace().re >= -tol.eps)
}

fn responses(op: &ComplexMatrix, povm: &Povm, tol: &Tolerances) -> Result<Vec<f64>> {
    povm.effects
        .iter()
        .map(|m| {
            let v: Complex64 = (op * m).trace();
            if v.im.abs() > tol.eps {
                return Err(invalid("operator", format!("response {v} is not real")));
            }
            Ok(v.re)
        })
        .collect()
}

fn normalise_row(raw: &[f64], trace: f64, term: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    let mut row: Vec<f64> = raw.iter().map(|v| v / trace).collect();
    for (k, v) in row.iter_mut().enumerate() {
        if *v < -tol.eps {
            return Err(Error::Positivity { term, effect: k, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = row.iter().sum();
    Ok(row.into_iter().map(|v| v / total).collect())
}

/// Model without the final Born check.
fn assemble(dec: &SeparableDecomposition, pa: &Povm, pb: &Povm, tol: &Tolerances) -> Result<LhvModel> {
    if (pa.dim, pb.dim) != dec.local_dims() {
        return Err(Error::DimensionMismatch(format!(
            "POVMs act on {}x{}, decomposition on {}x{}",
            pa.dim, pb.dim, dec.d_a, dec.d_b
        )));
    }
    let n = dec.len();
    let mut hidden_weights = vec![0.0; n];
    let mut response_a = vec![vec![0.0; pa.len()]; n];
    let mut response_b = vec![vec![0.0; pb.len()]; n];
    let mut dropped = Vec::new();
    for i in 0..n {
        let ra = responses(&dec.a[i], pa, tol)?;
        let rb = responses(&dec.b[i], pb, tol)?;
        // Every local operator must induce nonnegative responses, traceless or not.
        for (k, &v) in ra.iter().enumerate() {
            if v < -tol.eps {
                return Err(Error::Positivity { term: i, effect: k, value: v });
            }
        }
        for (l, &v) in rb.iter().enumerate() {
            if v < -tol.eps {
                return Err(Error::Positivity { term: i, effect: pa.len() + l, value: v });
            }
        }
        let (ta, tb) = (dec.a[i].trace().re, dec.b[i].trace().re);
        if ta.abs() <= tol.eps || tb.abs() <= tol.eps {
            dropped.push(i);
            continue;
        }
        hidden_weights[i] = dec.p[i] * ta * tb;
        response_a[i] = normalise_row(&ra, ta, i, tol)?;
        response_b[i] = normalise_row(&rb, tb, i, tol)?;
    }
    let total: f64 = hidden_weights.iter().sum();
    if !(total > tol.eps) {
        return Err(invalid("decomposition", "no term with nonzero local traces"));
    }
    for w in hidden_weights.iter_mut() {
        *w /= total;
    }
    Ok(LhvModel { hidden_weights, response_a, response_b, dropped })
}

/// Largest |model − Born| over all outcome pairs.
pub fn born_deviation(model: &LhvModel, rho: &BipartiteState, pa: &Povm, pb: &Povm) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..pa.len() {
        for l in 0..pb.len() {
            let diff = lhv_probability(model, k, l)? - born_probability(rho, pa, pb, k, l)?;
            worst = worst.max(diff.abs());
        }
    }
    Ok(worst)
}

/// Builds the model and verifies it against the decomposed operator.
pub fn build_lhv(dec: &SeparableDecomposition, pa: &Povm, pb: &Povm, tol: &Tolerances) -> Result<LhvModel> {
    let model = assemble(dec, pa, pb, tol)?;
    let rho = BipartiteState::operator(dec.d_a, dec.d_b, dec.reconstruct())?;
    let dev = born_deviation(&model, &rho, pa, pb)?;
    if dev > BORN_TOLERANCE {
        return Err(Error::BornMismatch(dev));
    }
    Ok(model)
}

/// Σᵢ pᵢ r(k|i) s(l|i).
pub fn lhv_probability(model: &LhvModel, k: usize, l: usize) -> Result<f64> {
    let (na, nb) = model.outcomes();
    if k >= na || l >= nb {
        return Err(Error::OutOfRange(format!("outcome ({k}, {l}) of a {na}x{nb} table")));
    }
    Ok(model
        .hidden_weights
        .iter()
        .zip(model.response_a.iter().zip(&model.response_b))
        .map(|(p, (ra, rb))| p * ra[k] * rb[l])
        .sum())
}

/// tr(ρ Mₖ⊗Nₗ).
pub fn born_probability(rho: &BipartiteState, pa: &Povm, pb: &Povm, k: usize, l: usize) -> Result<f64> {
    if (pa.dim, pb.dim) != rho.dims() {
        return Err(Error::DimensionMismatch("POVM and state dimensions differ".into()));
    }
    if k >= pa.len() || l >= pb.len() {
        return Err(Error::OutOfRange(format!("outcome ({k}, {l}) of a {}x{} table", pa.len(), pb.len())));
    }
    Ok((rho.rho() * &kron(&pa.effects[k], &pb.effects[l])).trace().re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PovmFamily {
    /// {𝟙}, σx, σy, σz projective measurements on each side (16 pairs).
    Pauli,
    /// Projective measurements in seeded Haar-random bases.
    Random,
    /// {c|m⟩⟨m|, 𝟙 − c|m⟩⟨m|} on A and its transpose on B, c on a grid.
    Magic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: usize,
    pub label: String,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_born_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub family: PovmFamily,
    pub rows: Vec<ScanRow>,
    pub successes: usize,
    /// Largest c in [0, 1] for which the magic POVM pair succeeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

fn try_pair(dec: &SeparableDecomposition, index: usize, label: String, pa: &Povm, pb: &Povm, tol: &Tolerances) -> ScanRow {
    match build_lhv(dec, pa, pb, tol) {
        Ok(model) => {
            let rho = BipartiteState::operator(dec.d_a, dec.d_b, dec.reconstruct()).ok();
            let dev = rho.and_then(|r| born_deviation(&model, &r, pa, pb).ok());
            ScanRow { index, label, success: true, max_born_deviation: dev, error: None }
        }
        Err(e) => ScanRow { index, label, success: false, max_born_deviation: None, error: Some(e.to_string()) },
    }
}

fn random_projective(d: usize, g: &mut crate::linalg::random::SeededRng) -> Povm {
    let u = haar_unitary(d, g);
    let effects = (0..d)
        .map(|k| {
            let v = u.column(k);
            ComplexMatrix::outer(&v, &v)
        })
        .collect();
    Povm { dim: d, effects }
}

fn magic_pair(c: f64) -> Result<(Povm, Povm)> {
    let a = Povm::qubit_two_outcome(c, MAGIC_BLOCH)?;
    let b = a.transposed();
    Ok((a, b))
}

/// Whether the magic POVM pair at strength `c` yields a model.
pub fn magic_succeeds(dec: &SeparableDecomposition, c: f64, tol: &Tolerances) -> Result<bool> {
    let (a, b) = magic_pair(c)?;
    Ok(build_lhv(dec, &a, &b, tol).is_ok())
}

/// Largest c ∈ [0, 1] for which the magic pair succeeds, by bisection to `precision`.
pub fn magic_threshold(dec: &SeparableDecomposition, precision: f64, tol: &Tolerances) -> Result<Option<f64>> {
    if !magic_succeeds(dec, 0.0, tol)? {
        return Ok(None);
    }
    if magic_succeeds(dec, 1.0, tol)? {
        return Ok(Some(1.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > precision {
        let mid = 0.5 * (lo + hi);
        if magic_succeeds(dec, mid, tol)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Attempts a model for each POVM pair of the family.
pub fn povm_scan(
    dec: &SeparableDecomposition,
    family: PovmFamily,
    seed: u64,
    budget: usize,
    tol: &Tolerances,
) -> Result<ScanReport> {
    let (da, db) = dec.local_dims();
    let mut rows = Vec::new();
    let mut threshold = None;
    match family {
        PovmFamily::Pauli => {
            if (da, db) != (2, 2) {
                return Err(invalid("family", "Pauli scan needs two qubits"));
            }
            let names = ["I", "X", "Y", "Z"];
            let povm = |axis: usize| if axis == 0 { Povm::trivial(2) } else { Povm::pauli(axis) };
            for i in 0..4 {
                for j in 0..4 {
                    let label = format!("{}{}", names[i], names[j]);
                    rows.push(try_pair(dec, rows.len(), label, &povm(i), &povm(j), tol));
                }
            }
        }
        PovmFamily::Random => {
            let mut g = rng(seed);
            for k in 0..budget {
                let pa = random_projective(da, &mut g);
                let pb = random_projective(db, &mut g);
                rows.push(try_pair(dec, k, format!("random-{k}"), &pa, &pb, tol));
            }
        }
        PovmFamily::Magic => {
            if (da, db) != (2, 2) {
                return Err(invalid("family", "magic-state scan needs two qubits"));
            }
            let steps = budget.max(1);
            for k in 0..=steps {
                let c = k as f64 / steps as f64;
                let (pa, pb) = magic_pair(c)?;
                rows.push(try_pair(dec, k, format!("c={c:.6}"), &pa, &pb, tol));
            }
            threshold = magic_threshold(dec, 1e-6, tol)?;
        }
    }
    let successes = rows.iter().filter(|r| r.success).count();
    Ok(ScanReport { family, rows, successes, threshold })
}
