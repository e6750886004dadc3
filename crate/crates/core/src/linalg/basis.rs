//! Local operator bases: Pauli, Gell-Mann, Heisenberg–Weyl and qubit
//! phase-point operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{combine, ComplexMatrix, I, ONE, ZERO};
use crate::error::{Error, Result};

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::real_diag(&[1.0, -1.0])
}

/// Pauli operator by axis index 0..=3 (𝟙, σx, σy, σz).
pub fn pauli(axis: usize) -> ComplexMatrix {
    match axis {
        0 => ComplexMatrix::identity(2),
        1 => sigma_x(),
        2 => sigma_y(),
        3 => sigma_z(),
        _ => panic!("pauli axis {axis} out of range"),
    }
}

/// Qubit operator ½(t·𝟙 + n·σ).
pub fn bloch_operator(t: f64, n: [f64; 3]) -> ComplexMatrix {
    let terms = [(t, pauli(0)), (n[0], pauli(1)), (n[1], pauli(2)), (n[2], pauli(3))];
    combine(terms.iter().map(|(c, m)| (Complex64::new(0.5 * c, 0.0), m)), 2, 2)
}

/// A family of d×d operators with tr(Cᵢ†Cⱼ) = κ δᵢⱼ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorBasis {
    pub dim: usize,
    pub ops: Vec<ComplexMatrix>,
    pub normalization: f64,
}

impl OperatorBasis {
    pub fn new(dim: usize, ops: Vec<ComplexMatrix>, normalization: f64) -> Result<Self> {
        if ops.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!("basis operators must be {dim}x{dim}")));
        }
        if normalization <= 0.0 {
            return Err(Error::InvalidArgument {
                field: "normalization".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(Self { dim, ops, normalization })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.ops.len() == self.dim * self.dim
    }

    /// Gram matrix Gᵢⱼ = tr(Cᵢ†Cⱼ).
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.ops.len();
        ComplexMatrix::from_fn(n, n, |i, j| self.ops[i].inner(&self.ops[j]))
    }

    /// max |tr(Cᵢ†Cⱼ) − κδᵢⱼ|.
    pub fn orthogonality_residual(&self) -> f64 {
        let g = self.gram();
        let n = self.ops.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { self.normalization } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Expansion coefficients xᵢ with x = Σ xᵢ Cᵢ (exact for complete bases).
    pub fn coefficients(&self, x: &ComplexMatrix) -> Vec<Complex64> {
        self.ops.iter().map(|c| c.inner(x) / self.normalization).collect()
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> ComplexMatrix {
        assert_eq!(coeffs.len(), self.ops.len(), "coefficient count");
        combine(coeffs.iter().copied().zip(&self.ops), self.dim, self.dim)
    }

    pub fn transposed(&self) -> Self {
        Self {
            dim: self.dim,
            ops: self.ops.iter().map(ComplexMatrix::transpose).collect(),
            normalization: self.normalization,
        }
    }

    pub fn rescaled(&self, normalization: f64) -> Self {
        let k = (normalization / self.normalization).sqrt();
        Self { dim: self.dim, ops: self.ops.iter().map(|m| m.scale_re(k)).collect(), normalization }
    }
}

/// {𝟙, σx, σy, σz}, κ = 2.
pub fn pauli_basis() -> OperatorBasis {
    OperatorBasis { dim: 2, ops: (0..4).map(pauli).collect(), normalization: 2.0 }
}

/// Orthonormal Hermitian basis of d×d operators (κ = 1): 𝟙/√d first, then
/// for each pair j<k the symmetric and antisymmetric generators, then the
/// traceless diagonal generators. At d = 2 this is {𝟙, σx, σy, σz}/√2.
pub fn gell_mann_basis(d: usize) -> OperatorBasis {
    assert!(d >= 1);
    let mut ops = Vec::with_capacity(d * d);
    ops.push(ComplexMatrix::identity(d).scale_re(1.0 / (d as f64).sqrt()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = ComplexMatrix::zeros(d, d);
            sym[(j, k)] = Complex64::new(h, 0.0);
            sym[(k, j)] = Complex64::new(h, 0.0);
            let mut anti = ComplexMatrix::zeros(d, d);
            anti[(j, k)] = Complex64::new(0.0, -h);
            anti[(k, j)] = Complex64::new(0.0, h);
            ops.push(sym);
            ops.push(anti);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = 1.0 / norm;
        }
        diag[l] = -(l as f64) / norm;
        ops.push(ComplexMatrix::real_diag(&diag));
    }
    OperatorBasis { dim: d, ops, normalization: 1.0 }
}

/// Hermitian basis with κ = d (Gell-Mann scaled by √d, first element 𝟙).
pub fn hermitian_basis(d: usize) -> OperatorBasis {
    gell_mann_basis(d).rescaled(d as f64)
}

/// Clock-and-shift unitaries XᵃZᵇ, a,b ∈ 0..d, ordered by (a, b); κ = d.
pub fn heisenberg_weyl_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InvalidArgument { field: "d".into(), reason: "must be at least 2".into() });
    }
    let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * PI * (k % d) as f64 / d as f64);
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // (XᵃZᵇ)|y⟩ = ωᵇʸ |y+a⟩
            ops.push(ComplexMatrix::from_fn(d, d, |x, y| if x == (y + a) % d { omega(b * y) } else { ZERO }));
        }
    }
    Ok(OperatorBasis { dim: d, ops, normalization: d as f64 })
}

/// Bloch vectors of the four qubit phase-point operators Wₖ = ½(𝟙 + nₖ·σ).
pub const PHASE_POINT_BLOCH: [[f64; 3]; 4] =
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

/// The four unit-trace phase-point operators with tr(WᵢWⱼ) = 2δᵢⱼ.
pub fn phase_point_operators() -> OperatorBasis {
    let ops = PHASE_POINT_BLOCH.iter().map(|&n| bloch_operator(1.0, n)).collect();
    OperatorBasis { dim: 2, ops, normalization: 2.0 }
}
