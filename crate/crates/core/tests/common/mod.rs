//! Independent numerical oracles built directly on nalgebra.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use sepdecomp::linalg::matrix::ComplexMatrix;

pub type CM = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_na(m: &ComplexMatrix) -> CM {
    CM::from_row_slice(m.rows(), m.cols(), m.entries())
}

pub fn kron(a: &CM, b: &CM) -> CM {
    a.kronecker(b)
}

pub fn frob(a: &CM) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// tr(a† b).
pub fn inner(a: &CM, b: &CM) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// M[(i dA + k), (j dB + l)] = ρ[(i dB + j), (k dB + l)].
pub fn realign(rho: &CM, da: usize, db: usize) -> CM {
    let mut m = CM::zeros(da * da, db * db);
    for i in 0..da {
        for k in 0..da {
            for j in 0..db {
                for l in 0..db {
                    m[(i * da + k, j * db + l)] = rho[(i * db + j, k * db + l)];
                }
            }
        }
    }
    m
}

/// Nonzero singular values of the realignment, descending. Taken as the
/// positive eigenvalues of the Hermitian dilation [[0, M], [M†, 0]].
pub fn schmidt_values(rho: &CM, da: usize, db: usize) -> Vec<f64> {
    let m = realign(rho, da, db);
    let (r, k) = m.shape();
    let mut h = CM::zeros(r + k, r + k);
    h.view_mut((0, r), (r, k)).copy_from(&m);
    h.view_mut((r, 0), (k, r)).copy_from(&m.adjoint());
    let mut s: Vec<f64> = h.symmetric_eigenvalues().iter().copied().filter(|&x| x > 1e-10).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn pauli(k: usize) -> CM {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        0 => CM::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CM::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CM::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CM::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index"),
    }
}

/// |Φ⁺⟩⟨Φ⁺|.
pub fn bell_rho() -> CM {
    let h = c(0.5, 0.0);
    let z = c(0.0, 0.0);
    let mut m = CM::from_element(4, 4, z);
    for &(r, col) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(r, col)] = h;
    }
    m
}

/// Projectors (𝟙 ± σₖ)/2, outcome 0 first.
pub fn pauli_projectors(k: usize) -> [CM; 2] {
    let id = pauli(0);
    let s = pauli(k);
    [(&id + &s).scale(0.5), (&id - &s).scale(0.5)]
}

/// Σₖ pₖ Aₖ⊗Bₖ.
pub fn reconstruct(p: &[f64], a: &[ComplexMatrix], b: &[ComplexMatrix]) -> CM {
    let mut out: Option<CM> = None;
    for ((p, a), b) in p.iter().zip(a).zip(b) {
        let t = kron(&to_na(a), &to_na(b)).map(|z| z * *p);
        out = Some(match out {
            Some(acc) => acc + t,
            None => t,
        });
    }
    out.expect("at least one term")
}

/// max |tr(Xᵢ†Xⱼ) − κδᵢⱼ|.
pub fn gram_residual(ops: &[ComplexMatrix], kappa: f64) -> f64 {
    let n: Vec<CM> = ops.iter().map(to_na).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in n.iter().enumerate() {
        for (j, b) in n.iter().enumerate() {
            let want = if i == j { kappa } else { 0.0 };
            worst = worst.max((inner(a, b) - want).norm());
        }
    }
    worst
}

pub fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
