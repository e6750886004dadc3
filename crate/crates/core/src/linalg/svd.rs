//! Thin singular value decompositions backed by nalgebra's Golub–Kahan SVD.
//!
//! The bidiagonal sweep occasionally stalls on rank-deficient input and
//! returns factors that do not recompose the matrix. Each result is checked
//! and the sweep is retried with a looser deflation threshold when needed.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Deflation thresholds tried in order, as multiples of machine epsilon.
const EPS_LADDER: [f64; 4] = [5.0, 1e3, 1e4, 1e5];
/// Relative recomposition and orthonormality error that ends the ladder.
const ACCEPT: f64 = 1e-11;
/// Largest error tolerated from the best attempt once the ladder is exhausted.
/// Stalled sweeps are off by many orders of magnitude more than this.
const FALLBACK: f64 = 1e-8;

/// `m = u · diag(s) · v†` with `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Real counterpart of [`Svd`]: `m = u · diag(s) · vᵀ`.
#[derive(Clone, Debug)]
pub struct RealSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn sorted_order(s: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order
}

type Factors<T> = (DMatrix<T>, Vec<f64>, DMatrix<T>);

fn attempt<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, eps: f64) -> Option<(Factors<T>, f64)> {
    let svd = m.clone().try_svd(true, true, eps, 0)?;
    let u = svd.u?;
    let v_t = svd.v_t?;
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if s.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return None;
    }
    let order = sorted_order(&s);
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])].clone());
    // nalgebra returns v†; store v itself.
    let v = DMatrix::from_fn(v_t.ncols(), order.len(), |j, k| v_t[(order[k], j)].clone().conjugate());
    let s: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let k = s.len();
    let us = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, j)].clone() * T::from_real(s[j]));
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let recon = (&us * v.adjoint() - m).norm() / scale;
    let eye = DMatrix::<T>::identity(k, k);
    let orth = (u.adjoint() * &u - &eye).norm().max((v.adjoint() * &v - &eye).norm());
    Some(((u, s, v), recon.max(orth)))
}

fn decompose<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> Result<Factors<T>> {
    let mut best: Option<(Factors<T>, f64)> = None;
    for f in EPS_LADDER {
        if let Some((factors, err)) = attempt(&m, f * f64::EPSILON) {
            if err <= ACCEPT {
                return Ok(factors);
            }
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((factors, err));
            }
        }
    }
    match best {
        Some((factors, err)) if err <= FALLBACK => Ok(factors),
        _ => Err(Error::SvdNonConvergence),
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let (u, s, v) = decompose::<Complex64>(m.to_nalgebra())?;
    Ok(Svd { u: ComplexMatrix::from_nalgebra(&u), s, v: ComplexMatrix::from_nalgebra(&v) })
}

pub fn real_svd(m: &DMatrix<f64>) -> Result<RealSvd> {
    let (u, s, v) = decompose::<f64>(m.clone())?;
    Ok(RealSvd { u, s, v })
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.s.len();
        let us = ComplexMatrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.s[j]);
        &us * &self.v.adjoint()
    }

    /// Number of singular values strictly above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.s.iter().filter(|&&x| x > cutoff).count()
    }
}

/// Least-squares solution of `a x ≈ b` via the pseudo-inverse, discarding
/// singular values below `rcond · s_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &[f64], rcond: f64) -> Result<Vec<f64>> {
    let RealSvd { u, s, v } = real_svd(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let mut x = vec![0.0; a.ncols()];
    for (k, &sk) in s.iter().enumerate() {
        if sk <= rcond * smax || sk == 0.0 {
            continue;
        }
        let coeff: f64 = (0..a.nrows()).map(|i| u[(i, k)] * b[i]).sum::<f64>() / sk;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coeff * v[(j, k)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_singular_values() {
        let r = svd(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(r.s.len(), 3);
        assert!(r.s.iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diagonal_singular_values_are_sorted() {
        let m = ComplexMatrix::real_diag(&[1.0, 3.0, 2.0]);
        let r = svd(&m).unwrap();
        for (got, want) in r.s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(r.reconstruct().distance(&m) < 1e-14);
    }

    #[test]
    fn rectangular_reconstruction() {
        let m = ComplexMatrix::from_fn(3, 5, |i, j| Complex64::new((i * 5 + j) as f64, (i as f64) - (j as f64)));
        let r = svd(&m).unwrap();
        assert_eq!(r.u.shape(), (3, 3));
        assert_eq!(r.v.shape(), (5, 3));
        assert!(r.reconstruct().distance(&m) < 1e-12 * m.norm());
    }

    #[test]
    fn rank_deficient_matrices_recompose() {
        use crate::linalg::random::{ginibre, rng};
        for seed in 0..200u64 {
            let mut g = rng(seed);
            let n = 2 + (seed as usize % 15);
            let k = 1 + (seed as usize % 3).min(n - 1);
            let m = &ginibre(n, k, &mut g) * &ginibre(k, n, &mut g);
            let r = svd(&m).unwrap();
            assert!(r.reconstruct().distance(&m) <= 1e-10 * m.norm(), "seed {seed}");
            assert_eq!(r.rank(1e-10 * m.norm()), k, "seed {seed}");
            let re = DMatrix::from_fn(n, n, |i, j| m[(i, j)].re + m[(j, i)].re);
            let rr = real_svd(&re).unwrap();
            let us = DMatrix::from_fn(n, rr.s.len(), |i, j| rr.u[(i, j)] * rr.s[j]);
            assert!((us * rr.v.transpose() - &re).norm() <= 1e-10 * re.norm(), "seed {seed}");
        }
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = lstsq(&a, &[1.0, 2.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }
}
