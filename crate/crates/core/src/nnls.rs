//! Lawson–Hanson active-set solver for min ‖Ax − b‖₂ subject to x ≥ 0.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::svd::lstsq;

#[derive(Clone, Debug, PartialEq)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// ‖Ax − b‖₂ at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Default outer-iteration cap as a multiple of the column count.
pub fn default_iteration_cap(cols: usize) -> usize {
    (3 * cols).max(100)
}

/// Solves the nonnegative least-squares problem. Deterministic: ties in the
/// dual vector go to the lowest column index.
pub fn nnls(a: &DMatrix<f64>, b: &[f64], max_iter: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("rhs has {} entries, matrix has {m} rows", b.len())));
    }
    let bv = DVector::from_column_slice(b);
    if n == 0 {
        return Ok(NnlsSolution { x: Vec::new(), residual: bv.norm(), iterations: 0 });
    }
    let anorm = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * anorm * bv.norm().max(1.0);

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;

    let dual = |x: &DVector<f64>| a.tr_mul(&(&bv - a * x));
    let mut w = dual(&x);

    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(k) if w[k] >= w[j] => Some(k),
                _ => Some(j),
            });
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::IterationCap(max_iter));
        }
        passive[j] = true;
        let mut stalled = false;

        for inner in 0.. {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let z = lstsq(&sub, b, 1e-13)?;
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (&k, &v) in idx.iter().zip(&z) {
                    x[k] = v;
                }
                break;
            }
            // Step towards z until the first passive coordinate hits zero.
            let mut alpha = f64::INFINITY;
            let mut blocking = idx[0];
            for (&k, &v) in idx.iter().zip(&z) {
                if v <= 0.0 {
                    let denom = x[k] - v;
                    let step = if denom > 0.0 { x[k] / denom } else { 0.0 };
                    if step < alpha {
                        alpha = step;
                        blocking = k;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (&k, &v) in idx.iter().zip(&z) {
                x[k] += alpha * (v - x[k]);
            }
            x[blocking] = 0.0;
            stalled = inner == 0 && blocking == j && alpha == 0.0;
            let mut removed = false;
            for &k in &idx {
                if x[k] <= tol.max(1e-15 * x.amax()) {
                    x[k] = 0.0;
                    passive[k] = false;
                    removed = true;
                }
            }
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::IterationCap(max_iter));
            }
            if stalled || !removed || !passive.iter().any(|&p| p) {
                break;
            }
        }
        if stalled {
            // The entering column was knocked straight out: its dual value was noise.
            break;
        }
        w = dual(&x);
    }

    let residual = (&bv - a * &x).norm();
    Ok(NnlsSolution { x: x.iter().copied().collect(), residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{gaussian, rng};

    #[test]
    fn unconstrained_optimum_inside_orthant() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = [1.0, 2.0, 3.0];
        let s = nnls(&a, &b, 100).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn active_bound() {
        let a = DMatrix::identity(2, 2);
        let s = nnls(&a, &[-1.0, 2.0], 100).unwrap();
        assert_eq!(s.x[0], 0.0);
        assert!((s.x[1] - 2.0).abs() < 1e-14);
        assert!((s.residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kkt_conditions_on_random_problems() {
        let mut g = rng(3);
        for _ in 0..30 {
            let (m, n) = (8, 12);
            let a = DMatrix::from_fn(m, n, |_, _| gaussian(&mut g));
            let b: Vec<f64> = (0..m).map(|_| gaussian(&mut g)).collect();
            let s = nnls(&a, &b, 1000).unwrap();
            let x = DVector::from_vec(s.x.clone());
            let w = a.tr_mul(&(DVector::from_vec(b.clone()) - &a * &x));
            for j in 0..n {
                assert!(x[j] >= 0.0);
                assert!(w[j] <= 1e-9, "dual {j} = {}", w[j]);
                if x[j] > 0.0 {
                    assert!(w[j].abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn empty_problem() {
        let a = DMatrix::<f64>::zeros(3, 0);
        assert!((nnls(&a, &[3.0, 4.0, 0.0], 10).unwrap().residual - 5.0).abs() < 1e-15);
    }
}
