//! Seeded random sampling.
//!
//! Every generator draws from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! through `SeedableRng::seed_from_u64`, and Gaussian variates come from
//! `rand_distr::StandardNormal`, so outputs are a pure function of the seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::matrix::{vec_norm, ComplexMatrix};

pub type SeededRng = ChaCha20Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex Gaussian with E|z|² = 1.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(h * gaussian(rng), h * gaussian(rng))
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn real_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector in ℂᵈ.
pub fn haar_vector(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        let n = vec_norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of diag(R)
/// absorbed into Q.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(n, n, rng).to_nalgebra();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let q = DMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        q[(i, j)] * phase
    });
    ComplexMatrix::from_nalgebra(&q)
}

/// Haar-random real orthogonal matrix (sign-fixed QR of a real Gaussian matrix).
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = real_gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    DMatrix::from_fn(n, n, |i, j| if r[(j, j)] < 0.0 { -q[(i, j)] } else { q[(i, j)] })
}

pub fn real_to_complex(m: &DMatrix<f64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// First `rows` rows of an `cols × cols` Haar unitary: a row isometry.
pub fn random_row_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    assert!(rows <= cols, "row isometry needs rows <= cols");
    let u = haar_unitary(cols, rng);
    ComplexMatrix::from_fn(rows, cols, |i, j| u[(i, j)])
}

/// Random probability vector from normalised exponential variates, bounded
/// away from zero.
pub fn random_probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Positive reals drawn log-uniformly from [1/span, span].
pub fn random_positive(n: usize, span: f64, rng: &mut impl Rng) -> Vec<f64> {
    let l = span.ln();
    (0..n).map(|_| ((2.0 * rng.random::<f64>() - 1.0) * l).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let a = haar_unitary(4, &mut rng(7));
        let b = haar_unitary(4, &mut rng(7));
        assert_eq!(a, b);
        assert_ne!(a, haar_unitary(4, &mut rng(8)));
    }

    #[test]
    fn unitaries_and_orthogonals() {
        let mut r = rng(1);
        for n in 1..6 {
            let u = haar_unitary(n, &mut r);
            assert!((&u * &u.adjoint()).distance(&ComplexMatrix::identity(n)) < 1e-12);
            let o = random_orthogonal(n, &mut r);
            assert!((&o * o.transpose() - DMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn row_isometry() {
        let u = random_row_isometry(3, 5, &mut rng(2));
        assert!((&u * &u.adjoint()).distance(&ComplexMatrix::identity(3)) < 1e-12);
    }
}
