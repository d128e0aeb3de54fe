//! Small dense linear-algebra helpers shared by the receiver and
//! deterministic-equivalent code.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::{CMatrix, Error, Result, C64};

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    out += a.adjoint();
    out * C64::new(0.5, 0.0)
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    // tr(AB) = sum_{r,c} A[r,c] B[c,r]; iterate B column-major, A row-wise.
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..a.nrows() {
        let b_col = b.column(r);
        for c in 0..a.ncols() {
            acc += a[(r, c)] * b_col[c];
        }
    }
    acc
}

/// Real part of `tr(A B)` for Hermitian `A`, `B` (the result is real).
pub fn trace_of_hermitian_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(AB) = sum_{r,c} A[r,c] B[c,r] = sum_{r,c} conj(A[c,r]) B[c,r]
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: CMatrix, what: &str) -> Result<Cholesky<C64, Dyn>> {
    a.cholesky()
        .ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// Inverse of a Hermitian positive definite matrix, re-symmetrized.
pub fn hpd_inverse(a: CMatrix, what: &str) -> Result<CMatrix> {
    let inv = cholesky(a, what)?.inverse();
    Ok(hermitian_part(&inv))
}

/// Largest eigenvalue modulus of a real square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// 1-norm condition number `||A||_1 ||A^-1||_1`, or `None` if `A` is singular.
pub fn condition_1(a: &DMatrix<f64>) -> Option<f64> {
    let inv = a.clone().try_inverse()?;
    let norm1 = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    Some(norm1(a) * norm1(&inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |r, c| {
            C64::new(((r * 3 + c) as f64 * seed).sin(), ((r + 5 * c) as f64 * seed).cos())
        })
    }

    #[test]
    fn trace_matches_product() {
        let a = sample(5, 0.7);
        let b = sample(5, 1.3);
        let want = (&a * &b).trace();
        assert!((trace_of_product(&a, &b) - want).norm() < 1e-12);
    }

    #[test]
    fn hermitian_trace_matches_product() {
        let a = hermitian_part(&sample(6, 0.4));
        let b = hermitian_part(&sample(6, 2.1));
        let want = (&a * &b).trace();
        assert!(want.im.abs() < 1e-12);
        assert!((trace_of_hermitian_product(&a, &b) - want.re).abs() < 1e-12);
    }

    #[test]
    fn radius_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -0.9, 0.1]));
        assert!((spectral_radius(&a) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn singular_has_no_condition() {
        let a = DMatrix::<f64>::zeros(3, 3);
        assert!(condition_1(&a).is_none());
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((condition_1(&i).unwrap() - 1.0).abs() < 1e-15);
    }
}
