//! Dense linear-algebra helpers shared by the operator and solver layers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::scalar::Exact;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest eigenvalue of a Hermitian matrix (the Hermitian part is used).
pub fn hermitian_max_eig(h: &CMat) -> f64 {
    if h.nrows() == 0 {
        return 0.0;
    }
    let sym = (h + h.adjoint()) * c(0.5);
    sym.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Operator 2-norm through the smaller Gram matrix.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = if a.nrows() >= a.ncols() { a.ad_mul(a) } else { a * a.adjoint() };
    hermitian_max_eig(&gram).max(0.0).sqrt()
}

/// `f(H)` for Hermitian `H` by spectral calculus.
pub fn hermitian_apply(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| c(f(v)));
    let u = &eig.eigenvectors;
    u * DMatrix::from_diagonal(&vals) * u.adjoint()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Relative condition number estimate from singular values; infinite when singular.
pub fn condition(a: &CMat) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Determinant by exact Gaussian elimination.
pub fn exact_det(a: &DMatrix<Exact>) -> Exact {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = Exact::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
            return Exact::zero();
        };
        if p != col {
            m.swap_rows(p, col);
            det = -det;
        }
        let pivot = m[(col, col)].clone();
        det *= pivot.clone();
        for r in col + 1..n {
            if m[(r, col)].is_zero() {
                continue;
            }
            let f = m[(r, col)].clone() / pivot.clone();
            for k in col..n {
                let sub = f.clone() * m[(col, k)].clone();
                m[(r, k)] -= sub;
            }
        }
    }
    det
}

/// Inverse by exact Gauss–Jordan elimination, `None` when singular.
pub fn exact_inverse(a: &DMatrix<Exact>) -> Option<DMatrix<Exact>> {
    assert!(a.is_square(), "inverse of a non-square matrix");
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::from_fn(n, n, |i, j| if i == j { Exact::one() } else { Exact::zero() });
    for col in 0..n {
        let p = (col..n).find(|&r| !m[(r, col)].is_zero())?;
        m.swap_rows(p, col);
        inv.swap_rows(p, col);
        let pivot = m[(col, col)].clone();
        for k in 0..n {
            m[(col, k)] = m[(col, k)].clone() / pivot.clone();
            inv[(col, k)] = inv[(col, k)].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == col || m[(r, col)].is_zero() {
                continue;
            }
            let f = m[(r, col)].clone();
            for k in 0..n {
                let a = f.clone() * m[(col, k)].clone();
                m[(r, k)] -= a;
                let b = f.clone() * inv[(col, k)].clone();
                inv[(r, k)] -= b;
            }
        }
    }
    Some(inv)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec_of(t: &CMat) -> CVec {
    CVec::from_column_slice(t.as_slice())
}

pub fn unvec(v: &CVec, m: usize) -> CMat {
    CMat::from_column_slice(m, m, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact_int, exact_ratio};

    #[test]
    fn det_oracles() {
        let a = DMatrix::from_row_slice(2, 2, &[exact_int(1), exact_int(2), exact_int(3), exact_int(4)]);
        assert_eq!(exact_det(&a), exact_int(-2));
        let s = DMatrix::from_row_slice(2, 2, &[exact_int(0), exact_int(1), exact_int(0), exact_int(5)]);
        assert_eq!(exact_det(&s), exact_int(0));
        let p = DMatrix::from_row_slice(2, 2, &[exact_int(0), exact_ratio(1, 2), exact_int(2), exact_int(7)]);
        assert_eq!(exact_det(&p), exact_int(-1));
        let inv = exact_inverse(&p).unwrap();
        assert_eq!(&inv * &p, DMatrix::from_fn(2, 2, |i, j| exact_int((i == j) as i64)));
        assert!(exact_inverse(&s).is_none());
    }

    #[test]
    fn norms() {
        let a = CMat::from_row_slice(2, 3, &[c(3.0), c(0.0), c(0.0), c(0.0), c(4.0), c(0.0)]);
        assert!((op_norm(&a) - 4.0).abs() < 1e-12);
        let h = CMat::from_row_slice(2, 2, &[c(4.0), c(0.0), c(0.0), c(9.0)]);
        let r = hermitian_apply(&h, f64::sqrt);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-12);
        let t = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64));
        assert_eq!(unvec(&vec_of(&t), 3), t);
    }
}
