//! Seeded sampling of matrices and tuples.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fockops::row_norm;
use crate::freealg::MatrixTuple;
use crate::linalg::{c, condition, CMat};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries with real and imaginary parts uniform in `[-1, 1)`.
pub fn complex_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn real_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0)))
}

pub fn tuple(rng: &mut impl Rng, d: usize, m: usize) -> MatrixTuple {
    MatrixTuple::new((0..d).map(|_| complex_matrix(rng, m, m)).collect()).expect("d, m positive")
}

/// A strict row contraction with `‖X‖_row` uniform in `(0, 1)`.
pub fn row_ball_point(rng: &mut impl Rng, d: usize, m: usize) -> MatrixTuple {
    loop {
        let x = tuple(rng, d, m);
        let r = row_norm(&x);
        if r > 1e-12 {
            let target: f64 = rng.random_range(0.0..1.0);
            return x.scale(target / r);
        }
    }
}

/// Matrix with condition number below `max_cond`.
pub fn invertible(rng: &mut impl Rng, m: usize, max_cond: f64) -> CMat {
    loop {
        let s = complex_matrix(rng, m, m);
        if condition(&s) < max_cond {
            return s;
        }
    }
}

/// Haar-like unitary from the QR factor of a random matrix.
pub fn unitary(rng: &mut impl Rng, m: usize) -> CMat {
    let qr = complex_matrix(rng, m, m).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..m {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}
