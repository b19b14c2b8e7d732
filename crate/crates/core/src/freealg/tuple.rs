use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Coeff;

/// A point `X = (X_1, …, X_d)` of square `m × m` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple<C: Coeff = Complex64> {
    mats: Vec<DMatrix<C>>,
}

impl<C: Coeff> MatrixTuple<C> {
    pub fn new(mats: Vec<DMatrix<C>>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::Shape("a tuple needs at least one matrix".into()))?;
        let m = first.nrows();
        if m == 0 {
            return Err(Error::Shape("tuple level must be positive".into()));
        }
        for (j, x) in mats.iter().enumerate() {
            if x.shape() != (m, m) {
                return Err(Error::Shape(format!(
                    "matrix {} is {}x{}, expected {m}x{m}",
                    j + 1,
                    x.nrows(),
                    x.ncols()
                )));
            }
        }
        Ok(MatrixTuple { mats })
    }

    pub fn zeros(d: usize, m: usize) -> Self {
        MatrixTuple {
            mats: vec![DMatrix::zeros(m, m); d],
        }
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn level(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn mats(&self) -> &[DMatrix<C>] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<DMatrix<C>> {
        self.mats
    }

    /// Matrix for letter `x_i` (1-based).
    pub fn letter(&self, i: usize) -> &DMatrix<C> {
        &self.mats[i - 1]
    }

    /// Entrywise adjoint `X* = (X_1*, …, X_d*)`.
    pub fn adjoint(&self) -> Self {
        MatrixTuple {
            mats: self
                .mats
                .iter()
                .map(|x| x.transpose().map(|v| v.conj()))
                .collect(),
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return Err(Error::LetterCount {
                left: self.d(),
                right: other.d(),
            });
        }
        let (a, b) = (self.level(), other.level());
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(x, y)| {
                let mut z = DMatrix::zeros(a + b, a + b);
                z.view_mut((0, 0), (a, a)).copy_from(x);
                z.view_mut((a, a), (b, b)).copy_from(y);
                z
            })
            .collect();
        Ok(MatrixTuple { mats })
    }

    /// `X^w = X_{i1} ⋯ X_{ik}`.
    pub fn word_matrix(&self, w: &super::Word) -> DMatrix<C> {
        let m = self.level();
        w.letters()
            .fold(DMatrix::identity(m, m), |acc, l| acc * self.letter(l))
    }

    /// The homogeneous linear polynomial `A·x = Σ_j A_j x_j`.
    pub fn linear_form(&self) -> super::MatrixFreePoly<C> {
        let m = self.level();
        super::MatrixFreePoly::from_terms(
            m,
            m,
            self.d(),
            self.mats
                .iter()
                .enumerate()
                .map(|(j, a)| (super::Word::letter(j + 1), a.clone())),
        )
        .expect("letters are in range")
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MatrixTuple<D> {
        MatrixTuple {
            mats: self.mats.iter().map(|x| x.map(|v| f(&v))).collect(),
        }
    }

    pub fn to_complex(&self) -> MatrixTuple<Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }
}

impl MatrixTuple<Complex64> {
    pub fn scale(&self, s: f64) -> Self {
        MatrixTuple {
            mats: self.mats.iter().map(|x| x * Complex64::new(s, 0.0)).collect(),
        }
    }

    /// `S⁻¹ X S`, or `None` when `S` is singular.
    pub fn conjugate(&self, s: &DMatrix<Complex64>) -> Option<Self> {
        let inv = s.clone().try_inverse()?;
        Some(MatrixTuple {
            mats: self.mats.iter().map(|x| &inv * x * s).collect(),
        })
    }

    /// Row-ball membership: `‖X‖_row < 1`.
    pub fn in_row_ball(&self) -> bool {
        crate::fockops::row_norm(self) < 1.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}
