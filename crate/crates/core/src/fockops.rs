//! Operators on truncated Fock space: left multiplication matrices, row and
//! column norms, the completely positive map `Ψ_X`, and structural norms of
//! pencil powers.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freealg::{MatrixFreePoly, MatrixTuple, Word};
use crate::linalg::{c, hermitian_max_eig, unvec, vec_of, CMat};
use crate::scalar::format_f64;

/// Largest number of basis words materialized densely.
pub const CAPACITY: usize = 5000;

/// Number of words of length ≤ `n` over `d` letters, `None` on overflow.
pub fn basis_size(d: usize, n: usize) -> Option<usize> {
    level_offset(d, n + 1)
}

/// Number of words of length < `len`, i.e. the index of the first word of length `len`.
pub fn level_offset(d: usize, len: usize) -> Option<usize> {
    if d == 1 {
        return Some(len);
    }
    let mut total: usize = 0;
    let mut pow: usize = 1;
    for _ in 0..len {
        total = total.checked_add(pow)?;
        pow = pow.checked_mul(d)?;
    }
    Some(total)
}

pub fn check_capacity(d: usize, n: usize, limit: usize) -> Result<usize> {
    match basis_size(d, n) {
        Some(size) if size <= limit => Ok(size),
        Some(size) => Err(Error::Capacity { requested: size, limit }),
        None => Err(Error::Capacity {
            requested: usize::MAX,
            limit,
        }),
    }
}

/// All words of length ≤ `n` in graded-lex order.
#[derive(Clone, Debug)]
pub struct TruncatedBasis {
    d: usize,
    n: usize,
    words: Vec<Word>,
}

impl TruncatedBasis {
    pub fn new(d: usize, n: usize, limit: usize) -> Result<Self> {
        assert!(d >= 1, "at least one letter");
        let size = check_capacity(d, n, limit)?;
        let mut words = Vec::with_capacity(size);
        for len in 0..=n {
            let count = d.pow(len as u32);
            for rank in 0..count {
                let mut letters = vec![0usize; len];
                let mut r = rank;
                for slot in letters.iter_mut().rev() {
                    *slot = r % d + 1;
                    r /= d;
                }
                words.push(Word::from_letters(&letters));
            }
        }
        Ok(TruncatedBasis { d, n, words })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        word_index(self.d, w).filter(|_| w.len() <= self.n)
    }
}

/// Graded-lex index of `w` among all words.
pub fn word_index(d: usize, w: &Word) -> Option<usize> {
    if w.max_letter() > d {
        return None;
    }
    Some(level_offset(d, w.len())? + w.lex_rank(d))
}

/// Column-compressed sparse matrix; exact for the 0/1 patterns of shifts.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    nrows: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, Complex64)] {
        &self.cols[j]
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.nrows, self.ncols());
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out[(i, j)] += v;
            }
        }
        out
    }

    /// `self* · other`, computed column pair by column pair.
    pub fn adjoint_mul(&self, other: &SparseMatrix) -> CMat {
        assert_eq!(self.nrows, other.nrows, "row counts differ");
        let mut dense_col = vec![Complex64::new(0.0, 0.0); self.nrows];
        let mut out = CMat::zeros(self.ncols(), other.ncols());
        for (b, col_b) in other.cols.iter().enumerate() {
            for &(i, v) in col_b {
                dense_col[i] += v;
            }
            for (a, col_a) in self.cols.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for &(i, v) in col_a {
                    s += v.conj() * dense_col[i];
                }
                out[(a, b)] = s;
            }
            for &(i, _) in col_b {
                dense_col[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn gram(&self) -> CMat {
        self.adjoint_mul(self)
    }
}

/// Sparse matrix of `P ↦ F·P` for `P` a `k′ × 1` polynomial of degree ≤ `n`,
/// from basis `(word, component)` to `(word, component)` with word-major order.
/// A `k′ × q` argument is handled column by column, so this block carries the
/// whole spectrum.
pub fn left_mult_sparse(f: &MatrixFreePoly, n: usize) -> Result<SparseMatrix> {
    let d = f.d();
    let deg = f.degree().finite().unwrap_or(0);
    let out_words = check_capacity(d, n + deg, CAPACITY)?;
    let in_words = basis_size(d, n).expect("smaller than the output basis");
    let (k, kp) = f.shape();
    let domain = TruncatedBasis::new(d, n, CAPACITY)?;
    let mut cols = vec![Vec::new(); in_words * kp];
    for (ui, u) in domain.words().iter().enumerate() {
        for (w, coeff) in f.terms() {
            let row_word = word_index(d, &w.concat(u)).expect("in range");
            for s in 0..kp {
                for r in 0..k {
                    let v = coeff[(r, s)];
                    if v != Complex64::new(0.0, 0.0) {
                        cols[ui * kp + s].push((row_word * k + r, v));
                    }
                }
            }
        }
    }
    Ok(SparseMatrix {
        nrows: out_words * k,
        cols,
    })
}

/// Dense form of [`left_mult_sparse`].
pub fn left_mult_matrix(f: &MatrixFreePoly, n: usize) -> Result<CMat> {
    Ok(left_mult_sparse(f, n)?.to_dense())
}

/// Coefficient vector of a `k × 1` polynomial in the `(word, component)` basis.
pub fn coefficient_vector(p: &MatrixFreePoly, n: usize) -> Result<nalgebra::DVector<Complex64>> {
    let size = check_capacity(p.d(), n, CAPACITY)?;
    let k = p.rows();
    let mut v = nalgebra::DVector::zeros(size * k);
    for (w, m) in p.terms() {
        if w.len() > n {
            return Err(Error::Shape(format!("term {w} exceeds degree {n}")));
        }
        let base = word_index(p.d(), w).expect("in range") * k;
        for r in 0..k {
            v[base + r] = m[(r, 0)];
        }
    }
    Ok(v)
}

fn sum_gram(x: &MatrixTuple, row: bool) -> CMat {
    let m = x.level();
    let mut acc = CMat::zeros(m, m);
    for a in x.mats() {
        if row {
            acc += a * a.adjoint();
        } else {
            acc += a.ad_mul(a);
        }
    }
    acc
}

/// `‖X_1X_1* + … + X_dX_d*‖^{1/2}`.
pub fn row_norm(x: &MatrixTuple) -> f64 {
    hermitian_max_eig(&sum_gram(x, true)).max(0.0).sqrt()
}

/// `‖X_1*X_1 + … + X_d*X_d‖^{1/2}`.
pub fn col_norm(x: &MatrixTuple) -> f64 {
    hermitian_max_eig(&sum_gram(x, false)).max(0.0).sqrt()
}

/// Multiplier norm of `A·x` acting by left multiplication, which equals `‖A‖_col`.
pub fn pencil_mult_norm(a: &MatrixTuple) -> f64 {
    col_norm(a)
}

/// Largest singular value of the truncated left multiplication by `p`.
pub fn multiplier_norm_lower_bound(p: &MatrixFreePoly, n: usize) -> Result<f64> {
    let l = left_mult_sparse(p, n)?;
    Ok(hermitian_max_eig(&l.gram()).max(0.0).sqrt())
}

/// `Ψ_X(T) = Σ_j X_j T X_j*`, applied directly.
pub fn psi(x: &MatrixTuple, t: &CMat) -> CMat {
    let mut acc = CMat::zeros(x.level(), x.level());
    for a in x.mats() {
        acc += a * t * a.adjoint();
    }
    acc
}

/// `Φ_M(T) = Σ_j M_j* T M_j`, the map that drives norms of pencil powers.
pub fn phi(m: &MatrixTuple, t: &CMat) -> CMat {
    let mut acc = CMat::zeros(m.level(), m.level());
    for a in m.mats() {
        acc += a.adjoint() * t * a;
    }
    acc
}

/// Matrix of `Ψ_X` on column-stacked `m × m` matrices: `Σ_j conj(X_j) ⊗ X_j`.
#[derive(Clone, Debug)]
pub struct CpMapMatrix {
    source: MatrixTuple,
    matrix: CMat,
}

impl CpMapMatrix {
    pub fn source(&self) -> &MatrixTuple {
        &self.source
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn level(&self) -> usize {
        self.source.level()
    }

    pub fn apply(&self, t: &CMat) -> CMat {
        unvec(&(&self.matrix * vec_of(t)), self.level())
    }
}

pub fn cp_map(x: &MatrixTuple) -> CpMapMatrix {
    let m = x.level();
    let mut matrix = CMat::zeros(m * m, m * m);
    for a in x.mats() {
        matrix += a.map(|z| z.conj()).kronecker(a);
    }
    CpMapMatrix {
        source: x.clone(),
        matrix,
    }
}

/// `‖(Mx)^k‖₂² = tr Φ_M^k(I)` without expanding words.
pub fn structural_power_norm_sq(m: &MatrixTuple, k: usize) -> f64 {
    *structural_power_norms(m, k).last().expect("k+1 values")
}

/// `‖(Mx)^j‖₂²` for `j = 0..=kmax`.
pub fn structural_power_norms(m: &MatrixTuple, kmax: usize) -> Vec<f64> {
    let mut t = CMat::identity(m.level(), m.level());
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(t.trace().re);
    for _ in 0..kmax {
        t = phi(m, &t);
        out.push(t.trace().re);
    }
    out
}

/// Debug dump; complex entries are written `re+imi`.
pub fn matrix_csv(a: &CMat) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if j > 0 {
                out.push(',');
            }
            let z = a[(i, j)];
            if z.im == 0.0 {
                out.push_str(&format_f64(z.re));
            } else {
                let sign = if z.im < 0.0 { '-' } else { '+' };
                let _ = write!(out, "{}{sign}{}i", format_f64(z.re), format_f64(z.im.abs()));
            }
        }
        out.push('\n');
    }
    out
}

pub fn identity_poly(k: usize, d: usize) -> MatrixFreePoly {
    MatrixFreePoly::identity(k, d)
}

pub fn scalar_matrix(v: f64, m: usize) -> CMat {
    DMatrix::from_diagonal_element(m, m, c(v))
}
