use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;


use super::{MatrixTuple, Word};
use crate::error::{Error, Result};
use crate::scalar::{Coeff, Exact};

/// Degree of a polynomial; the zero polynomial has degree `NegInfinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    NegInfinity,
    Finite(usize),
}

impl Degree {
    pub fn finite(self) -> Option<usize> {
        match self {
            Degree::NegInfinity => None,
            Degree::Finite(n) => Some(n),
        }
    }

    /// Degree of a product.
    pub fn plus(self, other: Degree) -> Degree {
        match (self, other) {
            (Degree::Finite(a), Degree::Finite(b)) => Degree::Finite(a + b),
            _ => Degree::NegInfinity,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::NegInfinity => f.write_str("-inf"),
            Degree::Finite(n) => write!(f, "{n}"),
        }
    }
}

/// A free polynomial in `d` noncommuting letters with `rows × cols` matrix coefficients.
///
/// Stored sparsely, keyed by word in graded-lex order. No stored coefficient
/// matrix is zero; in floating mode entries of modulus at most
/// [`crate::scalar::PRUNE_TOL`] are cleared after every operation.
#[derive(Clone, PartialEq)]
pub struct MatrixFreePoly<C: Coeff = Complex64> {
    rows: usize,
    cols: usize,
    d: usize,
    terms: BTreeMap<Word, DMatrix<C>>,
}

pub type ExactPoly = MatrixFreePoly<Exact>;

fn prune_matrix<C: Coeff>(m: &mut DMatrix<C>) -> bool {
    let mut all_zero = true;
    for v in m.iter_mut() {
        if v.is_negligible() {
            *v = C::zero();
        } else {
            all_zero = false;
        }
    }
    all_zero
}

impl<C: Coeff> MatrixFreePoly<C> {
    pub fn zero(rows: usize, cols: usize, d: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix polynomial shape must be positive");
        MatrixFreePoly {
            rows,
            cols,
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(k: usize, d: usize) -> Self {
        Self::constant(DMatrix::identity(k, k), d)
    }

    pub fn constant(m: DMatrix<C>, d: usize) -> Self {
        let mut p = Self::zero(m.nrows(), m.ncols(), d);
        p.insert_add(Word::empty(), m);
        p
    }

    /// Scalar constant `c` as a 1×1 polynomial.
    pub fn scalar(c: C, d: usize) -> Self {
        Self::constant(DMatrix::from_element(1, 1, c), d)
    }

    /// The 1×1 polynomial `x_i`.
    pub fn letter(i: usize, d: usize) -> Result<Self> {
        Self::monomial(Word::letter(i), DMatrix::from_element(1, 1, C::one()), d)
    }

    pub fn monomial(word: Word, coeff: DMatrix<C>, d: usize) -> Result<Self> {
        Self::from_terms(coeff.nrows(), coeff.ncols(), d, [(word, coeff)])
    }

    /// Sums the given terms; repeated words accumulate.
    pub fn from_terms(
        rows: usize,
        cols: usize,
        d: usize,
        terms: impl IntoIterator<Item = (Word, DMatrix<C>)>,
    ) -> Result<Self> {
        let mut p = Self::zero(rows, cols, d);
        for (w, m) in terms {
            if m.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "coefficient is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let top = w.max_letter();
            if top > d {
                return Err(Error::LetterOutOfRange { letter: top, d });
            }
            p.insert_add(w, m);
        }
        Ok(p)
    }

    fn insert_add(&mut self, w: Word, m: DMatrix<C>) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                let mut m = m;
                if !prune_matrix(&mut m) {
                    e.insert(m);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += m;
                if prune_matrix(e.get_mut()) {
                    e.remove();
                }
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Word, &DMatrix<C>)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, w: &Word) -> Option<&DMatrix<C>> {
        self.terms.get(w)
    }

    pub fn constant_term(&self) -> DMatrix<C> {
        self.terms
            .get(&Word::empty())
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub fn degree(&self) -> Degree {
        self.terms
            .keys()
            .next_back()
            .map_or(Degree::NegInfinity, |w| Degree::Finite(w.len()))
    }

    /// Same polynomial viewed in a larger alphabet.
    pub fn with_letters(&self, d: usize) -> Result<Self> {
        let top = self.terms.keys().map(Word::max_letter).max().unwrap_or(0);
        if top > d {
            return Err(Error::LetterOutOfRange { letter: top, d });
        }
        let mut p = self.clone();
        p.d = d;
        Ok(p)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::LetterCount {
                left: self.d,
                right: other.d,
            });
        }
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (w, m) in &other.terms {
            out.insert_add(w.clone(), m.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (w, m) in &other.terms {
            out.insert_add(w.clone(), -m.clone());
        }
        Ok(out)
    }

    /// Product in the free algebra: the coefficient of `u` is the sum of
    /// `p_w q_v` over all splittings `u = wv`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::LetterCount {
                left: self.d,
                right: other.d,
            });
        }
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.rows, other.cols, self.d);
        for (w, a) in &self.terms {
            for (v, b) in &other.terms {
                out.insert_add(w.concat(v), a * b);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.rows, self.cols, self.d);
        for (w, m) in &self.terms {
            out.insert_add(w.clone(), m.map(|v| v * c.clone()));
        }
        out
    }

    /// `M · self` for a constant matrix `M`.
    pub fn left_constant(&self, m: &DMatrix<C>) -> Result<Self> {
        self.constant_like(m.clone()).checked_mul(self)
    }

    /// `self · M` for a constant matrix `M`.
    pub fn right_constant(&self, m: &DMatrix<C>) -> Result<Self> {
        self.checked_mul(&self.constant_like(m.clone()))
    }

    fn constant_like(&self, m: DMatrix<C>) -> Self {
        Self::constant(m, self.d)
    }

    /// `⟨p, q⟩ = Σ_w tr(q_w^* p_w)`.
    pub fn inner(&self, other: &Self) -> Result<C> {
        self.check_same(other)?;
        let mut acc = C::zero();
        for (w, p) in &self.terms {
            if let Some(q) = other.terms.get(w) {
                for (a, b) in p.iter().zip(q.iter()) {
                    acc += a.clone() * b.conj();
                }
            }
        }
        Ok(acc)
    }

    /// Squared ℓ² norm of the coefficient list (Frobenius on each coefficient).
    pub fn norm_sq(&self) -> f64 {
        self.terms
            .values()
            .flat_map(|m| m.iter())
            .map(|v| v.to_c64().norm_sqr())
            .sum()
    }

    /// Exact squared norm (real part of `⟨p, p⟩`).
    pub fn norm_sq_exact(&self) -> C {
        let mut acc = C::zero();
        for m in self.terms.values() {
            for v in m.iter() {
                acc += v.clone() * v.conj();
            }
        }
        acc
    }

    /// Orthogonal projection onto words of length at most `n`.
    pub fn truncate(&self, n: usize) -> Self {
        MatrixFreePoly {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() <= n)
                .map(|(w, m)| (w.clone(), m.clone()))
                .collect(),
        }
    }

    /// Terms of length exactly `k`.
    pub fn homogeneous_part(&self, k: usize) -> Self {
        MatrixFreePoly {
            rows: self.rows,
            cols: self.cols,
            d: self.d,
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == k)
                .map(|(w, m)| (w.clone(), m.clone()))
                .collect(),
        }
    }

    /// `F(X) = Σ_w A_w ⊗ X^w`, a `(rows·m) × (cols·m)` matrix.
    pub fn eval(&self, x: &MatrixTuple<C>) -> Result<DMatrix<C>> {
        if x.d() != self.d {
            return Err(Error::LetterCount {
                left: self.d,
                right: x.d(),
            });
        }
        let m = x.level();
        let mut out = DMatrix::zeros(self.rows * m, self.cols * m);
        let mut powers: HashMap<Word, DMatrix<C>> = HashMap::new();
        powers.insert(Word::empty(), DMatrix::identity(m, m));
        for (w, a) in &self.terms {
            let xw = word_power(&mut powers, x, w);
            out += a.kronecker(&xw);
        }
        Ok(out)
    }

    /// Entry `(i, j)` as a 1×1 polynomial.
    pub fn entry(&self, i: usize, j: usize) -> Self {
        assert!(i < self.rows && j < self.cols, "entry ({i},{j}) out of range");
        let mut out = Self::zero(1, 1, self.d);
        for (w, m) in &self.terms {
            out.insert_add(w.clone(), DMatrix::from_element(1, 1, m[(i, j)].clone()));
        }
        out
    }

    /// Sub-block with the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut out = Self::zero(rows.len(), cols.len(), self.d);
        for (w, m) in &self.terms {
            let sub = m
                .view((rows.start, cols.start), (rows.len(), cols.len()))
                .into_owned();
            out.insert_add(w.clone(), sub);
        }
        out
    }

    /// Assembles a block matrix; every row of blocks must have consistent heights and widths.
    pub fn from_blocks(grid: &[Vec<Self>]) -> Result<Self> {
        let first = grid
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::Shape("empty block grid".into()))?;
        let d = first.d;
        let heights: Vec<usize> = grid.iter().map(|r| r[0].rows).collect();
        let widths: Vec<usize> = grid[0].iter().map(|b| b.cols).collect();
        let total_r: usize = heights.iter().sum();
        let total_c: usize = widths.iter().sum();
        let mut terms: BTreeMap<Word, DMatrix<C>> = BTreeMap::new();
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            if row.len() != widths.len() {
                return Err(Error::Shape("ragged block grid".into()));
            }
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(Error::Shape(format!("block ({bi},{bj}) has inconsistent shape")));
                }
                if b.d != d {
                    return Err(Error::LetterCount { left: d, right: b.d });
                }
                for (w, m) in &b.terms {
                    let slot = terms
                        .entry(w.clone())
                        .or_insert_with(|| DMatrix::zeros(total_r, total_c));
                    slot.view_mut((r0, c0), (b.rows, b.cols)).copy_from(m);
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        let mut out = Self::zero(total_r, total_c, d);
        for (w, m) in terms {
            out.insert_add(w, m);
        }
        Ok(out)
    }

    /// Matrix of 1×1 polynomials.
    pub fn from_entries(grid: &[Vec<Self>]) -> Result<Self> {
        for row in grid {
            for e in row {
                if e.shape() != (1, 1) {
                    return Err(Error::Shape("entries must be 1x1".into()));
                }
            }
        }
        Self::from_blocks(grid)
    }

    /// `self ⊕ other`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::LetterCount {
                left: self.d,
                right: other.d,
            });
        }
        Self::from_blocks(&[
            vec![self.clone(), Self::zero(self.rows, other.cols, self.d)],
            vec![Self::zero(other.rows, self.cols, self.d), other.clone()],
        ])
    }

    /// `self ⊕ I_extra`.
    pub fn pad_identity(&self, extra: usize) -> Self {
        if extra == 0 {
            return self.clone();
        }
        self.direct_sum(&Self::identity(extra, self.d))
            .expect("same alphabet")
    }

    /// Entrywise conversion of coefficients.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MatrixFreePoly<D> {
        let mut out = MatrixFreePoly::<D>::zero(self.rows, self.cols, self.d);
        for (w, m) in &self.terms {
            out.insert_add(w.clone(), m.map(|v| f(&v)));
        }
        out
    }

    pub fn to_complex(&self) -> MatrixFreePoly<Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }

    /// First word where `self` and `other` differ, if any.
    pub fn first_difference(&self, other: &Self) -> Option<Word> {
        if self.shape() != other.shape() {
            return Some(Word::empty());
        }
        let mut words: Vec<&Word> = self.terms.keys().chain(other.terms.keys()).collect();
        words.sort();
        words.dedup();
        words
            .into_iter()
            .find(|w| self.terms.get(*w) != other.terms.get(*w))
            .cloned()
    }
}

pub(crate) fn word_power<C: Coeff>(
    cache: &mut HashMap<Word, DMatrix<C>>,
    x: &MatrixTuple<C>,
    w: &Word,
) -> DMatrix<C> {
    if let Some(m) = cache.get(w) {
        return m.clone();
    }
    let (head, tail) = w.split_first().expect("empty word is cached");
    let rest = word_power(cache, x, &tail);
    let m = x.letter(head) * rest;
    cache.insert(w.clone(), m.clone());
    m
}

impl MatrixFreePoly<Exact> {
    pub fn is_identity_constant(&self) -> bool {
        self.is_square() && self.constant_term() == DMatrix::identity(self.rows, self.rows)
    }
}

impl<C: Coeff> fmt::Debug for MatrixFreePoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixFreePoly({}x{}, d={}) {{", self.rows, self.cols, self.d)?;
        for (w, m) in &self.terms {
            write!(f, " {w}: {:?};", m.as_slice())?;
        }
        f.write_str(" }")
    }
}

impl<'a, C: Coeff> Add<&'a MatrixFreePoly<C>> for &'a MatrixFreePoly<C> {
    type Output = MatrixFreePoly<C>;
    fn add(self, rhs: &'a MatrixFreePoly<C>) -> MatrixFreePoly<C> {
        self.checked_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<'a, C: Coeff> Sub<&'a MatrixFreePoly<C>> for &'a MatrixFreePoly<C> {
    type Output = MatrixFreePoly<C>;
    fn sub(self, rhs: &'a MatrixFreePoly<C>) -> MatrixFreePoly<C> {
        self.checked_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<'a, C: Coeff> Mul<&'a MatrixFreePoly<C>> for &'a MatrixFreePoly<C> {
    type Output = MatrixFreePoly<C>;
    fn mul(self, rhs: &'a MatrixFreePoly<C>) -> MatrixFreePoly<C> {
        self.checked_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<C: Coeff> Neg for &MatrixFreePoly<C> {
    type Output = MatrixFreePoly<C>;
    fn neg(self) -> MatrixFreePoly<C> {
        self.scale(&(-C::one()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::parse_exact;
    use crate::scalar::exact_int;
    use proptest::prelude::*;
    use num_traits::Zero;

    fn p(s: &str) -> ExactPoly {
        parse_exact(s, Some(2)).unwrap()
    }

    #[test]
    fn factorization_example() {
        let x = p("x1");
        let lhs = &x * &p("1 - x2*x1");
        let rhs = &p("1 - x1*x2") * &x;
        assert_eq!(lhs, p("x1 - x1*x2*x1"));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_of_affine_factors() {
        assert_eq!(&p("1 - x1") * &p("1 - x2"), p("1 - x1 - x2 + x1*x2"));
        let q = p("3 x1*x2 - x2");
        assert_eq!(&p("1") * &q, q);
    }

    /// Brute-force convolution over explicit word splittings.
    #[test]
    fn product_matches_convolution_oracle() {
        let a = p("1 + 2 x1 - x2*x1");
        let b = p("x2 - 3 + x1*x1");
        let prod = &a * &b;
        let mut expected: BTreeMap<Word, Exact> = BTreeMap::new();
        for (w, ca) in a.terms() {
            for (v, cb) in b.terms() {
                let e = expected.entry(w.concat(v)).or_insert_with(|| exact_int(0));
                *e += ca[(0, 0)].clone() * cb[(0, 0)].clone();
            }
        }
        expected.retain(|_, v| !v.is_zero());
        assert_eq!(prod.num_terms(), expected.len());
        for (w, v) in expected {
            assert_eq!(prod.coeff(&w).unwrap()[(0, 0)], v);
        }
    }

    #[test]
    fn inner_products() {
        let a = p("x1*x2");
        assert_eq!(a.inner(&a).unwrap(), exact_int(1));
        assert_eq!(a.inner(&p("x2*x1")).unwrap(), exact_int(0));
        assert_eq!(ExactPoly::zero(1, 1, 2).norm_sq(), 0.0);
        assert_eq!(p("1 - x1 - x2 + x1*x2").norm_sq(), 4.0);
    }

    #[test]
    fn degree_sentinel() {
        assert_eq!(ExactPoly::zero(1, 1, 2).degree(), Degree::NegInfinity);
        assert_eq!(p("1 - x1*x2").degree(), Degree::Finite(2));
        assert_eq!(Degree::NegInfinity.plus(Degree::Finite(3)), Degree::NegInfinity);
    }

    #[test]
    fn truncation() {
        let f = p("1 - x1 - x2 + x1*x2");
        assert_eq!(f.truncate(1), p("1 - x1 - x2"));
        assert_eq!(f.truncate(2), f);
    }

    #[test]
    fn shape_errors() {
        let a = ExactPoly::identity(2, 1);
        let b = ExactPoly::identity(3, 1);
        assert!(matches!(a.checked_mul(&b), Err(Error::Shape(_))));
        assert!(matches!(a.inner(&b), Err(Error::Shape(_))));
        let c = ExactPoly::identity(2, 2);
        assert!(matches!(a.checked_add(&c), Err(Error::LetterCount { .. })));
    }

    #[test]
    fn eval_constant_is_kronecker_with_identity() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]).map(|v| Complex64::new(v, 0.0));
        let f = MatrixFreePoly::constant(c.clone(), 2);
        let x = MatrixTuple::new(vec![DMatrix::identity(3, 3) * Complex64::new(0.2, 0.0); 2]).unwrap();
        assert_eq!(f.eval(&x).unwrap(), c.kronecker(&DMatrix::<Complex64>::identity(3, 3)));
    }

    #[test]
    fn eval_one_minus_xy_at_matrix_units() {
        let f = p("1 - x1*x2");
        let e12 = DMatrix::from_row_slice(2, 2, &[0, 1, 0, 0]).map(exact_int);
        let e21 = DMatrix::from_row_slice(2, 2, &[0, 0, 1, 0]).map(exact_int);
        let x = MatrixTuple::new(vec![e12, e21]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0, 0, 0, 1]).map(exact_int);
        assert_eq!(f.eval(&x).unwrap(), expected);
    }

    fn arb_exact_poly(d: usize, max_deg: usize) -> impl Strategy<Value = ExactPoly> {
        let word = prop::collection::vec(1..=d, 0..=max_deg);
        prop::collection::vec((word, -3i64..=3), 0..6).prop_map(move |terms| {
            ExactPoly::from_terms(
                1,
                1,
                d,
                terms
                    .into_iter()
                    .map(|(w, c)| (Word::from_letters(&w), DMatrix::from_element(1, 1, exact_int(c)))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_exact_poly(2, 2), b in arb_exact_poly(2, 2), c in arb_exact_poly(2, 2)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        }

        #[test]
        fn left_shift_preserves_inner_product(a in arb_exact_poly(3, 3), b in arb_exact_poly(3, 3), i in 1usize..=3) {
            let xi = ExactPoly::letter(i, 3).unwrap();
            prop_assert_eq!((&xi * &a).inner(&(&xi * &b)).unwrap(), a.inner(&b).unwrap());
        }

        #[test]
        fn truncation_is_pythagorean(a in arb_exact_poly(2, 4), n in 0usize..4) {
            let t = a.truncate(n);
            let rest = &a - &t;
            prop_assert_eq!(a.norm_sq_exact(), t.norm_sq_exact() + rest.norm_sq_exact());
        }

        #[test]
        fn norm_matches_naive_sum(a in arb_exact_poly(2, 3)) {
            let naive: f64 = a.terms().map(|(_, m)| m.iter().map(|v| v.to_c64().norm_sqr()).sum::<f64>()).sum();
            prop_assert!((a.norm_sq() - naive).abs() < 1e-12);
        }
    }
}
