//! Higman linearization of matrix polynomials with `F(0) = I` to monic pencils,
//! with exact stable-associativity witnesses.
//!
//! A witness `(P, Q)` of size `N` certifies `P·(F ⊕ I)·Q = G ⊕ I` with
//! `P`, `Q` invertible over the free algebra.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockops::multiplier_norm_lower_bound;
use crate::freealg::{ExactPoly, MatrixFreePoly, MatrixPolyDoc, MatrixTuple, Word};
use crate::linalg::{op_norm, CMat};
use crate::random::{row_ball_point, seeded};
use crate::scalar::{Coeff, Exact};

/// `L_A(x) = I − A_1x_1 − … − A_dx_d` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MonicPencil {
    a: MatrixTuple<Exact>,
}

impl MonicPencil {
    pub fn new(a: MatrixTuple<Exact>) -> Self {
        MonicPencil { a }
    }

    /// Reads `I − Σ A_j x_j` off a polynomial of degree ≤ 1 with constant term `I`.
    pub fn from_poly(g: &ExactPoly) -> Result<Self> {
        if !g.is_identity_constant() {
            return Err(Error::Normalization("constant term is not the identity".into()));
        }
        if g.degree().finite().unwrap_or(0) > 1 {
            return Err(Error::Precondition("pencil has a term of degree ≥ 2".into()));
        }
        let m = g.rows();
        let mats = (1..=g.d())
            .map(|j| match g.coeff(&Word::letter(j)) {
                Some(c) => -c.clone(),
                None => DMatrix::zeros(m, m),
            })
            .collect();
        Ok(MonicPencil {
            a: MatrixTuple::new(mats)?,
        })
    }

    pub fn size(&self) -> usize {
        self.a.level()
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }

    pub fn coefficients(&self) -> &MatrixTuple<Exact> {
        &self.a
    }

    pub fn coefficients_c64(&self) -> MatrixTuple {
        self.a.to_complex()
    }

    pub fn to_poly(&self) -> ExactPoly {
        let id = ExactPoly::identity(self.size(), self.d());
        &id - &self.a.linear_form()
    }

    /// `I − Σ_j A_j ⊗ X_j`.
    pub fn eval(&self, x: &MatrixTuple) -> Result<CMat> {
        self.to_poly().to_complex().eval(x)
    }
}

/// Exact certificate that `source ⊕ I` and `target ⊕ I` are associated.
#[derive(Clone, Debug, PartialEq)]
pub struct StableAssocWitness {
    pub size: usize,
    pub source_size: usize,
    pub target_size: usize,
    pub p: ExactPoly,
    pub q: ExactPoly,
    pub p_inv: ExactPoly,
    pub q_inv: ExactPoly,
    /// Border entries `a` carry the negated coefficient, so `a·b` cancels the removed term.
    pub negated_border: bool,
}

fn deg(p: &ExactPoly) -> usize {
    p.degree().finite().unwrap_or(0)
}

impl StableAssocWitness {
    pub fn identity(k: usize, d: usize) -> Self {
        let id = ExactPoly::identity(k, d);
        StableAssocWitness {
            size: k,
            source_size: k,
            target_size: k,
            p: id.clone(),
            q: id.clone(),
            p_inv: id.clone(),
            q_inv: id,
            negated_border: true,
        }
    }

    /// `deg P + deg Q`.
    pub fn d1(&self) -> usize {
        deg(&self.p) + deg(&self.q)
    }

    /// `deg P⁻¹ + deg Q⁻¹`.
    pub fn d2(&self) -> usize {
        deg(&self.p_inv) + deg(&self.q_inv)
    }

    /// Witness for the reverse association `target ∼ source`.
    pub fn inverse(&self) -> Self {
        StableAssocWitness {
            size: self.size,
            source_size: self.target_size,
            target_size: self.source_size,
            p: self.p_inv.clone(),
            q: self.q_inv.clone(),
            p_inv: self.p.clone(),
            q_inv: self.q.clone(),
            negated_border: self.negated_border,
        }
    }

    fn padded(&self, n: usize) -> Self {
        let extra = n - self.size;
        StableAssocWitness {
            size: n,
            source_size: self.source_size,
            target_size: self.target_size,
            p: self.p.pad_identity(extra),
            q: self.q.pad_identity(extra),
            p_inv: self.p_inv.pad_identity(extra),
            q_inv: self.q_inv.pad_identity(extra),
            negated_border: self.negated_border,
        }
    }

    pub fn to_doc(&self) -> WitnessDoc {
        WitnessDoc {
            size: self.size,
            source_size: self.source_size,
            target_size: self.target_size,
            d1: self.d1(),
            d2: self.d2(),
            negated_border: self.negated_border,
            p: MatrixPolyDoc::from_poly(&self.p),
            q: MatrixPolyDoc::from_poly(&self.q),
            p_inv: MatrixPolyDoc::from_poly(&self.p_inv),
            q_inv: MatrixPolyDoc::from_poly(&self.q_inv),
        }
    }
}

/// Serialized witness; degrees are informative and recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub size: usize,
    pub source_size: usize,
    pub target_size: usize,
    pub d1: usize,
    pub d2: usize,
    pub negated_border: bool,
    pub p: MatrixPolyDoc,
    pub q: MatrixPolyDoc,
    pub p_inv: MatrixPolyDoc,
    pub q_inv: MatrixPolyDoc,
}

impl WitnessDoc {
    pub fn to_witness(&self) -> Result<StableAssocWitness> {
        let w = StableAssocWitness {
            size: self.size,
            source_size: self.source_size,
            target_size: self.target_size,
            p: self.p.to_exact()?,
            q: self.q.to_exact()?,
            p_inv: self.p_inv.to_exact()?,
            q_inv: self.q_inv.to_exact()?,
            negated_border: self.negated_border,
        };
        for m in [&w.p, &w.q, &w.p_inv, &w.q_inv] {
            if m.shape() != (w.size, w.size) {
                return Err(Error::Document("witness factor has the wrong size".into()));
            }
        }
        Ok(w)
    }
}

/// Graded-lex-largest term of degree ≥ 2, ties broken by row-major position.
fn pick_term(g: &ExactPoly) -> Option<(Word, usize, usize, Exact)> {
    let (w, m) = g.terms().next_back()?;
    if w.len() < 2 {
        return None;
    }
    for r in 0..m.nrows() {
        for s in 0..m.ncols() {
            if !m[(r, s)].is_zero() {
                return Some((w.clone(), r, s, m[(r, s)].clone()));
            }
        }
    }
    unreachable!("stored coefficients are nonzero")
}

fn unit_poly(n: usize, d: usize, r: usize, s: usize, entry: &ExactPoly) -> ExactPoly {
    let mut grid = vec![vec![ExactPoly::zero(1, 1, d); n]; n];
    grid[r][s] = entry.clone();
    ExactPoly::from_entries(&grid).expect("consistent grid")
}

/// Borders `F` until every entry is affine, returning the pencil and the witness.
pub fn linearize(f: &ExactPoly) -> Result<(MonicPencil, StableAssocWitness)> {
    if !f.is_square() {
        return Err(Error::Shape(format!("{}x{} input is not square", f.rows(), f.cols())));
    }
    if !f.is_identity_constant() {
        return Err(Error::Normalization(
            "F(0) must be the identity; multiply by F(0)⁻¹ first".into(),
        ));
    }
    let d = f.d();
    let k = f.rows();
    let mut g = f.clone();
    let mut w = StableAssocWitness::identity(k, d);
    while let Some((word, r, s, coeff)) = pick_term(&g) {
        let n = g.rows() + 1;
        let last = n - 1;
        let (head, tail) = word.split_first().expect("degree ≥ 2");
        let one = DMatrix::from_element(1, 1, Exact::one());
        let a = MatrixFreePoly::monomial(Word::letter(head), DMatrix::from_element(1, 1, -coeff), d)?;
        let b = MatrixFreePoly::monomial(tail, one, d)?;

        let id = ExactPoly::identity(n, d);
        let pa = unit_poly(n, d, r, last, &a);
        let qb = unit_poly(n, d, last, s, &b);
        let p_step = &id + &pa;
        let p_step_inv = &id - &pa;
        let q_step = &id + &qb;
        let q_step_inv = &id - &qb;

        g = &(&p_step * &g.pad_identity(1)) * &q_step;
        w.p = &p_step * &w.p.pad_identity(1);
        w.q = &w.q.pad_identity(1) * &q_step;
        w.p_inv = &w.p_inv.pad_identity(1) * &p_step_inv;
        w.q_inv = &q_step_inv * &w.q_inv.pad_identity(1);
        w.size = n;
        w.target_size = n;
    }
    let pencil = MonicPencil::from_poly(&g)?;
    Ok((pencil, w))
}

/// Outcome of an exact witness check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub holds: bool,
    pub detail: Option<String>,
}

/// Checks `P·P⁻¹ = P⁻¹·P = I`, the same for `Q`, and `P(F ⊕ I)Q = G ⊕ I`, all exactly.
pub fn verify_stable_assoc(f: &ExactPoly, g: &ExactPoly, w: &StableAssocWitness) -> Verification {
    let fail = |detail: String| Verification {
        holds: false,
        detail: Some(detail),
    };
    let n = w.size;
    if !f.is_square() || !g.is_square() || f.rows() > n || g.rows() > n || f.d() != g.d() {
        return fail("incompatible sizes".into());
    }
    for m in [&w.p, &w.q, &w.p_inv, &w.q_inv] {
        if m.shape() != (n, n) || m.d() != f.d() {
            return fail("witness factor has the wrong shape".into());
        }
    }
    let id = ExactPoly::identity(n, f.d());
    let checks = [
        ("P·P⁻¹", &w.p * &w.p_inv),
        ("P⁻¹·P", &w.p_inv * &w.p),
        ("Q·Q⁻¹", &w.q * &w.q_inv),
        ("Q⁻¹·Q", &w.q_inv * &w.q),
    ];
    for (name, prod) in checks {
        if let Some(word) = prod.first_difference(&id) {
            return fail(format!("{name} differs from I at word {word}"));
        }
    }
    let lhs = &(&w.p * &f.pad_identity(n - f.rows())) * &w.q;
    let rhs = g.pad_identity(n - g.rows());
    match lhs.first_difference(&rhs) {
        None => Verification {
            holds: true,
            detail: None,
        },
        Some(word) => fail(format!("P(F ⊕ I)Q differs from G ⊕ I at word {word}")),
    }
}

/// Witness for `F ∼ H` from witnesses for `F ∼ G` and `G ∼ H`.
pub fn compose(first: &StableAssocWitness, second: &StableAssocWitness) -> Result<StableAssocWitness> {
    if first.target_size != second.source_size {
        return Err(Error::Shape("witnesses do not chain".into()));
    }
    let n = first.size.max(second.size);
    let (a, b) = (first.padded(n), second.padded(n));
    Ok(StableAssocWitness {
        size: n,
        source_size: first.source_size,
        target_size: second.target_size,
        p: &b.p * &a.p,
        q: &a.q * &b.q,
        p_inv: &a.p_inv * &b.p_inv,
        q_inv: &b.q_inv * &a.q_inv,
        negated_border: first.negated_border && second.negated_border,
    })
}

/// One zero-locus probe.
#[derive(Clone, Debug, Serialize)]
pub struct LocusSample {
    pub level: usize,
    pub planted: bool,
    pub det_f: f64,
    pub det_g: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroLocusReport {
    pub tolerance: f64,
    pub samples: Vec<LocusSample>,
    pub agree: bool,
    pub zeros_f: usize,
    pub zeros_g: usize,
}

pub const ZERO_LOCUS_TOL: f64 = 1e-9;

fn det_c(m: &CMat) -> f64 {
    m.clone().determinant().norm()
}

/// Compares `det F(X)` and `det G(X)` on planted exact points and on seeded
/// row-ball samples at levels 1, 2, 3 in turn.
pub fn zero_locus_agreement(
    f: &ExactPoly,
    g: &ExactPoly,
    planted: &[MatrixTuple<Exact>],
    samples: usize,
    seed: u64,
) -> Result<ZeroLocusReport> {
    let mut out = Vec::with_capacity(planted.len() + samples);
    for x in planted {
        let df = crate::linalg::exact_det(&f.eval(x)?);
        let dg = crate::linalg::exact_det(&g.eval(x)?);
        out.push(LocusSample {
            level: x.level(),
            planted: true,
            det_f: df.to_c64().norm(),
            det_g: dg.to_c64().norm(),
            agree: df.is_zero() == dg.is_zero(),
        });
    }
    let (fc, gc) = (f.to_complex(), g.to_complex());
    let mut rng = seeded(seed);
    for i in 0..samples {
        let level = 1 + i % 3;
        let x = row_ball_point(&mut rng, f.d(), level);
        let df = det_c(&fc.eval(&x)?);
        let dg = det_c(&gc.eval(&x)?);
        out.push(LocusSample {
            level,
            planted: false,
            det_f: df,
            det_g: dg,
            agree: (df <= ZERO_LOCUS_TOL) == (dg <= ZERO_LOCUS_TOL),
        });
    }
    let zero = |s: &LocusSample, v: f64| if s.planted { v == 0.0 } else { v <= ZERO_LOCUS_TOL };
    Ok(ZeroLocusReport {
        tolerance: ZERO_LOCUS_TOL,
        agree: out.iter().all(|s| s.agree),
        zeros_f: out.iter().filter(|s| zero(s, s.det_f)).count(),
        zeros_g: out.iter().filter(|s| zero(s, s.det_g)).count(),
        samples: out,
    })
}

/// Constants in `c^F_n ≤ C₁·c^G_{n−D₁}` and `c^G_n ≤ C₂·c^F_{n−D₂}`.
///
/// Conjugating a residual by `Q` costs at most `‖Q‖₁·‖Q⁻¹‖₁` in norm, where
/// `‖·‖₁` sums operator norms of coefficients. `P` cancels against `P⁻¹`,
/// so both constants equal `(‖Q‖₁‖Q⁻¹‖₁)²`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichConstants {
    pub c1: f64,
    pub c2: f64,
    pub d1: usize,
    pub d2: usize,
    /// Truncated multiplier norms of `Q` and `Q⁻¹`, which the ℓ¹ bounds dominate.
    pub q_norm_lower: f64,
    pub q_inv_norm_lower: f64,
}

pub fn l1_multiplier_bound<C: Coeff>(p: &MatrixFreePoly<C>) -> f64 {
    p.terms()
        .map(|(_, m)| op_norm(&m.map(|v| v.to_c64())))
        .sum()
}

pub fn decay_sandwich_constants(w: &StableAssocWitness) -> Result<SandwichConstants> {
    let conj = l1_multiplier_bound(&w.q) * l1_multiplier_bound(&w.q_inv);
    let probe = 2;
    Ok(SandwichConstants {
        c1: conj * conj,
        c2: conj * conj,
        d1: w.d1(),
        d2: w.d2(),
        q_norm_lower: multiplier_norm_lower_bound(&w.q.to_complex(), probe)?,
        q_inv_norm_lower: multiplier_norm_lower_bound(&w.q_inv.to_complex(), probe)?,
    })
}

/// Size bound `k + Σ (|w| − 1)` over stored degree-≥2 scalar terms.
pub fn predicted_size(f: &ExactPoly) -> usize {
    let mut total = f.rows();
    for (w, m) in f.terms() {
        if w.len() >= 2 {
            total += (w.len() - 1) * m.iter().filter(|v| !v.is_zero()).count();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::parse_exact;
    use crate::scalar::exact_int;

    fn unit(m: usize, i: usize, j: usize) -> DMatrix<Exact> {
        let mut e = DMatrix::from_element(m, m, exact_int(0));
        e[(i, j)] = exact_int(1);
        e
    }

    fn flip_exact() -> MatrixTuple<Exact> {
        MatrixTuple::new(vec![unit(2, 0, 1), unit(2, 1, 0)]).unwrap()
    }

    #[test]
    fn one_minus_xy_gives_the_two_by_two_pencil() {
        let f = parse_exact("1 - x1*x2", None).unwrap();
        let (pencil, w) = linearize(&f).unwrap();
        assert_eq!(pencil.size(), 2);
        // [[1, x], [y, 1]] = I − A_x x − A_y y
        assert_eq!(pencil.coefficients().letter(1), &(-unit(2, 0, 1)));
        assert_eq!(pencil.coefficients().letter(2), &(-unit(2, 1, 0)));
        assert!(verify_stable_assoc(&f, &pencil.to_poly(), &w).holds);
        assert_eq!((w.d1(), w.d2()), (2, 2));
    }

    #[test]
    fn product_pencil_entries() {
        let f = parse_exact("(1 - x1)*(1 - x2)", None).unwrap();
        let (pencil, w) = linearize(&f).unwrap();
        let expect = [
            [parse_exact("1 - x1 - x2", Some(2)).unwrap(), parse_exact("-x1", Some(2)).unwrap()],
            [parse_exact("x2", Some(2)).unwrap(), parse_exact("1", Some(2)).unwrap()],
        ];
        let g = pencil.to_poly();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.entry(i, j), expect[i][j]);
            }
        }
        assert!(verify_stable_assoc(&f, &g, &w).holds);
    }

    #[test]
    fn cubic_and_sizes() {
        for text in ["1 - x1*x2*x1", "1 + 1/2 x1*x2*x2*x1 - x2*x1 + 3 x1", "1 - x1*x1*x1"] {
            let f = parse_exact(text, Some(2)).unwrap();
            let (pencil, w) = linearize(&f).unwrap();
            assert_eq!(pencil.size(), predicted_size(&f), "{text}");
            assert!(pencil.to_poly().is_identity_constant());
            let v = verify_stable_assoc(&f, &pencil.to_poly(), &w);
            assert!(v.holds, "{text}: {:?}", v.detail);
        }
        let f = parse_exact("1 - x1*x2*x1", None).unwrap();
        assert_eq!(linearize(&f).unwrap().0.size(), 3);
    }

    #[test]
    fn matrix_input_and_pencil_fixed_point() {
        let doc = r#"{"rows": 2, "cols": 2, "d": 2, "entries": [
            {"i": 0, "j": 0, "poly": "1 - x1*x2"}, {"i": 0, "j": 1, "poly": "x2*x2"},
            {"i": 1, "j": 1, "poly": "1 + 2 x1"}]}"#;
        let f = MatrixPolyDoc::from_json(doc).unwrap().to_exact().unwrap();
        let (pencil, w) = linearize(&f).unwrap();
        assert_eq!(pencil.size(), predicted_size(&f));
        assert!(verify_stable_assoc(&f, &pencil.to_poly(), &w).holds);

        let g = pencil.to_poly();
        let (again, w2) = linearize(&g).unwrap();
        assert_eq!(again, pencil);
        assert_eq!(w2, StableAssocWitness::identity(g.rows(), 2));
    }

    #[test]
    fn normalization_errors() {
        let f = parse_exact("2 - x1*x2", None).unwrap();
        assert!(matches!(linearize(&f), Err(Error::Normalization(_))));
        let rect = ExactPoly::zero(1, 2, 1);
        assert!(matches!(linearize(&rect), Err(Error::Shape(_))));
    }

    #[test]
    fn corrupted_witness_is_rejected() {
        let f = parse_exact("1 - x1*x2*x1", None).unwrap();
        let (pencil, w) = linearize(&f).unwrap();
        let mut bad = w.clone();
        let tweak = unit_poly(3, 2, 0, 2, &parse_exact("1/7 x2", Some(2)).unwrap());
        bad.q = &bad.q + &tweak;
        let v = verify_stable_assoc(&f, &pencil.to_poly(), &bad);
        assert!(!v.holds);
        assert!(v.detail.unwrap().contains("Q"));
        let trivial = StableAssocWitness::identity(1, 2);
        assert!(verify_stable_assoc(&f, &f, &trivial).holds);
    }

    #[test]
    fn composition_is_transitive() {
        let f = parse_exact("1 - x1*x2*x1 + x2*x2", None).unwrap();
        let (pencil, w1) = linearize(&f).unwrap();
        let g = pencil.to_poly();
        // G ∼ G' for an elementary conjugate G' = E·G·E⁻¹
        let n = g.rows();
        let e = &ExactPoly::identity(n, 2) + &unit_poly(n, 2, 0, n - 1, &parse_exact("x1", Some(2)).unwrap());
        let e_inv = &ExactPoly::identity(n, 2) - &unit_poly(n, 2, 0, n - 1, &parse_exact("x1", Some(2)).unwrap());
        let h = &(&e * &g) * &e_inv;
        let w2 = StableAssocWitness {
            size: n,
            source_size: n,
            target_size: n,
            p: e.clone(),
            q: e_inv.clone(),
            p_inv: e_inv,
            q_inv: e,
            negated_border: true,
        };
        assert!(verify_stable_assoc(&g, &h, &w2).holds);
        let w = compose(&w1, &w2).unwrap();
        assert!(verify_stable_assoc(&f, &h, &w).holds);
        assert!(verify_stable_assoc(&h, &f, &w.inverse()).holds);
        // chaining through a smaller intermediate pads correctly
        let back = compose(&w1, &w1.inverse()).unwrap();
        assert!(verify_stable_assoc(&f, &f, &back).holds);
    }

    #[test]
    fn witness_documents_round_trip() {
        let f = parse_exact("1 - 2/3 x1*x2", None).unwrap();
        let (_, w) = linearize(&f).unwrap();
        let text = serde_json::to_string(&w.to_doc()).unwrap();
        let doc: WitnessDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.to_witness().unwrap(), w);
    }

    #[test]
    fn zero_locus_planted_and_sampled() {
        let f = parse_exact("1 - x1*x2", None).unwrap();
        let (pencil, _) = linearize(&f).unwrap();
        let g = pencil.to_poly();
        let report = zero_locus_agreement(&f, &g, &[flip_exact()], 60, 3).unwrap();
        assert!(report.agree);
        assert_eq!(report.samples[0].det_f, 0.0);
        assert_eq!(report.samples[0].det_g, 0.0);
        assert_eq!(report.zeros_f, 1);
        assert_eq!(report.zeros_g, 1);
        let same = zero_locus_agreement(&f, &f, &[], 10, 1).unwrap();
        assert!(same.agree);
    }

    #[test]
    fn sandwich_constants() {
        let id = StableAssocWitness::identity(2, 2);
        let s = decay_sandwich_constants(&id).unwrap();
        assert_eq!((s.c1, s.c2, s.d1, s.d2), (1.0, 1.0, 0, 0));
        let f = parse_exact("1 - x1*x2", None).unwrap();
        let (_, w) = linearize(&f).unwrap();
        let s = decay_sandwich_constants(&w).unwrap();
        assert_eq!(s.d1, 2);
        assert!((s.c1 - 16.0).abs() < 1e-12);
        assert!(s.q_norm_lower <= 2.0 + 1e-12);
    }
}
