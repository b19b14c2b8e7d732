//! Explicit approximants for block upper-triangular pencils.
//!
//! `π_n(z) = Σ_{k≤n} (n+1−k)/(n+2) z^k` is the one-variable optimal approximant
//! for `1 − z`. Substituting a column-contractive pencil `Mx` gives `π_n(Mx)`,
//! whose residual telescopes:
//! `π_n(Mx)(I − Mx) − I = −(1/(n+2)) Σ_{k=0}^{n+1} (Mx)^k`.
//!
//! For a pencil `I − Bx` in block upper-triangular form the approximant is
//! built one block at a time as `[[σ, r], [0, q]]` with `q = π_n(M x)` and
//! `r = −σ·(Yx)·π_N(M x)`, where `Yx` is the off-diagonal part of the pencil.
//! The inner degree `N` grows like `n^{3^ℓ}`, so everything is kept as a
//! [`StructuredPoly`] and only expanded when small enough.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockops::{basis_size, col_norm, structural_power_norms};
use crate::freealg::{MatrixFreePoly, MatrixTuple, Word};
use crate::linalg::{c, op_norm, CMat};
use crate::specrad::TriangularPencilForm;

/// Column norms up to this far above 1 still count as contractive.
pub const CONTRACTIVE_SLACK: f64 = 1e-8;

/// Above this inner degree the `π_N` residual is replaced by its upper bound.
pub const EXACT_SUM_LIMIT: u64 = 2_000_000;

/// Coefficients `(n+1−k)/(n+2)` of `π_n`.
pub fn pi_coeffs(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| (n + 1 - k) as f64 / (n + 2) as f64)
        .collect()
}

pub fn pi_coeffs_exact(n: usize) -> Vec<BigRational> {
    let den = BigInt::from(n + 2);
    (0..=n)
        .map(|k| BigRational::new(BigInt::from(n + 1 - k), den.clone()))
        .collect()
}

/// `sup_{|z|≤1} |π_n(z)| = π_n(1)`, since every coefficient is positive.
pub fn pi_sup_norm_exact(n: usize) -> BigRational {
    pi_coeffs_exact(n).into_iter().sum()
}

/// Matrix polynomial kept as an expression tree.
#[derive(Clone, Debug)]
pub enum StructuredPoly {
    Constant(CMat),
    /// `Σ_j A_j x_j` with rectangular coefficients.
    Linear(Vec<CMat>),
    /// `(Mx)^k`.
    PencilPower(MatrixTuple, u64),
    /// `π_n(Mx)`.
    Pi(MatrixTuple, u64),
    Combination(Vec<(Complex64, StructuredPoly)>),
    Product(Vec<StructuredPoly>),
    /// Block matrix; `None` entries are zero.
    Block {
        rows: Vec<usize>,
        cols: Vec<usize>,
        parts: Vec<Vec<Option<StructuredPoly>>>,
    },
}

impl StructuredPoly {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            StructuredPoly::Constant(m) => m.shape(),
            StructuredPoly::Linear(a) => a[0].shape(),
            StructuredPoly::PencilPower(m, _) | StructuredPoly::Pi(m, _) => (m.level(), m.level()),
            StructuredPoly::Combination(terms) => terms[0].1.shape(),
            StructuredPoly::Product(factors) => (
                factors[0].shape().0,
                factors.last().expect("nonempty").shape().1,
            ),
            StructuredPoly::Block { rows, cols, .. } => (rows.iter().sum(), cols.iter().sum()),
        }
    }

    /// Degree of the expression; an upper bound when terms could cancel.
    pub fn degree(&self) -> u64 {
        match self {
            StructuredPoly::Constant(_) => 0,
            StructuredPoly::Linear(_) => 1,
            StructuredPoly::PencilPower(_, k) | StructuredPoly::Pi(_, k) => *k,
            StructuredPoly::Combination(terms) => terms.iter().map(|t| t.1.degree()).max().unwrap_or(0),
            StructuredPoly::Product(f) => f.iter().fold(0u64, |acc, p| acc.saturating_add(p.degree())),
            StructuredPoly::Block { parts, .. } => parts
                .iter()
                .flatten()
                .flatten()
                .map(|p| p.degree())
                .max()
                .unwrap_or(0),
        }
    }

    /// Dense expansion in `d` letters, refused when degree-`deg` words exceed `capacity`.
    pub fn expand(&self, d: usize, capacity: usize) -> Result<MatrixFreePoly> {
        let deg = self.degree();
        let words = usize::try_from(deg)
            .ok()
            .and_then(|k| basis_size(d, k))
            .unwrap_or(usize::MAX);
        if words > capacity {
            return Err(Error::Capacity {
                requested: words,
                limit: capacity,
            });
        }
        Ok(self.expand_unchecked(d))
    }

    fn expand_unchecked(&self, d: usize) -> MatrixFreePoly {
        match self {
            StructuredPoly::Constant(m) => MatrixFreePoly::constant(m.clone(), d),
            StructuredPoly::Linear(a) => {
                let (r, cl) = a[0].shape();
                MatrixFreePoly::from_terms(
                    r,
                    cl,
                    d,
                    a.iter().enumerate().map(|(j, m)| (Word::letter(j + 1), m.clone())),
                )
                .expect("letters are in range")
            }
            StructuredPoly::PencilPower(m, k) => {
                let mx = m.linear_form();
                let mut p = MatrixFreePoly::identity(m.level(), d);
                for _ in 0..*k {
                    p = &p * &mx;
                }
                p
            }
            StructuredPoly::Pi(m, n) => {
                let mx = m.linear_form();
                let size = m.level();
                let mut power = MatrixFreePoly::identity(size, d);
                let mut acc = MatrixFreePoly::zero(size, size, d);
                for a in pi_coeffs(*n as usize) {
                    acc = &acc + &power.scale(&c(a));
                    power = &power * &mx;
                }
                acc
            }
            StructuredPoly::Combination(terms) => {
                let (r, cl) = self.shape();
                terms.iter().fold(MatrixFreePoly::zero(r, cl, d), |acc, (w, p)| {
                    &acc + &p.expand_unchecked(d).scale(w)
                })
            }
            StructuredPoly::Product(factors) => {
                let mut it = factors.iter();
                let first = it.next().expect("nonempty product").expand_unchecked(d);
                it.fold(first, |acc, p| &acc * &p.expand_unchecked(d))
            }
            StructuredPoly::Block { rows, cols, parts } => {
                let grid: Vec<Vec<MatrixFreePoly>> = parts
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(j, p)| match p {
                                Some(p) => p.expand_unchecked(d),
                                None => MatrixFreePoly::zero(rows[i], cols[j], d),
                            })
                            .collect()
                    })
                    .collect();
                MatrixFreePoly::from_blocks(&grid).expect("block shapes are consistent")
            }
        }
    }

    /// `‖·‖₂²` of `Σ w_k (Mx)^k` over distinct powers of one pencil, without expansion.
    pub fn pencil_series_norm_sq(&self) -> Option<f64> {
        let StructuredPoly::Combination(terms) = self else {
            return None;
        };
        let mut base: Option<&MatrixTuple> = None;
        let mut powers = Vec::new();
        for (w, t) in terms {
            let StructuredPoly::PencilPower(m, k) = t else {
                return None;
            };
            match base {
                Some(b) if b != m => return None,
                _ => base = Some(m),
            }
            powers.push((*k as usize, w.norm_sqr()));
        }
        powers.sort_by_key(|p| p.0);
        if powers.windows(2).any(|p| p[0].0 == p[1].0) {
            return None;
        }
        let kmax = powers.last()?.0;
        let norms = structural_power_norms(base?, kmax);
        Some(powers.iter().map(|&(k, w)| w * norms[k]).sum())
    }
}

fn check_contractive(m: &MatrixTuple) -> Result<f64> {
    let cn = col_norm(m);
    if cn > 1.0 + CONTRACTIVE_SLACK {
        return Err(Error::Precondition(format!("pencil has column norm {cn} > 1")));
    }
    Ok(cn)
}

/// `π_n(Mx)` with its multiplier bound.
#[derive(Clone, Debug)]
pub struct PencilApproximant {
    pub poly: StructuredPoly,
    /// `Σ_k a_k ‖Mx‖_mult^k`, which is `(n+1)/2` for a column contraction.
    pub multiplier_bound: f64,
}

pub fn pi_of_pencil(m: &MatrixTuple, n: u64) -> Result<PencilApproximant> {
    let cn = check_contractive(m)?;
    Ok(PencilApproximant {
        poly: StructuredPoly::Pi(m.clone(), n),
        multiplier_bound: pi_multiplier_bound(cn, n),
    })
}

fn pi_multiplier_bound(col: f64, n: u64) -> f64 {
    let half = (n as f64 + 1.0) / 2.0;
    if col <= 1.0 {
        return half;
    }
    // Σ (n+1−k)/(n+2) c^k ≤ (n+1)/2 · c^n
    half * col.powf(n as f64)
}

/// `‖π_n(Mx)(I − Mx) − I‖₂² = (1/(n+2)²) Σ_{k=0}^{n+1} ‖(Mx)^k‖₂²`.
pub fn pi_residual_norm_sq(m: &MatrixTuple, n: u64) -> Result<f64> {
    check_contractive(m)?;
    if n + 1 > EXACT_SUM_LIMIT {
        return Err(Error::Capacity {
            requested: n as usize,
            limit: EXACT_SUM_LIMIT as usize,
        });
    }
    let norms = structural_power_norms(m, n as usize + 1);
    let s = (n as f64 + 2.0).powi(2);
    Ok(norms.iter().sum::<f64>() / s)
}

/// `(π_n` residual value, `max_{1≤k≤n+1} ‖(Mx)^k‖₂²)`; the residual is replaced by
/// `(m + c²(n+1))/(n+2)²` with `c = ‖Mx‖₂` when `n` is too large to sum.
fn pi_residual_with_constant(m: &MatrixTuple, n: u64) -> Result<(f64, f64, bool)> {
    check_contractive(m)?;
    let size = m.level() as f64;
    let s = (n as f64 + 2.0).powi(2);
    if n < EXACT_SUM_LIMIT {
        let norms = structural_power_norms(m, n as usize + 1);
        let c2 = norms[1..].iter().cloned().fold(0.0, f64::max);
        Ok((norms.iter().sum::<f64>() / s, c2, true))
    } else {
        let cn = col_norm(m).max(1.0);
        let c2 = structural_power_norms(m, 1)[1] * cn.powf(2.0 * n as f64);
        Ok(((size + c2 * (n as f64 + 1.0)) / s, c2, false))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelLedger {
    /// Number of diagonal blocks covered, 1-based.
    pub level: usize,
    pub block_size: usize,
    pub zero_block: bool,
    pub n: u64,
    /// Degree of the `π` factor in the off-diagonal block (`n` on the first level).
    pub inner_degree: u64,
    pub scheduled_inner_degree: Option<u64>,
    /// `(ℓ−1) + n + N_2 + … + N_ℓ` with the inner degrees actually used.
    pub degree_bound: u64,
    /// `(ℓ−1) + n + n³ + … + n^{3^{ℓ−1}}`.
    pub claim_degree_bound: Option<u64>,
    pub realized_degree: u64,
    pub diagonal_col_norm: f64,
    /// `‖Yx‖_mult = ‖Y‖_col`.
    pub coupling_col_norm: f64,
    pub q_multiplier_bound: f64,
    pub r_multiplier_bound: f64,
    pub multiplier_bound: f64,
    /// `n^{1+3+…+3^{ℓ−1}}`.
    pub claim_multiplier_scale: f64,
    pub diagonal_residual: f64,
    pub off_diagonal_bound: f64,
    /// Certified bound on the full residual up to this level.
    pub residual_bound: f64,
    /// With the scheduled `N = n^(3^e)`: `K` with `off_diagonal_bound ≤ K/n`.
    pub k_constant: Option<f64>,
    /// `true` when every number on this level is exact rather than an upper bound.
    pub exact_diagonal: bool,
}

#[derive(Clone, Debug)]
pub struct Sigma {
    pub poly: StructuredPoly,
    pub n: u64,
    pub d: usize,
    pub ledger: Vec<LevelLedger>,
}

impl Sigma {
    pub fn degree(&self) -> u64 {
        self.poly.degree()
    }

    pub fn multiplier_bound(&self) -> f64 {
        self.ledger.last().map(|l| l.multiplier_bound).unwrap_or(1.0)
    }

    pub fn certified_residual(&self) -> f64 {
        self.ledger.last().map(|l| l.residual_bound).unwrap_or(0.0)
    }

    pub fn ledger_json(&self) -> String {
        serde_json::to_string_pretty(&self.ledger).expect("ledger serializes")
    }
}

/// `n^{3^e}`, or `None` on overflow.
pub fn scheduled_inner_degree(n: u64, e: u32) -> Option<u64> {
    3u32.checked_pow(e).and_then(|p| n.checked_pow(p))
}

/// `(ℓ−1) + n + n³ + … + n^{3^{ℓ−1}}`.
pub fn claim_degree_bound(n: u64, levels: usize) -> Option<u64> {
    let mut total = (levels as u64).checked_sub(1)?;
    for e in 0..levels as u32 {
        total = total.checked_add(scheduled_inner_degree(n, e)?)?;
    }
    Some(total)
}

fn claim_multiplier_scale(n: u64, levels: usize) -> f64 {
    let exp: f64 = (0..levels as i32).map(|e| 3f64.powi(e)).sum();
    (n as f64).powf(exp)
}

/// Builds `σ_{n,ℓ}` for the form's pencil `I − Bx`; `n_override` replaces every
/// inner degree `n^{3^ℓ}` by a fixed value.
pub fn sigma_build(form: &TriangularPencilForm, n: u64, n_override: Option<u64>) -> Result<Sigma> {
    if n < 1 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let d = form.conjugated().d();
    let blocks = form.blocks();
    let mut ledger: Vec<LevelLedger> = Vec::with_capacity(blocks.len());

    let mut sigma: Option<StructuredPoly> = None;
    let mut size = 0usize;
    for (k, block) in blocks.iter().enumerate() {
        let m = form.diagonal(k);
        let diag_col = col_norm(&m);
        let (q, q_bound, diag_res, exact_diag) = if block.zero {
            (StructuredPoly::Constant(CMat::identity(block.size, block.size)), 1.0, 0.0, true)
        } else {
            check_contractive(&m)?;
            let pa = pi_of_pencil(&m, n)?;
            let (res, _, exact) = pi_residual_with_constant(&m, n)?;
            (pa.poly, pa.multiplier_bound, res, exact)
        };
        let claim_deg = claim_degree_bound(n, k + 1);
        let scale = claim_multiplier_scale(n, k + 1);

        let Some(prev) = sigma.take() else {
            ledger.push(LevelLedger {
                level: 1,
                block_size: block.size,
                zero_block: block.zero,
                n,
                inner_degree: n,
                scheduled_inner_degree: Some(n),
                degree_bound: n,
                claim_degree_bound: claim_deg,
                realized_degree: q.degree(),
                diagonal_col_norm: diag_col,
                coupling_col_norm: 0.0,
                q_multiplier_bound: q_bound,
                r_multiplier_bound: 0.0,
                multiplier_bound: q_bound,
                claim_multiplier_scale: scale,
                diagonal_residual: diag_res,
                off_diagonal_bound: 0.0,
                residual_bound: diag_res,
                k_constant: None,
                exact_diagonal: exact_diag,
            });
            sigma = Some(q);
            size = block.size;
            continue;
        };
        let last = ledger.last().expect("previous level").clone();
        let scheduled_n = scheduled_inner_degree(n, k as u32);
        let inner = match n_override.or(scheduled_n) {
            Some(v) => v,
            None => {
                return Err(Error::Capacity {
                    requested: usize::MAX,
                    limit: u64::MAX as usize,
                })
            }
        };
        // the pencil's off-diagonal block is −B_off x = Yx
        let y: Vec<CMat> = form.coupling(k).into_iter().map(|b| -b).collect();
        let y_tuple_norm = coupling_norm(&y);
        let coupling_zero = y.iter().all(|b| b.iter().all(|v| *v == c(0.0)));
        let prev_mult = last.multiplier_bound;

        let (r, r_bound, off, kc) = if coupling_zero {
            (None, 0.0, 0.0, Some(0.0))
        } else if block.zero {
            // q = I, so r = −σ·Yx cancels σ·Yx exactly
            let r = StructuredPoly::Combination(vec![(
                c(-1.0),
                StructuredPoly::Product(vec![prev.clone(), StructuredPoly::Linear(y.clone())]),
            )]);
            (Some(r), prev_mult * y_tuple_norm, 0.0, Some(0.0))
        } else {
            let pa = pi_of_pencil(&m, inner)?;
            let (res_n, c2, _) = pi_residual_with_constant(&m, inner)?;
            let r = StructuredPoly::Combination(vec![(
                c(-1.0),
                StructuredPoly::Product(vec![prev.clone(), StructuredPoly::Linear(y.clone()), pa.poly]),
            )]);
            let off = prev_mult.powi(2) * y_tuple_norm.powi(2) * res_n;
            let kc = (n_override.is_none()).then(|| {
                let e = 3f64.powi(k as i32) - 1.0;
                y_tuple_norm.powi(2) * (block.size as f64 + c2) * prev_mult.powi(2) / (n as f64).powf(e)
            });
            (Some(r), prev_mult * y_tuple_norm * pa.multiplier_bound, off, kc)
        };
        let mult = op_norm(&DMatrix::from_row_slice(
            2,
            2,
            &[c(prev_mult), c(r_bound), c(0.0), c(q_bound)],
        ));
        let rows = vec![size, block.size];
        let next = StructuredPoly::Block {
            rows: rows.clone(),
            cols: rows,
            parts: vec![vec![Some(prev), r], vec![None, Some(q)]],
        };
        ledger.push(LevelLedger {
            level: k + 1,
            block_size: block.size,
            zero_block: block.zero,
            n,
            inner_degree: inner,
            scheduled_inner_degree: scheduled_n,
            degree_bound: last.degree_bound.saturating_add(1).saturating_add(inner),
            claim_degree_bound: claim_deg,
            realized_degree: next.degree(),
            diagonal_col_norm: diag_col,
            coupling_col_norm: y_tuple_norm,
            q_multiplier_bound: q_bound,
            r_multiplier_bound: r_bound,
            multiplier_bound: mult,
            claim_multiplier_scale: scale,
            diagonal_residual: diag_res,
            off_diagonal_bound: off,
            residual_bound: last.residual_bound + diag_res + off,
            k_constant: kc,
            exact_diagonal: exact_diag,
        });
        sigma = Some(next);
        size += block.size;
    }
    Ok(Sigma {
        poly: sigma.ok_or_else(|| Error::Precondition("form has no blocks".into()))?,
        n,
        d,
        ledger,
    })
}

/// `‖Σ Y_j*Y_j‖^{1/2}` for rectangular coefficients.
fn coupling_norm(y: &[CMat]) -> f64 {
    let cols = y[0].ncols();
    let mut g = CMat::zeros(cols, cols);
    for b in y {
        g += b.adjoint() * b;
    }
    crate::linalg::hermitian_max_eig(&g).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ResidualMode {
    /// Dense expansion of `σ(I − Bx) − I`.
    Exact,
    /// Closed forms on the diagonal and multiplier bounds off it.
    Blockwise,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaResidual {
    pub mode: ResidualMode,
    pub value: f64,
    /// `false` for exact values, `true` for upper bounds.
    pub upper_bound: bool,
    pub degree: u64,
}

pub fn sigma_residual_norm_sq(
    form: &TriangularPencilForm,
    sigma: &Sigma,
    mode: ResidualMode,
    capacity: usize,
) -> Result<SigmaResidual> {
    match mode {
        ResidualMode::Blockwise => Ok(SigmaResidual {
            mode,
            value: sigma.certified_residual(),
            upper_bound: true,
            degree: sigma.degree(),
        }),
        ResidualMode::Exact => {
            let s = sigma.poly.expand(sigma.d, capacity)?;
            let b = form.conjugated();
            let size = b.level();
            let pencil = &MatrixFreePoly::identity(size, sigma.d) - &b.linear_form();
            let resid = &(&s * &pencil) - &MatrixFreePoly::identity(size, sigma.d);
            Ok(SigmaResidual {
                mode,
                value: resid.norm_sq(),
                upper_bound: false,
                degree: sigma.degree(),
            })
        }
    }
}
