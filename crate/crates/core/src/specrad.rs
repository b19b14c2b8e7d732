//! Outer spectral radius of matrix tuples, irreducibility, joint nilpotency,
//! similarity to column contractions, and block upper-triangularization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockops::{col_norm, cp_map, psi};
use crate::freealg::MatrixTuple;
use crate::linalg::{c, hermitian_apply, max_abs, CMat};
use crate::random::seeded;

/// Largest level handled by a dense eigensolve of the `m² × m²` CP matrix.
pub const DENSE_LEVEL_LIMIT: usize = 60;
/// Slack on `ρ ≤ 1` preconditions.
pub const RADIUS_SLACK: f64 = 1e-10;
/// Rank decisions: singular values below this (relative) are zero.
pub const RANK_ZERO: f64 = 1e-9;
/// Rank decisions: singular values above this (relative) are nonzero.
pub const RANK_NONZERO: f64 = 1e-6;

const CLUSTER_RADIUS: f64 = 1e-4;
const NILPOTENT_RATIO: f64 = 1e-12;
const PF_MULTIPLICITY_TOL: f64 = 1e-8;
const PSD_SLACK: f64 = 1e-10;
const CONTRACTION_SLACK: f64 = 1e-8;
const BLOCK_CLEAN_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// `ρ(X) = sqrt(spectral radius of Ψ_X)`.
pub fn outer_spectral_radius(x: &MatrixTuple) -> f64 {
    if is_jointly_nilpotent(x) {
        return 0.0;
    }
    if x.level() <= DENSE_LEVEL_LIMIT {
        if let Some(ev) = cp_map(x).matrix().clone().schur().eigenvalues() {
            return peripheral_cluster_modulus(ev.as_slice()).sqrt();
        }
    }
    power_radius(x)
}

/// Modulus of the dominant eigenvalue. A defective dominant eigenvalue comes
/// back from the eigensolver as a ring of radius `ε^{1/k}` around the true
/// value; the centroid of the ring is accurate to `O(ε)`.
fn peripheral_cluster_modulus(ev: &[Complex64]) -> f64 {
    let Some(top) = ev.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
        return 0.0;
    };
    let radius = CLUSTER_RADIUS * top.norm();
    let mut center = top;
    for _ in 0..3 {
        let members: Vec<_> = ev.iter().filter(|z| (*z - center).norm() <= radius).collect();
        let n = members.len() as f64;
        center = members.into_iter().sum::<Complex64>() / c(n);
    }
    center.norm()
}

/// Growth rate of `Ψ^k(I)`; the identity has a component along the Perron eigenvector.
fn power_radius(x: &MatrixTuple) -> f64 {
    let m = x.level();
    let mut t = CMat::identity(m, m);
    let mut log_growth = 0.0;
    let mut prev = f64::NAN;
    for k in 1..=20_000 {
        let next = psi(x, &t);
        let s = next.norm();
        if s == 0.0 {
            return 0.0;
        }
        log_growth += s.ln();
        t = next / c(s);
        let est = (log_growth / k as f64).exp();
        // the per-step ratio converges faster than the running mean
        if k > 50 && (s - prev).abs() <= 1e-13 * s {
            return s.sqrt();
        }
        prev = s;
        if k == 20_000 {
            return est.sqrt();
        }
    }
    unreachable!()
}

/// `Ψ_A^m(I) = 0` at `m` = level, judged relative to `‖Ψ_A(I)‖^m`.
pub fn is_jointly_nilpotent(a: &MatrixTuple) -> bool {
    let m = a.level();
    let mut t = CMat::identity(m, m);
    t = psi(a, &t);
    let first = t.norm();
    if first == 0.0 {
        return true;
    }
    for _ in 1..m {
        t = psi(a, &t);
    }
    t.norm() <= NILPOTENT_RATIO * first.powi(m as i32)
}

/// Orthonormal basis (as column-stacked vectors) of the unital algebra generated by `a`.
fn algebra_basis(a: &MatrixTuple) -> Result<Vec<CMat>> {
    let m = a.level();
    let mut basis: Vec<CMat> = vec![CMat::identity(m, m) / c((m as f64).sqrt())];
    let mut frontier = 0;
    while frontier < basis.len() && basis.len() < m * m {
        let b = basis[frontier].clone();
        frontier += 1;
        for x in a.mats() {
            let cand = x * &b;
            let scale = cand.norm();
            if scale == 0.0 {
                continue;
            }
            let mut r = cand;
            for _ in 0..2 {
                for q in &basis {
                    let coef = q.dotc(&r);
                    r -= q * coef;
                }
            }
            let rel = r.norm() / scale;
            if rel > RANK_NONZERO {
                let nr = r.norm();
                basis.push(r / c(nr));
                if basis.len() == m * m {
                    break;
                }
            } else if rel > RANK_ZERO {
                return Err(Error::RankAmbiguous { values: vec![rel] });
            }
        }
    }
    Ok(basis)
}

/// Whether the words in `a` span `M_m(C)`.
pub fn is_irreducible(a: &MatrixTuple) -> bool {
    irreducible_checked(a).unwrap_or(false)
}

/// Like [`is_irreducible`] but reports borderline rank decisions.
pub fn irreducible_checked(a: &MatrixTuple) -> Result<bool> {
    let m = a.level();
    Ok(algebra_basis(a)?.len() == m * m)
}

/// `S` with `col_norm(S⁻¹AS) = ρ(A) ≤ 1`, from the Perron eigenvector of `Ψ_{A*}`.
pub fn similarity_to_column_contraction(a: &MatrixTuple) -> Result<CMat> {
    let m = a.level();
    if !irreducible_checked(a)? {
        return Err(Error::Precondition("tuple is reducible".into()));
    }
    let rho = outer_spectral_radius(a);
    if rho > 1.0 + RADIUS_SLACK {
        return Err(Error::Infeasible { radius: rho });
    }
    if rho == 0.0 || m == 1 {
        return Ok(CMat::identity(m, m));
    }
    let lam = rho * rho;
    let op = cp_map(&a.adjoint()).matrix().clone();
    if let Some(ev) = op.clone().schur().eigenvalues() {
        let near = ev.iter().filter(|z| (*z - c(lam)).norm() < PF_MULTIPLICITY_TOL * lam.max(1.0)).count();
        if near > 1 {
            return Err(Error::Degenerate(format!(
                "Perron eigenvalue {lam} has multiplicity {near}"
            )));
        }
    }
    let shifted = &op - CMat::identity(m * m, m * m) * c(lam);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v: Vec<Complex64> = v_t.row(imin).iter().map(|z| z.conj()).collect();
    let mut w = CMat::from_column_slice(m, m, &v);
    let tr = w.trace();
    if tr.norm() == 0.0 {
        return Err(Error::Degenerate("Perron eigenvector has zero trace".into()));
    }
    w *= tr.conj() / c(tr.norm());
    w = (&w + w.adjoint()) * c(0.5);
    w /= c(w.norm());
    let eig = w.clone().symmetric_eigenvalues();
    let low = eig.min();
    if low <= -PSD_SLACK {
        return Err(Error::Degenerate(format!(
            "Perron eigenvector is not positive semidefinite (smallest eigenvalue {low:e})"
        )));
    }
    let eps = 1e-12;
    if low <= 0.0 {
        w += CMat::identity(m, m) * c(eps - low);
    }
    let s = hermitian_apply(&w, |x| 1.0 / x.sqrt());
    let conj = a
        .conjugate(&s)
        .ok_or_else(|| Error::Degenerate("similarity is singular".into()))?;
    let achieved = col_norm(&conj);
    if achieved > 1.0 + CONTRACTION_SLACK {
        return Err(Error::Degenerate(format!("achieved column norm {achieved} exceeds 1")));
    }
    Ok(s)
}

/// One diagonal block of a triangular form.
#[derive(Clone, Debug, Serialize)]
pub struct DiagonalBlock {
    pub size: usize,
    pub zero: bool,
    pub radius: f64,
    pub col_norm: f64,
}

/// `S⁻¹AS` in block upper-triangular form with zero or irreducible,
/// column-contractive diagonal blocks.
#[derive(Clone, Debug)]
pub struct TriangularPencilForm {
    similarity: CMat,
    conjugated: MatrixTuple,
    blocks: Vec<DiagonalBlock>,
}

impl TriangularPencilForm {
    pub fn similarity(&self) -> &CMat {
        &self.similarity
    }

    /// The whole conjugated tuple, with exact zeros below the diagonal blocks.
    pub fn conjugated(&self) -> &MatrixTuple {
        &self.conjugated
    }

    pub fn blocks(&self) -> &[DiagonalBlock] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn offset(&self, k: usize) -> usize {
        self.blocks[..k].iter().map(|b| b.size).sum()
    }

    fn slice(&self, r: std::ops::Range<usize>, cidx: std::ops::Range<usize>) -> Vec<CMat> {
        self.conjugated
            .mats()
            .iter()
            .map(|x| x.view((r.start, cidx.start), (r.len(), cidx.len())).into_owned())
            .collect()
    }

    /// Diagonal tuple `M^{(k)}` (0-based `k`).
    pub fn diagonal(&self, k: usize) -> MatrixTuple {
        let o = self.offset(k);
        let s = self.blocks[k].size;
        MatrixTuple::new(self.slice(o..o + s, o..o + s)).expect("square block")
    }

    /// Coefficients `Y_{ik}` of block row `i`, block column `k`.
    pub fn off_diagonal(&self, i: usize, k: usize) -> Vec<CMat> {
        let (oi, ok) = (self.offset(i), self.offset(k));
        self.slice(oi..oi + self.blocks[i].size, ok..ok + self.blocks[k].size)
    }

    /// Coefficients coupling the first `k` blocks (rows) to block `k` (columns).
    pub fn coupling(&self, k: usize) -> Vec<CMat> {
        let ok = self.offset(k);
        self.slice(0..ok, ok..ok + self.blocks[k].size)
    }

    /// Leading `k` blocks as a tuple of size `offset(k)`.
    pub fn leading(&self, k: usize) -> MatrixTuple {
        let o = self.offset(k);
        MatrixTuple::new(self.slice(0..o, 0..o)).expect("square block")
    }
}

fn rank_split(values: &[f64]) -> Result<usize> {
    let top = values.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    let mut borderline = Vec::new();
    for &s in values {
        let rel = s / top;
        if rel > RANK_NONZERO {
            rank += 1;
        } else if rel > RANK_ZERO {
            borderline.push(s);
        }
    }
    if borderline.is_empty() {
        Ok(rank)
    } else {
        Err(Error::RankAmbiguous { values: borderline })
    }
}

/// Orthonormal basis of the column span of `vecs` (as columns), with rank decision.
fn span_basis(cols: &CMat) -> Result<CMat> {
    let svd = cols.clone().svd(true, false);
    let rank = rank_split(svd.singular_values.as_slice())?;
    let u = svd.u.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let picked: Vec<_> = order[..rank].iter().map(|&i| u.column(i).into_owned()).collect();
    Ok(CMat::from_columns(&picked))
}

fn cyclic_span(algebra: &[CMat], v: &nalgebra::DVector<Complex64>, adjoint: bool) -> Result<CMat> {
    let cols: Vec<_> = algebra
        .iter()
        .map(|b| if adjoint { b.adjoint() * v } else { b * v })
        .collect();
    span_basis(&CMat::from_columns(&cols))
}

/// Orthonormal complement of an orthonormal column set.
fn complement(p: &CMat) -> CMat {
    let m = p.nrows();
    let proj = CMat::identity(m, m) - p * p.adjoint();
    let svd = proj.svd(true, false);
    let u = svd.u.expect("requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let cols: Vec<_> = order[..m - p.ncols()].iter().map(|&i| u.column(i).into_owned()).collect();
    CMat::from_columns(&cols)
}

fn invariance_defect(a: &MatrixTuple, p: &CMat) -> f64 {
    let m = a.level();
    let proj = CMat::identity(m, m) - p * p.adjoint();
    a.mats().iter().map(|x| (&proj * x * p).norm()).fold(0.0, f64::max)
}

fn tuple_scale(a: &MatrixTuple) -> f64 {
    a.mats().iter().map(max_abs).fold(0.0, f64::max)
}

/// A proper nonzero invariant subspace, searched from kernels of random algebra elements.
fn find_invariant_subspace(a: &MatrixTuple, rng: &mut impl Rng) -> Result<Option<CMat>> {
    let m = a.level();
    let algebra = algebra_basis(a)?;
    if algebra.len() == m * m {
        return Ok(None);
    }
    let scale = tuple_scale(a).max(1.0);
    for _attempt in 0..24 {
        let mut b = CMat::zeros(m, m);
        for q in &algebra {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            b += q * z;
        }
        let Some(eigs) = b.clone().schur().eigenvalues() else {
            continue;
        };
        for lam in eigs.iter() {
            let shifted = &b - CMat::identity(m, m) * *lam;
            for adjoint in [false, true] {
                let target = if adjoint { shifted.adjoint() } else { shifted.clone() };
                let svd = target.svd(false, true);
                let v_t = svd.v_t.expect("requested");
                let top = svd.singular_values.max().max(f64::MIN_POSITIVE);
                let mut kernel: Vec<nalgebra::DVector<Complex64>> = Vec::new();
                for (i, &s) in svd.singular_values.iter().enumerate() {
                    if s <= RANK_NONZERO * top {
                        kernel.push(v_t.row(i).adjoint());
                    }
                }
                if kernel.is_empty() {
                    let imin = svd.singular_values.imin();
                    kernel.push(v_t.row(imin).adjoint());
                }
                if kernel.len() > 1 {
                    let mut mix = nalgebra::DVector::zeros(m);
                    for k in &kernel {
                        mix += k * Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    }
                    kernel.push(mix);
                }
                for v in &kernel {
                    let span = match cyclic_span(&algebra, v, adjoint) {
                        Ok(s) => s,
                        Err(_) => continue,
                    };
                    let r = span.ncols();
                    if r == 0 || r == m {
                        continue;
                    }
                    let candidate = if adjoint { complement(&span) } else { span };
                    if invariance_defect(a, &candidate) <= BLOCK_CLEAN_TOL * scale {
                        return Ok(Some(candidate));
                    }
                }
            }
        }
    }
    Err(Error::Degenerate(
        "tuple is reducible but no invariant subspace was isolated".into(),
    ))
}

/// Unitary `U` and block sizes with `U*AU` block upper triangular.
fn triangularize_unitary(a: &MatrixTuple, rng: &mut impl Rng) -> Result<(CMat, Vec<usize>)> {
    let m = a.level();
    let scale = tuple_scale(a);
    if m == 1 || scale == 0.0 {
        return Ok((CMat::identity(m, m), vec![m]));
    }
    let Some(p) = find_invariant_subspace(a, rng)? else {
        return Ok((CMat::identity(m, m), vec![m]));
    };
    let r = p.ncols();
    let q = {
        let comp = complement(&p);
        let mut cols: Vec<_> = p.column_iter().map(|c| c.into_owned()).collect();
        cols.extend(comp.column_iter().map(|c| c.into_owned()));
        CMat::from_columns(&cols)
    };
    let rotated: Vec<CMat> = a.mats().iter().map(|x| q.adjoint() * x * &q).collect();
    let top = MatrixTuple::new(rotated.iter().map(|x| x.view((0, 0), (r, r)).into_owned()).collect())?;
    let bottom = MatrixTuple::new(
        rotated.iter().map(|x| x.view((r, r), (m - r, m - r)).into_owned()).collect(),
    )?;
    let (u1, mut b1) = triangularize_unitary(&top, rng)?;
    let (u2, b2) = triangularize_unitary(&bottom, rng)?;
    let mut inner = CMat::zeros(m, m);
    inner.view_mut((0, 0), (r, r)).copy_from(&u1);
    inner.view_mut((r, r), (m - r, m - r)).copy_from(&u2);
    b1.extend(b2);
    Ok((q * inner, b1))
}

/// Block upper-triangularization with each irreducible diagonal block made a column contraction.
pub fn burnside_triangularize(a: &MatrixTuple) -> Result<TriangularPencilForm> {
    burnside_triangularize_seeded(a, DEFAULT_SEED)
}

pub fn burnside_triangularize_seeded(a: &MatrixTuple, seed: u64) -> Result<TriangularPencilForm> {
    let rho = outer_spectral_radius(a);
    if rho > 1.0 + RADIUS_SLACK {
        return Err(Error::Infeasible { radius: rho });
    }
    let m = a.level();
    let scale = tuple_scale(a).max(1.0);
    let mut rng = seeded(seed);
    let (u, sizes) = triangularize_unitary(a, &mut rng)?;
    let mut t: Vec<CMat> = a.mats().iter().map(|x| u.adjoint() * x * &u).collect();

    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    for x in t.iter_mut() {
        for (bi, (&oi, &si)) in offsets.iter().zip(&sizes).enumerate() {
            for (&ok, &sk) in offsets.iter().zip(&sizes).take(bi) {
                let mut blk = x.view_mut((oi, ok), (si, sk));
                let worst = blk.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if worst > BLOCK_CLEAN_TOL * scale {
                    return Err(Error::Degenerate(format!(
                        "below-diagonal block has magnitude {worst:e}"
                    )));
                }
                blk.fill(c(0.0));
            }
        }
    }

    let mut s_blocks = CMat::zeros(m, m);
    let mut blocks = Vec::with_capacity(sizes.len());
    for (&o, &s) in offsets.iter().zip(&sizes) {
        let diag = MatrixTuple::new(t.iter().map(|x| x.view((o, o), (s, s)).into_owned()).collect())?;
        let zero = tuple_scale(&diag) <= 1e-12 * scale;
        let sk = if zero {
            for x in t.iter_mut() {
                x.view_mut((o, o), (s, s)).fill(c(0.0));
            }
            CMat::identity(s, s)
        } else {
            if !irreducible_checked(&diag)? {
                return Err(Error::Degenerate("diagonal block is reducible".into()));
            }
            similarity_to_column_contraction(&diag)?
        };
        s_blocks.view_mut((o, o), (s, s)).copy_from(&sk);
        blocks.push(DiagonalBlock {
            size: s,
            zero,
            radius: 0.0,
            col_norm: 0.0,
        });
    }
    let s_inv = s_blocks
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("block similarity is singular".into()))?;
    let mut conj: Vec<CMat> = t.iter().map(|x| &s_inv * x * &s_blocks).collect();
    for x in conj.iter_mut() {
        for (bi, (&oi, &si)) in offsets.iter().zip(&sizes).enumerate() {
            for (&ok, &sk) in offsets.iter().zip(&sizes).take(bi) {
                x.view_mut((oi, ok), (si, sk)).fill(c(0.0));
            }
        }
    }
    let form = TriangularPencilForm {
        similarity: u * s_blocks,
        conjugated: MatrixTuple::new(conj)?,
        blocks,
    };
    let mut form = form;
    for k in 0..form.blocks.len() {
        let diag = form.diagonal(k);
        form.blocks[k].radius = if form.blocks[k].zero { 0.0 } else { outer_spectral_radius(&diag) };
        form.blocks[k].col_norm = col_norm(&diag);
        if form.blocks[k].col_norm > 1.0 + CONTRACTION_SLACK {
            return Err(Error::Degenerate(format!(
                "block {} has column norm {}",
                k + 1,
                form.blocks[k].col_norm
            )));
        }
    }
    Ok(form)
}

/// Matrix unit `E_{ij}` (0-based) at level `m`.
pub fn matrix_unit(m: usize, i: usize, j: usize) -> CMat {
    let mut e = DMatrix::zeros(m, m);
    e[(i, j)] = c(1.0);
    e
}
