//! Optimal polynomial approximants: the degree-`n` minimizer `P_n` of
//! `‖P F − I‖₂²` over `k × k` matrix polynomials, and decay tables of
//! `c_n = ‖P_n F − I‖₂²`.
//!
//! The objective splits over rows, so row `a` of `P_n` is the least-squares
//! solution of `p F ≈ e_a` over row polynomials `p` of degree ≤ `n`.
//!
//! The default solver works level by level. With `V_L = {pF : deg p ≤ L}`,
//! peeling the first letter of `p` gives `V_L = span{e_r F} + ⊕_j x_j V_{L−1}`,
//! where the summands `x_j V_{L−1}` are mutually orthogonal because left shifts
//! are isometries with orthogonal ranges. Projecting onto `V_L` therefore needs
//! the projections onto `V_{L−1}` of the backward shifts `S_j g`, plus one
//! small `k`-column least-squares problem. Starting from the targets `e_a`, the
//! only vectors ever shifted are `S_u F_r` with `1 ≤ |u| ≤ deg F`, a finite set
//! whose projections are carried from level to level.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockops::{basis_size, check_capacity, word_index, TruncatedBasis, CAPACITY};
use crate::freealg::{ExactPoly, MatrixFreePoly, MatrixTuple, Word};
use crate::linalg::{c, exact_inverse, CMat, CVec};
use crate::linearize::linearize;
use crate::scalar::PRUNE_TOL;
use crate::specrad::{outer_spectral_radius, RADIUS_SLACK};

/// Log-log slopes at or below `−DECAY_SLOPE` count as decay.
pub const DECAY_SLOPE: f64 = 0.1;

/// Pivots below this fraction of the largest column norm count as rank loss.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Level-by-level projection with a pivoted QR per level.
    Recursive,
    /// SVD of the materialized multiplication matrix, minimum-norm solution.
    Dense,
}

#[derive(Clone, Debug)]
pub struct OpaOptions {
    /// Largest admissible number of basis words of degree ≤ `n`.
    pub capacity: usize,
    pub method: Method,
}

impl Default for OpaOptions {
    fn default() -> Self {
        OpaOptions {
            capacity: CAPACITY,
            method: Method::Recursive,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OpaDiagnostics {
    pub method: Method,
    /// `c_n` as produced inside the solver, before the independent recomputation.
    pub solver_value: f64,
    /// Largest `|⟨P_nF − I, x^u e_r F⟩|` over the spanning set of the normal equations.
    pub normal_residual: f64,
    /// Largest per-level pivot ratio (recursive) or singular-value ratio (dense).
    pub condition: f64,
    pub rank_deficient: bool,
    pub basis_size: usize,
}

#[derive(Clone, Debug)]
pub struct OpaResult {
    pub n: usize,
    pub approximant: MatrixFreePoly,
    /// `‖P_n F − I‖₂²` recomputed by explicit multiplication.
    pub c_n: f64,
    pub diagnostics: OpaDiagnostics,
}

/// Dense storage of row polynomials: entry `(index(w), s)` at `index(w)·k + s`.
#[derive(Clone, Debug)]
struct Layout {
    d: usize,
    k: usize,
}

impl Layout {
    /// Number of words of length ≤ `len` (zero for negative `len`).
    fn words(&self, len: isize) -> usize {
        if len < 0 {
            0
        } else {
            basis_size(self.d, len as usize).expect("capacity was checked")
        }
    }

    fn len(&self, max_word: isize) -> usize {
        self.words(max_word) * self.k
    }

    /// `dst += α · x_letter · src`, where `src` holds words of length ≤ `src_max`.
    fn shift_add(&self, dst: &mut CVec, src: &CVec, src_max: isize, letter: usize, alpha: Complex64) {
        let k = self.k;
        let mut pow = 1usize;
        for l in 0..=src_max.max(-1) {
            let l = l as usize;
            let from = self.words(l as isize - 1) * k;
            let to = (self.words(l as isize) + (letter - 1) * pow) * k;
            let n = pow * k;
            let s = src.rows(from, n);
            let mut t = dst.rows_mut(to, n);
            if alpha == c(1.0) {
                t += s;
            } else {
                t.axpy(alpha, &s, c(1.0));
            }
            pow *= self.d;
        }
    }
}

/// Thin QR with column pivoting by twice-orthogonalized Gram–Schmidt.
struct PivotedQr {
    q: Vec<CVec>,
    r: CMat,
    perm: Vec<usize>,
    deficient: bool,
    ratio: f64,
}

impl PivotedQr {
    fn new(mut cols: Vec<CVec>) -> Self {
        let k = cols.len();
        let scale = cols.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..k).collect();
        let mut r = CMat::zeros(k, k);
        let mut q: Vec<CVec> = Vec::with_capacity(k);
        let mut deficient = scale == 0.0;
        for j in 0..k {
            if deficient {
                break;
            }
            let p = (j..k)
                .max_by(|&a, &b| cols[a].norm().total_cmp(&cols[b].norm()))
                .expect("nonempty range");
            cols.swap(j, p);
            perm.swap(j, p);
            r.swap_columns(j, p);
            for (i, qi) in q.iter().enumerate() {
                let h = qi.dotc(&cols[j]);
                cols[j].axpy(-h, qi, c(1.0));
                r[(i, j)] += h;
            }
            let nrm = cols[j].norm();
            if nrm <= RANK_TOL * scale {
                deficient = true;
                break;
            }
            r[(j, j)] = c(nrm);
            let qj = &cols[j] / c(nrm);
            for i in j + 1..k {
                let h = qj.dotc(&cols[i]);
                cols[i].axpy(-h, &qj, c(1.0));
                r[(j, i)] = h;
            }
            q.push(qj);
        }
        let ratio = if deficient || k == 0 {
            f64::INFINITY
        } else {
            r[(0, 0)].norm() / r[(k - 1, k - 1)].norm()
        };
        PivotedQr {
            q,
            r,
            perm,
            deficient,
            ratio,
        }
    }

    /// Coefficients in original column order from `y = Q*g`.
    fn solve(&self, y: &CVec) -> CVec {
        let k = self.perm.len();
        let mut z = y.clone();
        for j in (0..k).rev() {
            let mut s = z[j];
            for i in j + 1..k {
                s -= self.r[(j, i)] * z[i];
            }
            z[j] = s / self.r[(j, j)];
        }
        let mut out = CVec::zeros(k);
        for (j, &p) in self.perm.iter().enumerate() {
            out[p] = z[j];
        }
        out
    }

    fn project(&self, g: &CVec) -> CVec {
        CVec::from_iterator(self.q.len(), self.q.iter().map(|qi| qi.dotc(g)))
    }
}

struct LevelState {
    level: isize,
    /// `Π^⊥_L` of each carried target, words of length ≤ `L + deg F`.
    perp: Vec<CVec>,
    /// Row polynomial `s` with `sF = Π_{V_L}(target)`, words of length ≤ `L`.
    sol: Vec<CVec>,
}

/// Output of one recursive level for the targets `e_a`.
struct LevelAnswer {
    coeffs: Vec<CVec>,
    values: Vec<f64>,
    ratio: f64,
}

/// Incremental level-by-level solver; levels are reused across degrees.
pub struct RecursiveSolver {
    layout: Layout,
    deg: usize,
    /// `(u, r)` for `1 ≤ |u| ≤ deg F`, indexed by `(index(u) − 1)·k + r`.
    raw: Vec<CVec>,
    children: Vec<Vec<Option<usize>>>,
    constant_rows: Vec<CVec>,
    state: LevelState,
    deficient: bool,
}

impl RecursiveSolver {
    pub fn new(f: &MatrixFreePoly) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::Shape(format!("{}x{} input is not square", f.rows(), f.cols())));
        }
        let deg = f
            .degree()
            .finite()
            .ok_or_else(|| Error::Precondition("F must be nonzero".into()))?;
        let (d, k) = (f.d(), f.rows());
        let layout = Layout { d, k };
        check_capacity(d, deg, usize::MAX)?;
        let n_targets = (layout.words(deg as isize) - 1) * k;
        let tlen = layout.len(deg as isize - 1);
        let mut raw = vec![CVec::zeros(tlen); n_targets];
        for (w, a) in f.terms() {
            for cut in 1..=w.len() {
                let u = Word::from_letters(&w.letters().take(cut).collect::<Vec<_>>());
                let rest = w.strip_prefix(&u).expect("prefix");
                let ui = word_index(d, &u).expect("in range") - 1;
                let ri = word_index(d, &rest).expect("in range");
                for r in 0..k {
                    for s in 0..k {
                        raw[ui * k + r][ri * k + s] = a[(r, s)];
                    }
                }
            }
        }
        let target_of = |u: &Word, r: usize| -> Option<usize> {
            if u.len() > deg {
                None
            } else {
                Some((word_index(d, u).expect("in range") - 1) * k + r)
            }
        };
        let mut children = vec![vec![None; d]; n_targets];
        let basis = TruncatedBasis::new(d, deg, usize::MAX)?;
        let words = &basis.words()[1..];
        for u in words {
            for r in 0..k {
                let t = target_of(u, r).expect("in range");
                for i in 1..=d {
                    children[t][i - 1] = target_of(&u.append(i), r);
                }
            }
        }
        let f0 = f.constant_term();
        let constant_rows = (0..k)
            .map(|r| CVec::from_iterator(k, (0..k).map(|s| f0[(r, s)])))
            .collect();
        let state = LevelState {
            level: -1,
            perp: raw.clone(),
            sol: vec![CVec::zeros(0); n_targets],
        };
        Ok(RecursiveSolver {
            layout,
            deg,
            raw,
            children,
            constant_rows,
            state,
            deficient: false,
        })
    }

    pub fn level(&self) -> isize {
        self.state.level
    }

    fn first_letter_target(&self, letter: usize, r: usize) -> usize {
        (letter - 1) * self.layout.k + r
    }

    /// `ĝ = g_∅ ⊕ Σ_i x_i Π^⊥_{L−1}(S_i g)` at the next level.
    fn hat(&self, constant: &CVec, child: impl Fn(usize) -> Option<usize>) -> CVec {
        let lay = &self.layout;
        let next = self.state.level + 1;
        let mut g = CVec::zeros(lay.len(next + self.deg as isize));
        g.rows_mut(0, lay.k).copy_from(constant);
        let src_max = self.state.level + self.deg as isize;
        for i in 1..=lay.d {
            if let Some(t) = child(i) {
                lay.shift_add(&mut g, &self.state.perp[t], src_max, i, c(1.0));
            }
        }
        g
    }

    /// `c ⊕ Σ_i x_i [sol(S_i g) − Σ_s c_s sol(S_i F_s)]` at the next level.
    fn combine(&self, coeffs: &CVec, child: impl Fn(usize) -> Option<usize>) -> CVec {
        let lay = &self.layout;
        let next = self.state.level + 1;
        let mut s = CVec::zeros(lay.len(next));
        s.rows_mut(0, lay.k).copy_from(coeffs);
        let src_max = self.state.level;
        for i in 1..=lay.d {
            if let Some(t) = child(i) {
                lay.shift_add(&mut s, &self.state.sol[t], src_max, i, c(1.0));
            }
            if self.deg > 0 {
                for (sidx, &cs) in coeffs.iter().enumerate() {
                    if cs != c(0.0) {
                        let t = self.first_letter_target(i, sidx);
                        lay.shift_add(&mut s, &self.state.sol[t], src_max, i, -cs);
                    }
                }
            }
        }
        s
    }

    /// Advances one level and returns row solutions and residuals for the targets `e_a`.
    fn advance(&mut self) -> Result<LevelAnswer> {
        let lay = self.layout.clone();
        let k = lay.k;
        let deg = self.deg;
        let cols: Vec<CVec> = (0..k)
            .map(|r| {
                self.hat(&self.constant_rows[r], |i| {
                    if deg == 0 {
                        None
                    } else {
                        Some(self.first_letter_target(i, r))
                    }
                })
            })
            .collect();
        let qr = PivotedQr::new(cols);
        if qr.deficient {
            self.deficient = true;
            return Err(Error::Degenerate("rank-deficient level".into()));
        }

        let mut coeffs = Vec::with_capacity(k);
        let mut values = Vec::with_capacity(k);
        for a in 0..k {
            let y = CVec::from_iterator(k, qr.q.iter().map(|qi| qi[a].conj()));
            values.push((1.0 - y.norm_squared()).max(0.0));
            let ca = qr.solve(&y);
            coeffs.push(self.combine(&ca, |_| None));
        }

        let n_targets = self.raw.len();
        let mut perp = Vec::with_capacity(n_targets);
        let mut sol = Vec::with_capacity(n_targets);
        for t in 0..n_targets {
            let constant = self.raw[t].rows(0, k).into_owned();
            let child = |i: usize| self.children[t][i - 1];
            let g = self.hat(&constant, child);
            let y = qr.project(&g);
            let mut p = g;
            for (qi, yi) in qr.q.iter().zip(y.iter()) {
                p.axpy(-*yi, qi, c(1.0));
            }
            let ct = qr.solve(&y);
            sol.push(self.combine(&ct, child));
            perp.push(p);
        }
        self.state = LevelState {
            level: self.state.level + 1,
            perp,
            sol,
        };
        Ok(LevelAnswer {
            coeffs,
            values,
            ratio: qr.ratio,
        })
    }

    fn assemble(&self, rows: &[CVec], n: usize) -> MatrixFreePoly {
        let (d, k) = (self.layout.d, self.layout.k);
        let basis = TruncatedBasis::new(d, n, usize::MAX).expect("capacity was checked");
        let mut terms = Vec::new();
        for (wi, w) in basis.words().iter().enumerate() {
            let m = DMatrix::from_fn(k, k, |a, s| rows[a][wi * k + s]);
            if m.iter().any(|v| v.norm() > PRUNE_TOL) {
                terms.push((w.clone(), m));
            }
        }
        MatrixFreePoly::from_terms(k, k, d, terms).expect("shapes are consistent")
    }
}

/// Residual `P F − I` and the normal-equation check for it.
fn residual_and_normal(p: &MatrixFreePoly, f: &MatrixFreePoly, n: usize) -> (f64, f64) {
    let k = f.rows();
    let resid = &(p * f) - &MatrixFreePoly::identity(k, f.d());
    let mut gram: HashMap<Word, CMat> = HashMap::new();
    for (v, r) in resid.terms() {
        for (w, a) in f.terms() {
            if let Some(u) = v.strip_suffix(w) {
                if u.len() <= n {
                    *gram.entry(u).or_insert_with(|| CMat::zeros(k, k)) += r * a.adjoint();
                }
            }
        }
    }
    let normal = gram
        .values()
        .flat_map(|m| m.iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    (resid.norm_sq(), normal)
}

fn finish(f: &MatrixFreePoly, n: usize, p: MatrixFreePoly, diag: OpaDiagnostics) -> OpaResult {
    let (c_n, normal) = residual_and_normal(&p, f, n);
    OpaResult {
        n,
        approximant: p,
        c_n,
        diagnostics: OpaDiagnostics {
            normal_residual: normal,
            ..diag
        },
    }
}

/// Dense least squares on the multiplication matrix; `perm` reorders its columns.
pub fn solve_dense(f: &MatrixFreePoly, n: usize, capacity: usize, perm: Option<&[usize]>) -> Result<OpaResult> {
    if !f.is_square() {
        return Err(Error::Shape(format!("{}x{} input is not square", f.rows(), f.cols())));
    }
    let deg = f
        .degree()
        .finite()
        .ok_or_else(|| Error::Precondition("F must be nonzero".into()))?;
    let (d, k) = (f.d(), f.rows());
    let basis = check_capacity(d, n, capacity)?;
    let rows = check_capacity(d, n + deg, usize::MAX)? * k;
    let ncols = basis * k;
    let order: Vec<usize> = match perm {
        Some(p) => {
            if p.len() != ncols {
                return Err(Error::Shape("permutation has the wrong length".into()));
            }
            p.to_vec()
        }
        None => (0..ncols).collect(),
    };
    let words = TruncatedBasis::new(d, n, usize::MAX)?;
    let mut m = CMat::zeros(rows, ncols);
    for (j, &col) in order.iter().enumerate() {
        let (ui, r) = (col / k, col % k);
        let u = &words.words()[ui];
        for (w, a) in f.terms() {
            let row = word_index(d, &u.concat(w)).expect("in range") * k;
            for s in 0..k {
                m[(row + s, j)] += a[(r, s)];
            }
        }
    }
    let mut rhs = CMat::zeros(rows, k);
    for a in 0..k {
        rhs[(a, a)] = c(1.0);
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    let eps = RANK_TOL * top.max(f64::MIN_POSITIVE);
    let kept: Vec<f64> = svd.singular_values.iter().cloned().filter(|&s| s > eps).collect();
    let deficient = kept.len() < ncols;
    let condition = if kept.is_empty() {
        f64::INFINITY
    } else {
        top / kept.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let x = svd.solve(&rhs, eps).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut rows_out = vec![CVec::zeros(ncols); k];
    for (j, &col) in order.iter().enumerate() {
        for a in 0..k {
            rows_out[a][col] = x[(j, a)];
        }
    }
    let mut terms = Vec::new();
    for (ui, u) in words.words().iter().enumerate() {
        let coeff = DMatrix::from_fn(k, k, |a, r| rows_out[a][ui * k + r]);
        if coeff.iter().any(|v| v.norm() > PRUNE_TOL) {
            terms.push((u.clone(), coeff));
        }
    }
    let p = MatrixFreePoly::from_terms(k, k, d, terms)?;
    let fitted = &m * &x - &rhs;
    let diag = OpaDiagnostics {
        method: Method::Dense,
        solver_value: fitted.norm_squared(),
        normal_residual: 0.0,
        condition,
        rank_deficient: deficient,
        basis_size: basis,
    };
    Ok(finish(f, n, p, diag))
}

pub fn solve_opa(f: &MatrixFreePoly, n: usize) -> Result<OpaResult> {
    solve_opa_with(f, n, &OpaOptions::default())
}

pub fn solve_opa_with(f: &MatrixFreePoly, n: usize, opts: &OpaOptions) -> Result<OpaResult> {
    let mut out = None;
    for_each_degree(f, n, opts, |r| {
        if r.n == n {
            out = Some(r);
        }
        Ok(())
    })?;
    Ok(out.expect("degree n is visited"))
}

/// Solves for every degree `0..=n_max`, reusing levels.
fn for_each_degree(
    f: &MatrixFreePoly,
    n_max: usize,
    opts: &OpaOptions,
    mut visit: impl FnMut(OpaResult) -> Result<()>,
) -> Result<()> {
    check_capacity(f.d(), n_max, opts.capacity)?;
    if opts.method == Method::Dense {
        for n in 0..=n_max {
            visit(solve_dense(f, n, opts.capacity, None)?)?;
        }
        return Ok(());
    }
    let mut solver = RecursiveSolver::new(f)?;
    for n in 0..=n_max {
        if solver.deficient {
            let mut r = solve_dense(f, n, opts.capacity, None)?;
            r.diagnostics.rank_deficient = true;
            visit(r)?;
            continue;
        }
        match solver.advance() {
            Ok(ans) => {
                let p = solver.assemble(&ans.coeffs, n);
                let diag = OpaDiagnostics {
                    method: Method::Recursive,
                    solver_value: ans.values.iter().sum(),
                    normal_residual: 0.0,
                    condition: ans.ratio,
                    rank_deficient: false,
                    basis_size: basis_size(f.d(), n).expect("checked"),
                };
                visit(finish(f, n, p, diag))?;
            }
            Err(Error::Degenerate(_)) => {
                let mut r = solve_dense(f, n, opts.capacity, None)?;
                r.diagnostics.rank_deficient = true;
                visit(r)?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub c_n: f64,
    pub basis_size: usize,
    pub time_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayTable {
    pub descriptor: String,
    pub rows: Vec<DecayRow>,
    pub window: (usize, usize),
    /// Least-squares slope of `ln c_n` against `ln n` over the window.
    pub slope: Option<f64>,
    pub atoms: Option<usize>,
    /// `1/3^{ℓ−1}` when the atom count `ℓ` is known.
    pub theorem_exponent: Option<f64>,
}

/// Slope of the least-squares line through `(ln x, ln y)`; `None` if any `y ≤ 0`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn theorem_exponent(atoms: usize) -> f64 {
    1.0 / 3f64.powi(atoms.saturating_sub(1) as i32)
}

impl DecayTable {
    pub fn with_atoms(mut self, atoms: usize) -> Self {
        self.atoms = Some(atoms);
        self.theorem_exponent = Some(theorem_exponent(atoms));
        self
    }

    /// `n,c_n,degree_basis_size,time_ms`; times are written as 0 unless requested,
    /// so that repeated runs are byte-identical.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("n,c_n,degree_basis_size,time_ms\n");
        for r in &self.rows {
            let t = if with_timing { format!("{:.3}", r.time_ms) } else { "0".into() };
            out.push_str(&format!("{},{:.16e},{},{}\n", r.n, r.c_n, r.basis_size, t));
        }
        out
    }
}

pub fn decay_table(f: &MatrixFreePoly, n_max: usize, window: (usize, usize)) -> Result<DecayTable> {
    decay_table_with(f, n_max, window, &OpaOptions::default())
}

pub fn decay_table_with(
    f: &MatrixFreePoly,
    n_max: usize,
    window: (usize, usize),
    opts: &OpaOptions,
) -> Result<DecayTable> {
    if n_max < 2 {
        return Err(Error::Precondition("n_max must be at least 2".into()));
    }
    if window.0 < 2 || window.1 > n_max || window.0 >= window.1 {
        return Err(Error::Precondition(format!(
            "window {}:{} must satisfy 2 ≤ a < b ≤ {n_max}",
            window.0, window.1
        )));
    }
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut clock = Instant::now();
    for_each_degree(f, n_max, opts, |r| {
        let elapsed = clock.elapsed().as_secs_f64() * 1e3;
        rows.push(DecayRow {
            n: r.n,
            c_n: r.c_n,
            basis_size: r.diagnostics.basis_size,
            time_ms: elapsed,
        });
        clock = Instant::now();
        Ok(())
    })?;
    for pair in rows.windows(2) {
        let (a, b) = (pair[0].c_n, pair[1].c_n);
        if b > a + 1e-12 + 1e-9 * a {
            return Err(Error::Degenerate(format!(
                "c_n increased from {a:e} to {b:e} at n = {}",
                pair[1].n
            )));
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n >= window.0 && r.n <= window.1)
        .map(|r| (r.n as f64, r.c_n))
        .collect();
    Ok(DecayTable {
        descriptor: describe(f),
        slope: loglog_slope(&pts),
        rows,
        window,
        atoms: None,
        theorem_exponent: None,
    })
}

fn describe(f: &MatrixFreePoly) -> String {
    if f.shape() == (1, 1) {
        crate::freealg::format(f)
    } else {
        format!("{}x{} matrix polynomial of degree {}", f.rows(), f.cols(), f.degree())
    }
}

/// Lower bound on every `c_n` from a point where `F(X)` is singular:
/// `c_n ≥ ‖η‖² / Σ_j η_j* K η_j` for `η = Σ e_j ⊗ η_j` in the kernel of `F(X)`,
/// with `K = Σ_k Φ_X^k(I)` and `Φ_X(T) = Σ X_i* T X_i`. `None` when `F(X)` is
/// invertible or `X` is not in the row ball.
pub fn necessity_lower_bound(f: &MatrixFreePoly, x: &MatrixTuple) -> Result<Option<f64>> {
    if !x.in_row_ball() {
        return Ok(None);
    }
    let fx = f.eval(x)?;
    let m = x.level();
    let svd = fx.clone().svd(false, true);
    let top = svd.singular_values.max().max(1.0);
    let imin = svd.singular_values.imin();
    if svd.singular_values[imin] > 1e-9 * top {
        return Ok(None);
    }
    let eta: CVec = svd.v_t.expect("requested").row(imin).adjoint();
    let mut phi = CMat::identity(m * m, m * m);
    for xi in x.mats() {
        phi -= xi.transpose().kronecker(&xi.adjoint());
    }
    let kvec = phi
        .lu()
        .solve(&crate::linalg::vec_of(&CMat::identity(m, m)))
        .ok_or_else(|| Error::Degenerate("I − Φ_X is singular".into()))?;
    let kmat = crate::linalg::unvec(&kvec, m);
    let mut denom = 0.0;
    for j in 0..f.rows() {
        let ej = eta.rows(j * m, m).into_owned();
        denom += ej.dotc(&(&kmat * &ej)).re;
    }
    Ok(Some(eta.norm_squared() / denom))
}

/// A point where `F` is singular with its lower bound on `c_n`.
#[derive(Clone, Debug, Serialize)]
pub struct SingularPoint {
    pub description: String,
    pub lower_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CyclicityReport {
    /// `ρ` of the pencil linearizing `F(0)⁻¹F`; absent when `F(0)` is singular.
    pub pencil_radius: Option<f64>,
    pub pencil_size: Option<usize>,
    /// Nonsingular on the row ball iff the pencil radius is ≤ 1.
    pub nonsingular_in_ball: bool,
    pub singular_points: Vec<SingularPoint>,
    pub n_max: usize,
    pub c_final: f64,
    pub threshold: f64,
    pub slope: Option<f64>,
    pub numerically_cyclic: bool,
    pub consistent: bool,
    pub verdict: String,
}

/// Roots of a scalar one-letter polynomial inside the open unit disc.
fn disc_roots(f: &ExactPoly) -> Vec<Complex64> {
    if f.d() != 1 || f.shape() != (1, 1) {
        return Vec::new();
    }
    let Some(deg) = f.degree().finite() else {
        return Vec::new();
    };
    let fc = f.to_complex();
    let coeff = |j: usize| {
        let w = Word::from_letters(&vec![1; j]);
        fc.coeff(&w).map(|m| m[(0, 0)]).unwrap_or(c(0.0))
    };
    let lead = coeff(deg);
    let mut roots = Vec::new();
    if deg == 0 {
        return roots;
    }
    let mut comp = CMat::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -coeff(deg - 1 - j) / lead;
    }
    for j in 1..deg {
        comp[(j, j - 1)] = c(1.0);
    }
    if let Some(ev) = comp.schur().eigenvalues() {
        roots.extend(ev.iter().cloned().filter(|z| z.norm() < 1.0 - 1e-12));
    }
    roots
}

/// Ties the pencil radius test to the decay of `c_n`, over a default tail window.
pub fn cyclicity_verdict(f: &ExactPoly, n_max: usize, threshold: f64) -> Result<CyclicityReport> {
    let window = ((n_max / 2).max(2), n_max);
    let table = decay_table(&f.to_complex(), n_max, window)?;
    cyclicity_verdict_from_table(f, &table, threshold)
}

/// `c_n` counts as decaying to zero when its final value is below `threshold`
/// or its fitted log-log slope is at most `−DECAY_SLOPE`.
pub fn cyclicity_verdict_from_table(f: &ExactPoly, table: &DecayTable, threshold: f64) -> Result<CyclicityReport> {
    let d = f.d();
    let fc = f.to_complex();
    let last = table.rows.last().ok_or_else(|| Error::Precondition("empty decay table".into()))?;
    let (n_max, table_end) = (last.n, last.c_n);
    let mut points = Vec::new();
    let f0 = f.constant_term();
    let (radius, size) = match exact_inverse(&f0) {
        Some(inv) => {
            let normalized = f.left_constant(&inv)?;
            let (pencil, _) = linearize(&normalized)?;
            (Some(outer_spectral_radius(&pencil.coefficients_c64())), Some(pencil.size()))
        }
        None => {
            let origin = MatrixTuple::zeros(d, 1);
            if let Some(b) = necessity_lower_bound(&fc, &origin)? {
                points.push(SingularPoint {
                    description: "0".into(),
                    lower_bound: b,
                });
            }
            (None, None)
        }
    };
    for z in disc_roots(f) {
        if radius.is_none() && z.norm() < 1e-12 {
            continue;
        }
        let x = MatrixTuple::new(vec![DMatrix::from_element(1, 1, z)])?;
        if let Some(b) = necessity_lower_bound(&fc, &x)? {
            points.push(SingularPoint {
                description: format!("x1 = {:.6}{:+.6}i", z.re + 0.0, z.im + 0.0),
                lower_bound: b,
            });
        }
    }
    let nonsingular = radius.is_some_and(|r| r <= 1.0 + RADIUS_SLACK);
    let cyclic = table_end < threshold || table.slope.is_some_and(|s| s <= -DECAY_SLOPE);
    let bounds_hold = points.iter().all(|p| table_end >= p.lower_bound - 1e-9);
    let consistent = nonsingular == cyclic && bounds_hold;
    let verdict = match (nonsingular, radius) {
        (true, _) => "cyclic: nonsingular on the row ball".to_string(),
        (false, None) => "not cyclic: singular at 0".to_string(),
        (false, Some(r)) => format!("not cyclic: singular in the row ball (pencil radius {r:.6})"),
    };
    Ok(CyclicityReport {
        pencil_radius: radius,
        pencil_size: size,
        nonsingular_in_ball: nonsingular,
        singular_points: points,
        n_max,
        c_final: table_end,
        threshold,
        slope: table.slope,
        numerically_cyclic: cyclic,
        consistent,
        verdict,
    })
}
