//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use fockopa_cli::run;
use fockopa_core::fockops::{col_norm, left_mult_matrix, left_mult_sparse, CAPACITY};
use fockopa_core::freealg::{parse, parse_exact};
use fockopa_core::linalg::{c, CMat};
use fockopa_core::linearize::{decay_sandwich_constants, linearize, verify_stable_assoc, zero_locus_agreement};
use fockopa_core::opa::{decay_table, necessity_lower_bound, solve_opa, solve_opa_with, OpaOptions};
use fockopa_core::random::{self, seeded};
use fockopa_core::scalar::exact_int;
use fockopa_core::sigma::{
    pi_coeffs, pi_coeffs_exact, pi_of_pencil, pi_residual_norm_sq, pi_sup_norm_exact, sigma_build,
    sigma_residual_norm_sq, ResidualMode,
};
use fockopa_core::specrad::{
    burnside_triangularize, is_irreducible, is_jointly_nilpotent, outer_spectral_radius,
    similarity_to_column_contraction, TriangularPencilForm,
};
use fockopa_core::{MatrixFreePoly, MatrixTuple, Word};
use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn coeff(p: &MatrixFreePoly, w: &Word) -> num_complex::Complex64 {
    p.coeff(w).map(|m| m[(0, 0)]).unwrap_or(c(0.0))
}

fn one_variable_oracle() -> Check {
    let start = Instant::now();
    let f = parse("1 - x1", None).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for n in 0..=30usize {
        let r = solve_opa(&f, n).map_err(|e| e.to_string())?;
        worst = worst.max((r.c_n - 1.0 / (n as f64 + 2.0)).abs());
        for k in 0..=n {
            let expect = (n + 1 - k) as f64 / (n + 2) as f64;
            let got = coeff(&r.approximant, &Word::from_letters(&vec![1; k]));
            worst = worst.max((got - c(expect)).norm());
        }
    }
    let table = decay_table(&f, 30, (8, 30)).map_err(|e| e.to_string())?;
    let slope = table.slope.ok_or("no slope")?;
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-9, format!("max error {worst:e}"))?;
    ensure((slope + 1.0).abs() <= 0.15, format!("slope {slope}"))?;
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("max error {worst:.1e}, slope {slope:.4}, {secs:.3} s"))
}

fn necessity() -> Check {
    let x = parse("x1", None).map_err(|e| e.to_string())?;
    for n in 0..=10 {
        let r = solve_opa(&x, n).map_err(|e| e.to_string())?;
        ensure(r.c_n == 1.0, format!("F = x: c_{n} = {}", r.c_n))?;
    }
    let f = parse("1 - 2 x1", None).map_err(|e| e.to_string())?;
    let c30 = solve_opa(&f, 30).map_err(|e| e.to_string())?.c_n;
    let half = MatrixTuple::new(vec![DMatrix::from_element(1, 1, c(0.5))]).map_err(|e| e.to_string())?;
    let plateau = necessity_lower_bound(&f, &half)
        .map_err(|e| e.to_string())?
        .ok_or("1 - 2x should vanish at 1/2")?;
    ensure((plateau - 0.75).abs() < 1e-12, format!("kernel bound {plateau}"))?;
    ensure((c30 - 0.75).abs() <= 0.05, format!("c_30 = {c30}"))?;
    Ok(format!("x: c_n = 1 for n <= 10; 1 - 2x: c_30 = {c30:.6}, plateau {plateau}"))
}

fn pencil_multiplier_norm() -> Check {
    let mut rng = seeded(2001);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let m = 1 + rng.random_range(0..4);
        let d = 1 + (i % 3);
        let a = random::tuple(&mut rng, d, m);
        let cn = col_norm(&a);
        for n in [0, 2, 4] {
            let l = left_mult_matrix(&a.linear_form(), n).map_err(|e| e.to_string())?;
            let top = l.singular_values().max();
            worst = worst.max((top - cn).abs());
        }
    }
    ensure(worst <= 1e-8, format!("max deviation {worst:e}"))?;
    Ok(format!("20 tuples, max |s_max - col_norm| = {worst:.1e}"))
}

fn shift_relations() -> Check {
    for d in 1..=3 {
        for n in 0..=6 {
            let shifts: Vec<_> = (1..=d)
                .map(|i| left_mult_sparse(&MatrixFreePoly::letter(i, d).expect("letter"), n))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for (i, li) in shifts.iter().enumerate() {
                for (j, lj) in shifts.iter().enumerate() {
                    let g = li.adjoint_mul(lj);
                    let want = if i == j { CMat::identity(g.nrows(), g.ncols()) } else { CMat::zeros(g.nrows(), g.ncols()) };
                    ensure(g == want, format!("L{}*L{} fails at d = {d}, n = {n}", i + 1, j + 1))?;
                }
            }
        }
    }
    Ok("L_i*L_j = δ_ij I exactly for d <= 3, n <= 6".into())
}

fn higman() -> Check {
    for text in ["1 - x1*x2", "1 - x1*x2*x1", "(1 - x1)*(1 - x2)"] {
        let f = parse_exact(text, None).map_err(|e| e.to_string())?;
        let (pencil, w) = linearize(&f).map_err(|e| e.to_string())?;
        let v = verify_stable_assoc(&f, &pencil.to_poly(), &w);
        ensure(v.holds, format!("{text}: {:?}", v.detail))?;
    }
    let f = parse_exact("1 - x1*x2", None).map_err(|e| e.to_string())?;
    let (pencil, _) = linearize(&f).map_err(|e| e.to_string())?;
    let unit = |i: usize, j: usize| {
        let mut m = DMatrix::from_element(2, 2, exact_int(0));
        m[(i, j)] = exact_int(1);
        m
    };
    let planted = MatrixTuple::new(vec![unit(0, 1), unit(1, 0)]).map_err(|e| e.to_string())?;
    let report = zero_locus_agreement(&f, &pencil.to_poly(), &[planted], 200, 77).map_err(|e| e.to_string())?;
    let p = &report.samples[0];
    ensure(p.det_f == 0.0 && p.det_g == 0.0, "planted point is not a common zero")?;
    let false_zeros = report.samples[1..]
        .iter()
        .filter(|s| s.det_f <= 1e-9 || s.det_g <= 1e-9)
        .count();
    ensure(report.agree && false_zeros == 0, format!("{false_zeros} false zeros"))?;
    Ok("3 witnesses verified exactly; planted zero shared; 200 samples without false zeros".into())
}

fn outer_radius() -> Check {
    let mut rng = seeded(2002);
    let mut sim = 0.0f64;
    let mut adj = 0.0f64;
    for i in 0..20 {
        let x = random::tuple(&mut rng, 1 + i % 3, 1 + i % 4);
        let t = random::invertible(&mut rng, x.level(), 50.0);
        let r = outer_spectral_radius(&x);
        let rs = outer_spectral_radius(&x.conjugate(&t).ok_or("singular similarity")?);
        sim = sim.max((r - rs).abs() / r);
        adj = adj.max((r - outer_spectral_radius(&x.adjoint())).abs());
    }
    let mut classical = 0.0f64;
    for i in 0..20 {
        let a = random::complex_matrix(&mut rng, 1 + i % 5, 1 + i % 5);
        let eig = a.clone().schur().eigenvalues().ok_or("no eigenvalues")?;
        let top = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let x = MatrixTuple::new(vec![a]).map_err(|e| e.to_string())?;
        classical = classical.max((outer_spectral_radius(&x) - top).abs());
    }
    let mut nil_ok = true;
    for m in 1..=4 {
        let mats = (0..2)
            .map(|_| {
                let mut a = random::complex_matrix(&mut rng, m, m);
                for i in 0..m {
                    for j in 0..=i {
                        a[(i, j)] = c(0.0);
                    }
                }
                a
            })
            .collect();
        let x = MatrixTuple::new(mats).map_err(|e| e.to_string())?;
        nil_ok &= is_jointly_nilpotent(&x) && outer_spectral_radius(&x) == 0.0;
    }
    ensure(sim <= 1e-6, format!("similarity rel diff {sim:e}"))?;
    ensure(classical <= 1e-8, format!("d = 1 diff {classical:e}"))?;
    ensure(adj <= 1e-10, format!("adjoint diff {adj:e}"))?;
    ensure(nil_ok, "nilpotent tuple with nonzero radius")?;
    Ok(format!("similarity {sim:.1e}, classical {classical:.1e}, adjoint {adj:.1e}, nilpotent -> 0"))
}

fn contraction() -> Check {
    let start = Instant::now();
    let mut rng = seeded(2003);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 20 {
        let x = random::tuple(&mut rng, 2 + count % 2, 2 + count % 3);
        if !is_irreducible(&x) {
            continue;
        }
        let x = x.scale(1.0 / outer_spectral_radius(&x));
        let s = similarity_to_column_contraction(&x).map_err(|e| e.to_string())?;
        worst = worst.max(col_norm(&x.conjugate(&s).ok_or("singular similarity")?));
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1.0 + 1e-8, format!("column norm {worst}"))?;
    ensure(secs < 5.0, format!("took {secs:.2} s"))?;
    Ok(format!("20 tuples, max column norm {worst:.12}, {secs:.3} s"))
}

fn nonvanishing_samples() -> Check {
    let mut rng = seeded(2004);
    let mut smallest = f64::INFINITY;
    for p in 0..10 {
        let a = random::tuple(&mut rng, 2, 2 + p % 2);
        let scale = if p % 2 == 0 { 1.0 } else { 0.8 };
        let a = a.scale(scale / outer_spectral_radius(&a));
        let pencil = &MatrixFreePoly::identity(a.level(), 2) - &a.linear_form();
        for s in 0..1000 {
            let x = random::row_ball_point(&mut rng, 2, 1 + s % 3);
            let det = pencil.eval(&x).map_err(|e| e.to_string())?.determinant().norm();
            smallest = smallest.min(det);
        }
    }
    ensure(smallest > 1e-12, format!("smallest |det| {smallest:e}"))?;
    Ok(format!("10 pencils x 1000 samples, smallest |det| {smallest:.3e}"))
}

fn two_block_form() -> Result<TriangularPencilForm, String> {
    let f = parse_exact("(1 - x1)*(1 - x2)", None).map_err(|e| e.to_string())?;
    let (pencil, _) = linearize(&f).map_err(|e| e.to_string())?;
    burnside_triangularize(&pencil.coefficients_c64()).map_err(|e| e.to_string())
}

fn sigma_construction() -> Check {
    // (a)
    for n in 0..=50usize {
        let half = BigRational::new((n + 1).into(), 2.into());
        ensure(pi_sup_norm_exact(n) == half, format!("sum at n = {n}"))?;
        let exact = pi_coeffs_exact(n);
        let float = pi_coeffs(n);
        for (k, q) in exact.iter().enumerate() {
            ensure(*q == BigRational::new((n + 1 - k).into(), (n + 2).into()), "coefficient")?;
            ensure((float[k] - (n + 1 - k) as f64 / (n + 2) as f64).abs() == 0.0, "float coefficient")?;
        }
        let on_circle = (0..720)
            .map(|t| {
                let z = num_complex::Complex64::from_polar(1.0, t as f64 * std::f64::consts::PI / 360.0);
                float.iter().rev().fold(c(0.0), |acc, a| acc * z + c(*a)).norm()
            })
            .fold(0.0, f64::max);
        ensure((on_circle - (n + 1) as f64 / 2.0).abs() < 1e-9, format!("sup at n = {n}"))?;
    }
    // (b)
    let mut rng = seeded(2005);
    let mut worst_b = 0.0f64;
    for m in 1..=2 {
        for _ in 0..3 {
            let t = random::tuple(&mut rng, 2, m);
            let t = t.scale(1.0 / col_norm(&t));
            for n in 0..=4u64 {
                let p = pi_of_pencil(&t, n).map_err(|e| e.to_string())?.poly.expand(2, CAPACITY).map_err(|e| e.to_string())?;
                let id = MatrixFreePoly::identity(m, 2);
                let dense = (&(&p * &(&id - &t.linear_form())) - &id).norm_sq();
                worst_b = worst_b.max((dense - pi_residual_norm_sq(&t, n).map_err(|e| e.to_string())?).abs());
            }
        }
    }
    ensure(worst_b <= 1e-10, format!("(b) deviation {worst_b:e}"))?;
    // (c)
    let form = two_block_form()?;
    ensure(form.num_blocks() == 2, "expected two blocks")?;
    let b = form.conjugated();
    let pencil = &MatrixFreePoly::identity(b.level(), 2) - &b.linear_form();
    let opts = OpaOptions { capacity: 20_000, ..OpaOptions::default() };
    let mut min_margin = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for n in 1..=2u64 {
        for big_n in 1..=10u64 {
            let s = sigma_build(&form, n, Some(big_n)).map_err(|e| e.to_string())?;
            let exact = sigma_residual_norm_sq(&form, &s, ResidualMode::Exact, 20_000).map_err(|e| e.to_string())?.value;
            let cert = sigma_residual_norm_sq(&form, &s, ResidualMode::Blockwise, 0).map_err(|e| e.to_string())?.value;
            let opt = solve_opa_with(&pencil, s.degree() as usize, &opts).map_err(|e| e.to_string())?.c_n;
            ensure(exact <= cert + 1e-10, format!("(c) n={n} N={big_n}: exact {exact} > certified {cert}"))?;
            ensure(opt <= exact + 1e-10, format!("(c) n={n} N={big_n}: optimum {opt} > sigma {exact}"))?;
            min_margin = min_margin.min(cert - exact);
            min_gap = min_gap.min(exact - opt);
        }
    }
    // (d)
    let mut ks = Vec::new();
    for n in 1..=5u64 {
        let s = sigma_build(&form, n, None).map_err(|e| e.to_string())?;
        let top = s.ledger.last().ok_or("empty ledger")?;
        ensure(top.degree_bound == 1 + n + n.pow(3), format!("(d) degree bound at n = {n}"))?;
        ensure(s.degree() == 1 + n + n.pow(3), format!("(d) realized degree at n = {n}"))?;
        let k = top.k_constant.ok_or("(d) no K")?;
        ensure(top.off_diagonal_bound <= k / n as f64, format!("(d) off-diagonal at n = {n}"))?;
        ks.push(format!("{k:.3}"));
    }
    Ok(format!(
        "(a) n <= 50 exact; (b) {worst_b:.1e}; (c) certified margin >= {min_margin:.2e}, sigma - optimum >= {min_gap:.2e}; (d) K = [{}]",
        ks.join(", ")
    ))
}

fn sandwich() -> Check {
    let f = parse_exact("1 - x1*x2", None).map_err(|e| e.to_string())?;
    let (pencil, w) = linearize(&f).map_err(|e| e.to_string())?;
    let k = decay_sandwich_constants(&w).map_err(|e| e.to_string())?;
    ensure(k.d1 == k.d2, "degree shifts differ")?;
    let g = pencil.to_poly().to_complex();
    let fc = f.to_complex();
    let mut worst = 0.0f64;
    for n in k.d1 + 1..=10 {
        let cg = solve_opa(&g, n).map_err(|e| e.to_string())?.c_n;
        let cf = solve_opa(&fc, n - k.d1).map_err(|e| e.to_string())?.c_n;
        ensure(cg <= k.c1 * cf, format!("n = {n}: {cg} > {} * {cf}", k.c1))?;
        worst = worst.max(cg / (k.c1 * cf));
    }
    Ok(format!("C = {}, D1 = {}, max ratio {worst:.4}", k.c1, k.d1))
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_dir = dir.path().to_string_lossy().to_string();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        [
            "fockopa",
            "pipeline",
            "--poly",
            "(1 - x1)*(1 - x2)",
            "--nmax",
            "10",
            "--window",
            "4:10",
            "--sigma-n",
            "1,2",
            "--out",
            &out_dir,
        ],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out).to_string();
    ensure(code == 0, format!("exit {code}: {}", String::from_utf8_lossy(&err)))?;
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("pipeline.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let blocks = report["num_blocks"].as_u64().ok_or("no block count")?;
    let p = report["theorem_exponent"].as_f64().ok_or("no exponent")?;
    let slope = report["slope"].as_f64().ok_or("no slope")?;
    let largest = report["decay"]
        .as_array()
        .and_then(|rows| rows.last())
        .and_then(|r| r["basis_size"].as_u64())
        .ok_or("no basis size")?;
    let secs = start.elapsed().as_secs_f64();
    ensure(text.contains("blocks: 2"), "stdout lacks block count")?;
    ensure(blocks == 2, format!("{blocks} blocks"))?;
    ensure((p - 1.0 / 3.0).abs() < 1e-15, format!("p = {p}"))?;
    ensure(slope <= -0.25, format!("slope {slope}"))?;
    ensure(largest <= 2047, format!("basis {largest}"))?;
    ensure(secs < 120.0, format!("took {secs:.1} s"))?;
    Ok(format!("blocks 2, p = 1/3, slope {slope:.4} on [4, 10], basis {largest}, {secs:.2} s"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("one-variable oracle", one_variable_oracle),
        ("necessity", necessity),
        ("pencil multiplier norm", pencil_multiplier_norm),
        ("shift relations", shift_relations),
        ("linearization", higman),
        ("outer spectral radius", outer_radius),
        ("contraction similarity", contraction),
        ("nonvanishing pencils", nonvanishing_samples),
        ("sigma construction", sigma_construction),
        ("decay sandwich", sandwich),
        ("end to end", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
