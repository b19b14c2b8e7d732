use std::io::Write;

use anyhow::{anyhow, Context};
use fockopa_core::fockops::col_norm;
use fockopa_core::freealg::TupleDoc;
use fockopa_core::linalg::exact_inverse;
use fockopa_core::linearize::{decay_sandwich_constants, linearize, predicted_size, verify_stable_assoc, zero_locus_agreement};
use fockopa_core::opa::{cyclicity_verdict_from_table, decay_table_with, DecayTable, OpaOptions};
use fockopa_core::pipeline::{run_pipeline, PipelineConfig, PipelineReport};
use fockopa_core::random::{self, seeded};
use fockopa_core::sigma::{sigma_build, sigma_residual_norm_sq, ResidualMode};
use fockopa_core::specrad::{
    burnside_triangularize_seeded, irreducible_checked, is_jointly_nilpotent, outer_spectral_radius,
    similarity_to_column_contraction, DEFAULT_SEED,
};
use fockopa_core::{Exact, ExactPoly, MatrixTuple};
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::output::write_atomic;
use crate::svg::decay_svg;

/// Why a command did not verify.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, configuration or I/O.
    Usage(anyhow::Error),
    /// A computation stage failed.
    Stage(anyhow::Error),
}

pub type Outcome = Result<bool, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn stage<E: Into<anyhow::Error>>(name: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure::Stage(e.into().context(name))
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), Failure> {
    writeln!(out, "{}", line.as_ref()).map_err(usage)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "undefined".into())
}

/// Number of diagonal blocks of the pencil of `F(0)⁻¹F`, when the pipeline gets that far.
fn atom_count(f: &ExactPoly, seed: u64) -> Option<usize> {
    let inv = exact_inverse(&f.constant_term())?;
    let g = f.left_constant(&inv).ok()?;
    let (pencil, _) = linearize(&g).ok()?;
    burnside_triangularize_seeded(&pencil.coefficients_c64(), seed)
        .ok()
        .map(|t| t.num_blocks())
}

fn opts(cfg: &ScenarioConfig) -> OpaOptions {
    OpaOptions {
        capacity: cfg.capacity,
        ..OpaOptions::default()
    }
}

fn write_table(cfg: &ScenarioConfig, table: &DecayTable, out: &mut dyn Write) -> Result<(), Failure> {
    let csv = write_atomic(&cfg.out, "decay.csv", &table.to_csv(cfg.timing)).map_err(usage)?;
    let svg = write_atomic(&cfg.out, "decay.svg", &decay_svg(table)).map_err(usage)?;
    say(out, format!("wrote: {}", csv.display()))?;
    say(out, format!("wrote: {}", svg.display()))
}

pub fn cmd_opa(cfg: &ScenarioConfig, out: &mut dyn Write) -> Outcome {
    let f = cfg.polynomial().map_err(usage)?;
    let mut table = decay_table_with(&f.to_complex(), cfg.n_max, cfg.window, &opts(cfg)).map_err(stage("opa"))?;
    let verdict = cyclicity_verdict_from_table(&f, &table, cfg.tol).map_err(stage("verdict"))?;
    let atoms = if verdict.nonsingular_in_ball {
        atom_count(&f, cfg.seed.unwrap_or(DEFAULT_SEED))
    } else {
        None
    };
    if let Some(l) = atoms {
        table = table.with_atoms(l);
    }
    say(out, format!("input: {}", table.descriptor))?;
    say(out, format!("n_max: {} window: {}:{}", cfg.n_max, cfg.window.0, cfg.window.1))?;
    say(out, format!("c_final: {:.6e}", verdict.c_final))?;
    say(out, format!("slope: {}", fmt_opt(table.slope)))?;
    match (table.theorem_exponent, atoms) {
        (Some(p), Some(l)) => say(out, format!("theorem exponent p: {p:.6} (blocks: {l})"))?,
        _ => say(out, "theorem exponent p: n/a")?,
    }
    if let Some(r) = verdict.pencil_radius {
        say(out, format!("pencil radius: {r:.12}"))?;
    }
    for p in &verdict.singular_points {
        say(out, format!("singular at {}: c_n >= {:.6}", p.description, p.lower_bound))?;
    }
    say(out, format!("verdict: {}", verdict.verdict))?;
    say(out, format!("consistent: {}", verdict.consistent))?;
    write_table(cfg, &table, out)?;
    Ok(verdict.consistent)
}

fn pipeline_config(cfg: &ScenarioConfig) -> PipelineConfig {
    PipelineConfig {
        sigma_degrees: cfg.sigma_n.clone().unwrap_or_else(|| vec![1, 2, 3]),
        n_override: cfg.inner,
        n_max: cfg.n_max,
        window: cfg.window,
        capacity: cfg.capacity,
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
    }
}

fn report_table(r: &PipelineReport) -> DecayTable {
    DecayTable {
        descriptor: r.input.clone(),
        rows: r.decay.clone(),
        window: r.window,
        slope: r.slope,
        atoms: Some(r.num_blocks),
        theorem_exponent: Some(r.theorem_exponent),
    }
}

pub fn cmd_pipeline(cfg: &ScenarioConfig, out: &mut dyn Write) -> Outcome {
    let f = cfg.polynomial().map_err(usage)?;
    let r = run_pipeline(&f, &pipeline_config(cfg)).map_err(|e| Failure::Stage(anyhow!(e)))?;
    say(out, format!("input: {}", r.input))?;
    say(out, format!("pencil size: {} (predicted {})", r.pencil_size, r.predicted_size))?;
    say(out, format!("witness: verified={} D1={} D2={}", r.witness_verified, r.d1, r.d2))?;
    say(out, format!("sandwich constants: C1={:.6e} C2={:.6e}", r.sandwich.c1, r.sandwich.c2))?;
    say(out, format!("pencil radius: {:.12}", r.pencil_radius))?;
    say(out, format!("blocks: {}", r.num_blocks))?;
    for (k, b) in r.blocks.iter().enumerate() {
        say(
            out,
            format!(
                "  block {}: size={} zero={} radius={:.12} col_norm={:.12}",
                k + 1,
                b.size,
                b.zero,
                b.radius,
                b.col_norm
            ),
        )?;
    }
    say(out, format!("theorem exponent p: {:.6}", r.theorem_exponent))?;
    for s in &r.sigma {
        say(
            out,
            format!(
                "sigma n={} degree={} certified={:.6e} exact={} opa={} ok={}",
                s.n,
                s.degree,
                s.certified_residual,
                s.exact_residual.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "skipped".into()),
                s.pencil_opa.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "skipped".into()),
                s.exact_below_certified.unwrap_or(true) && s.opa_below_sigma.unwrap_or(true)
            ),
        )?;
    }
    say(out, format!("slope: {} on {}:{}", fmt_opt(r.slope), r.window.0, r.window.1))?;
    say(out, format!("ok: {}", r.ok))?;
    let path = write_atomic(&cfg.out, "pipeline.json", &r.to_json()).map_err(usage)?;
    say(out, format!("wrote: {}", path.display()))?;
    write_table(cfg, &report_table(&r), out)?;
    Ok(r.ok)
}

pub fn cmd_sigma_bounds(cfg: &ScenarioConfig, out: &mut dyn Write) -> Outcome {
    let f = cfg.polynomial().map_err(usage)?;
    let inv = exact_inverse(&f.constant_term())
        .ok_or_else(|| Failure::Stage(anyhow!("normalize: F(0) is singular")))?;
    let g = f.left_constant(&inv).map_err(stage("normalize"))?;
    let (pencil, _) = linearize(&g).map_err(stage("linearize"))?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let form = burnside_triangularize_seeded(&pencil.coefficients_c64(), seed).map_err(stage("triangularize"))?;
    let mut ok = true;
    let mut runs = Vec::new();
    for n in cfg.sigma_n.clone().unwrap_or_else(|| vec![1, 2, 3]) {
        let s = sigma_build(&form, n, cfg.inner).map_err(stage("sigma"))?;
        let exact = match sigma_residual_norm_sq(&form, &s, ResidualMode::Exact, cfg.capacity) {
            Ok(v) => Some(v.value),
            Err(fockopa_core::Error::Capacity { .. }) => None,
            Err(e) => return Err(stage("sigma")(e)),
        };
        let cert = s.certified_residual();
        let below = exact.is_none_or(|e| e <= cert + 1e-10);
        let k_ok = s
            .ledger
            .iter()
            .all(|l| l.k_constant.is_none_or(|k| l.off_diagonal_bound <= k / n as f64 + 1e-12));
        ok &= below && k_ok;
        say(
            out,
            format!(
                "n={} degree={} multiplier<={:.6e} certified={:.6e} exact={}",
                n,
                s.degree(),
                s.multiplier_bound(),
                cert,
                exact.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "skipped".into())
            ),
        )?;
        for l in &s.ledger {
            say(
                out,
                format!(
                    "  level {}: N={} degree_bound={} realized={} off_diagonal<={:.6e} K={}",
                    l.level,
                    l.inner_degree,
                    l.degree_bound,
                    l.realized_degree,
                    l.off_diagonal_bound,
                    fmt_opt(l.k_constant)
                ),
            )?;
        }
        runs.push(json!({ "n": n, "degree": s.degree(), "certified": cert, "exact": exact, "ledger": s.ledger }));
    }
    let doc = json!({ "blocks": form.blocks(), "runs": runs, "ok": ok });
    let path = write_atomic(&cfg.out, "sigma.json", &serde_json::to_string_pretty(&doc).map_err(usage)?)
        .map_err(usage)?;
    say(out, format!("ok: {ok}"))?;
    say(out, format!("wrote: {}", path.display()))?;
    Ok(ok)
}

fn parse_pair(text: &str) -> anyhow::Result<(usize, usize)> {
    let (a, b) = text.split_once(',').context("expected m,d")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

pub fn cmd_specrad(
    cfg: &ScenarioConfig,
    tuple: Option<&str>,
    random_spec: Option<&str>,
    out: &mut dyn Write,
) -> Outcome {
    let (x, self_test) = match (tuple, random_spec, &cfg.source) {
        (Some(t), _, _) => (TupleDoc::from_json(t).and_then(|d| d.to_exact()).map_err(usage)?.to_complex(), false),
        (None, Some(spec), _) => {
            let seed = cfg
                .seed
                .ok_or_else(|| usage(anyhow!("--random needs an explicit --seed")))?;
            let (m, d) = parse_pair(spec).map_err(usage)?;
            if m == 0 || d == 0 {
                return Err(usage(anyhow!("m and d must be positive")));
            }
            let t = random::tuple(&mut seeded(seed), d, m);
            (t, true)
        }
        (None, None, Some(crate::config::Source::File(p))) => {
            let text = std::fs::read_to_string(p).map_err(usage)?;
            (TupleDoc::from_json(&text).and_then(|d| d.to_exact()).map_err(usage)?.to_complex(), false)
        }
        _ => return Err(usage(anyhow!("give a tuple with --tuple, --file or --random"))),
    };
    let rho = outer_spectral_radius(&x);
    let nilpotent = is_jointly_nilpotent(&x);
    say(out, format!("level: {} letters: {}", x.level(), x.d()))?;
    say(out, format!("radius: {rho:.12}"))?;
    say(out, format!("jointly nilpotent: {nilpotent}"))?;
    say(out, format!("column norm: {:.12}", col_norm(&x)))?;
    let mut ok = true;
    let mut report = json!({ "radius": rho, "nilpotent": nilpotent, "col_norm": col_norm(&x) });

    if self_test {
        let mut rng = seeded(cfg.seed.unwrap_or(DEFAULT_SEED) ^ 0x9e37);
        let t = random::invertible(&mut rng, x.level(), 10.0);
        let conj = x.conjugate(&t).ok_or_else(|| Failure::Stage(anyhow!("similarity is singular")))?;
        let rel = (outer_spectral_radius(&conj) - rho).abs() / rho.max(f64::MIN_POSITIVE);
        let adj = (outer_spectral_radius(&x.adjoint()) - rho).abs();
        let pass = rel <= 1e-6 && adj <= 1e-10;
        ok &= pass;
        say(out, format!("self-test: similarity rel diff {rel:.3e}, adjoint diff {adj:.3e}, pass={pass}"))?;
        report["self_test"] = json!({ "similarity_rel_diff": rel, "adjoint_diff": adj, "pass": pass });
    }

    let irreducible = match irreducible_checked(&x) {
        Ok(v) => Some(v),
        Err(e) => {
            say(out, format!("irreducible: undecided ({e})"))?;
            None
        }
    };
    if let Some(irr) = irreducible {
        say(out, format!("irreducible: {irr}"))?;
        report["irreducible"] = json!(irr);
    }
    if irreducible == Some(true) && rho > 0.0 {
        // rescaled to radius 1 when the tuple is outside the unit ball
        let (target, scale) = if rho > 1.0 { (x.scale(1.0 / rho), 1.0 / rho) } else { (x.clone(), 1.0) };
        if scale != 1.0 {
            say(out, format!("rescaled by {scale:.12} to radius 1"))?;
        }
        let s = similarity_to_column_contraction(&target).map_err(stage("contraction"))?;
        let achieved = col_norm(&target.conjugate(&s).expect("similarity is invertible"));
        let pass = achieved <= 1.0 + 1e-8;
        ok &= pass;
        say(out, format!("contraction similarity: column norm {achieved:.12}, pass={pass}"))?;
        report["contraction"] = json!({
            "scale": scale,
            "achieved_col_norm": achieved,
            "similarity": TupleDoc::from_tuple(&MatrixTuple::new(vec![s]).expect("square")),
        });
    }
    if rho <= 1.0 + 1e-10 {
        match burnside_triangularize_seeded(&x, cfg.seed.unwrap_or(DEFAULT_SEED)) {
            Ok(form) => {
                say(out, format!("triangular blocks: {:?}", form.block_sizes()))?;
                report["blocks"] = json!(form.blocks());
            }
            Err(e) => say(out, format!("triangular blocks: failed ({e})"))?,
        }
    }
    report["ok"] = json!(ok);
    let path = write_atomic(&cfg.out, "specrad.json", &serde_json::to_string_pretty(&report).map_err(usage)?)
        .map_err(usage)?;
    say(out, format!("ok: {ok}"))?;
    say(out, format!("wrote: {}", path.display()))?;
    Ok(ok)
}

pub fn cmd_linearize(cfg: &ScenarioConfig, samples: usize, out: &mut dyn Write) -> Outcome {
    let f = cfg.polynomial().map_err(usage)?;
    let inv = exact_inverse(&f.constant_term())
        .ok_or_else(|| Failure::Stage(anyhow!("normalize: F(0) is singular")))?;
    let g = f.left_constant(&inv).map_err(stage("normalize"))?;
    let (pencil, witness) = linearize(&g).map_err(stage("linearize"))?;
    let check = verify_stable_assoc(&g, &pencil.to_poly(), &witness);
    let constants = decay_sandwich_constants(&witness).map_err(stage("constants"))?;
    say(out, format!("pencil size: {} (predicted {})", pencil.size(), predicted_size(&g)))?;
    say(out, format!("D1: {} D2: {}", witness.d1(), witness.d2()))?;
    say(out, format!("verified: {}", check.holds))?;
    if let Some(detail) = &check.detail {
        say(out, format!("detail: {detail}"))?;
    }
    say(out, format!("C1: {:.6e} C2: {:.6e}", constants.c1, constants.c2))?;
    for (j, a) in pencil.coefficients().mats().iter().enumerate() {
        say(out, format!("A{}: {}", j + 1, matrix_text(a)))?;
    }
    let mut ok = check.holds;
    if samples > 0 {
        let seed = cfg
            .seed
            .ok_or_else(|| usage(anyhow!("--samples needs an explicit --seed")))?;
        let report = zero_locus_agreement(&g, &pencil.to_poly(), &[], samples, seed).map_err(stage("zero locus"))?;
        say(
            out,
            format!(
                "zero locus: {} samples, agree={} zeros F={} G={}",
                samples, report.agree, report.zeros_f, report.zeros_g
            ),
        )?;
        ok &= report.agree;
    }
    let pencil_doc = TupleDoc::from_tuple(pencil.coefficients()).to_json();
    let p1 = write_atomic(&cfg.out, "pencil.json", &pencil_doc).map_err(usage)?;
    let w = serde_json::to_string_pretty(&witness.to_doc()).map_err(usage)?;
    let p2 = write_atomic(&cfg.out, "witness.json", &w).map_err(usage)?;
    say(out, format!("wrote: {}", p1.display()))?;
    say(out, format!("wrote: {}", p2.display()))?;
    Ok(ok)
}

fn matrix_text(a: &nalgebra::DMatrix<Exact>) -> String {
    use fockopa_core::scalar::Coeff;
    let rows: Vec<String> = (0..a.nrows())
        .map(|i| {
            let row: Vec<String> = (0..a.ncols()).map(|j| scalar_text(&a[(i, j)])).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    fn scalar_text(z: &Exact) -> String {
        let (re, im) = z.format_parts();
        if im == "0" {
            re
        } else if re == "0" {
            format!("{im}i")
        } else if im.starts_with('-') {
            format!("{re}{im}i")
        } else {
            format!("{re}+{im}i")
        }
    }
    format!("[{}]", rows.join(", "))
}
