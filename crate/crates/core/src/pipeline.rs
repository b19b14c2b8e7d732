//! End-to-end run: normalize, linearize, triangularize, build `σ`, compare with
//! the optimal approximants of the pencil and of `F`.

use serde::Serialize;
use thiserror::Error as ThisError;

use crate::error::Error;
use crate::fockops::{basis_size, CAPACITY};
use crate::freealg::{format, ExactPoly, MatrixFreePoly};
use crate::linalg::exact_inverse;
use crate::linearize::{decay_sandwich_constants, linearize, predicted_size, verify_stable_assoc, SandwichConstants};
use crate::opa::{decay_table_with, solve_opa_with, theorem_exponent, DecayRow, OpaOptions};
use crate::sigma::{sigma_build, sigma_residual_norm_sq, LevelLedger, ResidualMode};
use crate::specrad::{burnside_triangularize_seeded, outer_spectral_radius, DiagonalBlock, DEFAULT_SEED};

/// Slack for comparing an optimal value with a constructed residual.
pub const SANDWICH_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Degrees `n` at which `σ_{n,ℓ}` is built.
    pub sigma_degrees: Vec<u64>,
    pub n_override: Option<u64>,
    pub n_max: usize,
    pub window: (usize, usize),
    pub capacity: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sigma_degrees: vec![1, 2, 3],
            n_override: None,
            n_max: 10,
            window: (4, 10),
            capacity: CAPACITY,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, ThisError)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

fn at(stage: &'static str) -> impl Fn(Error) -> StageError {
    move |source| StageError { stage, source }
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaReport {
    pub n: u64,
    pub degree: u64,
    pub ledger: Vec<LevelLedger>,
    pub certified_residual: f64,
    /// Exact residual when the expansion fits in the capacity.
    pub exact_residual: Option<f64>,
    /// `c_D` of the triangular pencil at `D = deg σ`, when it fits.
    pub pencil_opa: Option<f64>,
    pub exact_below_certified: Option<bool>,
    pub opa_below_sigma: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub input: String,
    pub normalized: bool,
    pub pencil_size: usize,
    pub predicted_size: usize,
    pub witness_verified: bool,
    pub d1: usize,
    pub d2: usize,
    pub sandwich: SandwichConstants,
    pub pencil_radius: f64,
    pub num_blocks: usize,
    pub blocks: Vec<DiagonalBlock>,
    pub theorem_exponent: f64,
    pub sigma: Vec<SigmaReport>,
    pub decay: Vec<DecayRow>,
    pub window: (usize, usize),
    pub slope: Option<f64>,
    /// All computed checks hold.
    pub ok: bool,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn run_pipeline(f: &ExactPoly, config: &PipelineConfig) -> Result<PipelineReport, StageError> {
    let f0 = f.constant_term();
    let inv = exact_inverse(&f0).ok_or_else(|| StageError {
        stage: "normalize",
        source: Error::Precondition("F(0) is singular".into()),
    })?;
    let normalized = !f.is_identity_constant();
    let g = f.left_constant(&inv).map_err(at("normalize"))?;

    let (pencil, witness) = linearize(&g).map_err(at("linearize"))?;
    let verification = verify_stable_assoc(&g, &pencil.to_poly(), &witness);
    let sandwich = decay_sandwich_constants(&witness).map_err(at("linearize"))?;

    let a = pencil.coefficients_c64();
    let radius = outer_spectral_radius(&a);
    let form = burnside_triangularize_seeded(&a, config.seed).map_err(at("triangularize"))?;
    let num_blocks = form.num_blocks();
    let d = a.d();
    let b = form.conjugated();
    let tri_pencil = &MatrixFreePoly::identity(b.level(), d) - &b.linear_form();
    let opts = OpaOptions {
        capacity: config.capacity,
        ..OpaOptions::default()
    };

    let mut sigma = Vec::new();
    let mut ok = verification.holds;
    for &n in &config.sigma_degrees {
        let s = sigma_build(&form, n, config.n_override).map_err(at("sigma"))?;
        let certified = s.certified_residual();
        let exact = match sigma_residual_norm_sq(&form, &s, ResidualMode::Exact, config.capacity) {
            Ok(r) => Some(r.value),
            Err(Error::Capacity { .. }) => None,
            Err(e) => return Err(at("sigma")(e)),
        };
        let degree = s.degree();
        let fits = usize::try_from(degree)
            .ok()
            .and_then(|k| basis_size(d, k))
            .is_some_and(|w| w <= config.capacity);
        let pencil_opa = if fits {
            Some(
                solve_opa_with(&tri_pencil, degree as usize, &opts)
                    .map_err(at("opa"))?
                    .c_n,
            )
        } else {
            None
        };
        let exact_below = exact.map(|e| e <= certified + SANDWICH_TOL);
        let opa_below = match (pencil_opa, exact) {
            (Some(c), Some(e)) => Some(c <= e + SANDWICH_TOL),
            (Some(c), None) => Some(c <= certified + SANDWICH_TOL),
            _ => None,
        };
        ok &= exact_below.unwrap_or(true) && opa_below.unwrap_or(true);
        sigma.push(SigmaReport {
            n,
            degree,
            ledger: s.ledger.clone(),
            certified_residual: certified,
            exact_residual: exact,
            pencil_opa,
            exact_below_certified: exact_below,
            opa_below_sigma: opa_below,
        });
    }

    let table = decay_table_with(&f.to_complex(), config.n_max, config.window, &opts).map_err(at("decay"))?;
    Ok(PipelineReport {
        input: describe(f),
        normalized,
        pencil_size: pencil.size(),
        predicted_size: predicted_size(&g),
        witness_verified: verification.holds,
        d1: witness.d1(),
        d2: witness.d2(),
        sandwich,
        pencil_radius: radius,
        num_blocks,
        blocks: form.blocks().to_vec(),
        theorem_exponent: theorem_exponent(num_blocks),
        sigma,
        decay: table.rows,
        window: table.window,
        slope: table.slope,
        ok,
    })
}

fn describe(f: &ExactPoly) -> String {
    if f.shape() == (1, 1) {
        format(f)
    } else {
        format!("{}x{} matrix polynomial of degree {}", f.rows(), f.cols(), f.degree())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freealg::parse_exact;

    #[test]
    fn irreducible_single_block() {
        let f = parse_exact("1 - x1*x2", None).unwrap();
        let r = run_pipeline(&f, &PipelineConfig::default()).unwrap();
        assert_eq!(r.pencil_size, 2);
        assert_eq!(r.num_blocks, 1);
        assert!(r.witness_verified && r.ok);
        assert_eq!(r.theorem_exponent, 1.0);
        for s in &r.sigma {
            // two components, each (Mx)^k of squared norm 1
            let expect = 2.0 / (s.n as f64 + 2.0);
            assert!((s.certified_residual - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn two_atoms() {
        let f = parse_exact("(1 - x1)*(1 - x2)", None).unwrap();
        let config = PipelineConfig {
            sigma_degrees: vec![1, 2],
            ..PipelineConfig::default()
        };
        let r = run_pipeline(&f, &config).unwrap();
        assert_eq!(r.num_blocks, 2);
        assert!((r.theorem_exponent - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.ok);
        assert!(r.slope.unwrap() <= -0.25);
        assert_eq!(r.sigma[1].degree, 1 + 2 + 8);
        assert_eq!(r.sigma[1].opa_below_sigma, Some(true));
    }

    #[test]
    fn pencil_input_is_kept() {
        let f = parse_exact("1 - 1/2 x1 - 1/2 x2", None).unwrap();
        let r = run_pipeline(&f, &PipelineConfig::default()).unwrap();
        assert_eq!(r.pencil_size, 1);
        assert_eq!((r.d1, r.d2), (0, 0));
    }

    #[test]
    fn stages_are_named() {
        let f = parse_exact("x1", None).unwrap();
        assert_eq!(run_pipeline(&f, &PipelineConfig::default()).unwrap_err().stage, "normalize");
        let f = parse_exact("1 - 2 x1", None).unwrap();
        assert_eq!(run_pipeline(&f, &PipelineConfig::default()).unwrap_err().stage, "triangularize");
        let f = parse_exact("3 - 3 x1*x2", None).unwrap();
        assert!(run_pipeline(&f, &PipelineConfig::default()).unwrap().normalized);
    }
}
