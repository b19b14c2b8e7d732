use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fockopa_core::freealg::{parse_exact, MatrixPolyDoc};
use fockopa_core::fockops::CAPACITY;
use fockopa_core::ExactPoly;
use serde::Deserialize;

use crate::args::CommonArgs;

pub const DEFAULT_NMAX: usize = 20;
pub const DEFAULT_TOL: f64 = 0.05;

/// Values a JSON scenario file may set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub poly: Option<String>,
    pub file: Option<PathBuf>,
    pub letters: Option<usize>,
    pub n_max: Option<usize>,
    pub window: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub capacity: Option<usize>,
    pub timing: Option<bool>,
    pub sigma_n: Option<Vec<u64>>,
    pub inner: Option<u64>,
}

#[derive(Debug, Clone)]
pub enum Source {
    Inline(String),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub source: Option<Source>,
    pub letters: Option<usize>,
    pub n_max: usize,
    pub window: (usize, usize),
    pub capacity: usize,
    pub tol: f64,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub timing: bool,
    pub sigma_n: Option<Vec<u64>>,
    pub inner: Option<u64>,
}

pub fn parse_window(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once(':')
        .with_context(|| format!("window {text:?} is not of the form a:b"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// Fit window used when none is given: the upper half of the degrees.
pub fn default_window(n_max: usize) -> (usize, usize) {
    ((n_max / 2).max(2), n_max)
}

impl ScenarioConfig {
    pub fn resolve(args: &CommonArgs, sigma_n: Option<Vec<u64>>, inner: Option<u64>) -> Result<Self> {
        let file = match &args.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str::<ScenarioFile>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ScenarioFile::default(),
        };
        let source = match (&args.poly, &args.file, file.poly, file.file) {
            (Some(p), _, _, _) => Some(Source::Inline(p.clone())),
            (None, Some(f), _, _) => Some(Source::File(f.clone())),
            (None, None, Some(p), _) => Some(Source::Inline(p)),
            (None, None, None, Some(f)) => Some(Source::File(f)),
            _ => None,
        };
        let n_max = args.nmax.or(file.n_max).unwrap_or(DEFAULT_NMAX);
        if n_max < 2 {
            bail!("--nmax must be at least 2");
        }
        let window = match args.window.as_deref().or(file.window.as_deref()) {
            Some(w) => parse_window(w)?,
            None => default_window(n_max),
        };
        if window.0 < 2 || window.1 > n_max || window.0 >= window.1 {
            bail!("window {}:{} must satisfy 2 <= a < b <= {n_max}", window.0, window.1);
        }
        Ok(ScenarioConfig {
            source,
            letters: args.letters.or(file.letters),
            n_max,
            window,
            capacity: args.capacity.or(file.capacity).unwrap_or(CAPACITY),
            tol: args.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            seed: args.seed.or(file.seed),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            timing: args.timing || file.timing.unwrap_or(false),
            sigma_n: sigma_n.or(file.sigma_n),
            inner: inner.or(file.inner),
        })
    }

    pub fn polynomial(&self) -> Result<ExactPoly> {
        match &self.source {
            None => bail!("no polynomial given; use --poly or --file"),
            Some(Source::Inline(text)) => Ok(parse_exact(text, self.letters)?),
            Some(Source::File(path)) => read_polynomial(path, self.letters),
        }
    }
}

fn read_polynomial(path: &Path, letters: Option<usize>) -> Result<ExactPoly> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let p = MatrixPolyDoc::from_json(&text)?.to_exact()?;
        return Ok(match letters {
            Some(d) => p.with_letters(d)?,
            None => p,
        });
    }
    Ok(parse_exact(text.trim(), letters)?)
}
