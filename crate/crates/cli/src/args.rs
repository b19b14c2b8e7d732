use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fockopa", version, about = "Optimal polynomial approximants for free matrix polynomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decay table of c_n, log-log fit and cyclicity verdict.
    Opa(CommonArgs),
    /// Linearize, triangularize, build sigma and compare against the solver.
    Pipeline(PipelineArgs),
    /// Outer spectral radius, irreducibility and contraction similarity of a tuple.
    Specrad(SpecradArgs),
    /// Monic pencil and stable-association witness.
    Linearize(LinearizeArgs),
    /// Sigma construction ledger for the pencil of a polynomial.
    SigmaBounds(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scalar polynomial, e.g. "1 - x1*x2".
    #[arg(long)]
    pub poly: Option<String>,
    /// Polynomial file: a matrix-polynomial JSON document or polynomial text.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Number of letters; inferred from the input when absent.
    #[arg(long)]
    pub letters: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Fit window `a:b`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threshold below which a final c_n counts as zero.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest number of basis words.
    #[arg(long)]
    pub capacity: Option<usize>,
    /// JSON scenario file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record wall-clock times in the CSV.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Degrees n for sigma, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigma_n: Option<Vec<u64>>,
    /// Fixed inner degree N instead of n^(3^l).
    #[arg(long)]
    pub inner: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpecradArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Tuple as JSON: {"matrices": [[[..]]]}.
    #[arg(long)]
    pub tuple: Option<String>,
    /// Random tuple `m,d` from --seed, with a similarity-invariance self-test.
    #[arg(long)]
    pub random: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct LinearizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Seeded row-ball samples for the zero-locus comparison.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}
