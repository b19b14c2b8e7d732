//! Benchmark fixtures shared by the criterion targets.

use fockopa_core::freealg::{parse, parse_exact};
use fockopa_core::specrad::{burnside_triangularize, TriangularPencilForm};
use fockopa_core::linearize::linearize;
use fockopa_core::{ExactPoly, MatrixFreePoly};

pub const POLYS: [&str; 3] = ["1 - x1", "1 - x1*x2", "(1 - x1)*(1 - x2)"];

pub fn poly(text: &str) -> MatrixFreePoly {
    parse(text, None).expect("fixture parses")
}

pub fn exact(text: &str) -> ExactPoly {
    parse_exact(text, None).expect("fixture parses")
}

/// Triangular form of the pencil of `(1 - x1)(1 - x2)`.
pub fn two_block_form() -> TriangularPencilForm {
    let (pencil, _) = linearize(&exact("(1 - x1)*(1 - x2)")).expect("linearizes");
    burnside_triangularize(&pencil.coefficients_c64()).expect("triangularizes")
}
