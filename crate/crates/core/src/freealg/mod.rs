//! The free algebra `C<x_1, …, x_d>` with scalar or matrix coefficients.

mod doc;
mod poly;
mod text;
mod tuple;
mod word;

pub use doc::{EntryDoc, MatrixPolyDoc, ScalarText, TupleDoc};
pub use poly::{Degree, ExactPoly, MatrixFreePoly};
pub use text::{format, parse, parse_exact, parse_scalar};
pub use tuple::MatrixTuple;
pub use word::Word;
