//! Optimal polynomial approximants for free noncommutative matrix polynomials.
//!
//! The crate is organized bottom-up: [`freealg`] (free algebra arithmetic),
//! [`fockops`] (operators on truncated Fock space), [`specrad`] (outer
//! spectral radius and block triangularization), [`linearize`] (Higman
//! linearization to monic pencils), [`opa`] (the least-squares solver) and
//! [`sigma`] (explicit approximants built from triangular pencils).

pub mod error;
pub mod fockops;
pub mod freealg;
pub mod linalg;
pub mod linearize;
pub mod opa;
pub mod pipeline;
pub mod random;
pub mod scalar;
pub mod sigma;
pub mod specrad;

pub use error::{Error, Result};
pub use freealg::{Degree, ExactPoly, MatrixFreePoly, MatrixTuple, Word};
pub use scalar::Exact;
