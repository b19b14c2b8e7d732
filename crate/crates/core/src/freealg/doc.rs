//! JSON documents for matrix polynomials and matrix tuples.
//!
//! Entry indices `i`, `j` are 0-based.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{format, parse_exact, parse_scalar, ExactPoly, MatrixFreePoly, MatrixTuple};
use crate::error::{Error, Result};
use crate::scalar::{exact_from_c64, Coeff, Exact};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub i: usize,
    pub j: usize,
    pub poly: String,
}

/// `{rows, cols, d, entries: [{i, j, poly}]}`; absent entries are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixPolyDoc {
    pub rows: usize,
    pub cols: usize,
    pub d: usize,
    pub entries: Vec<EntryDoc>,
}

impl MatrixPolyDoc {
    pub fn from_poly<C: Coeff>(p: &MatrixFreePoly<C>) -> Self {
        let mut entries = Vec::new();
        for i in 0..p.rows() {
            for j in 0..p.cols() {
                let e = p.entry(i, j);
                if !e.is_zero() {
                    entries.push(EntryDoc { i, j, poly: format(&e) });
                }
            }
        }
        MatrixPolyDoc {
            rows: p.rows(),
            cols: p.cols(),
            d: p.d(),
            entries,
        }
    }

    pub fn to_exact(&self) -> Result<ExactPoly> {
        if self.rows == 0 || self.cols == 0 || self.d == 0 {
            return Err(Error::Document("rows, cols and d must be positive".into()));
        }
        let zero = MatrixFreePoly::zero(1, 1, self.d);
        let mut grid = vec![vec![zero; self.cols]; self.rows];
        let mut seen = vec![false; self.rows * self.cols];
        for e in &self.entries {
            if e.i >= self.rows || e.j >= self.cols {
                return Err(Error::Document(format!(
                    "entry ({}, {}) outside a {}x{} matrix",
                    e.i, e.j, self.rows, self.cols
                )));
            }
            let slot = e.i * self.cols + e.j;
            if seen[slot] {
                return Err(Error::Document(format!("duplicate entry ({}, {})", e.i, e.j)));
            }
            seen[slot] = true;
            grid[e.i][e.j] = parse_exact(&e.poly, Some(self.d))?;
        }
        MatrixFreePoly::from_entries(&grid)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}

/// A matrix entry: coefficient text such as `"1/2"` or `"(0+1i)"`, or a bare JSON number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarText {
    Number(f64),
    Text(String),
}

impl ScalarText {
    fn to_exact(&self) -> Result<Exact> {
        match self {
            ScalarText::Number(x) => exact_from_c64(num_complex::Complex64::new(*x, 0.0))
                .ok_or_else(|| Error::Document(format!("non-finite entry {x}"))),
            ScalarText::Text(s) => parse_scalar(s),
        }
    }
}

/// `{"matrices": [[[row], ...], ...]}`, one square matrix per letter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleDoc {
    pub matrices: Vec<Vec<Vec<ScalarText>>>,
}

impl TupleDoc {
    pub fn from_tuple<C: Coeff>(x: &MatrixTuple<C>) -> Self {
        let matrices = x
            .mats()
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| {
                        (0..m.ncols())
                            .map(|j| {
                                let p = MatrixFreePoly::scalar(m[(i, j)].clone(), 1);
                                ScalarText::Text(format(&p))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        TupleDoc { matrices }
    }

    pub fn to_exact(&self) -> Result<MatrixTuple<Exact>> {
        let mut mats = Vec::with_capacity(self.matrices.len());
        for (k, rows) in self.matrices.iter().enumerate() {
            let m = rows.len();
            if rows.iter().any(|r| r.len() != m) {
                return Err(Error::Document(format!("matrix {} is not square", k + 1)));
            }
            let mut entries = Vec::with_capacity(m * m);
            for r in rows {
                for e in r {
                    entries.push(e.to_exact()?);
                }
            }
            mats.push(DMatrix::from_row_slice(m, m, &entries));
        }
        MatrixTuple::new(mats).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }
}
