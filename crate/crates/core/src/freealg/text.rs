//! Text format for scalar free polynomials.
//!
//! ```text
//! poly    := [sign] term (sign term)*
//! term    := factor (['*'] factor)*
//! factor  := real | complex | letter | '(' poly ')'
//! complex := '(' [sign] real sign real 'i' ')'
//! real    := digits ['.' digits] [('e'|'E') [sign] digits] ['/' digits]
//! letter  := 'x' positive-integer
//! ```
//!
//! Whitespace is insignificant. Juxtaposition multiplies, so `2 x1*x2` and
//! `(0.5+0.5i) x2` are single terms; parenthesised sub-polynomials such as
//! `(1 - x1)*(1 - x2)` are expanded. Decimals are read exactly.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ExactPoly, MatrixFreePoly, Word};
use crate::error::{Error, Result};
use crate::scalar::{Coeff, Exact};

const PROVISIONAL_D: usize = u16::MAX as usize;

/// Parses a scalar polynomial with exact coefficients. When `d` is `None` the
/// letter count is the largest letter index that occurs (at least 1).
pub fn parse_exact(text: &str, d: Option<usize>) -> Result<ExactPoly> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        d,
    };
    let poly = p.poly()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    let top = poly.terms().map(|(w, _)| w.max_letter()).max().unwrap_or(0);
    let d = d.unwrap_or(top.max(1));
    poly.with_letters(d)
}

/// Parses and converts to floating coefficients.
pub fn parse(text: &str, d: Option<usize>) -> Result<MatrixFreePoly> {
    Ok(parse_exact(text, d)?.to_complex())
}

/// Formats a 1×1 polynomial in graded-lex term order.
pub fn format<C: Coeff>(p: &MatrixFreePoly<C>) -> String {
    assert_eq!(p.shape(), (1, 1), "text format is for scalar polynomials");
    let mut out = String::new();
    for (w, m) in p.terms() {
        let (re, im) = m[(0, 0)].format_parts();
        let first = out.is_empty();
        let mono = if w.is_empty() { None } else { Some(w.to_string()) };
        if im == "0" {
            let (neg, mag) = match re.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, re.clone()),
            };
            if first {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            match (&mono, mag.as_str()) {
                (Some(mo), "1") => out.push_str(mo),
                (Some(mo), _) => {
                    out.push_str(&mag);
                    out.push(' ');
                    out.push_str(mo);
                }
                (None, _) => out.push_str(&mag),
            }
        } else {
            if !first {
                out.push_str(" + ");
            }
            let (isign, imag) = match im.strip_prefix('-') {
                Some(rest) => ('-', rest.to_string()),
                None => ('+', im.clone()),
            };
            out.push_str(&format!("({re}{isign}{imag}i)"));
            if let Some(mo) = mono {
                out.push(' ');
                out.push_str(&mo);
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Parses a constant such as `-2`, `0.25` or `(1-0.5i)`.
pub fn parse_scalar(text: &str) -> Result<Exact> {
    let p = parse_exact(text, Some(1))?;
    match p.degree().finite() {
        None => Ok(Complex::zero()),
        Some(0) => Ok(p.constant_term()[(0, 0)].clone()),
        Some(_) => Err(Error::Syntax {
            offset: 0,
            message: "expected a constant".into(),
        }),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    d: Option<usize>,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn constant(&self, c: Exact) -> ExactPoly {
        MatrixFreePoly::scalar(c, PROVISIONAL_D)
    }

    fn poly(&mut self) -> Result<ExactPoly> {
        let mut acc = MatrixFreePoly::zero(1, 1, PROVISIONAL_D);
        let mut sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1
            }
            Some(b'+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        loop {
            let t = self.term()?;
            acc = if sign < 0 { &acc - &t } else { &acc + &t };
            match self.peek() {
                Some(b'+') => sign = 1,
                Some(b'-') => sign = -1,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<ExactPoly> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                }
                Some(c) if c.is_ascii_digit() || c == b'.' || c == b'x' || c == b'(' => {}
                _ => return Ok(acc),
            }
            let f = self.factor()?;
            acc = &acc * &f;
        }
    }

    fn factor(&mut self) -> Result<ExactPoly> {
        match self.peek() {
            Some(b'x') => self.letter(),
            Some(b'(') => {
                let save = self.pos;
                if let Some(c) = self.try_complex() {
                    return Ok(self.constant(c));
                }
                self.pos = save + 1;
                let inner = self.poly()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let r = self.real()?;
                Ok(self.constant(Complex::new(r, BigRational::zero())))
            }
            Some(_) => Err(self.error("expected a coefficient, letter or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn letter(&mut self) -> Result<ExactPoly> {
        self.pos += 1; // 'x'
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a letter index after 'x'"));
        }
        let idx: usize = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Syntax {
                offset: start,
                message: "letter index too large".into(),
            })?;
        if idx == 0 || idx > PROVISIONAL_D {
            return Err(Error::Syntax {
                offset: start,
                message: "letter indices start at 1".into(),
            });
        }
        if let Some(d) = self.d {
            if idx > d {
                return Err(Error::LetterOutOfRange { letter: idx, d });
            }
        }
        MatrixFreePoly::monomial(
            Word::letter(idx),
            DMatrix::from_element(1, 1, Exact::one()),
            PROVISIONAL_D,
        )
    }

    /// `(a ± b i)`; restores nothing on failure, the caller rewinds.
    fn try_complex(&mut self) -> Option<Exact> {
        self.pos += 1; // '('
        let neg_re = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        self.peek();
        let re = self.real().ok()?;
        let neg_im = match self.peek()? {
            b'+' => false,
            b'-' => true,
            _ => return None,
        };
        self.pos += 1;
        self.peek();
        let im = self.real().ok()?;
        if self.peek()? != b'i' {
            return None;
        }
        self.pos += 1;
        if self.peek()? != b')' {
            return None;
        }
        self.pos += 1;
        let re = if neg_re { -re } else { re };
        let im = if neg_im { -im } else { im };
        Some(Complex::new(re, im))
    }

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn real(&mut self) -> Result<BigRational> {
        let start = self.pos;
        let int = self.digits();
        let mut frac: &[u8] = &[];
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = self.digits();
        }
        if int.is_empty() && frac.is_empty() {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        let mantissa: BigInt = std::str::from_utf8(&[int, frac].concat())
            .unwrap()
            .parse()
            .unwrap();
        let mut exp: i64 = -(frac.len() as i64);
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let e = self.digits();
            if e.is_empty() {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
            let e: i64 = std::str::from_utf8(e)
                .unwrap()
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            if e > 100_000 {
                return Err(self.error("exponent too large"));
            }
            exp += if neg { -e } else { e };
        }
        let ten = BigInt::from(10);
        let mut value = BigRational::from_integer(mantissa);
        if exp >= 0 {
            value *= BigRational::from_integer(ten.pow(exp as u32));
        } else {
            value /= BigRational::from_integer(ten.pow((-exp) as u32));
        }
        if self.src.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let den = self.digits();
            if den.is_empty() {
                return Err(self.error("expected a denominator"));
            }
            let den: BigInt = std::str::from_utf8(den).unwrap().parse().unwrap();
            if den.is_zero() {
                return Err(self.error("zero denominator"));
            }
            value /= BigRational::from_integer(den);
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact_int, exact_ratio};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn grammar_cases() {
        let p = parse_exact("1 - x1*x2", None).unwrap();
        assert_eq!(p.d(), 2);
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.coeff(&Word::from_letters(&[1, 2])).unwrap()[(0, 0)], exact_int(-1));
        assert_eq!(format(&p), "1 - x1*x2");

        let q = parse_exact("x1 - x1*x2*x1", None).unwrap();
        assert_eq!(format(&q), "x1 - x1*x2*x1");

        let c = parse_exact("(0.5+0.5i) x2", None).unwrap();
        assert_eq!(c.num_terms(), 1);
        let coeff = c.coeff(&Word::letter(2)).unwrap()[(0, 0)].clone();
        assert_eq!(coeff, Complex::new(exact_ratio(1, 2).re, exact_ratio(1, 2).re));
        assert_eq!(format(&c), "(0.5+0.5i) x2");
        assert_eq!(parse_exact(&format(&c), None).unwrap(), c);
    }

    #[test]
    fn products_expand() {
        let p = parse_exact("(1 - x1)*(1 - x2)", None).unwrap();
        assert_eq!(format(&p), "1 - x1 - x2 + x1*x2");
        let q = parse_exact("2x1 x2 + 3/4", None).unwrap();
        assert_eq!(format(&q), "0.75 + 2 x1*x2");
        assert_eq!(format(&parse_exact("x1 - x1", None).unwrap()), "0");
        assert_eq!(format(&parse_exact("-x2 + 1e-3", None).unwrap()), "0.001 - x2");
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_exact("1 - x1 * * x2", None) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_exact("x0", None), Err(Error::Syntax { offset: 1, .. })));
        assert!(matches!(
            parse_exact("1 - x3", Some(2)),
            Err(Error::LetterOutOfRange { letter: 3, d: 2 })
        ));
        assert!(matches!(parse_exact("(1 - x1", None), Err(Error::Syntax { .. })));
        assert!(matches!(parse_exact("1 +", None), Err(Error::Syntax { offset: 3, .. })));
    }

    #[test]
    fn thirds_round_trip() {
        let p = parse_exact("1/3 x1 - 2/7", None).unwrap();
        assert_eq!(format(&p), "-2/7 + 1/3 x1");
        assert_eq!(parse_exact(&format(&p), None).unwrap(), p);
    }

    #[test]
    fn scalar_literals() {
        assert_eq!(parse_scalar("(-1-2i)").unwrap(), Complex::new(exact_int(-1).re, exact_int(-2).re));
        assert!(parse_scalar("x1").is_err());
    }

    fn arb_float_poly() -> impl Strategy<Value = MatrixFreePoly> {
        let word = prop::collection::vec(1usize..=3, 0..=3);
        let coeff = (-1e3f64..1e3, prop_oneof![Just(0.0), -1e3f64..1e3]);
        prop::collection::vec((word, coeff), 0..6).prop_map(|terms| {
            MatrixFreePoly::from_terms(
                1,
                1,
                3,
                terms.into_iter().map(|(w, (re, im))| {
                    (Word::from_letters(&w), DMatrix::from_element(1, 1, Complex64::new(re, im)))
                }),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn float_format_parse_round_trip(p in arb_float_poly()) {
            let back = parse(&format(&p), Some(3)).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
