//! Coefficient scalars: complex doubles for numerical work and exact Gaussian
//! rationals for symbolic identities.

use std::fmt::Debug;
use std::ops::{Div, Neg};

use nalgebra::{ClosedAddAssign, ClosedMulAssign, ClosedSubAssign, Scalar};
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Entries with modulus at or below this are dropped after floating-point arithmetic.
pub const PRUNE_TOL: f64 = 1e-14;

/// Exact complex rational number.
pub type Exact = Complex<BigRational>;

/// Ring (in fact field) operations needed by the free algebra.
pub trait Coeff:
    Scalar
    + Debug
    + Zero
    + One
    + ClosedAddAssign
    + ClosedSubAssign
    + ClosedMulAssign
    + Neg<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// Whether the value is dropped from sparse supports.
    fn is_negligible(&self) -> bool;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;
    fn from_exact(value: &Exact) -> Self;
    /// Signed texts of the real and imaginary parts, `"0"` for zero.
    fn format_parts(&self) -> (String, String);
    /// Whether arithmetic is exact (no rounding).
    const EXACT: bool;
}

impl Coeff for Complex64 {
    const EXACT: bool = false;

    fn is_negligible(&self) -> bool {
        self.norm() <= PRUNE_TOL
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn from_exact(value: &Exact) -> Self {
        exact_to_c64(value)
    }

    fn format_parts(&self) -> (String, String) {
        (format_f64(self.re), format_f64(self.im))
    }
}

impl Coeff for Exact {
    const EXACT: bool = true;

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn to_c64(&self) -> Complex64 {
        exact_to_c64(self)
    }

    fn from_exact(value: &Exact) -> Self {
        value.clone()
    }

    fn format_parts(&self) -> (String, String) {
        (format_rational(&self.re), format_rational(&self.im))
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn exact_to_c64(z: &Exact) -> Complex64 {
    Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

/// Exact value of a finite double.
pub fn f64_to_rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn exact_from_c64(z: Complex64) -> Option<Exact> {
    Some(Complex::new(f64_to_rational(z.re)?, f64_to_rational(z.im)?))
}

pub fn exact_int(v: i64) -> Exact {
    Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
}

pub fn exact_ratio(num: i64, den: i64) -> Exact {
    Complex::new(
        BigRational::new(BigInt::from(num), BigInt::from(den)),
        BigRational::zero(),
    )
}

/// Text for a rational: integer, finite decimal when the denominator allows it, else `p/q`.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        return q.to_integer().to_string();
    }
    let mut den = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() || twos.max(fives) > 40 {
        return format!("{}/{}", q.numer(), q.denom());
    }
    let digits = twos.max(fives);
    let scaled = (q * BigRational::from_integer(BigInt::from(10).pow(digits))).to_integer();
    let neg = scaled.is_negative();
    let s = scaled.abs().to_string();
    let s = format!("{:0>width$}", s, width = digits as usize + 1);
    let (int, frac) = s.split_at(s.len() - digits as usize);
    let frac = frac.trim_end_matches('0');
    format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
}

/// Shortest round-trip text for a double, switching to exponent form for extreme magnitudes.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
