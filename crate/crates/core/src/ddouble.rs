//! Double-double floating point: an unevaluated sum `hi + lo` of two f64
//! values giving roughly 106 bits of mantissa.
//!
//! Only what the dimension and measure code needs is provided: the four
//! arithmetic operations, `exp`, `ln`, powers, and exact conversion from
//! big integers and rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const LN2: DD = DD {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    pub fn from_parts(hi: f64, lo: f64) -> DD {
        let (h, l) = two_sum(hi, lo);
        DD { hi: h, lo: l }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> DD {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Multiplies by `2^e` exactly.
    pub fn ldexp(self, e: i32) -> DD {
        let f = 2f64.powi(e);
        DD { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn from_u128(v: u128) -> DD {
        let hi = v as f64;
        // `hi` is the nearest double; the remainder fits in an i128.
        let hi_int = hi as u128;
        let rem = if hi_int >= v {
            -((hi_int - v) as f64)
        } else {
            (v - hi_int) as f64
        };
        DD::from_parts(hi, rem)
    }

    /// Nearest double-double to a big integer (relative error below 2^-104).
    pub fn from_biguint(v: &BigUint) -> DD {
        let bits = v.bits();
        if bits <= 127 {
            return DD::from_u128(v.to_u128().unwrap());
        }
        let shift = bits - 120;
        let top = (v >> shift).to_u128().unwrap();
        DD::from_u128(top).ldexp(shift as i32)
    }

    pub fn from_rational(r: &Rational) -> DD {
        let neg = r.numer().sign() == num_bigint::Sign::Minus;
        let n = DD::from_biguint(r.numer().magnitude());
        let d = DD::from_biguint(r.denom().magnitude());
        let (nb, db) = (r.numer().bits() as i64, r.denom().bits() as i64);
        // Very unbalanced magnitudes would overflow f64 individually.
        let v = if nb > 1000 || db > 1000 {
            let sn = (nb - 500).max(0) as u64;
            let sd = (db - 500).max(0) as u64;
            let n2 = DD::from_biguint(&(r.numer().magnitude() >> sn));
            let d2 = DD::from_biguint(&(r.denom().magnitude() >> sd));
            (n2 / d2).ldexp((sn as i64 - sd as i64) as i32)
        } else {
            n / d
        };
        if neg {
            -v
        } else {
            v
        }
    }

    pub fn sqr(self) -> DD {
        self * self
    }

    pub fn powi(self, n: u32) -> DD {
        let mut base = self;
        let mut acc = DD::ONE;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base.sqr();
            e >>= 1;
        }
        acc
    }

    pub fn exp(self) -> DD {
        if self.hi > 709.0 {
            return DD::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * DD::from_f64(k);
        // Scale down so the Taylor series converges in a handful of terms.
        const SQUARINGS: i32 = 10;
        let r = r.ldexp(-SQUARINGS);
        let mut term = r;
        let mut sum = r;
        let mut i = 2.0;
        while term.hi.abs() > 1e-36 {
            term = term * r / DD::from_f64(i);
            sum += term;
            i += 1.0;
        }
        // exp(r) - 1 = sum; square back up using (1+s)^2 - 1 = s(2+s).
        for _ in 0..SQUARINGS {
            sum = sum * (sum + DD::from_f64(2.0));
        }
        (sum + DD::ONE).ldexp(k as i32)
    }

    /// Natural logarithm; `NaN` for non-positive input.
    pub fn ln(self) -> DD {
        if self.hi <= 0.0 {
            return DD::from_f64(f64::NAN);
        }
        let mut y = DD::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - DD::ONE;
        }
        y
    }

    pub fn ln_biguint(v: &BigUint) -> DD {
        let bits = v.bits();
        if bits <= 1000 {
            return DD::from_biguint(v).ln();
        }
        let shift = bits - 200;
        DD::from_biguint(&(v >> shift)).ln() + LN2 * DD::from_f64(shift as f64)
    }

    /// Natural logarithm of a positive rational, accurate for any size.
    pub fn ln_rational(r: &Rational) -> DD {
        DD::ln_biguint(r.numer().magnitude()) - DD::ln_biguint(r.denom().magnitude())
    }

    /// `self^s` for positive `self`.
    pub fn powf(self, s: DD) -> DD {
        (s * self.ln()).exp()
    }

    /// Renders `hi + lo` with both parts as C99 hex floats.
    pub fn to_hex(self) -> String {
        if self.lo.is_sign_negative() && self.lo != 0.0 {
            format!("{}-{}", hex_f64(self.hi), hex_f64(-self.lo))
        } else {
            format!("{}+{}", hex_f64(self.hi), hex_f64(self.lo))
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(self, digits: usize) -> String {
        if !self.is_finite() {
            return format!("{}", self.hi);
        }
        if self.hi == 0.0 {
            return "0".to_string();
        }
        let neg = self.hi < 0.0;
        let mut x = self.abs();
        let mut e10 = x.hi.log10().floor() as i32;
        x = x / DD::from_f64(10f64).powi_signed(e10);
        if x.hi >= 10.0 {
            x = x / DD::from_f64(10.0);
            e10 += 1;
        } else if x.hi < 1.0 {
            x = x * DD::from_f64(10.0);
            e10 -= 1;
        }
        let mut s = String::new();
        for i in 0..digits {
            let d = x.hi.floor().clamp(0.0, 9.0);
            s.push(char::from(b'0' + d as u8));
            if i == 0 {
                s.push('.');
            }
            x = (x - DD::from_f64(d)) * DD::from_f64(10.0);
        }
        format!("{}{}e{}", if neg { "-" } else { "" }, s, e10)
    }

    fn powi_signed(self, n: i32) -> DD {
        if n >= 0 {
            self.powi(n as u32)
        } else {
            DD::ONE / self.powi(n.unsigned_abs())
        }
    }
}

pub fn hex_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0x0p+0".into() } else { "0x0p+0".into() };
    }
    if !x.is_finite() {
        return format!("{}", x);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut frac = format!("{:013x}", mant);
    while frac.ends_with('0') {
        frac.pop();
    }
    if frac.is_empty() {
        format!("{}0x{}p{:+}", sign, lead, e)
    } else {
        format!("{}0x{}.{}p{:+}", sign, lead, frac, e)
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(32))
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl AddAssign for DD {
    fn add_assign(&mut self, b: DD) {
        *self = *self + b;
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self - b * DD::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * DD::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

/// Serialized as `{"hi": ..., "lo": ..., "decimal": ...}` with both parts as
/// hex floats, so values round-trip bit for bit while staying readable.
impl serde::Serialize for DD {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DD", 3)?;
        st.serialize_field("hi", &hex_f64(self.hi))?;
        st.serialize_field("lo", &hex_f64(self.lo))?;
        st.serialize_field("decimal", &self.to_decimal(32))?;
        st.end()
    }
}

impl PartialOrd for DD {
    fn partial_cmp(&self, other: &DD) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

/// Compensated accumulator for long sums of doubles or double-doubles.
#[derive(Clone, Copy, Debug, Default)]
pub struct DDSum {
    acc: DD,
}

impl DDSum {
    pub fn new() -> Self {
        DDSum { acc: DD::ZERO }
    }

    pub fn add(&mut self, x: DD) {
        self.acc += x;
    }

    pub fn add_f64(&mut self, x: f64) {
        self.acc += DD::from_f64(x);
    }

    pub fn value(&self) -> DD {
        self.acc
    }
}

impl Zero for DD {
    fn zero() -> DD {
        DD::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}
