//! Regular continued fractions `[a_1, a_2, ...] = 1/(a_1 + 1/(a_2 + ...))`
//! on `(0, 1)`: digits, convergents, fundamental intervals and the bounded
//! digit sets used by the dimension estimates.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

pub mod suite;

use crate::error::{Error, Result};
use crate::rational::{rat_big, Rational};

pub use suite::{lemma_suite, Lemma, LemmaReport};

pub type Digit = u64;

/// Digits of `x` in `[0, 1)`, at most `max_digits` of them. Rationals end
/// with a digit of at least 2; `0` has no digits.
pub fn cf_digits(x: &Rational, max_digits: usize) -> Result<Vec<Digit>> {
    if x < &Rational::zero() || x >= &Rational::one() {
        return Err(Error::InvalidInput(format!("{x} is outside [0, 1)")));
    }
    let mut num = x.numer().magnitude().clone();
    let mut den = x.denom().magnitude().clone();
    let mut out = Vec::new();
    while !num.is_zero() && out.len() < max_digits {
        let (a, r) = den.div_rem(&num);
        out.push(a.to_u64().ok_or_else(|| Error::InvalidInput("digit exceeds 64 bits".into()))?);
        den = num;
        num = r;
    }
    Ok(out)
}

/// `p_n, q_n` for `n = -1, 0, 1, ..., len` with `p_{-1} = 1, q_{-1} = 0`,
/// `p_0 = 0, q_0 = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergents {
    pub digits: Vec<Digit>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
}

impl Convergents {
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// `p_n` for `n >= -1`.
    pub fn p(&self, n: isize) -> &BigUint {
        &self.p[(n + 1) as usize]
    }

    pub fn q(&self, n: isize) -> &BigUint {
        &self.q[(n + 1) as usize]
    }

    pub fn last_p(&self) -> &BigUint {
        self.p.last().unwrap()
    }

    pub fn last_q(&self) -> &BigUint {
        self.q.last().unwrap()
    }

    pub fn value(&self, n: usize) -> Rational {
        rat_big(self.p(n as isize), self.q(n as isize))
    }
}

fn check_digits(digits: &[Digit]) -> Result<()> {
    if let Some(i) = digits.iter().position(|&d| d == 0) {
        return Err(Error::InvalidInput(format!("digit {} is zero", i + 1)));
    }
    Ok(())
}

pub fn convergents(digits: &[Digit]) -> Result<Convergents> {
    check_digits(digits)?;
    let mut p = vec![BigUint::one(), BigUint::zero()];
    let mut q = vec![BigUint::zero(), BigUint::one()];
    for &a in digits {
        let k = p.len();
        p.push(&p[k - 1] * a + &p[k - 2]);
        q.push(&q[k - 1] * a + &q[k - 2]);
    }
    Ok(Convergents { digits: digits.to_vec(), p, q })
}

/// `q_n` alone, for callers that only need lengths.
pub fn denominators(digits: &[Digit]) -> (BigUint, BigUint) {
    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
    for &a in digits {
        let q2 = &q1 * a + &q0;
        q0 = q1;
        q1 = q2;
    }
    (q1, q0)
}

/// `|I(a_1..a_n)| = 1 / (q_n (q_n + q_{n-1}))`.
pub fn interval_length(digits: &[Digit]) -> Result<Rational> {
    check_digits(digits)?;
    let (q, q1) = denominators(digits);
    Ok(Rational::new(BigInt::one(), BigInt::from(&q * (&q + q1))))
}

/// The set of numbers whose expansion starts with the given digits. Its
/// endpoints are `p_n/q_n` (open) and `(p_n + p_{n-1})/(q_n + q_{n-1})`
/// (closed).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FundamentalInterval {
    pub digits: Vec<Digit>,
    #[serde(with = "crate::rational::ratstr")]
    pub lo: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl FundamentalInterval {
    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    pub fn closure_contains(&self, x: &Rational) -> bool {
        x >= &self.lo && x <= &self.hi
    }
}

pub fn fundamental_interval(digits: &[Digit]) -> Result<FundamentalInterval> {
    let c = convergents(digits)?;
    let n = digits.len() as isize;
    let conv = rat_big(c.p(n), c.q(n));
    let med = rat_big(&(c.p(n) + c.p(n - 1)), &(c.q(n) + c.q(n - 1)));
    Ok(if n % 2 == 1 {
        FundamentalInterval { digits: digits.to_vec(), lo: med, hi: conv, lo_closed: true, hi_closed: false }
    } else {
        FundamentalInterval { digits: digits.to_vec(), lo: conv, hi: med, lo_closed: false, hi_closed: true }
    })
}

/// The cylinder of a digit word as a subinterval of `(0, 1)`.
pub fn phi_encode(digits: &[Digit]) -> Result<FundamentalInterval> {
    fundamental_interval(digits)
}

/// The first `depth` digits of `x` (fewer if `x` is rational with a shorter
/// expansion).
pub fn phi_decode(x: &Rational, depth: usize) -> Result<Vec<Digit>> {
    cf_digits(x, depth)
}

/// Closed hull of the numbers starting with `prefix` whose next digit is at
/// most `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MSet {
    pub prefix: Vec<Digit>,
    pub k: Digit,
    #[serde(with = "crate::rational::ratstr")]
    pub lo: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub hi: Rational,
}

pub fn mset(prefix: &[Digit], k: Digit) -> Result<MSet> {
    if k == 0 {
        return Err(Error::InvalidInput("digit bound must be positive".into()));
    }
    let c = convergents(prefix)?;
    let n = prefix.len() as isize;
    let e1 = rat_big(&(c.p(n) * (k + 1) + c.p(n - 1)), &(c.q(n) * (k + 1) + c.q(n - 1)));
    let e2 = rat_big(&(c.p(n) + c.p(n - 1)), &(c.q(n) + c.q(n - 1)));
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    Ok(MSet { prefix: prefix.to_vec(), k, lo, hi })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    #[serde(with = "crate::rational::ratstr")]
    pub gap: Rational,
    /// `1 / (3 k^3 q_m (q_m + q_{m-1}))`.
    #[serde(with = "crate::rational::ratstr")]
    pub bound: Rational,
    pub holds: bool,
}

/// Distance between the hulls of `M(prefix s, k)` and `M(prefix t, k)`.
pub fn mset_gap(prefix: &[Digit], k: Digit, s: Digit, t: Digit) -> Result<GapReport> {
    if s == t || s == 0 || t == 0 || s > k || t > k {
        return Err(Error::InvalidInput(format!("need distinct digits in 1..={k}, got {s} and {t}")));
    }
    let mut ws = prefix.to_vec();
    ws.push(s);
    let mut wt = prefix.to_vec();
    wt.push(t);
    let a = mset(&ws, k)?;
    let b = mset(&wt, k)?;
    let gap = if a.hi < b.lo {
        &b.lo - &a.hi
    } else if b.hi < a.lo {
        &a.lo - &b.hi
    } else {
        Rational::zero()
    };
    let bound = interval_length(prefix)? / Rational::from_integer(BigInt::from(3 * k * k * k));
    let holds = gap >= bound;
    Ok(GapReport { gap, bound, holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct EraseRatio {
    #[serde(with = "crate::rational::ratstr")]
    pub ratio: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub lower: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub upper: Rational,
    pub holds: bool,
}

/// `q_n(a_1..a_n) / q_{n-1}(a_1..a_{k-1} a_{k+1}..a_n)` against
/// `[(a_k + 1)/2, a_k + 1]`.
pub fn erase_digit_ratio(digits: &[Digit], k: usize) -> Result<EraseRatio> {
    check_digits(digits)?;
    if k == 0 || k > digits.len() {
        return Err(Error::InvalidInput(format!("erase index {k} outside 1..={}", digits.len())));
    }
    let (full, _) = denominators(digits);
    let mut erased = digits.to_vec();
    let ak = erased.remove(k - 1);
    let (part, _) = denominators(&erased);
    let ratio = rat_big(&full, &part);
    let lower = Rational::new(BigInt::from(ak) + 1, BigInt::from(2));
    let upper = Rational::from_integer(BigInt::from(ak) + 1);
    let holds = ratio >= lower && ratio <= upper;
    Ok(EraseRatio { ratio, lower, upper, holds })
}

/// `|I(uv)| / (|I(u)| |I(v)|)`.
pub fn quasi_mult_ratio(u: &[Digit], v: &[Digit]) -> Result<Rational> {
    let mut uv = u.to_vec();
    uv.extend_from_slice(v);
    Ok(interval_length(&uv)? / (interval_length(u)? * interval_length(v)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiMult {
    /// Smallest `lambda` with `1/lambda <= ratio <= lambda` on the corpus.
    #[serde(with = "crate::rational::ratstr")]
    pub lambda: Rational,
    pub worst: Option<(Vec<Digit>, Vec<Digit>)>,
}

pub fn quasi_mult_bound(corpus: &[(Vec<Digit>, Vec<Digit>)]) -> Result<QuasiMult> {
    let mut lambda = Rational::one();
    let mut worst = None;
    for (u, v) in corpus {
        let r = quasi_mult_ratio(u, v)?;
        let m = if r >= Rational::one() { r } else { r.recip() };
        if m > lambda {
            lambda = m;
            worst = Some((u.clone(), v.clone()));
        }
    }
    Ok(QuasiMult { lambda, worst })
}

/// Value of a finite expansion.
pub fn cf_value(digits: &[Digit]) -> Result<Rational> {
    let c = convergents(digits)?;
    Ok(rat_big(c.last_p(), c.last_q()))
}
