//! Dimension estimates for bounded continued-fraction sets: s-sums over
//! fundamental intervals, the pressure root, the Jarník enclosure, the
//! sibling inequality used in cover reduction, and Hölder witnesses.
//!
//! Interval lengths are exact; their `s`-th powers are taken in
//! double-double precision through logarithms.

mod cover;
mod weishu;

pub use cover::{
    canonical_cover, cover_certify, random_cover, CoverCertificate, CoverElement, CoverInput, CoverSums, Origin,
    TargetSet,
};
pub use weishu::{
    growth_proxy, holder_instance, schedule_inequality, weishu_check_ledger, weishu_check_positions, GrowthProxy,
    HolderInstance, HolderInstanceParams, WeishuReport,
};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{denominators, Digit};
use crate::ddouble::{DDSum, DD, LN2};
use crate::error::{Error, Result};
use crate::rational::Rational;

pub const DEFAULT_BUDGET: u64 = 10_000_000;
const CHUNK: usize = 4096;

/// `-ln |I(w)|` needs `ln q_n + ln(q_n + q_{n-1})`.
fn ln_length(q: &BigUint, q_prev: &BigUint) -> DD {
    -(DD::ln_biguint(q) + DD::ln_biguint(&(q + q_prev)))
}

fn ln_length_u128(q: u128, q_prev: u128) -> DD {
    -(DD::from_u128(q).ln() + DD::from_u128(q + q_prev).ln())
}

/// `ln |I(w)|` for every word of length `depth` over `1..=k`, in
/// lexicographic order.
#[derive(Clone, Debug)]
pub struct LengthTable {
    pub k: Digit,
    pub depth: u32,
    logs: Vec<DD>,
}

fn word_count(k: Digit, depth: u32, budget: u64) -> Result<u64> {
    if k == 0 || depth == 0 {
        return Err(Error::InvalidInput("digit bound and depth must be positive".into()));
    }
    let mut n = 1u64;
    for _ in 0..depth {
        n = n.checked_mul(k).filter(|&v| v <= budget).ok_or_else(|| {
            Error::BudgetExceeded(format!("{k}^{depth} words exceed the enumeration budget {budget}"))
        })?;
    }
    Ok(n)
}

fn fill_subtree(k: Digit, left: u32, q: u128, q_prev: u128, out: &mut Vec<DD>) {
    if left == 0 {
        out.push(ln_length_u128(q, q_prev));
        return;
    }
    for a in 1..=k as u128 {
        fill_subtree(k, left - 1, a * q + q_prev, q, out);
    }
}

impl LengthTable {
    pub fn new(k: Digit, depth: u32, budget: u64) -> Result<Self> {
        word_count(k, depth, budget)?;
        // q_n <= (k+1)^n must fit comfortably in u128.
        if (depth as f64) * ((k + 1) as f64).log2() > 120.0 {
            return Err(Error::BudgetExceeded(format!("denominators for k={k}, depth {depth} exceed 120 bits")));
        }
        let parts: Vec<Vec<DD>> = (1..=k as u128)
            .into_par_iter()
            .map(|a| {
                let mut v = Vec::new();
                fill_subtree(k, depth - 1, a, 1, &mut v);
                v
            })
            .collect();
        Ok(LengthTable { k, depth, logs: parts.concat() })
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// `sum |I|^s`, chunked in a fixed order so the result does not depend
    /// on the thread count.
    pub fn s_sum(&self, s: DD) -> DD {
        let partial: Vec<DD> = self
            .logs
            .par_chunks(CHUNK)
            .map(|c| {
                let mut acc = DDSum::new();
                for &l in c {
                    acc.add((s * l).exp());
                }
                acc.value()
            })
            .collect();
        let mut acc = DDSum::new();
        for p in partial {
            acc.add(p);
        }
        acc.value()
    }
}

/// `sum over words w in {1..k}^depth of |I(w)|^s`.
pub fn s_sum(k: Digit, depth: u32, s: DD) -> Result<DD> {
    Ok(LengthTable::new(k, depth, DEFAULT_BUDGET)?.s_sum(s))
}

#[derive(Clone, Debug, Serialize)]
pub struct DimEstimate {
    pub k: Digit,
    pub depth: u32,
    /// Midpoint of the final bracket.
    pub s: DD,
    pub s_lo: DD,
    pub s_hi: DD,
    pub s_sum: DD,
    pub width: f64,
    pub iterations: u32,
    pub method: &'static str,
    /// The root at `depth - 1`, for judging depth convergence.
    pub previous_depth: Option<f64>,
}

const MAX_ITER: u32 = 200;

fn bisect_table(t: &LengthTable, tol: f64) -> Result<(DD, DD, u32)> {
    let (mut lo, mut hi) = (DD::ZERO, DD::ONE);
    let (mut f_lo, mut f_hi) = (t.s_sum(lo), t.s_sum(hi));
    if !(f_lo >= DD::ONE && f_hi <= DD::ONE) {
        return Err(Error::CheckFailed(format!(
            "s-sum does not bracket 1 on [0, 1]: {} and {}",
            f_lo.to_f64(),
            f_hi.to_f64()
        )));
    }
    let mut it = 0;
    while (hi - lo).to_f64() > tol && it < MAX_ITER {
        let mid = (lo + hi).ldexp(-1);
        let f = t.s_sum(mid);
        if f > f_lo || f < f_hi {
            return Err(Error::CheckFailed(format!("s-sum is not decreasing near s = {}", mid.to_f64())));
        }
        if f > DD::ONE {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
        it += 1;
    }
    Ok((lo, hi, it))
}

/// Root of `s -> s_sum(k, depth, s) = 1` on `[0, 1]` to width `tol`.
pub fn dim_bisect(k: Digit, depth: u32, tol: f64) -> Result<DimEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let t = LengthTable::new(k, depth, DEFAULT_BUDGET)?;
    let (lo, hi, iterations) = bisect_table(&t, tol)?;
    let s = (lo + hi).ldexp(-1);
    let previous_depth = if depth >= 2 {
        let t = LengthTable::new(k, depth - 1, DEFAULT_BUDGET)?;
        let (l, h, _) = bisect_table(&t, tol)?;
        Some((l + h).ldexp(-1).to_f64())
    } else {
        None
    };
    Ok(DimEstimate {
        k,
        depth,
        s,
        s_lo: lo,
        s_hi: hi,
        s_sum: t.s_sum(s),
        width: (hi - lo).to_f64(),
        iterations,
        method: "pressure-bisection",
        previous_depth,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JarnikBounds {
    pub k: Digit,
    /// `1 - 4/(k ln 2)`.
    pub lower: DD,
    /// `1 - 1/(8 k ln k)`.
    pub upper: DD,
    /// The enclosure is only asserted for `k > 8`.
    pub in_range: bool,
}

pub fn jarnik_bounds(k: Digit) -> Result<JarnikBounds> {
    if k < 2 {
        return Err(Error::InvalidInput("Jarník bounds need k >= 2".into()));
    }
    let kk = DD::from_f64(k as f64);
    let lower = DD::ONE - DD::from_f64(4.0) / (kk * LN2);
    let upper = DD::ONE - DD::ONE / (DD::from_f64(8.0) * kk * kk.ln());
    Ok(JarnikBounds { k, lower, upper, in_range: k > 8 })
}

/// The exponent `1 - 4/(k ln 2)` used by the cover reduction.
pub fn claim_exponent(k: Digit) -> Result<DD> {
    Ok(jarnik_bounds(k)?.lower)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClaimReport {
    pub k: Digit,
    pub prefix: Vec<Digit>,
    pub s: DD,
    /// `sum_{i <= k} |I(prefix i)|^s`.
    pub lhs: DD,
    /// `|I(prefix)|^s`.
    pub rhs: DD,
    pub margin: DD,
    pub error_bound: f64,
    #[serde(with = "crate::rational::ratstr")]
    pub beta: Rational,
    pub beta_in_range: bool,
    /// `(1 - beta/k) 2^(1-s)`, which the argument needs to be at least 1.
    pub internal: DD,
    pub internal_holds: bool,
    pub holds: bool,
}

/// Checks `sum_{i <= k} |I(prefix i)|^s >= |I(prefix)|^s`. With `caps`,
/// the prefix must satisfy `prefix[j] <= caps[j]`.
pub fn claim_check(k: Digit, s: DD, prefix: &[Digit], caps: Option<&[Digit]>) -> Result<ClaimReport> {
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    if !(s > DD::ZERO && s < DD::ONE) {
        return Err(Error::InvalidInput(format!("s = {} is outside (0, 1)", s.to_f64())));
    }
    if prefix.contains(&0) {
        return Err(Error::InvalidInput("digits must be positive".into()));
    }
    if let Some(c) = caps {
        if c.len() < prefix.len() || prefix.iter().zip(c).any(|(a, b)| a > b) {
            return Err(Error::InvalidInput(format!("prefix {prefix:?} violates the digit caps")));
        }
    }
    let (q, q_prev) = denominators(prefix);
    let rhs = if prefix.is_empty() { DD::ONE } else { (s * ln_length(&q, &q_prev)).exp() };
    let mut acc = DDSum::new();
    for i in 1..=k {
        let qi = &q * i + &q_prev;
        acc.add((s * ln_length(&qi, &q)).exp());
    }
    let lhs = acc.value();
    let margin = lhs - rhs;
    let error_bound = 1e-28 * (lhs.to_f64() + rhs.to_f64());

    let kq = BigUint::from(k);
    let num = &kq * &q + &kq * &q_prev;
    let den = &kq * &q + &q + &q_prev;
    let beta = Rational::new(num.into(), den.into());
    let half = Rational::new(1.into(), 2.into());
    let beta_in_range = beta > half && beta < Rational::from_integer(2.into());
    let beta_dd = DD::from_rational(&beta);
    let internal = (DD::ONE - beta_dd / DD::from_f64(k as f64)) * ((DD::ONE - s) * LN2).exp();
    let internal_holds = internal >= DD::ONE;
    let holds = margin.to_f64() >= error_bound && beta_in_range;
    Ok(ClaimReport {
        k,
        prefix: prefix.to_vec(),
        s,
        lhs,
        rhs,
        margin,
        error_bound,
        beta,
        beta_in_range,
        internal,
        internal_holds,
        holds,
    })
}

/// One sampled pair: natural logs of the input and output distances.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderSample {
    pub ln_input: f64,
    pub ln_output: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderWitness {
    pub alpha: f64,
    /// Smallest `c` with `out <= c in^alpha` on every pair with `in < r`.
    pub c: f64,
    pub ln_c: f64,
    pub r: f64,
    pub used: usize,
    pub worst: Option<usize>,
}

pub fn holder_witness(samples: &[HolderSample], alpha: f64, r: f64) -> Result<HolderWitness> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} is outside (0, 1]")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("no sample pairs".into()));
    }
    let ln_r = r.ln();
    let mut ln_c = f64::NEG_INFINITY;
    let mut worst = None;
    let mut used = 0;
    for (i, p) in samples.iter().enumerate() {
        if !(p.ln_input < ln_r) {
            continue;
        }
        used += 1;
        let v = p.ln_output - alpha * p.ln_input;
        if v > ln_c {
            ln_c = v;
            worst = Some(i);
        }
    }
    Ok(HolderWitness { alpha, c: ln_c.exp(), ln_c, r, used, worst })
}

/// Words of length `depth` over `1..=k` in lexicographic order.
pub fn all_words(k: Digit, depth: usize) -> impl Iterator<Item = Vec<Digit>> {
    let total = (k as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    (0..total).map(move |mut i| {
        let mut w = vec![1; depth];
        for d in w.iter_mut().rev() {
            *d = (i % k as u128) as Digit + 1;
            i /= k as u128;
        }
        w
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sums() {
        let v = s_sum(2, 1, DD::ONE).unwrap().to_f64();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s_sum(3, 4, DD::ZERO).unwrap().to_f64(), 81.0);
        // Fibonacci denominators: |I(1,1,1)| = 1/(3*5).
        let v = s_sum(1, 3, DD::from_f64(0.5)).unwrap().to_f64();
        assert!((v - (1.0f64 / 15.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(LengthTable::new(10, 8, 1000), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn single_digit_collapses() {
        let e = dim_bisect(1, 6, 1e-6).unwrap();
        assert!(e.s.to_f64() < 1e-5);
    }

    #[test]
    fn jarnik_values() {
        let b = jarnik_bounds(10).unwrap();
        assert!((b.lower.to_f64() - 0.422_921_983_644_414_63).abs() < 1e-15);
        assert!((b.upper.to_f64() - 0.994_571_318_976_209_3).abs() < 1e-15);
        assert!(b.in_range);
        assert!(!jarnik_bounds(4).unwrap().in_range);
        let b = jarnik_bounds(9).unwrap();
        assert!((b.lower.to_f64() - 0.358_802_204_049_349_6).abs() < 1e-15);
    }

    #[test]
    fn claim_on_single_digit_prefix() {
        let s = claim_exponent(10).unwrap();
        let r = claim_check(10, s, &[1], None).unwrap();
        assert!(r.holds && r.margin > DD::ZERO);
        // Ten-term oracle in f64.
        let lens: f64 = (1..=10u32).map(|i| (1.0 / ((i + 1) as f64 * (i + 2) as f64)).powf(s.to_f64())).sum();
        assert!((r.lhs.to_f64() - lens).abs() < 1e-13);
        assert!(claim_check(10, s, &[11], Some(&[10])).is_err());
    }

    #[test]
    fn identity_holder_constant() {
        let v: Vec<_> = (1..50)
            .map(|i| {
                let d = (i as f64 * 0.013).ln();
                HolderSample { ln_input: d, ln_output: d }
            })
            .collect();
        let w = holder_witness(&v, 1.0, 1.0).unwrap();
        assert!((w.c - 1.0).abs() < 1e-12);
        assert!(holder_witness(&v, 1.5, 1.0).is_err());
    }

    #[test]
    fn words_in_order() {
        let w: Vec<_> = all_words(2, 2).collect();
        assert_eq!(w, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }
}
