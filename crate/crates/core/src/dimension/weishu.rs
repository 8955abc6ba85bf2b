//! Box-count checks for sets obtained by inserting symbols along a
//! sparse position set, the growth proxy for countable alphabets, and the
//! Hölder witness for the map that removes the inserted digits.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cf::Digit;
use crate::ddouble::{DDSum, DD};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::symbolic::{
    gamma_erase, Alphabet, LedgerPoint, PositionSet, SegmentLedger, SegmentSource, Stream, Symbol, SymbolSource,
    Word,
};

use super::{holder_witness, HolderSample, HolderWitness};

const ENUM_CAP: u32 = 20;

#[derive(Clone, Debug, Serialize)]
pub struct WeishuReport {
    pub depth: u64,
    pub alphabet: u32,
    /// Marked positions in `[1, depth]` divided by `depth`.
    #[serde(with = "crate::rational::ratstr")]
    pub lambda: Rational,
    pub distinct_prefixes: u64,
    /// `log(count) / (depth log N)`.
    pub estimate: f64,
    pub tolerance: f64,
    /// Erasing the marks recovered the free symbols for every sample.
    pub erasure_identity: bool,
    pub pass: bool,
}

fn finish(depth: u64, n: u32, marks: &BigUint, count: usize, tol: f64, identity: bool) -> WeishuReport {
    let lambda = Rational::new(marks.clone().into(), BigUint::from(depth).into());
    let estimate = (count as f64).ln() / (depth as f64 * (n as f64).ln());
    let pass = identity && estimate >= (1.0 - crate::rational::to_f64(&lambda)) * (1.0 - tol);
    WeishuReport {
        depth,
        alphabet: n,
        lambda,
        distinct_prefixes: count as u64,
        estimate,
        tolerance: tol,
        erasure_identity: identity,
        pass,
    }
}

fn all_symbol_words(n: u32, len: u32) -> Result<impl Iterator<Item = Word>> {
    if (len as f64) * (n as f64).log2() > ENUM_CAP as f64 {
        return Err(Error::BudgetExceeded(format!("{n}^{len} words exceed the enumeration cap 2^{ENUM_CAP}")));
    }
    let total = (n as u64).pow(len);
    Ok((0..total).map(move |mut i| {
        let mut w = vec![1; len as usize];
        for s in w.iter_mut().rev() {
            *s = (i % n as u64) as Symbol + 1;
            i /= n as u64;
        }
        w
    }))
}

/// Box count of `Y = {y : y = 1 on A, free elsewhere}` at `depth`.
pub fn weishu_check_positions(marks: &dyn PositionSet, n: u32, depth: u64, tol: f64) -> Result<WeishuReport> {
    if n < 2 || depth == 0 {
        return Err(Error::InvalidInput("need N >= 2 and positive depth".into()));
    }
    let d = BigUint::from(depth);
    let m = marks.count_le(&d);
    let free = (&d - &m).to_u32().unwrap();
    let mut seen = HashSet::new();
    let mut identity = true;
    for u in all_symbol_words(n, free)? {
        let mut y = Vec::with_capacity(depth as usize);
        let mut it = u.iter();
        for p in 1..=depth {
            if marks.contains(&BigUint::from(p)) {
                y.push(1);
            } else {
                y.push(*it.next().unwrap());
            }
        }
        identity &= gamma_erase(marks, y.as_slice(), free as usize)? == u;
        seen.insert(y);
    }
    Ok(finish(depth, n, &m, seen.len(), tol, identity))
}

/// Number of base-point symbols the first `depth` positions depend on.
fn base_symbols_used(ledger: &SegmentLedger, depth: &BigUint) -> u64 {
    let mut used = 0u64;
    for seg in &ledger.segments {
        if &seg.start > depth {
            break;
        }
        match &seg.source {
            SegmentSource::Filler { cursor } => {
                let last = (depth.min(&seg.end()) - &seg.start) + cursor;
                used = used.max(last.to_u64().unwrap_or(u64::MAX));
            }
            SegmentSource::PhiWord { stage, .. } => used = used.max(*stage as u64),
            SegmentSource::ZSegment { .. } => {}
        }
    }
    used
}

/// Box count of the constructed points over all base points in `Sigma_N`.
pub fn weishu_check_ledger(ledger: &SegmentLedger, z: &Stream, depth: u64, tol: f64) -> Result<WeishuReport> {
    let Alphabet::Finite(n) = ledger.alphabet else {
        return Err(Error::InvalidInput("box counting needs a finite alphabet".into()));
    };
    let d = BigUint::from(depth);
    if ledger.total_length() < d {
        return Err(Error::InsufficientLength { needed: d, available: ledger.total_length() });
    }
    let m = ledger.count_le(&d);
    let used = base_symbols_used(ledger, &d) as u32;
    let free = (&d - &m).to_u64().unwrap();
    let tail = Stream::constant(ledger.alphabet, 1);
    let mut seen = HashSet::new();
    let mut identity = true;
    for u in all_symbol_words(n, used)? {
        let x = Stream::prefixed(u.clone(), tail.clone());
        let p = LedgerPoint::new(ledger, x.clone(), z.clone())?;
        let y = p.read(&BigUint::from(1u32), depth as usize)?;
        let back = gamma_erase(ledger, y.as_slice(), free as usize)?;
        identity &= back[..] == x.prefix(free as usize)?[..];
        seen.insert(y);
    }
    Ok(finish(depth, n, &m, seen.len(), tol, identity))
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthProxy {
    pub bound: f64,
    pub depth: u64,
    /// `log2(depth!) / depth`: box count of `{y : y_i <= i}` under the
    /// base-2 metric.
    pub value: f64,
    pub label: &'static str,
}

/// Smallest depth at which the box-count proxy of `{y : y_i <= i}`
/// exceeds `bound`. The proxy grows without limit.
pub fn growth_proxy(bound: f64) -> Result<GrowthProxy> {
    if !bound.is_finite() || bound > 40.0 {
        return Err(Error::InvalidInput(format!("bound {bound} out of range")));
    }
    let mut acc = 0.0f64;
    let mut d = 0u64;
    loop {
        d += 1;
        acc += (d as f64).log2();
        if acc / d as f64 > bound {
            return Ok(GrowthProxy { bound, depth: d, value: acc / d as f64, label: "monotone-growth proxy" });
        }
    }
}

/// `(2 ln(k+1)/ln 2 * tau(n) + 1) / (n - tau(n) - 1)` where `tau` counts
/// marks up to `n`; returns the smallest `N` from which it stays below
/// `epsilon` up to the end of the ledger.
pub fn schedule_inequality(ledger: &SegmentLedger, k: Digit, epsilon: f64) -> Option<u64> {
    let c = 2.0 * ((k + 1) as f64).ln() / std::f64::consts::LN_2;
    let value = |n: &BigUint| {
        let tau = ledger.count_le(n).to_f64().unwrap();
        let n = n.to_f64().unwrap();
        let den = n - tau - 1.0;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            (c * tau + 1.0) / den
        }
    };
    // The ratio rises inside marked runs and falls inside unmarked ones,
    // so segment ends decide everything except where an unmarked run
    // crosses below epsilon.
    let mut start: Option<u64> = None;
    for seg in &ledger.segments {
        let end = seg.end();
        if seg.marked() {
            if value(&end) >= epsilon {
                start = None;
            }
        } else if value(&seg.start) < epsilon {
            start = start.or(seg.start.to_u64());
        } else if value(&end) < epsilon {
            let (mut lo, mut hi) = (seg.start.to_u64()?, end.to_u64()?);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if value(&BigUint::from(mid)) < epsilon {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            start = Some(lo);
        } else {
            start = None;
        }
    }
    start
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderInstanceParams {
    pub k: Digit,
    pub epsilon: f64,
    pub pairs: usize,
    pub seed: u64,
    pub lambda: f64,
    /// Largest base-point index that may be changed.
    pub max_cursor: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderInstance {
    pub params: HolderInstanceParams,
    pub witness: HolderWitness,
    /// `(lambda^2 / |I(k+1)|^2)^(1/(1+epsilon))`.
    pub constant_bound: f64,
    /// Smallest `N` satisfying the schedule inequality up to the ledger end.
    pub schedule_n: Option<u64>,
    /// Marks per position at each stage end.
    pub tau_density: Vec<f64>,
    pub pass: bool,
}

/// `ln q_m` and `q_{m-1}/q_m` for a digit word, accumulated through the
/// ratios `q_i / q_{i-1} = a_i + q_{i-2}/q_{i-1}`.
fn ln_q_and_ratio(digits: &[Symbol]) -> (DD, f64) {
    let mut acc = DDSum::new();
    let mut inv = 0.0f64;
    for &a in digits {
        let r = a as f64 + inv;
        acc.add_f64(r.ln());
        inv = 1.0 / r;
    }
    (acc.value(), inv)
}

/// Value of `[a_1, a_2, ...]` from a finite window of digits.
fn tail_value(digits: &[Symbol]) -> f64 {
    digits.iter().rev().fold(0.0, |t, &a| 1.0 / (a as f64 + t))
}

/// `ln |[w, b, t] - [w, c, t]|`: the words agree except at one digit.
fn ln_single_digit_gap(prefix: &[Symbol], b: Symbol, c: Symbol, tail: f64) -> f64 {
    let (ln_q, rho) = ln_q_and_ratio(prefix);
    let y1 = b as f64 + tail;
    let y2 = c as f64 + tail;
    ((b as f64 - c as f64).abs()).ln() - 2.0 * ln_q.to_f64() - (y1 + rho).ln() - (y2 + rho).ln()
}

const TAIL: usize = 64;

/// Samples pairs of base points that differ in one symbol, maps both
/// through the construction and compares continued-fraction distances
/// before and after removing the inserted digits.
pub fn holder_instance(ledger: &SegmentLedger, z: &Stream, params: HolderInstanceParams) -> Result<HolderInstance> {
    if params.k < 1 || !(params.epsilon > 0.0) || params.pairs == 0 {
        return Err(Error::InvalidInput("need k >= 1, epsilon > 0 and at least one pair".into()));
    }
    let last = ledger.stage_layouts.last().ok_or_else(|| Error::InvalidInput("empty ledger".into()))?;
    let lo_cursor = ledger.stages() as u64 + 1;
    let hi_cursor = (&last.cursor_end - 1u32).to_u64().unwrap_or(u64::MAX).min(params.max_cursor);
    if hi_cursor <= lo_cursor {
        return Err(Error::InvalidInput("ledger has no free cursors past the map arguments".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let k = params.k as Symbol;
    let alpha = 1.0 / (1.0 + params.epsilon);
    let mut samples = Vec::with_capacity(params.pairs);
    for _ in 0..params.pairs {
        let seed = rng.random::<u64>();
        let x = Stream::Hashed { alphabet: Alphabet::Countable, seed, max_symbol: k, w_capped: true };
        // Log-uniform, so that short common prefixes are well represented.
        let u: f64 = rng.random();
        let cursor = ((lo_cursor as f64) * ((hi_cursor as f64) / lo_cursor as f64).powf(u)) as u64;
        let cursor = cursor.clamp(lo_cursor, hi_cursor);
        let b = x.symbol(&BigUint::from(cursor))?;
        let mut c = rng.random_range(1..=k.min(cursor as Symbol).max(2) - 1);
        if c >= b {
            c += 1;
        }
        let mut changed = x.prefix(cursor as usize)?;
        *changed.last_mut().unwrap() = c;
        let y = Stream::prefixed(changed, x.clone());

        let px = LedgerPoint::new(ledger, x.clone(), z.clone())?.with_pad(1);
        let py = LedgerPoint::new(ledger, y, z.clone())?.with_pad(1);
        let pos = cursor_position(ledger, cursor)?;
        let m = (&pos - 1u32).to_usize().unwrap();
        let shared = px.read(&BigUint::from(1u32), m)?;
        if px.read(&pos, 1)? != [b] || py.read(&pos, 1)? != [c] {
            return Err(Error::CheckFailed(format!("base symbol {cursor} is not placed at position {pos}")));
        }
        let tail = tail_value(&px.read(&(&pos + 1u32), TAIL)?);
        let ln_in = ln_single_digit_gap(&shared, b, c, tail);

        let xs = x.prefix(cursor as usize - 1)?;
        let xt = tail_value(&x.read(&BigUint::from(cursor + 1), TAIL)?);
        let ln_out = ln_single_digit_gap(&xs, b, c, xt);
        samples.push(HolderSample { ln_input: ln_in, ln_output: ln_out });
    }
    let witness = holder_witness(&samples, alpha, 1.0)?;
    let i1 = ((params.k + 1) * (params.k + 2)) as f64;
    let constant_bound = (params.lambda * params.lambda * i1 * i1).powf(alpha);
    let tau_density = ledger
        .stage_layouts
        .iter()
        .map(|s| ledger.count_le(&s.end).to_f64().unwrap() / s.end.to_f64().unwrap())
        .collect();
    Ok(HolderInstance {
        schedule_n: schedule_inequality(ledger, params.k, params.epsilon),
        pass: witness.c <= constant_bound,
        params,
        witness,
        constant_bound,
        tau_density,
    })
}

/// Ledger position holding base-point symbol `cursor`.
fn cursor_position(ledger: &SegmentLedger, cursor: u64) -> Result<BigUint> {
    let c = BigUint::from(cursor);
    for seg in &ledger.segments {
        if let SegmentSource::Filler { cursor: start } = &seg.source {
            if start <= &c && c < (start + &seg.len) {
                return Ok(&seg.start + (&c - start));
            }
        }
    }
    Err(Error::InvalidInput(format!("base symbol {cursor} is not placed in the ledger")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_delta, build_delta_countable, ConstructionParams, Schedule};
    use crate::symbolic::{ArithmeticPositions, ExplicitPositions};

    #[test]
    fn empty_marks_give_full_dimension() {
        let r = weishu_check_positions(&ExplicitPositions::new(vec![]), 2, 12, 0.05).unwrap();
        assert_eq!(r.distinct_prefixes, 4096);
        assert!((r.estimate - 1.0).abs() < 1e-12 && r.pass);
    }

    #[test]
    fn every_other_position() {
        let a = ArithmeticPositions::new(2u32.into(), 2u32.into()).unwrap();
        let r = weishu_check_positions(&a, 2, 16, 0.05).unwrap();
        assert!(r.estimate >= 0.45 && r.pass && r.erasure_identity);
    }

    #[test]
    fn ledger_box_count() {
        let a = Alphabet::Finite(2);
        let p = ConstructionParams::new(
            a,
            2,
            Schedule::Budget { maps: 4, blocks: 4 },
            Stream::hashed(a, 1),
            Stream::hashed(a, 2),
        );
        let led = build_delta(&p).unwrap();
        let r = weishu_check_ledger(&led, &p.z, 20, 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.lambda > Rational::from_integer(0.into()));
    }

    #[test]
    fn growth_proxy_exceeds_bound() {
        let g = growth_proxy(3.0).unwrap();
        assert!(g.value > 3.0);
        let prev: f64 = (1..g.depth).map(|d| (d as f64).log2()).sum::<f64>() / (g.depth - 1) as f64;
        assert!(prev <= 3.0);
    }

    #[test]
    fn single_digit_gap_matches_exact() {
        use crate::cf::cf_value;
        let w = [2u32, 1, 3];
        let t = [4u32, 1, 2];
        let mut a: Vec<u64> = w.iter().map(|&d| d as u64).collect();
        a.push(2);
        a.extend(t.iter().map(|&d| d as u64));
        let mut b = a.clone();
        b[3] = 5;
        let exact = crate::rational::to_f64(&(cf_value(&a).unwrap() - cf_value(&b).unwrap())).abs();
        let got = ln_single_digit_gap(&w, 2, 5, tail_value(&t)).exp();
        assert!((got - exact).abs() < 1e-14 * exact);
    }

    #[test]
    fn holder_instance_runs() {
        let a = Alphabet::Countable;
        let z = Stream::Hashed { alphabet: a, seed: 3, max_symbol: 5, w_capped: true };
        let p = ConstructionParams::new(a, 3, Schedule::Budget { maps: 3, blocks: 3 }, z.clone(), Stream::constant(a, 1));
        let led = build_delta_countable(&p).unwrap();
        let params = HolderInstanceParams { k: 5, epsilon: 0.5, pairs: 20, seed: 1, lambda: 8.0, max_cursor: 100_000 };
        let h = holder_instance(&led, &z, params).unwrap();
        assert_eq!(h.witness.used, 20);
        assert!(h.witness.c.is_finite());
    }
}
