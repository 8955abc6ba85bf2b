//! Lower-bound certificates for covers of a bounded-digit Cantor set.
//!
//! The target set fixes the first digits to a prefix, then allows digit
//! `j` at position `j` while `j < k`, and digits up to `k` from position
//! `k` on. A cover is reduced in four steps: shrink every element to the
//! hull of its intersection with the set, replace it by the fundamental
//! interval of the common prefix of its endpoints, drop nested
//! duplicates, then merge complete sibling groups using [`claim_check`].
//! Each step can only lower the s-sum up to the factor `(3k^3)^-s`, so the
//! final sum bounds the original one from below.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{claim_check, ClaimReport};
use crate::cf::{fundamental_interval, interval_length, mset_gap, Digit, FundamentalInterval};
use crate::ddouble::{DDSum, DD};
use crate::error::{Error, Result};
use crate::rational::Rational;

const MAX_DEPTH: usize = 96;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet {
    pub prefix: Vec<Digit>,
    pub k: Digit,
}

impl TargetSet {
    pub fn new(prefix: Vec<Digit>, k: Digit) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput("k must be at least 2".into()));
        }
        if prefix.contains(&0) {
            return Err(Error::InvalidInput("prefix digits must be positive".into()));
        }
        Ok(TargetSet { prefix, k })
    }

    /// Largest digit allowed at 1-based position `pos` after the prefix.
    pub fn cap(&self, pos: usize) -> Digit {
        (pos as Digit).min(self.k)
    }

    /// Allowed digits at 1-based position `pos`.
    pub fn digits_at(&self, pos: usize) -> std::ops::RangeInclusive<Digit> {
        match self.prefix.get(pos - 1) {
            Some(&d) => d..=d,
            None => 1..=self.cap(pos),
        }
    }

    pub fn admits(&self, w: &[Digit]) -> bool {
        w.iter().enumerate().all(|(i, d)| self.digits_at(i + 1).contains(d))
    }

    /// Closed hull of the set.
    pub fn hull(&self) -> Result<(Rational, Rational)> {
        let i = fundamental_interval(&self.prefix)?;
        Ok((i.lo, i.hi))
    }

    fn children(&self, w: &[Digit]) -> Result<Vec<FundamentalInterval>> {
        let mut v = Vec::new();
        let mut c = w.to_vec();
        c.push(0);
        for d in self.digits_at(w.len() + 1) {
            *c.last_mut().unwrap() = d;
            v.push(fundamental_interval(&c)?);
        }
        v.sort_by(|a, b| a.lo.cmp(&b.lo));
        Ok(v)
    }

    /// The left- or rightmost depth-`depth` cylinder of the set meeting
    /// `[lo, hi]` in more than one point. Single-point contacts are
    /// rational endpoints, which the set never contains.
    fn extreme_leaf(
        &self,
        node: &FundamentalInterval,
        depth: usize,
        lo: &Rational,
        hi: &Rational,
        from_left: bool,
    ) -> Result<Option<FundamentalInterval>> {
        if node.digits.len() == depth {
            return Ok(Some(node.clone()));
        }
        let mut kids = self.children(&node.digits)?;
        if !from_left {
            kids.reverse();
        }
        for c in kids {
            if &c.lo < hi && &c.hi > lo {
                if let Some(l) = self.extreme_leaf(&c, depth, lo, hi, from_left)? {
                    return Ok(Some(l));
                }
            }
        }
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Raw,
    Shrunk,
    Fundamental,
    Merged,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverElement {
    #[serde(with = "crate::rational::ratstr")]
    pub lo: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub hi: Rational,
    #[serde(default)]
    pub origin: Origin,
    /// The cylinder's digits for fundamental and merged elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<Vec<Digit>>,
}

impl CoverElement {
    pub fn raw(lo: Rational, hi: Rational) -> Self {
        CoverElement { lo, hi, origin: Origin::Raw, digits: None }
    }

    fn fundamental(w: &[Digit], merged: bool) -> Result<Self> {
        let i = fundamental_interval(w)?;
        let origin = if merged { Origin::Merged } else { Origin::Fundamental };
        Ok(CoverElement { lo: i.lo, hi: i.hi, origin, digits: Some(w.to_vec()) })
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Cover file contents: the target prefix and the cover elements.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverInput {
    pub prefix: Vec<Digit>,
    pub elements: Vec<CoverElement>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverSums {
    pub input: DD,
    pub shrunk: DD,
    /// Sums below are multiplied by `(3k^3)^-s`.
    pub fundamental: DD,
    pub pruned: DD,
    pub merged: DD,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverCertificate {
    pub target: TargetSet,
    pub s: DD,
    pub scale: DD,
    pub shrunk: Vec<CoverElement>,
    pub fundamental: Vec<CoverElement>,
    pub pruned: Vec<CoverElement>,
    pub merged: Vec<CoverElement>,
    pub dropped: usize,
    pub max_shrink_depth: usize,
    pub merges: usize,
    pub claims: Vec<ClaimReport>,
    pub sums: CoverSums,
    /// `(3k^3)^-s` times the merged sum; positive when certified.
    pub bound: DD,
    pub holds: bool,
}

fn pow_len(len: &Rational, s: DD) -> DD {
    if len.is_zero() {
        DD::ZERO
    } else {
        (s * DD::ln_rational(len)).exp()
    }
}

fn sum_pow<'a>(items: impl Iterator<Item = &'a CoverElement>, s: DD) -> DD {
    let mut acc = DDSum::new();
    for e in items {
        acc.add(pow_len(&e.len(), s));
    }
    acc.value()
}

struct Shrunk {
    lo: Rational,
    hi: Rational,
    common: Vec<Digit>,
    split: (Digit, Digit),
    depth: usize,
}

fn shrink(t: &TargetSet, root: &FundamentalInterval, e: &CoverElement) -> Result<Option<Shrunk>> {
    let mut depth = t.prefix.len() + 2;
    loop {
        let Some(l) = t.extreme_leaf(root, depth, &e.lo, &e.hi, true)? else {
            return Ok(None);
        };
        let r = t.extreme_leaf(root, depth, &e.lo, &e.hi, false)?.unwrap();
        let m = l.digits.iter().zip(&r.digits).take_while(|(a, b)| a == b).count();
        if m + 2 <= depth {
            let lo = e.lo.clone().max(l.lo.clone());
            let hi = e.hi.clone().min(r.hi.clone());
            return Ok(Some(Shrunk { lo, hi, common: l.digits[..m].to_vec(), split: (l.digits[m], r.digits[m]), depth }));
        }
        depth += 1;
        if depth > MAX_DEPTH {
            return Err(Error::BudgetExceeded(format!(
                "element [{}, {}] not resolved by depth {MAX_DEPTH}",
                e.lo, e.hi
            )));
        }
    }
}

/// Every admissible infinite path must pass through a word of `set`.
fn check_coverage(t: &TargetSet, set: &BTreeSet<Vec<Digit>>) -> Result<()> {
    let max = set.iter().map(Vec::len).max().unwrap_or(0);
    fn walk(t: &TargetSet, set: &BTreeSet<Vec<Digit>>, w: &mut Vec<Digit>, max: usize) -> Result<()> {
        if set.contains(w) {
            return Ok(());
        }
        if w.len() >= max {
            return Err(Error::Precondition(format!("cover misses the cylinder {w:?} of the target set")));
        }
        for d in t.digits_at(w.len() + 1) {
            w.push(d);
            walk(t, set, w, max)?;
            w.pop();
        }
        Ok(())
    }
    walk(t, set, &mut t.prefix.clone(), max)
}

fn ensure(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::CheckFailed(what.to_string()))
    }
}

/// `a >= b` up to double-double rounding.
fn dominates(a: DD, b: DD) -> bool {
    (a - b).to_f64() >= -1e-26 * a.to_f64().abs().max(b.to_f64().abs())
}

/// Runs the four-step reduction and certifies
/// `sum_cover |B|^s >= (3k^3)^-s sum_merged |E|^s > 0`.
pub fn cover_certify(elements: &[CoverElement], target: &TargetSet, s: DD) -> Result<CoverCertificate> {
    let k = target.k;
    if !(s > DD::ZERO && s < DD::ONE) {
        return Err(Error::InvalidInput("s must lie in (0, 1)".into()));
    }
    for e in elements {
        if e.lo > e.hi {
            return Err(Error::InvalidInput(format!("element [{}, {}] is reversed", e.lo, e.hi)));
        }
    }
    let root = fundamental_interval(&target.prefix)?;
    let k3 = Rational::from_integer(BigInt::from(3 * k * k * k));

    // Shrink, then replace by the fundamental interval of the common prefix.
    let mut shrunk = Vec::new();
    let mut fundamental = Vec::new();
    let mut dropped = 0;
    let mut max_shrink_depth = 0;
    for e in elements {
        let Some(sh) = shrink(target, &root, e)? else {
            dropped += 1;
            continue;
        };
        max_shrink_depth = max_shrink_depth.max(sh.depth);
        let len = interval_length(&sh.common)?;
        ensure(&sh.hi - &sh.lo >= &len / &k3, "shrunk element shorter than |I^m|/(3k^3)")?;
        let gap = mset_gap(&sh.common, k, sh.split.0, sh.split.1)?;
        ensure(gap.holds && &sh.hi - &sh.lo >= gap.gap, "sibling gap bound")?;
        shrunk.push(CoverElement { lo: sh.lo, hi: sh.hi, origin: Origin::Shrunk, digits: None });
        fundamental.push(CoverElement::fundamental(&sh.common, false)?);
    }
    if fundamental.is_empty() {
        return Err(Error::Precondition("no cover element meets the target set".into()));
    }

    // Drop duplicates and intervals nested in another one.
    let words: BTreeSet<Vec<Digit>> = fundamental
        .iter()
        .map(|e| e.digits.clone().unwrap())
        .collect();
    let mut pruned_words: BTreeSet<Vec<Digit>> =
        words.iter().filter(|w| !(0..w.len()).any(|i| words.contains(&w[..i]))).cloned().collect();
    check_coverage(target, &pruned_words)?;
    let pruned = pruned_words.iter().map(|w| CoverElement::fundamental(w, false)).collect::<Result<Vec<_>>>()?;

    // Merge complete sibling groups, deepest first.
    let h = pruned_words.iter().map(Vec::len).min().unwrap();
    let floor = (h + 1).max(k as usize);
    let mut merged_set: BTreeSet<Vec<Digit>> = BTreeSet::new();
    let mut claims = Vec::new();
    let mut merges = 0;
    loop {
        let p = pruned_words.iter().map(Vec::len).max().unwrap();
        if p < floor {
            break;
        }
        let mut groups: BTreeMap<Vec<Digit>, usize> = BTreeMap::new();
        for w in pruned_words.iter().filter(|w| w.len() == p) {
            *groups.entry(w[..p - 1].to_vec()).or_default() += 1;
        }
        for (parent, count) in groups {
            if count as Digit != target.cap(p) {
                return Err(Error::CheckFailed(format!("incomplete sibling group under {parent:?}")));
            }
            let c = claim_check(k, s, &parent, None)?;
            ensure(c.holds, "sibling inequality")?;
            claims.push(c);
            for d in 1..=k {
                let mut w = parent.clone();
                w.push(d);
                pruned_words.remove(&w);
                merged_set.remove(&w);
            }
            pruned_words.insert(parent.clone());
            merged_set.insert(parent);
            merges += 1;
        }
    }
    let merged = pruned_words
        .iter()
        .map(|w| CoverElement::fundamental(w, merged_set.contains(w)))
        .collect::<Result<Vec<_>>>()?;

    let scale = (-(s * DD::ln_rational(&k3))).exp();
    let sums = CoverSums {
        input: sum_pow(elements.iter(), s),
        shrunk: sum_pow(shrunk.iter(), s),
        fundamental: scale * sum_pow(fundamental.iter(), s),
        pruned: scale * sum_pow(pruned.iter(), s),
        merged: scale * sum_pow(merged.iter(), s),
    };
    let bound = sums.merged;
    let holds = dominates(sums.input, sums.shrunk)
        && dominates(sums.shrunk, sums.fundamental)
        && dominates(sums.fundamental, sums.pruned)
        && dominates(sums.pruned, sums.merged)
        && bound > DD::ZERO;
    if !holds {
        return Err(Error::CheckFailed(format!(
            "sum chain broken: {} {} {} {} {}",
            sums.input.to_f64(),
            sums.shrunk.to_f64(),
            sums.fundamental.to_f64(),
            sums.pruned.to_f64(),
            sums.merged.to_f64()
        )));
    }
    Ok(CoverCertificate {
        target: target.clone(),
        s,
        scale,
        shrunk,
        fundamental,
        pruned,
        merged,
        dropped,
        max_shrink_depth,
        merges,
        claims,
        sums,
        bound,
        holds,
    })
}

/// Closed cylinders of every admissible word of length `depth`.
pub fn canonical_cover(target: &TargetSet, depth: usize) -> Result<Vec<CoverElement>> {
    if depth < target.prefix.len() {
        return Err(Error::InvalidInput("depth is shorter than the prefix".into()));
    }
    let mut out = Vec::new();
    let mut w = target.prefix.clone();
    fn rec(t: &TargetSet, w: &mut Vec<Digit>, depth: usize, out: &mut Vec<CoverElement>) -> Result<()> {
        if w.len() == depth {
            let i = fundamental_interval(w)?;
            out.push(CoverElement::raw(i.lo, i.hi));
            return Ok(());
        }
        for d in t.digits_at(w.len() + 1) {
            w.push(d);
            rec(t, w, depth, out)?;
            w.pop();
        }
        Ok(())
    }
    rec(target, &mut w, depth, &mut out)?;
    Ok(out)
}

/// Cuts the hull of the target set at `pieces - 1` random points and
/// stretches each piece to the right by up to half its width, so pieces
/// overlap.
pub fn random_cover(target: &TargetSet, pieces: usize, seed: u64) -> Result<Vec<CoverElement>> {
    if pieces == 0 {
        return Err(Error::InvalidInput("need at least one piece".into()));
    }
    let (lo, hi) = target.hull()?;
    let width = &hi - &lo;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let denom: BigInt = BigInt::one() << 40;
    let frac = |rng: &mut ChaCha8Rng| Rational::new(BigInt::from(rng.random_range(1u64..1 << 40)), denom.clone());
    let mut cuts: Vec<Rational> = (1..pieces).map(|_| &lo + &width * frac(&mut rng)).collect();
    cuts.sort();
    let mut bounds = vec![lo];
    bounds.extend(cuts);
    bounds.push(hi.clone());
    let mut out = Vec::with_capacity(pieces);
    for w in bounds.windows(2) {
        let stretch = (&w[1] - &w[0]) * frac(&mut rng) / Rational::from_integer(2.into());
        out.push(CoverElement::raw(w[0].clone(), (&w[1] + stretch).min(hi.clone())));
    }
    Ok(out)
}
