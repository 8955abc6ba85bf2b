//! The Gauss map `T(x) = 1/x - floor(1/x)` and its invariant measure
//! `dx / ((1 + x) ln 2)`: exact steps, measures of intervals, branch
//! preimages, forward images of interval unions, and seeded Monte Carlo
//! statistics for pairs of orbits.
//!
//! Orbits are never iterated in floating point. A random point is a
//! rational with a huge denominator; its digits come from Euclid's
//! algorithm and `T^n x` is rebuilt from the digit tail.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{cf_digits, Digit};
use crate::ddouble::{DDSum, DD, LN2};
use crate::error::{Error, Result};
use crate::rational::{from_int, Rational};

/// `(floor(1/x), T(x))`, or `None` at the terminal point 0.
pub fn gauss_step(x: &Rational) -> Result<Option<(Digit, Rational)>> {
    if x < &Rational::zero() || x >= &Rational::one() {
        return Err(Error::InvalidInput(format!("{x} is outside [0, 1)")));
    }
    if x.is_zero() {
        return Ok(None);
    }
    let inv = x.recip();
    let d = inv.floor();
    let digit = d.to_integer().to_u64().ok_or_else(|| Error::InvalidInput("digit exceeds 64 bits".into()))?;
    Ok(Some((digit, inv - d)))
}

fn check_interval(a: &Rational, b: &Rational) -> Result<()> {
    if a < &Rational::zero() || b > &Rational::one() || a >= b {
        return Err(Error::InvalidInput(format!("need 0 <= a < b <= 1, got [{a}, {b}]")));
    }
    Ok(())
}

/// `log2((1 + b) / (1 + a))`.
pub fn gauss_measure(a: &Rational, b: &Rational) -> Result<DD> {
    check_interval(a, b)?;
    let one = Rational::one();
    let ratio = (&one + b) / (&one + a);
    Ok(ln_near_one(&ratio) / LN2)
}

/// `ln r` for a positive rational, accurate in relative terms even when
/// `r` is within a hair of 1.
fn ln_near_one(r: &Rational) -> DD {
    let d = r - Rational::one();
    let small = Rational::new(1.into(), 1024.into());
    if d.abs() < small {
        // ln(1 + d) = 2 atanh(d / (2 + d)).
        let u = DD::from_rational(&(&d / (Rational::from_integer(2.into()) + &d)));
        let u2 = u * u;
        let mut term = u;
        let mut sum = u;
        let mut k = 1.0;
        while term.hi.abs() > 1e-34 * sum.hi.abs() {
            term = term * u2;
            k += 2.0;
            sum += term / DD::from_f64(k);
        }
        sum.ldexp(1)
    } else {
        DD::ln_rational(r)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureInterval {
    #[serde(with = "crate::rational::ratstr")]
    pub a: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub b: Rational,
    pub gauss_measure: DD,
}

impl MeasureInterval {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        let gauss_measure = gauss_measure(&a, &b)?;
        Ok(MeasureInterval { a, b, gauss_measure })
    }
}

/// Preimage of `[a, b)` on branch `n`: `(1/(n + b), 1/(n + a)]`.
pub fn preimage(a: &Rational, b: &Rational, n: u64) -> (Rational, Rational) {
    let nn = from_int(n);
    ((&nn + b).recip(), (&nn + a).recip())
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    #[serde(with = "crate::rational::ratstr")]
    pub a: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub b: Rational,
    pub branches: u64,
    pub measure: DD,
    /// Measure of the first `branches` preimages.
    pub branch_sum: DD,
    pub defect: DD,
    /// `log2((M + 1 + b) / (M + 1 + a))`, the exact missing mass.
    pub closed_form_defect: DD,
    /// `mu((0, 1/(M + 1)))`, an upper bound for the missing mass.
    pub tail_bound: DD,
    pub pass: bool,
}

/// Sums the measures of the first `m` branch preimages of `[a, b)` and
/// compares with the measure of `[a, b)`.
pub fn branch_preimages(a: &Rational, b: &Rational, m: u64) -> Result<InvarianceReport> {
    check_interval(a, b)?;
    if m == 0 {
        return Err(Error::InvalidInput("need at least one branch".into()));
    }
    let measure = gauss_measure(a, b)?;
    let (af, bf) = (DD::from_rational(a), DD::from_rational(b));
    let width = DD::from_rational(&(b - a));
    // Branch n has measure log2(1 + (b - a) / ((n + a)(n + b + 1))).
    const CHUNK: u64 = 1 << 14;
    let chunks: Vec<DD> = (0..m.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = DDSum::new();
            for n in c * CHUNK + 1..=((c + 1) * CHUNK).min(m) {
                let nd = DD::from_f64(n as f64);
                let t = (width / ((nd + af) * (nd + bf + DD::ONE))).to_f64();
                acc.add_f64(t.ln_1p());
            }
            acc.value()
        })
        .collect();
    let mut acc = DDSum::new();
    for c in chunks {
        acc.add(c);
    }
    let branch_sum = acc.value() / LN2;
    let mp1 = from_int(m + 1);
    let closed_form_defect = ln_near_one(&((&mp1 + b) / (&mp1 + a))) / LN2;
    let tail_bound = gauss_measure(&Rational::zero(), &mp1.recip())?;
    let defect = measure - branch_sum;
    let slack = 1e-20;
    let pass = defect.to_f64() >= -slack && (defect - tail_bound).to_f64() <= slack;
    Ok(InvarianceReport {
        a: a.clone(),
        b: b.clone(),
        branches: m,
        measure,
        branch_sum,
        defect,
        closed_form_defect,
        tail_bound,
        pass,
    })
}

/// Sorted union of open intervals.
fn normalize(mut v: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    v.retain(|(a, b)| a < b);
    v.sort();
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// `T((a, b))` up to finitely many points. Returns `None` when the image
/// is all of `(0, 1)`, which happens as soon as `(a, b)` contains a full
/// branch `(1/(n+1), 1/n)`.
fn forward_image(a: &Rational, b: &Rational) -> Option<Vec<(Rational, Rational)>> {
    if a.is_zero() {
        return None;
    }
    // Branches meeting (a, b): n from floor(1/b) (or 1/b - 1 when exact) to floor(1/a).
    let hi_n = a.recip().floor().to_integer();
    let lo_n = {
        let r = b.recip();
        let f = r.floor();
        if f == r {
            f.to_integer() - 1
        } else {
            f.to_integer()
        }
    }
    .max(BigInt::one());
    if &hi_n - &lo_n >= BigInt::from(2) {
        return None;
    }
    let mut out = Vec::new();
    let mut n = lo_n;
    while n <= hi_n {
        let nr = Rational::from_integer(n.clone());
        let lo = a.clone().max((&nr + Rational::one()).recip());
        let hi = b.clone().min(nr.recip());
        if lo < hi {
            if lo == (&nr + Rational::one()).recip() && hi == nr.recip() {
                return None;
            }
            out.push((hi.recip() - &nr, lo.recip() - &nr));
        }
        n += 1;
    }
    Some(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactnessReport {
    /// `mu(T^n A)` for `n = 0..=steps`.
    pub trajectory: Vec<DD>,
    pub interval_counts: Vec<usize>,
    pub steps: u32,
    /// First step at which the measure reached `1 - 1e-3`.
    pub reached: Option<u32>,
    pub pass: bool,
}

pub const EXACTNESS_TARGET: f64 = 1e-3;

/// Iterates exact forward images of a union of open intervals.
pub fn exactness_probe(start: &[(Rational, Rational)], steps: u32, max_intervals: usize) -> Result<ExactnessReport> {
    for (a, b) in start {
        check_interval(a, b)?;
    }
    let mut cur = normalize(start.to_vec());
    if cur.is_empty() {
        return Err(Error::InvalidInput("start set has measure zero".into()));
    }
    let measure = |v: &[(Rational, Rational)]| -> Result<DD> {
        let mut acc = DDSum::new();
        for (a, b) in v {
            acc.add(gauss_measure(a, b)?);
        }
        Ok(acc.value())
    };
    let full = vec![(Rational::zero(), Rational::one())];
    let mut trajectory = vec![measure(&cur)?];
    let mut interval_counts = vec![cur.len()];
    for _ in 0..steps {
        let mut next = Vec::new();
        let mut whole = false;
        for (a, b) in &cur {
            match forward_image(a, b) {
                Some(v) => next.extend(v),
                None => {
                    whole = true;
                    break;
                }
            }
        }
        cur = if whole { full.clone() } else { normalize(next) };
        if cur.len() > max_intervals {
            return Err(Error::BudgetExceeded(format!("{} intervals exceed the cap {max_intervals}", cur.len())));
        }
        trajectory.push(measure(&cur)?);
        interval_counts.push(cur.len());
    }
    let reached = trajectory.iter().position(|m| m.to_f64() >= 1.0 - EXACTNESS_TARGET).map(|i| i as u32);
    Ok(ExactnessReport { pass: reached.is_some(), trajectory, interval_counts, steps, reached })
}

/// Mean digit count per bit of denominator: `12 ln 2 / pi^2` digits per
/// unit of `ln q`, times `ln 2`.
const DIGITS_PER_BIT: f64 = 0.842_845_3 * std::f64::consts::LN_2;
const MAX_REDRAWS: u32 = 64;

#[derive(Clone, Debug, Serialize)]
pub struct CfSample {
    pub digits: Vec<Digit>,
    pub bits: u64,
    pub redraws: u32,
}

fn random_below_pow2(rng: &mut ChaCha8Rng, bits: u64) -> BigUint {
    let words = bits.div_ceil(32) as usize;
    let v: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let x = BigUint::new(v);
    x % (BigUint::one() << bits)
}

/// Digits of a uniform random `p / 2^bits` with at least `budget` digits;
/// short expansions are redrawn.
pub fn sample_cf_point_with(rng: &mut ChaCha8Rng, budget: usize) -> Result<CfSample> {
    let bits = ((budget as f64 * 1.1 / DIGITS_PER_BIT).ceil() as u64).max(64);
    let q = BigUint::one() << bits;
    for redraws in 0..MAX_REDRAWS {
        let p = random_below_pow2(rng, bits);
        if p.is_zero() {
            continue;
        }
        let g = p.gcd(&q);
        let x = Rational::new((&p / &g).into(), (&q / &g).into());
        let digits = cf_digits(&x, usize::MAX)?;
        if digits.len() >= budget {
            return Ok(CfSample { digits, bits, redraws });
        }
    }
    Err(Error::BudgetExceeded(format!("no expansion of {budget} digits after {MAX_REDRAWS} draws")))
}

pub fn sample_cf_point(seed: u64, budget: usize) -> Result<CfSample> {
    sample_cf_point_with(&mut ChaCha8Rng::seed_from_u64(seed), budget)
}

/// `T^n x` for `n = 0..len` from the full (terminating) digit list,
/// computed backwards from `T^len x = 0`, where the recursion contracts.
pub fn orbit_from_digits(digits: &[Digit]) -> Vec<DD> {
    let mut out = vec![DD::ZERO; digits.len() + 1];
    for i in (0..digits.len()).rev() {
        out[i] = DD::ONE / (DD::from_f64(digits[i] as f64) + out[i + 1]);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PairStats {
    pub min_distance: f64,
    pub max_distance: f64,
    pub box_visits: u64,
}

/// Extremes of `|T^n x - T^n y|` for `n < horizon` and visits of
/// `(T^n x, T^n y)` to `[0, 1/k] x [1 - 1/k, 1)`.
pub fn pair_stats(x: &[DD], y: &[DD], horizon: usize, k: u32) -> Result<PairStats> {
    if x.len() < horizon || y.len() < horizon {
        return Err(Error::BudgetExceeded("orbit shorter than the horizon".into()));
    }
    let inv_k = DD::ONE / DD::from_f64(k as f64);
    let top = DD::ONE - inv_k;
    let mut min_distance = f64::INFINITY;
    let mut max_distance = 0.0f64;
    let mut box_visits = 0;
    for n in 0..horizon {
        let d = (x[n] - y[n]).abs().to_f64();
        min_distance = min_distance.min(d);
        max_distance = max_distance.max(d);
        if x[n] <= inv_k && y[n] >= top {
            box_visits += 1;
        }
    }
    Ok(PairStats { min_distance, max_distance, box_visits })
}

#[derive(Clone, Debug, Serialize)]
pub struct Statistic {
    pub name: &'static str,
    pub empirical: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub source: &'static str,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub seed: u64,
    pub pairs: usize,
    pub horizon: usize,
    pub k: u32,
    pub redraws: u32,
    pub statistics: Vec<Statistic>,
    pub per_pair: Vec<PairStats>,
    pub pass: bool,
}

/// `mu([0, 1/k]) * mu([1 - 1/k, 1))`.
pub fn box_reference(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    let inv = Rational::new(1.into(), k.into());
    let left = gauss_measure(&Rational::zero(), &inv)?;
    let right = gauss_measure(&(Rational::one() - &inv), &Rational::one())?;
    Ok((left * right).to_f64())
}

pub const MAX_SHARE: f64 = 0.95;
pub const MIN_SHARE: f64 = 0.90;
pub const MAX_THRESHOLD: f64 = 0.9;
pub const MIN_THRESHOLD: f64 = 1e-3;
pub const BOX_TOLERANCE: f64 = 0.2;

/// Seeded pair statistics; pair `i` draws from its own ChaCha stream.
pub fn scrambled_stats(seed: u64, pairs: usize, horizon: usize, k: u32) -> Result<McReport> {
    if pairs == 0 || horizon == 0 {
        return Err(Error::InvalidInput("need at least one pair and a positive horizon".into()));
    }
    let reference = box_reference(k)?;
    let results: Vec<Result<(PairStats, u32)>> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let x = sample_cf_point_with(&mut rng, horizon)?;
            let y = sample_cf_point_with(&mut rng, horizon)?;
            let s = pair_stats(&orbit_from_digits(&x.digits), &orbit_from_digits(&y.digits), horizon, k)?;
            Ok((s, x.redraws + y.redraws))
        })
        .collect();
    let mut per_pair = Vec::with_capacity(pairs);
    let mut redraws = 0;
    for r in results {
        let (s, d) = r?;
        redraws += d;
        per_pair.push(s);
    }
    let share = |f: &dyn Fn(&PairStats) -> bool| per_pair.iter().filter(|p| f(p)).count() as f64 / pairs as f64;
    let max_share = share(&|p| p.max_distance >= MAX_THRESHOLD);
    let min_share = share(&|p| p.min_distance <= MIN_THRESHOLD);
    let visits: u64 = per_pair.iter().map(|p| p.box_visits).sum();
    let freq = visits as f64 / (pairs * horizon) as f64;
    let statistics = vec![
        Statistic {
            name: "share of pairs with max distance >= 0.9",
            empirical: max_share,
            reference: MAX_SHARE,
            tolerance: 0.0,
            source: "acceptance threshold",
            pass: max_share >= MAX_SHARE,
        },
        Statistic {
            name: "share of pairs with min distance <= 1e-3",
            empirical: min_share,
            reference: MIN_SHARE,
            tolerance: 0.0,
            source: "acceptance threshold",
            pass: min_share >= MIN_SHARE,
        },
        Statistic {
            name: "box visit frequency",
            empirical: freq,
            reference,
            tolerance: BOX_TOLERANCE,
            source: "closed-form product measure",
            pass: ((freq - reference) / reference).abs() <= BOX_TOLERANCE,
        },
    ];
    let pass = statistics.iter().all(|s| s.pass);
    Ok(McReport { seed, pairs, horizon, k, redraws, statistics, per_pair, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn steps() {
        assert_eq!(gauss_step(&rat(2, 5)).unwrap(), Some((2, rat(1, 2))));
        assert_eq!(gauss_step(&rat(5, 7)).unwrap(), Some((1, rat(2, 5))));
        assert_eq!(gauss_step(&rat(0, 1)).unwrap(), None);
        assert!(gauss_step(&rat(1, 1)).is_err());
    }

    #[test]
    fn measures() {
        let m = gauss_measure(&rat(0, 1), &rat(1, 1)).unwrap();
        assert!((m - DD::ONE).abs().to_f64() < 1e-30);
        let m = gauss_measure(&rat(0, 1), &rat(1, 2)).unwrap();
        assert!((m.to_f64() - 0.584_962_500_721_156_2).abs() < 1e-16);
        // Tiny interval near 1/2: relative accuracy survives.
        let a = rat(1, 2);
        let b = &a + Rational::new(1.into(), BigInt::from(10u64).pow(30));
        let m = gauss_measure(&a, &b).unwrap().to_f64();
        let want = 1e-30 / (1.5 * std::f64::consts::LN_2);
        assert!((m - want).abs() < 1e-12 * want);
    }

    #[test]
    fn preimage_endpoints() {
        assert_eq!(preimage(&rat(1, 3), &rat(1, 2), 2), (rat(2, 5), rat(3, 7)));
    }

    #[test]
    fn invariance_small_m() {
        let r = branch_preimages(&rat(1, 5), &rat(2, 3), 1000).unwrap();
        assert!(r.pass);
        assert!((r.defect - r.closed_form_defect).abs().to_f64() < 1e-15);
        let full = branch_preimages(&rat(0, 1), &rat(1, 1), 3).unwrap();
        assert!((full.defect - full.tail_bound).abs().to_f64() < 1e-15);
    }

    #[test]
    fn exactness_examples() {
        let r = exactness_probe(&[(rat(1, 3), rat(1, 2))], 1, 1000).unwrap();
        assert_eq!(r.reached, Some(1));
        let r = exactness_probe(&[(rat(0, 1), rat(1, 1))], 3, 1000).unwrap();
        assert!(r.trajectory.iter().all(|m| (m.to_f64() - 1.0).abs() < 1e-15));
        let r = exactness_probe(&[(rat(9, 10), rat(19, 20))], 5, 1000).unwrap();
        assert!(r.reached.unwrap() <= 5);
        assert!(r.trajectory.windows(2).all(|w| w[1].to_f64() >= w[0].to_f64() - 1e-15));
    }

    #[test]
    fn forward_image_partial_branches() {
        // (2/5, 3/7) lies inside branch 2; its image is (1/3, 1/2).
        assert_eq!(forward_image(&rat(2, 5), &rat(3, 7)).unwrap(), vec![(rat(1, 3), rat(1, 2))]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_cf_point(11, 500).unwrap();
        let b = sample_cf_point(11, 500).unwrap();
        assert_eq!(a.digits, b.digits);
        assert!(a.digits.len() >= 500);
    }

    #[test]
    fn orbit_matches_exact_steps() {
        let x = rat(355, 1130);
        let d = cf_digits(&x, 100).unwrap();
        let orbit = orbit_from_digits(&d);
        let mut cur = x;
        for v in &orbit {
            assert!((DD::from_rational(&cur) - *v).abs().to_f64() < 1e-30);
            match gauss_step(&cur).unwrap() {
                Some((_, next)) => cur = next,
                None => break,
            }
        }
    }

    #[test]
    fn diagonal_pair() {
        let s = sample_cf_point(3, 200).unwrap();
        let o = orbit_from_digits(&s.digits);
        let p = pair_stats(&o, &o, 200, 4).unwrap();
        assert_eq!((p.min_distance, p.max_distance, p.box_visits), (0.0, 0.0, 0));
    }

    #[test]
    fn box_reference_value() {
        assert!((box_reference(4).unwrap() - 0.062_017_862_931_422_94).abs() < 1e-15);
    }
}
