//! Seeded randomized checks of the convergent identities and bounds.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cf_value, convergents, erase_digit_ratio, interval_length, mset_gap, quasi_mult_ratio, Digit};
use crate::ddouble::{DD, LN2};
use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// `p_n q_{n-1} - p_{n-1} q_n = (-1)^(n+1)`.
    Determinant,
    /// `q_n >= 2^((n-1)/2)`.
    Growth,
    /// Erasing digit `a_k` divides `q_n` by a factor in `[(a_k+1)/2, a_k+1]`.
    EraseDigit,
    /// `|I(w)| = 1/(q_n(q_n + q_{n-1}))` against the interval endpoints.
    Length,
    /// The children `I(w, i)` tile `I(w)`.
    Tiling,
    /// `|I(uv)| / (|I(u)||I(v)|)` stays within `[1/lambda, lambda]`.
    QuasiMult,
}

impl Lemma {
    pub const ALL: [Lemma; 6] =
        [Lemma::Determinant, Lemma::Growth, Lemma::EraseDigit, Lemma::Length, Lemma::Tiling, Lemma::QuasiMult];
}

/// The sample that came closest to breaking the bound.
#[derive(Clone, Debug, Serialize)]
pub struct WorstCase {
    pub digits: Vec<Digit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second: Option<Vec<Digit>>,
    /// Relative slack; 0 for exact identities.
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub samples: usize,
    pub seed: u64,
    pub violations: u64,
    pub first_violation: Option<Vec<Digit>>,
    pub worst_case: Option<WorstCase>,
    pub pass: bool,
}

/// Bound used for [`Lemma::QuasiMult`] samples.
pub const QUASI_LAMBDA_CAP: f64 = 8.0;
pub const QUASI_MAX_DIGIT: Digit = 30;
pub const QUASI_MAX_LEN: usize = 8;

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Digit> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| match rng.random_range(0..10) {
            0 => rng.random_range(1..=1_000_000_000),
            1..=3 => rng.random_range(1..=1000),
            _ => rng.random_range(1..=4),
        })
        .collect()
}

fn bounded_word(rng: &mut ChaCha8Rng) -> Vec<Digit> {
    let len = rng.random_range(1..=QUASI_MAX_LEN);
    (0..len).map(|_| rng.random_range(1..=QUASI_MAX_DIGIT)).collect()
}

fn log2(q: &BigUint) -> f64 {
    (DD::ln_biguint(q) / LN2).to_f64()
}

/// Slack of one sample, or `None` when it breaks the statement.
fn check_one(lemma: Lemma, w: &[Digit], v: &[Digit], extra: u64) -> Result<Option<f64>> {
    Ok(match lemma {
        Lemma::Determinant => {
            let c = convergents(w)?;
            let ok = (0..=w.len() as isize).all(|n| {
                let det = BigInt::from(c.p(n) * c.q(n - 1)) - BigInt::from(c.p(n - 1) * c.q(n));
                det.abs().is_one() && det.is_positive() == (n % 2 == 1)
            });
            ok.then_some(0.0)
        }
        Lemma::Growth => {
            let c = convergents(w)?;
            let mut slack = f64::INFINITY;
            for n in 1..=w.len() {
                let q = c.q(n as isize);
                if q * q < BigUint::one() << (n - 1) {
                    return Ok(None);
                }
                slack = slack.min(2.0 * log2(q) - (n - 1) as f64);
            }
            Some(slack)
        }
        Lemma::EraseDigit => {
            let k = (extra as usize % w.len()) + 1;
            let r = erase_digit_ratio(w, k)?;
            r.holds.then(|| to_f64(&(&r.ratio / &r.lower)).min(to_f64(&(&r.upper / &r.ratio))) - 1.0)
        }
        Lemma::Length => {
            let mut bumped = w.to_vec();
            *bumped.last_mut().unwrap() += 1;
            let ends = (cf_value(w)? - cf_value(&bumped)?).abs();
            (interval_length(w)? == ends).then_some(0.0)
        }
        Lemma::Tiling => {
            let m = extra % 6 + 1;
            let mut total = Rational::zero();
            for i in 1..=m {
                let mut child = w.to_vec();
                child.push(i);
                total += interval_length(&child)?;
            }
            let mut rest = w.to_vec();
            rest.push(m + 1);
            total += (cf_value(&rest)? - cf_value(w)?).abs();
            (total == interval_length(w)?).then_some(0.0)
        }
        Lemma::QuasiMult => {
            let r = to_f64(&quasi_mult_ratio(w, v)?);
            let lambda = r.max(1.0 / r);
            (lambda <= QUASI_LAMBDA_CAP).then_some(QUASI_LAMBDA_CAP / lambda - 1.0)
        }
    })
}

/// Checks `samples` random words; the same seed gives the same report.
pub fn lemma_suite(lemma: Lemma, samples: usize, seed: u64) -> Result<LemmaReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut first_violation = None;
    let mut worst: Option<WorstCase> = None;
    for _ in 0..samples {
        let (w, v) = if lemma == Lemma::QuasiMult {
            (bounded_word(&mut rng), bounded_word(&mut rng))
        } else {
            (random_word(&mut rng, 24), Vec::new())
        };
        let extra = rng.random::<u64>();
        match check_one(lemma, &w, &v, extra)? {
            Some(margin) => {
                if worst.as_ref().is_none_or(|c| margin < c.margin) {
                    let second = (lemma == Lemma::QuasiMult).then(|| v.clone());
                    worst = Some(WorstCase { digits: w, second, margin });
                }
            }
            None => {
                violations += 1;
                first_violation.get_or_insert(w);
            }
        }
    }
    Ok(LemmaReport { lemma, samples, seed, violations, first_violation, worst_case: worst, pass: violations == 0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSweep {
    pub k: Digit,
    pub depth: usize,
    pub pairs: u64,
    pub violations: u64,
    /// Smallest `gap / bound - 1` and where it occurred.
    pub worst_margin: f64,
    pub worst_prefix: Vec<Digit>,
    pub worst_digits: (Digit, Digit),
    pub pass: bool,
}

/// Sibling gap bound for every prefix of length at most `depth` with
/// digits at most `k`.
pub fn gap_sweep(k: Digit, depth: usize) -> Result<GapSweep> {
    if k < 2 {
        return Err(Error::InvalidInput("need at least two digits to compare".into()));
    }
    let count = (0..=depth as u32).try_fold(0u64, |a, d| k.checked_pow(d).and_then(|p| a.checked_add(p)));
    if count.is_none_or(|c| c > 1 << 24) {
        return Err(Error::BudgetExceeded(format!("{k}^{depth} prefixes")));
    }
    let mut out = GapSweep {
        k,
        depth,
        pairs: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_prefix: Vec::new(),
        worst_digits: (0, 0),
        pass: true,
    };
    for d in 0..=depth {
        for w in crate::dimension::all_words(k, d) {
            for s in 1..=k {
                for t in s + 1..=k {
                    let g = mset_gap(&w, k, s, t)?;
                    out.pairs += 1;
                    if !g.holds {
                        out.violations += 1;
                    }
                    let m = to_f64(&(&g.gap / &g.bound)) - 1.0;
                    if m < out.worst_margin {
                        out.worst_margin = m;
                        out.worst_prefix = w.clone();
                        out.worst_digits = (s, t);
                    }
                }
            }
        }
    }
    out.pass = out.violations == 0;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_lemmas_hold() {
        for lemma in Lemma::ALL {
            let r = lemma_suite(lemma, 300, 7).unwrap();
            assert!(r.pass, "{lemma:?}");
            assert!(r.worst_case.unwrap().margin >= 0.0);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = serde_json::to_string(&lemma_suite(Lemma::EraseDigit, 200, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&lemma_suite(Lemma::EraseDigit, 200, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_gap_sweep() {
        let g = gap_sweep(3, 2).unwrap();
        assert_eq!(g.pairs, 13 * 3);
        assert!(g.pass && g.worst_margin >= 0.0);
    }

    #[test]
    fn growth_is_tight_for_ones() {
        // q_2 = 2 for [1, 1]: 2 log2(2) - 1 = 1; q_1 = 1 gives slack 0.
        assert_eq!(check_one(Lemma::Growth, &[1, 1], &[], 0).unwrap(), Some(0.0));
    }
}
