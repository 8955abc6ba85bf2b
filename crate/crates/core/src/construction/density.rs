//! Exact mark densities of a ledger against the per-stage bounds.
//!
//! For stage `n >= 2`, with `E` the end of stage `n - 1`, `T` the number of
//! marks before stage `n` and `Z` the end of its z-section:
//!
//! * `E < m <= A_1`: density at most `1/(n-1)`;
//! * `A_1 < m <= Z`: density below `(T + 2n^2)/A_1`, itself below `1/n`;
//! * `Z < m <= end`: density below `(T + t_n)/Z`, itself below `1/n`.
//!
//! Stage 1 has `0` up to `A_1`, then below `2/(A_1+1)` up to `2A_1+1`, then
//! below `t_1/(2A_1+1)`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::rational::Rational;
use crate::symbolic::{upper_density, PositionSet, SegmentLedger, StageLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityCase {
    /// Stage 1 before its first mark.
    Prefix,
    /// Up to `A_1`.
    Opening,
    /// Inside the z-section.
    ZSection,
    /// Inside the chaotic blocks.
    Chaotic,
}


#[derive(Clone, Debug, Serialize)]
pub struct RangeDensity {
    pub stage: u32,
    pub case: DensityCase,
    #[serde(with = "crate::rational::dec")]
    pub lo: BigUint,
    #[serde(with = "crate::rational::dec")]
    pub hi: BigUint,
    /// Largest exact density `#marks(1..m)/m` over `lo <= m <= hi`.
    #[serde(with = "crate::rational::ratstr")]
    pub max_density: Rational,
    #[serde(with = "crate::rational::dec")]
    pub argmax: BigUint,
    /// The stage-specific fraction.
    #[serde(with = "crate::rational::ratstr")]
    pub bound: Rational,
    /// The coarse bound the fraction is itself below (`1/n`, `1/(n-1)` or 1).
    #[serde(with = "crate::rational::ratstr")]
    pub coarse_bound: Rational,
    pub strict: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityPoint {
    #[serde(with = "crate::rational::dec")]
    pub m: BigUint,
    #[serde(with = "crate::rational::ratstr")]
    pub density: Rational,
    pub stage: u32,
    pub case: DensityCase,
    #[serde(with = "crate::rational::ratstr")]
    pub bound: Rational,
    pub strict: bool,
}

struct Range {
    case: DensityCase,
    lo: BigUint,
    hi: BigUint,
    bound: Rational,
    coarse: Rational,
    strict: bool,
}

fn ratio(a: &BigUint, b: &BigUint) -> Rational {
    Rational::new(a.clone().into(), b.clone().into())
}

fn ranges(ledger: &SegmentLedger, st: &StageLayout) -> Vec<Range> {
    let n = st.stage;
    let nn = BigUint::from(n);
    let a1 = st.a1().clone();
    let one = Rational::one();
    if n == 1 {
        let zb = &a1 * 2u32 + 1u32;
        return vec![
            Range { case: DensityCase::Prefix, lo: BigUint::one(), hi: a1.clone(), bound: Rational::zero(), coarse: Rational::zero(), strict: false },
            Range { case: DensityCase::ZSection, lo: &a1 + 1u32, hi: st.z_end.clone(), bound: ratio(&2u32.into(), &(&a1 + 1u32)), coarse: one.clone(), strict: true },
            Range { case: DensityCase::Chaotic, lo: &st.z_end + 1u32, hi: st.end.clone(), bound: ratio(&st.t, &zb), coarse: one, strict: true },
        ];
    }
    let prev_marks: BigUint = ledger.stage_layouts[..n as usize - 1].iter().map(|s| &s.t).sum();
    let inv_n = ratio(&1u32.into(), &nn);
    vec![
        Range {
            case: DensityCase::Opening,
            lo: st.start.clone(),
            hi: a1.clone(),
            bound: ratio(&1u32.into(), &(&nn - 1u32)),
            coarse: ratio(&1u32.into(), &(&nn - 1u32)),
            strict: false,
        },
        Range {
            case: DensityCase::ZSection,
            lo: &a1 + 1u32,
            hi: st.z_end.clone(),
            bound: ratio(&(&prev_marks + 2u32 * &nn * &nn), &a1),
            coarse: inv_n.clone(),
            strict: true,
        },
        Range {
            case: DensityCase::Chaotic,
            lo: &st.z_end + 1u32,
            hi: st.end.clone(),
            bound: ratio(&(&prev_marks + &st.t), &st.z_end),
            coarse: inv_n,
            strict: true,
        },
    ]
}

fn below(v: &Rational, bound: &Rational, strict: bool) -> bool {
    if strict {
        v < bound
    } else {
        v <= bound
    }
}

/// Exact maximum of the mark density over `[lo, hi]`. The density only
/// peaks at the right end of a run of marks, so those ends and `lo` are the
/// only candidates.
pub fn max_density_in(ledger: &SegmentLedger, lo: &BigUint, hi: &BigUint) -> (Rational, BigUint) {
    let mut best = (upper_density(ledger, lo).unwrap(), lo.clone());
    let mut i = ledger.segment_at(lo).unwrap_or(ledger.segments.len());
    while let Some(seg) = ledger.segments.get(i) {
        if &seg.start > hi {
            break;
        }
        if seg.marked() {
            let m = seg.end().min(hi.clone());
            if &m >= lo {
                let d = upper_density(ledger, &m).unwrap();
                if d > best.0 {
                    best = (d, m);
                }
            }
        }
        i += 1;
    }
    best
}

/// Checks every stage's three ranges.
pub fn stage_density_checks(ledger: &SegmentLedger) -> Vec<RangeDensity> {
    let mut out = Vec::new();
    for st in &ledger.stage_layouts {
        for r in ranges(ledger, st) {
            if r.lo > r.hi {
                continue;
            }
            let (max_density, argmax) = max_density_in(ledger, &r.lo, &r.hi);
            let holds = below(&max_density, &r.bound, r.strict)
                && below(&r.bound, &r.coarse, r.strict)
                && below(&max_density, &r.coarse, r.strict);
            out.push(RangeDensity {
                stage: st.stage,
                case: r.case,
                lo: r.lo,
                hi: r.hi,
                max_density,
                argmax,
                bound: r.bound,
                coarse_bound: r.coarse,
                strict: r.strict,
                holds,
            });
        }
    }
    out
}

/// Densities at the given positions with the bound of the range holding
/// each one.
pub fn density_profile(ledger: &SegmentLedger, checkpoints: &[BigUint]) -> Result<Vec<DensityPoint>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    for m in checkpoints {
        let density = upper_density(ledger, m)?;
        let st = ledger
            .stage_layouts
            .iter()
            .find(|s| m >= &s.start && m <= &s.end)
            .ok_or_else(|| crate::error::Error::Undefined(m.clone()))?;
        let r = ranges(ledger, st)
            .into_iter()
            .find(|r| m >= &r.lo && m <= &r.hi)
            .expect("stage ranges tile the stage");
        out.push(DensityPoint { m: m.clone(), density, stage: st.stage, case: r.case, bound: r.bound, strict: r.strict });
    }
    Ok(out)
}

/// `T_n / end_n` for each stage.
pub fn endpoint_densities(ledger: &SegmentLedger) -> Vec<Rational> {
    ledger.stage_layouts.iter().map(|s| upper_density(ledger, &s.end).unwrap()).collect()
}

pub fn marks_through(ledger: &SegmentLedger, m: &BigUint) -> BigUint {
    ledger.count_le(m)
}
