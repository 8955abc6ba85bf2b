//! Finite-horizon checks of the chaotic properties of constructed points:
//! proximality along multiples of the z-anchors, return to `z`, realizing
//! target words along `j q`, and scrambled behaviour of pairs.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::construction::tuple_ordinal;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::symbolic::{base_power, word_distance, Distance, LedgerPoint, SegmentLedger, Stream, SymbolSource, Word};

#[derive(Clone, Debug, Serialize)]
pub struct SlotDistance {
    pub j: u32,
    #[serde(with = "crate::rational::dec")]
    pub position: BigUint,
    pub distance: Distance,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalReport {
    pub stage: u32,
    #[serde(with = "crate::rational::dec")]
    pub anchor: BigUint,
    pub slots: Vec<SlotDistance>,
    #[serde(with = "crate::rational::ratstr")]
    pub max_value: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub max_upper_bound: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub threshold: Rational,
    pub pass: bool,
}

/// Compares the windows of length `k` at `j A_1 + 1`, `j = 1..d`, with `z`
/// at the same positions.
pub fn proximal_check(point: &LedgerPoint, k: u32, d: u32) -> Result<ProximalReport> {
    let st = point.ledger.stage(k)?;
    if d == 0 || d > k {
        return Err(Error::InvalidInput(format!("d must lie in 1..={k}, got {d}")));
    }
    let base = point.ledger.alphabet.base();
    let anchor = st.a1().clone();
    let mut slots = Vec::with_capacity(d as usize);
    for j in 1..=d {
        let pos = &anchor * j + 1u32;
        let y = point.read(&pos, k as usize)?;
        let z = point.z.read(&pos, k as usize)?;
        slots.push(SlotDistance { j, position: pos, distance: word_distance(&z, &y, base)? });
    }
    let max_value = slots.iter().map(|s| s.distance.value.clone()).max().unwrap();
    let max_upper_bound = slots.iter().map(|s| s.distance.upper_bound.clone()).max().unwrap();
    let threshold = base_power(base, k as u64);
    let pass = max_upper_bound <= threshold;
    Ok(ProximalReport { stage: k, anchor, slots, max_value, max_upper_bound, threshold, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnReport {
    pub stage: u32,
    #[serde(with = "crate::rational::dec")]
    pub position: BigUint,
    /// Largest pairwise distance among `z[1..k]` and the members' windows;
    /// 0 when all agree on the whole window.
    #[serde(with = "crate::rational::ratstr")]
    pub diameter: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub threshold: Rational,
    pub pass: bool,
}

/// Diameter of `{z[1..k]}` together with every member's window at `B_k + 1`.
pub fn return_to_z_check(family: &[LedgerPoint], z: &Stream, k: u32) -> Result<ReturnReport> {
    let base = z.alphabet().base();
    let threshold = base_power(base, k as u64);
    let Some(first) = family.first() else {
        return Ok(ReturnReport { stage: k, position: BigUint::zero(), diameter: Rational::zero(), threshold, pass: true });
    };
    let pos = &first.ledger.stage(k)?.b + 1u32;
    let mut words = vec![z.prefix(k as usize)?];
    for p in family {
        let b = &p.ledger.stage(k)?.b + 1u32;
        words.push(p.read(&b, k as usize)?);
    }
    let mut diameter = Rational::zero();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            diameter = diameter.max(word_distance(&words[i], &words[j], base)?.value);
        }
    }
    let pass = diameter <= threshold;
    Ok(ReturnReport { stage: k, position: pos, diameter, threshold, pass })
}

/// A member of the targeted family: its base point starts with `x_prefix`,
/// and `targets[j-1]` is the word it should show at `j q + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetMember {
    pub x_prefix: Word,
    pub targets: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub d: u32,
    pub members: Vec<TargetMember>,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.members.iter().enumerate() {
            if m.targets.len() < self.d as usize {
                return Err(Error::InvalidInput(format!("member {i} has {} targets, d = {}", m.targets.len(), self.d)));
            }
        }
        Ok(())
    }

    /// Ledger points for all members: each base point is `x_prefix`
    /// followed by `tail` from position `|x_prefix| + 1` on.
    pub fn points<'a>(&self, ledger: &'a SegmentLedger, tail: &Stream, z: &Stream) -> Result<Vec<LedgerPoint<'a>>> {
        self.members
            .iter()
            .map(|m| LedgerPoint::new(ledger, Stream::prefixed(m.x_prefix.clone(), tail.clone()), z.clone()))
            .collect()
    }
}

fn base_prefixes(points: &[LedgerPoint], k: u32) -> Result<Vec<Word>> {
    points.iter().map(|p| p.x.prefix(k as usize)).collect()
}

/// `psi[i][j-1]`: the longest `l <= k` such that every member whose base
/// point agrees with member `i` on `k` symbols has the same first `l`
/// symbols of target `j`.
pub fn psi_lengths(spec: &TargetSpec, points: &[LedgerPoint], k: u32) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    if points.len() != spec.members.len() {
        return Err(Error::InvalidInput("one ledger point per member is required".into()));
    }
    let bases = base_prefixes(points, k)?;
    let mut out = Vec::with_capacity(points.len());
    for (i, bi) in bases.iter().enumerate() {
        let group: Vec<usize> = (0..bases.len()).filter(|&o| &bases[o] == bi).collect();
        let mut row = Vec::with_capacity(spec.d as usize);
        for j in 0..spec.d as usize {
            let mut l = (k as usize).min(spec.members[i].targets[j].len());
            for &o in &group {
                let (a, b) = (&spec.members[i].targets[j], &spec.members[o].targets[j]);
                let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                l = l.min(common).min(b.len());
            }
            row.push(l);
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetTime {
    #[serde(with = "crate::rational::dec")]
    pub q: BigUint,
    #[serde(with = "crate::rational::dec")]
    pub block: BigUint,
    pub tuple_prefix: Vec<usize>,
}

/// Smallest block whose map tuple realizes every member's targets; returns
/// `q = r_{i,1} - 1`, so the `j`-th word of the block starts at `j q + 1`.
pub fn find_target_time(spec: &TargetSpec, k: u32, points: &[LedgerPoint]) -> Result<TargetTime> {
    let psi = psi_lengths(spec, points, k)?;
    let Some(first) = points.first() else {
        return Err(Error::InvalidInput("empty family has no target time".into()));
    };
    let st = first.ledger.stage(k)?;
    let l = st.table_size;
    if spec.d as u64 > l {
        return Err(Error::NoSuchTuple(format!("d = {} exceeds the {l} slots per block at stage {k}", spec.d)));
    }
    let mut choice = vec![1usize; l as usize];
    for j in 0..spec.d as usize {
        let found = (1..=l as usize).find(|&m| {
            points.iter().enumerate().all(|(i, p)| {
                let need = psi[i][j];
                need == 0 || p.phi_image(k, m).is_some_and(|w| w[..need] == spec.members[i].targets[j][..need])
            })
        });
        match found {
            Some(m) => choice[j] = m,
            None => return Err(Error::NoSuchTuple(format!("no map at stage {k} realizes slot {}", j + 1))),
        }
    }
    let block = block_of_prefix(&choice[..spec.d as usize], l, &st.blocks)
        .ok_or_else(|| Error::NoSuchTuple(format!("the required tuple lies beyond the {} blocks built at stage {k}", st.blocks)))?;
    let idx = block.iter_u64_digits().next().unwrap_or(0) as usize;
    let q = &st.anchors[idx - 1] - 1u32;
    Ok(TargetTime { q, block, tuple_prefix: choice[..spec.d as usize].to_vec() })
}

/// Block number of the tuple `(prefix, 1, ..., 1)` of length `l`, or `None`
/// when it exceeds `limit`. Avoids materializing huge ordinals.
fn block_of_prefix(prefix: &[usize], l: u64, limit: &BigUint) -> Option<BigUint> {
    let Some(last) = prefix.iter().rposition(|&m| m > 1) else {
        return Some(BigUint::one());
    };
    let first = prefix.iter().position(|&m| m > 1).unwrap();
    let lead_exp = l - 1 - first as u64;
    if lead_exp as f64 * (l as f64).log2() > limit.bits() as f64 + 1.0 {
        return None;
    }
    let head = tuple_ordinal(&prefix[..=last], l) - 1u32;
    let block = head * BigUint::from(l).pow((l - 1 - last as u64) as u32) + 1u32;
    (&block <= limit).then_some(block)
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetCheck {
    pub pass: bool,
    /// `(member, j)` pairs whose window did not match.
    pub failures: Vec<(usize, u32)>,
}

/// Reads every member's window at `j q + 1` and compares it with its target.
pub fn verify_target_time(q: &BigUint, spec: &TargetSpec, k: u32, points: &[LedgerPoint]) -> Result<TargetCheck> {
    if q.is_zero() {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let psi = psi_lengths(spec, points, k)?;
    let mut failures = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for j in 1..=spec.d {
            let need = psi[i][j as usize - 1];
            if need == 0 {
                continue;
            }
            let got = p.read(&(q * j + 1u32), need)?;
            if got[..] != spec.members[i].targets[j as usize - 1][..need] {
                failures.push((i, j));
            }
        }
    }
    Ok(TargetCheck { pass: failures.is_empty(), failures })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScrambledReport {
    pub stage: u32,
    pub samples: usize,
    /// Smallest exact distance seen (0 when some window agreed throughout).
    #[serde(with = "crate::rational::ratstr")]
    pub min_value: Rational,
    /// Smallest guaranteed upper bound among the samples.
    #[serde(with = "crate::rational::ratstr")]
    pub min_upper_bound: Rational,
    #[serde(with = "crate::rational::ratstr")]
    pub max_value: Rational,
    pub pass: bool,
}

/// Shifts sampled by default: every `A_1` and `B_k`, and the first 64 word
/// anchors `r_{i,j} - 1`.
pub fn default_shifts(ledger: &SegmentLedger) -> Vec<BigUint> {
    let mut v = Vec::new();
    for st in &ledger.stage_layouts {
        v.push(st.a1().clone());
        v.push(st.b.clone());
    }
    'outer: for st in &ledger.stage_layouts {
        for r1 in &st.anchors {
            for j in 1..=st.table_size {
                if v.len() >= 2 * ledger.stage_layouts.len() + 64 {
                    break 'outer;
                }
                v.push((r1 - 1u32) * j);
            }
        }
    }
    v
}

/// Distances `rho(sigma^m x, sigma^m y)` over windows of length `K` (the
/// last built stage) at the sampled shifts.
pub fn scrambled_pair_check(x: &LedgerPoint, y: &LedgerPoint, shifts: Option<&[BigUint]>) -> Result<ScrambledReport> {
    let k = x.ledger.stages();
    if k == 0 {
        return Err(Error::InvalidInput("ledger has no stages".into()));
    }
    let base = x.ledger.alphabet.base();
    let default = default_shifts(x.ledger);
    let shifts = shifts.unwrap_or(&default);
    let mut min_value: Option<Rational> = None;
    let mut min_upper: Option<Rational> = None;
    let mut max_value = Rational::zero();
    for m in shifts {
        let p = m + BigUint::one();
        let a = x.read(&p, k as usize)?;
        let b = y.read(&p, k as usize)?;
        let d = word_distance(&a, &b, base)?;
        min_value = Some(min_value.map_or(d.value.clone(), |v| v.min(d.value.clone())));
        min_upper = Some(min_upper.map_or(d.upper_bound.clone(), |v| v.min(d.upper_bound.clone())));
        max_value = max_value.max(d.value);
    }
    let min_value = min_value.unwrap_or_else(Rational::zero);
    let min_upper_bound = min_upper.unwrap_or_else(Rational::zero);
    let pass = !shifts.is_empty() && min_upper_bound <= base_power(base, k as u64) && max_value >= base_power(base, 1);
    Ok(ScrambledReport { stage: k, samples: shifts.len(), min_value, min_upper_bound, max_value, pass })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_delta, ConstructionParams, Schedule};
    use crate::symbolic::Alphabet;
    use std::collections::BTreeMap;

    const A: Alphabet = Alphabet::Finite(2);

    fn ledger(schedule: Schedule, stages: u32, literal: bool) -> SegmentLedger {
        let mut p = ConstructionParams::new(A, stages, schedule, Stream::hashed(A, 1), Stream::hashed(A, 2));
        p.literal_zsegments = literal;
        build_delta(&p).unwrap()
    }

    #[test]
    fn stage_one_proximal() {
        let led = ledger(Schedule::Full, 1, false);
        let p = LedgerPoint::new(&led, Stream::hashed(A, 3), Stream::hashed(A, 4)).unwrap();
        let r = proximal_check(&p, 1, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.slots[0].position, 1025u32.into());
        assert!(proximal_check(&p, 1, 2).is_err());
        assert!(proximal_check(&p, 2, 1).is_err());
    }

    #[test]
    fn literal_copies_break_for_adversarial_z() {
        let schedule = Schedule::Budget { maps: 4, blocks: 4 };
        let led = ledger(schedule, 2, true);
        let a1 = led.stage(2).unwrap().a1().clone();
        let mut overrides = BTreeMap::new();
        overrides.insert(&a1 * 2u32 + 1u32, 2);
        let z = Stream::Sparse { alphabet: A, default: 1, overrides };
        let p = LedgerPoint::new(&led, Stream::hashed(A, 3), z.clone()).unwrap();
        let r = proximal_check(&p, 2, 2).unwrap();
        assert!(!r.pass);
        assert_eq!(r.slots[1].distance.first_difference, Some(1));

        let led = ledger(schedule, 2, false);
        let p = LedgerPoint::new(&led, Stream::hashed(A, 3), z).unwrap();
        assert!(proximal_check(&p, 2, 2).unwrap().pass);
    }

    #[test]
    fn return_to_z_on_family() {
        let led = ledger(Schedule::Budget { maps: 4, blocks: 4 }, 2, false);
        let z = Stream::hashed(A, 9);
        let fam: Vec<_> = (0..4).map(|s| LedgerPoint::new(&led, Stream::hashed(A, s), z.clone()).unwrap()).collect();
        let r = return_to_z_check(&fam, &z, 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.diameter, Rational::zero());
        assert!(return_to_z_check(&[], &z, 2).unwrap().pass);
    }

    fn spec(members: Vec<(Word, Vec<Word>)>, d: u32) -> TargetSpec {
        TargetSpec { d, members: members.into_iter().map(|(x_prefix, targets)| TargetMember { x_prefix, targets }).collect() }
    }

    #[test]
    fn swap_targets_on_stage_one() {
        let led = ledger(Schedule::Full, 1, false);
        let z = Stream::hashed(A, 5);
        let s = spec(vec![(vec![1], vec![vec![2]]), (vec![2], vec![vec![1]])], 1);
        let pts = s.points(&led, &Stream::hashed(A, 6), &z).unwrap();
        let t = find_target_time(&s, 1, &pts).unwrap();
        assert!(verify_target_time(&t.q, &s, 1, &pts).unwrap().pass);
        for (p, want) in pts.iter().zip([2, 1]) {
            assert_eq!(p.read(&(&t.q + 1u32), 1).unwrap(), vec![want]);
        }
        let st = led.stage(1).unwrap();
        let idx = t.block.iter_u64_digits().next().unwrap() as usize;
        assert_eq!(st.anchor(idx, 1).unwrap(), &t.q + 1u32);
    }

    #[test]
    fn conflicting_members_get_zero_psi() {
        let led = ledger(Schedule::Full, 1, false);
        let z = Stream::hashed(A, 5);
        let s = spec(vec![(vec![1], vec![vec![2]]), (vec![1], vec![vec![1]])], 1);
        let pts = s.points(&led, &Stream::hashed(A, 6), &z).unwrap();
        assert_eq!(psi_lengths(&s, &pts, 1).unwrap(), vec![vec![0], vec![0]]);
    }

    #[test]
    fn budget_lacking_tuple() {
        let led = ledger(Schedule::Budget { maps: 4, blocks: 2 }, 2, false);
        let z = Stream::hashed(A, 5);
        let s = spec(vec![(vec![1, 2], vec![vec![2, 2]])], 1);
        let pts = s.points(&led, &Stream::hashed(A, 6), &z).unwrap();
        assert!(matches!(find_target_time(&s, 2, &pts), Err(Error::NoSuchTuple(_))));
    }

    #[test]
    fn block_of_prefix_matches_ordinal() {
        let lim = BigUint::from(1u32) << 40;
        for t in [vec![1, 1], vec![1, 3], vec![2, 1], vec![4, 4]] {
            let mut full = t.clone();
            full.resize(4, 1);
            assert_eq!(block_of_prefix(&t, 4, &lim), Some(tuple_ordinal(&full, 4)));
        }
        assert_eq!(block_of_prefix(&[2], 1000, &lim), None);
    }

    #[test]
    fn scrambled_same_point_fails() {
        let led = ledger(Schedule::Budget { maps: 4, blocks: 4 }, 3, false);
        let z = Stream::hashed(A, 5);
        let x = LedgerPoint::new(&led, Stream::hashed(A, 1), z.clone()).unwrap();
        let r = scrambled_pair_check(&x, &x, None).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max_value, Rational::zero());
        let y = LedgerPoint::new(&led, Stream::hashed(A, 2), z).unwrap();
        let r = scrambled_pair_check(&x, &y, None).unwrap();
        assert!(r.min_upper_bound <= base_power(2, 3));
    }
}
