//! Stage-by-stage construction of the chaotic sequence `Delta(x)` as a
//! segment ledger.
//!
//! Stage `n` appends, after everything built so far:
//!
//! ```text
//! V_{n,1} z[.]  V_{n,2} z[.] ... V_{n,n} z[.]  V_{n,n+1} z[1..n] ... z[1..n]  blocks
//! ```
//!
//! The first group of `z` segments sits at `j A_1 + 1`, the second group at
//! `j B_n + 1`, `j = 1..n`. Block `i` places `L` words `phi_{p_j}(x[1..n])` at
//! `r_{i,j} = j (r_{i,1} - 1) + 1`, where `p` is the `i`-th tuple of
//! `{1..L}^L` in lexicographic order. Fillers between the marked segments
//! consume `x` left to right.

pub mod density;
pub mod selfmap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use density::{density_profile, stage_density_checks, DensityCase, DensityPoint, RangeDensity};
pub use selfmap::{budget_self_maps, enumerate_self_maps, SelfMapTable};

use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Segment, SegmentLedger, SegmentSource, StageLayout, Stream, SymbolSource, ZGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Schedule {
    /// Every self-map and every tuple of maps.
    Full,
    /// The first `maps` self-maps plus all constant maps, and only the first
    /// `blocks` tuples.
    Budget { maps: u64, blocks: u64 },
}

/// Size limits that turn runaway enumerations into errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub table: u64,
    pub blocks: u64,
    pub segments: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { table: 1 << 20, blocks: 1 << 16, segments: 1 << 22 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub alphabet: Alphabet,
    pub max_stage: u32,
    pub schedule: Schedule,
    pub z: Stream,
    pub x: Stream,
    /// Put `z[A_1+1 .. A_1+n]` in every first-group slot instead of the
    /// symbols that sit at each slot's own position in `z`.
    pub literal_zsegments: bool,
    /// Re-emit all earlier chaotic blocks (unmarked) before each new stage's
    /// blocks.
    pub reembed_phi: bool,
    #[serde(default)]
    pub caps: Caps,
}

impl ConstructionParams {
    pub fn new(alphabet: Alphabet, max_stage: u32, schedule: Schedule, z: Stream, x: Stream) -> Self {
        ConstructionParams {
            alphabet,
            max_stage,
            schedule,
            z,
            x,
            literal_zsegments: false,
            reembed_phi: false,
            caps: Caps::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.max_stage == 0 {
            problems.push("max_stage must be at least 1".to_string());
        }
        if let Alphabet::Finite(n) = self.alphabet {
            if n < 2 {
                problems.push(format!("alphabet size must be at least 2, got {n}"));
            }
        }
        if let Schedule::Budget { maps, blocks } = self.schedule {
            if maps == 0 || blocks == 0 {
                problems.push("budget needs at least one map and one block".to_string());
            }
        }
        for (name, s) in [("x", &self.x), ("z", &self.z)] {
            if s.alphabet() != self.alphabet {
                problems.push(format!("{name} uses alphabet {:?}, expected {:?}", s.alphabet(), self.alphabet));
            }
        }
        let countable = self.alphabet == Alphabet::Countable;
        if let Err(e) = self.x.validate_prefix(4096, countable) {
            problems.push(format!("x: {e}"));
        }
        if let Err(e) = self.z.validate_prefix(4096, false) {
            problems.push(format!("z: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }
}

/// The map table used at stage `n`.
pub fn stage_table(params: &ConstructionParams, n: u32) -> Result<SelfMapTable> {
    match params.schedule {
        Schedule::Full => enumerate_self_maps(params.alphabet, n, params.caps.table),
        Schedule::Budget { maps, .. } => budget_self_maps(params.alphabet, n, maps, params.caps.table),
    }
}

fn stage_blocks(params: &ConstructionParams, table_len: u64, n: u32) -> Result<BigUint> {
    let all = BigUint::from(table_len).pow(table_len as u32);
    let blocks = match params.schedule {
        Schedule::Full => all,
        Schedule::Budget { blocks, .. } => all.min(BigUint::from(blocks)),
    };
    if blocks > BigUint::from(params.caps.blocks) {
        return Err(Error::CapExceeded {
            what: format!("block count at stage {n}"),
            count: blocks,
            cap: params.caps.blocks.into(),
        });
    }
    Ok(blocks)
}

/// Computes the layout of stage `n` given the layouts of stages `1..n`.
///
/// `A_1` and `A_{n+1}` are the smallest values meeting the spacing
/// requirements; all other gaps follow from them.
pub fn plan_stage(params: &ConstructionParams, n: u32, prev: &[StageLayout]) -> Result<StageLayout> {
    if n == 0 || prev.len() != n as usize - 1 {
        return Err(Error::InvalidInput(format!("stage {n} needs the {} earlier layouts", n.saturating_sub(1))));
    }
    let table = stage_table(params, n)?;
    let l = table.len() as u64;
    let blocks = stage_blocks(params, l, n)?;
    let nn = BigUint::from(n);
    let s = &blocks * l;
    let t = &nn * &s + 2u32 * &nn * &nn;

    let (start, cursor_start, marks_before) = match prev.last() {
        None => (BigUint::one(), BigUint::one(), BigUint::zero()),
        Some(p) => (&p.end + 1u32, p.cursor_end.clone(), prev.iter().map(|st| &st.t).sum::<BigUint>()),
    };
    let prev_end = &start - 1u32;

    let (a1, a_next) = if n == 1 {
        let a1 = s.clone().max(BigUint::from(2u32));
        let a2 = &a1 - 1u32;
        (a1, a2)
    } else {
        let need = &nn * (&marks_before + 2u32 * &nn * &nn) + 1u32;
        let a1 = need.max(&prev_end + 1u32);
        // A_{2n} = n A_1 + A_{n+1} must exceed T_{n-1} + t_n - (n+1).
        let need = &marks_before + &t;
        let floor = &nn * &a1 + &nn;
        let a_next = if need > floor { need - floor } else { BigUint::one() };
        (a1, a_next.max(BigUint::one()))
    };

    let b = &nn * &a1 + &nn + &a_next;
    let mut a = Vec::with_capacity(2 * n as usize);
    a.push(a1.clone());
    for _ in 2..=n {
        a.push(&a1 - &nn);
    }
    a.push(a_next.clone());
    for _ in 2..=n {
        a.push(&b - &nn);
    }
    let z_end = &nn * &b + &nn;

    let reembed_len: BigUint = if params.reembed_phi {
        prev.iter().map(|st| st.chaotic_len()).sum()
    } else {
        BigUint::zero()
    };
    let phi_start = &z_end + 1u32 + &reembed_len;

    let nblocks = blocks.to_usize().unwrap();
    let mut anchors = Vec::with_capacity(nblocks);
    let mut r = phi_start.clone();
    for _ in 0..nblocks {
        anchors.push(r.clone());
        r = (&r - 1u32) * l + &nn + 1u32;
    }
    let end = &r - 1u32;

    // Filler symbols consumed: V_{n,1..2n} plus U fillers.
    let mut fill: BigUint = &a1 - &prev_end;
    for v in &a[1..] {
        fill += v;
    }
    for r1 in &anchors {
        fill += (r1 - 1u32 - &nn) * (l - 1);
    }
    let cursor_end = &cursor_start + fill;

    Ok(StageLayout {
        stage: n,
        letters: table.letters,
        table_size: l,
        maps: table.maps,
        blocks,
        s,
        t,
        a,
        b,
        start,
        z_end,
        phi_start,
        end,
        cursor_start,
        cursor_end,
        anchors,
        literal_zsegments: params.literal_zsegments,
    })
}

/// Number of segments stage `n` adds.
fn segment_estimate(st: &StageLayout, prev_segments: u64, reembed: bool) -> u64 {
    let n = st.stage as u64;
    let blocks = st.blocks.to_u64().unwrap_or(u64::MAX);
    let per_block = (2 * st.table_size).saturating_sub(1);
    (4 * n).saturating_add(blocks.saturating_mul(per_block)).saturating_add(if reembed { prev_segments } else { 0 })
}

struct Emitter {
    segments: Vec<Segment>,
    pos: BigUint,
    cursor: BigUint,
}

impl Emitter {
    fn push(&mut self, len: BigUint, source: SegmentSource) {
        debug_assert!(!len.is_zero());
        let start = self.pos.clone();
        self.pos += &len;
        self.segments.push(Segment { start, len, source });
    }

    fn filler(&mut self, len: BigUint) {
        if len.is_zero() {
            return;
        }
        let cursor = self.cursor.clone();
        self.cursor += &len;
        self.push(len, SegmentSource::Filler { cursor });
    }
}

/// Lexicographic tuple number `i` (1-based) of `{1..L}^L`.
pub fn tuple_digits(i: &BigUint, l: u64) -> Vec<usize> {
    let mut v = vec![1usize; l as usize];
    let mut r = i - 1u32;
    for k in (0..l as usize).rev() {
        let d = (&r % l).to_usize().unwrap();
        v[k] = d + 1;
        r /= l;
    }
    v
}

/// Block number (1-based) of a tuple in lexicographic order.
pub fn tuple_ordinal(t: &[usize], l: u64) -> BigUint {
    let mut r = BigUint::zero();
    for &d in t {
        r = r * l + (d - 1);
    }
    r + 1u32
}

fn emit_stage(em: &mut Emitter, st: &StageLayout, earlier: &[Segment], earlier_layouts: &[StageLayout]) {
    let n = st.stage;
    let nn = BigUint::from(n);
    let a1 = st.a1().clone();
    debug_assert_eq!(em.cursor, st.cursor_start);

    em.filler(&a1 - (&st.start - 1u32));
    for j in 1..=n {
        let anchor = &a1 * j + 1u32;
        let z_start = if st.literal_zsegments { &a1 + 1u32 } else { anchor.clone() };
        em.push(nn.clone(), SegmentSource::ZSegment { z_start, stage: n, group: ZGroup::First, slot: j });
        em.filler(st.a[j as usize].clone());
    }
    for j in 1..=n {
        em.push(nn.clone(), SegmentSource::ZSegment { z_start: BigUint::one(), stage: n, group: ZGroup::Second, slot: j });
        if j < n {
            em.filler(st.a[(n + j) as usize].clone());
        }
    }

    for lay in earlier_layouts {
        for seg in earlier.iter().filter(|s| s.start >= lay.phi_start && s.start <= lay.end) {
            let source = match &seg.source {
                SegmentSource::PhiWord { stage, block, slot, map, .. } => SegmentSource::PhiWord {
                    stage: *stage,
                    block: block.clone(),
                    slot: *slot,
                    map: *map,
                    reembedded: true,
                },
                other => other.clone(),
            };
            em.push(seg.len.clone(), source);
        }
    }

    let l = st.table_size;
    for (bi, r1) in st.anchors.iter().enumerate() {
        let block = BigUint::from(bi + 1);
        let tuple = tuple_digits(&block, l);
        let gap = r1 - 1u32 - &nn;
        for (j, &map) in tuple.iter().enumerate() {
            em.push(
                nn.clone(),
                SegmentSource::PhiWord { stage: n, block: block.clone(), slot: j as u64 + 1, map, reembedded: false },
            );
            if (j as u64) + 1 < l {
                em.filler(gap.clone());
            }
        }
    }
    debug_assert_eq!(em.pos, &st.end + 1u32);
    debug_assert_eq!(em.cursor, st.cursor_end);
}

/// Builds stages `1..=max_stage`.
pub fn build_delta(params: &ConstructionParams) -> Result<SegmentLedger> {
    params.validate()?;
    let mut layouts: Vec<StageLayout> = Vec::new();
    let mut em = Emitter { segments: Vec::new(), pos: BigUint::one(), cursor: BigUint::one() };
    for n in 1..=params.max_stage {
        let st = plan_stage(params, n, &layouts)?;
        let est = segment_estimate(&st, em.segments.len() as u64, params.reembed_phi);
        if (em.segments.len() as u64).saturating_add(est) > params.caps.segments {
            return Err(Error::CapExceeded {
                what: format!("segment count through stage {n}"),
                count: (em.segments.len() as u64).saturating_add(est).into(),
                cap: params.caps.segments.into(),
            });
        }
        let earlier = if params.reembed_phi { em.segments.clone() } else { Vec::new() };
        let earlier_layouts: &[StageLayout] = if params.reembed_phi { &layouts } else { &[] };
        emit_stage(&mut em, &st, &earlier, earlier_layouts);
        layouts.push(st);
    }
    SegmentLedger::new(params.alphabet, em.segments, layouts)
}

/// The countable-alphabet variant: maps act on `{1..n}^n` and the base point
/// must satisfy `x_i <= i`.
pub fn build_delta_countable(params: &ConstructionParams) -> Result<SegmentLedger> {
    if params.alphabet != Alphabet::Countable {
        return Err(Error::InvalidInput("countable construction needs a countable alphabet".into()));
    }
    if params.schedule == Schedule::Full && params.max_stage >= 2 {
        return Err(Error::InvalidInput("the full schedule is infeasible beyond stage 1 on a countable alphabet".into()));
    }
    build_delta(params)
}

/// The word of length `n + 1` cutting out the cylinder that holds the stage
/// `n` base points: `N...N1` for finite alphabets, `12...n1` for countable.
pub fn base_cell_word(alphabet: Alphabet, n: u32) -> Vec<u32> {
    let mut w: Vec<u32> = match alphabet {
        Alphabet::Finite(k) => vec![k; n as usize],
        Alphabet::Countable => (1..=n).collect(),
    };
    w.push(1);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(schedule: Schedule, stages: u32) -> ConstructionParams {
        let a = Alphabet::Finite(2);
        ConstructionParams::new(a, stages, schedule, Stream::hashed(a, 1), Stream::hashed(a, 2))
    }

    #[test]
    fn tuple_order() {
        assert_eq!(tuple_digits(&1u32.into(), 4), vec![1, 1, 1, 1]);
        assert_eq!(tuple_digits(&2u32.into(), 4), vec![1, 1, 1, 2]);
        assert_eq!(tuple_digits(&256u32.into(), 4), vec![4, 4, 4, 4]);
        for i in 1..=256u32 {
            assert_eq!(tuple_ordinal(&tuple_digits(&i.into(), 4), 4), i.into());
        }
    }

    #[test]
    fn full_stage_one_layout() {
        let led = build_delta(&params(Schedule::Full, 1)).unwrap();
        let st = led.stage(1).unwrap();
        assert_eq!(st.s, 1024u32.into());
        assert_eq!(st.t, 1026u32.into());
        assert_eq!(st.b, 2048u32.into());
        assert_eq!(st.anchor(1, 1).unwrap(), 2050u32.into());
        assert_eq!(st.anchor(1, 2).unwrap(), 4099u32.into());
        assert_eq!(led.total_marks(), &BigUint::from(1026u32));
    }

    #[test]
    fn stage_one_too_small_is_padded() {
        let a = Alphabet::Countable;
        let p = ConstructionParams::new(a, 1, Schedule::Full, Stream::constant(a, 1), Stream::constant(a, 1));
        let led = build_delta_countable(&p).unwrap();
        assert_eq!(led.total_length(), 6u32.into());
    }

    #[test]
    fn build_rejects_bad_params() {
        let mut p = params(Schedule::Full, 1);
        p.max_stage = 0;
        assert!(build_delta(&p).is_err());
        let p = params(Schedule::Full, 2);
        assert!(matches!(build_delta(&p), Err(Error::CapExceeded { .. })));
    }
}
