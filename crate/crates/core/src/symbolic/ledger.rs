//! Segment ledgers: the layout of a constructed sequence as a list of
//! contiguous segments, each pointing back to where its content comes from.
//!
//! A ledger does not depend on the base point `x` or the reference point
//! `z`; a [`LedgerPoint`] pairs a ledger with both and reads symbols.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Alphabet, PositionSet, Stream, Symbol, SymbolSource, Word};
use crate::construction::selfmap;
use crate::error::{Error, Result};
use crate::rational::{dec, dec_vec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZGroup {
    /// Segments anchored at multiples of `A_1`.
    First,
    /// Copies of `z[1..n]` anchored at multiples of `B_n`.
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Filler,
    ZSegment,
    PhiWord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "src", rename_all = "snake_case")]
pub enum SegmentSource {
    /// Base-point symbols `x[cursor ..]`.
    Filler {
        #[serde(with = "dec")]
        cursor: BigUint,
    },
    /// Reference-point symbols `z[z_start ..]`.
    #[serde(rename = "zseg")]
    ZSegment {
        #[serde(with = "dec")]
        z_start: BigUint,
        stage: u32,
        group: ZGroup,
        slot: u32,
    },
    /// The image of `x[1..stage]` under map number `map` of the stage table.
    #[serde(rename = "phi")]
    PhiWord {
        stage: u32,
        #[serde(with = "dec")]
        block: BigUint,
        slot: u64,
        map: usize,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        reembedded: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "dec")]
    pub start: BigUint,
    #[serde(with = "dec")]
    pub len: BigUint,
    #[serde(flatten)]
    pub source: SegmentSource,
}

impl Segment {
    pub fn kind(&self) -> SegmentKind {
        match self.source {
            SegmentSource::Filler { .. } => SegmentKind::Filler,
            SegmentSource::ZSegment { .. } => SegmentKind::ZSegment,
            SegmentSource::PhiWord { .. } => SegmentKind::PhiWord,
        }
    }

    /// Whether the segment belongs to the erased position set.
    pub fn marked(&self) -> bool {
        match self.source {
            SegmentSource::Filler { .. } => false,
            SegmentSource::ZSegment { .. } => true,
            SegmentSource::PhiWord { reembedded, .. } => !reembedded,
        }
    }

    pub fn end(&self) -> BigUint {
        &self.start + &self.len - 1u32
    }
}

/// Parameters and anchors of one construction stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLayout {
    pub stage: u32,
    /// Letters per coordinate of the map domain (`N`, or `n` for countable).
    pub letters: u32,
    /// Number of self-maps in the stage table (`L`).
    pub table_size: u64,
    /// Canonical indices of the maps, in table order.
    #[serde(with = "dec_vec")]
    pub maps: Vec<BigUint>,
    #[serde(with = "dec")]
    pub blocks: BigUint,
    #[serde(with = "dec")]
    pub s: BigUint,
    #[serde(with = "dec")]
    pub t: BigUint,
    /// `A_1, ..., A_{2n}`.
    #[serde(with = "dec_vec")]
    pub a: Vec<BigUint>,
    #[serde(with = "dec")]
    pub b: BigUint,
    #[serde(with = "dec")]
    pub start: BigUint,
    #[serde(with = "dec")]
    pub z_end: BigUint,
    #[serde(with = "dec")]
    pub phi_start: BigUint,
    #[serde(with = "dec")]
    pub end: BigUint,
    #[serde(with = "dec")]
    pub cursor_start: BigUint,
    #[serde(with = "dec")]
    pub cursor_end: BigUint,
    /// `r_{i,1}` for each block `i`.
    #[serde(with = "dec_vec")]
    pub anchors: Vec<BigUint>,
    pub literal_zsegments: bool,
}

impl StageLayout {
    pub fn a1(&self) -> &BigUint {
        &self.a[0]
    }

    /// `r_{i,j} = j (r_{i,1} - 1) + 1`, both indices 1-based.
    pub fn anchor(&self, block: usize, slot: u64) -> Option<BigUint> {
        let r1 = self.anchors.get(block.checked_sub(1)?)?;
        if slot == 0 || slot > self.table_size {
            return None;
        }
        Some((r1 - 1u32) * slot + 1u32)
    }

    /// Length of the stage's chaotic part.
    pub fn chaotic_len(&self) -> BigUint {
        &self.end - &self.phi_start + 1u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLedger")]
pub struct SegmentLedger {
    pub alphabet: Alphabet,
    pub segments: Vec<Segment>,
    pub stage_layouts: Vec<StageLayout>,
    #[serde(skip)]
    marks_before: Vec<BigUint>,
}

#[derive(Deserialize)]
struct RawLedger {
    alphabet: Alphabet,
    segments: Vec<Segment>,
    stage_layouts: Vec<StageLayout>,
}

impl TryFrom<RawLedger> for SegmentLedger {
    type Error = Error;
    fn try_from(r: RawLedger) -> Result<Self> {
        SegmentLedger::new(r.alphabet, r.segments, r.stage_layouts)
    }
}

impl SegmentLedger {
    /// Builds a ledger after checking that segments tile `[1, total]`.
    pub fn new(alphabet: Alphabet, segments: Vec<Segment>, stage_layouts: Vec<StageLayout>) -> Result<Self> {
        let mut next = BigUint::from(1u32);
        let mut marks_before = Vec::with_capacity(segments.len() + 1);
        let mut marks = BigUint::zero();
        for (i, s) in segments.iter().enumerate() {
            if s.start != next || s.len.is_zero() {
                return Err(Error::InvalidInput(format!("segment {i} breaks contiguity at {}", s.start)));
            }
            marks_before.push(marks.clone());
            if s.marked() {
                marks += &s.len;
            }
            next += &s.len;
        }
        marks_before.push(marks);
        Ok(SegmentLedger { alphabet, segments, stage_layouts, marks_before })
    }

    pub fn total_length(&self) -> BigUint {
        self.segments.last().map_or_else(BigUint::zero, |s| s.end())
    }

    pub fn stages(&self) -> u32 {
        self.stage_layouts.len() as u32
    }

    pub fn stage(&self, n: u32) -> Result<&StageLayout> {
        self.stage_layouts
            .get((n as usize).wrapping_sub(1))
            .ok_or_else(|| Error::InvalidInput(format!("stage {n} was not built")))
    }

    /// Index of the segment containing `pos`.
    pub fn segment_at(&self, pos: &BigUint) -> Option<usize> {
        let i = self.segments.partition_point(|s| &s.start <= pos);
        if i == 0 {
            return None;
        }
        let s = &self.segments[i - 1];
        (pos <= &s.end()).then_some(i - 1)
    }

    pub fn total_marks(&self) -> &BigUint {
        self.marks_before.last().unwrap()
    }

    /// Marked segment starts, in order.
    pub fn mark_segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.marked())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl PositionSet for SegmentLedger {
    fn count_le(&self, m: &BigUint) -> BigUint {
        let i = self.segments.partition_point(|s| &s.start <= m);
        if i == 0 {
            return BigUint::zero();
        }
        let s = &self.segments[i - 1];
        let mut c = self.marks_before[i - 1].clone();
        if s.marked() {
            let end = s.end();
            c += if m >= &end { s.len.clone() } else { m - &s.start + 1u32 };
        }
        c
    }

    fn next_run(&self, from: &BigUint) -> Option<(BigUint, BigUint)> {
        let mut i = match self.segment_at(from) {
            Some(i) => i,
            None => self.segments.partition_point(|s| &s.start <= from),
        };
        while let Some(s) = self.segments.get(i) {
            if s.marked() && &s.end() >= from {
                return Some((s.start.clone(), s.len.clone()));
            }
            i += 1;
        }
        None
    }
}

/// A ledger paired with its base point `x` and reference point `z`.
#[derive(Clone, Debug)]
pub struct LedgerPoint<'a> {
    pub ledger: &'a SegmentLedger,
    pub x: Stream,
    pub z: Stream,
    /// Symbol returned beyond the ledger's end; `None` makes such reads fail.
    pub pad: Option<Symbol>,
    images: Vec<Vec<Word>>,
}

impl<'a> LedgerPoint<'a> {
    pub fn new(ledger: &'a SegmentLedger, x: Stream, z: Stream) -> Result<Self> {
        let mut images = Vec::with_capacity(ledger.stage_layouts.len());
        for st in &ledger.stage_layouts {
            let arg = x.prefix(st.stage as usize)?;
            let mut v = Vec::with_capacity(st.maps.len());
            for c in &st.maps {
                v.push(selfmap::apply_canonical(c, st.letters, st.stage, &arg)?);
            }
            images.push(v);
        }
        Ok(LedgerPoint { ledger, x, z, pad: None, images })
    }

    pub fn with_pad(mut self, pad: Symbol) -> Self {
        self.pad = Some(pad);
        self
    }

    /// The image of `x[1..n]` under map `map` (1-based) of stage `n`.
    pub fn phi_image(&self, stage: u32, map: usize) -> Option<&Word> {
        self.images.get(stage as usize - 1)?.get(map.checked_sub(1)?)
    }
}

impl SymbolSource for LedgerPoint<'_> {
    fn alphabet(&self) -> Alphabet {
        self.ledger.alphabet
    }

    fn defined_len(&self) -> Option<BigUint> {
        match self.pad {
            Some(_) => None,
            None => Some(self.ledger.total_length()),
        }
    }

    fn read_into(&self, start: &BigUint, len: usize, out: &mut Vec<Symbol>) -> Result<()> {
        if start.is_zero() {
            return Err(Error::InvalidInput("positions are 1-based".into()));
        }
        let mut pos = start.clone();
        let mut left = len;
        let total = self.ledger.total_length();
        let mut idx = self.ledger.segment_at(&pos);
        while left > 0 {
            let Some(i) = idx else {
                return match self.pad {
                    Some(p) => {
                        out.resize(out.len() + left, p);
                        Ok(())
                    }
                    None => Err(Error::Undefined(if pos > total { pos } else { total + 1u32 })),
                };
            };
            let seg = &self.ledger.segments[i];
            let off = &pos - &seg.start;
            let avail = &seg.len - &off;
            let n = avail.to_usize().map_or(left, |a| a.min(left));
            match &seg.source {
                SegmentSource::Filler { cursor } => self.x.read_into(&(cursor + &off), n, out)?,
                SegmentSource::ZSegment { z_start, .. } => self.z.read_into(&(z_start + &off), n, out)?,
                SegmentSource::PhiWord { stage, map, .. } => {
                    let w = self
                        .phi_image(*stage, *map)
                        .ok_or_else(|| Error::InvalidInput(format!("stage {stage} has no map {map}")))?;
                    let o = off.to_usize().unwrap();
                    out.extend_from_slice(&w[o..o + n]);
                }
            }
            left -= n;
            pos += n;
            idx = if i + 1 < self.ledger.segments.len() { Some(i + 1) } else { None };
        }
        Ok(())
    }
}

/// Reads `len` symbols of the constructed sequence starting at `start`.
pub fn window(
    ledger: &SegmentLedger,
    start: &BigUint,
    len: usize,
    x: &Stream,
    z: &Stream,
) -> Result<Word> {
    LedgerPoint::new(ledger, x.clone(), z.clone())?.read(start, len)
}
