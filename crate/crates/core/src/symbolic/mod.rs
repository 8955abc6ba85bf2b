//! Words, shift-space sequences, the shift metric, prefix replacement and
//! erasure along position sets.

mod ledger;
mod positions;
mod source;

pub use ledger::{
    window, LedgerPoint, Segment, SegmentKind, SegmentLedger, SegmentSource, StageLayout, ZGroup,
};
pub use positions::{upper_density, ArithmeticPositions, ExplicitPositions, PositionSet};
pub use source::{Stream, SymbolSource, Theta};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type Symbol = u32;
pub type Word = Vec<Symbol>;

/// `Finite(N)` is `{1, ..., N}`; `Countable` is the positive integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Alphabet {
    Finite(u32),
    Countable,
}

impl Alphabet {
    pub fn finite(n: u32) -> Result<Alphabet> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("alphabet size must be at least 2, got {n}")));
        }
        Ok(Alphabet::Finite(n))
    }

    /// Base of the metric `rho = base^-(k)`; countable sequences use 2.
    pub fn base(self) -> u32 {
        match self {
            Alphabet::Finite(n) => n,
            Alphabet::Countable => 2,
        }
    }

    pub fn admits(self, s: Symbol) -> bool {
        match self {
            Alphabet::Finite(n) => (1..=n).contains(&s),
            Alphabet::Countable => s >= 1,
        }
    }

    pub fn check_word(self, w: &[Symbol]) -> Result<()> {
        match w.iter().position(|&s| !self.admits(s)) {
            Some(i) => Err(Error::InvalidInput(format!(
                "symbol {} at position {} outside alphabet {:?}",
                w[i],
                i + 1,
                self
            ))),
            None => Ok(()),
        }
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alphabet::Finite(n) => s.serialize_u32(*n),
            Alphabet::Countable => s.serialize_str("countable"),
        }
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Alphabet, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) if s == "countable" => Ok(Alphabet::Countable),
            serde_json::Value::Number(n) => match n.as_u64() {
                Some(n) if (2..=u32::MAX as u64).contains(&n) => Ok(Alphabet::Finite(n as u32)),
                _ => Err(D::Error::custom("alphabet size must be an integer >= 2")),
            },
            _ => Err(D::Error::custom("alphabet must be an integer >= 2 or \"countable\"")),
        }
    }
}

/// Result of comparing two sequences up to a finite horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distance {
    /// `base^-(k-1)` where `k` is the first differing index, or 0 when the
    /// sequences agree on the whole horizon.
    #[serde(with = "crate::rational::ratstr")]
    pub value: Rational,
    /// Set when no difference was found within the horizon.
    pub horizon_limited: bool,
    /// A true upper bound on the distance: `value`, or `base^-horizon` when
    /// horizon limited.
    #[serde(with = "crate::rational::ratstr")]
    pub upper_bound: Rational,
    pub first_difference: Option<u64>,
}

pub fn base_power(base: u32, exp: u64) -> Rational {
    Rational::new(1.into(), num_bigint::BigInt::from(base).pow(exp as u32))
}

const CHUNK: usize = 1 << 14;

/// Shift metric `rho(x, y) = base^-(first differing index - 1)` evaluated on
/// the first `horizon` positions.
pub fn rho_distance(
    x: &(impl SymbolSource + ?Sized),
    y: &(impl SymbolSource + ?Sized),
    horizon: u64,
) -> Result<Distance> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let (ax, ay) = (x.alphabet(), y.alphabet());
    if ax != ay && !(is_word_alphabet(ax) || is_word_alphabet(ay)) {
        return Err(Error::AlphabetMismatch(format!("{ax:?} vs {ay:?}")));
    }
    let base = if ax == Alphabet::Countable { ay.base() } else { ax.base() };
    let mut pos = 1u64;
    let mut bx = Vec::new();
    let mut by = Vec::new();
    while pos <= horizon {
        let n = ((horizon - pos + 1) as usize).min(CHUNK);
        bx.clear();
        by.clear();
        let p = BigUint::from(pos);
        x.read_into(&p, n, &mut bx)?;
        y.read_into(&p, n, &mut by)?;
        if let Some(i) = bx.iter().zip(&by).position(|(a, b)| a != b) {
            let k = pos + i as u64;
            let v = base_power(base, k - 1);
            return Ok(Distance { value: v.clone(), horizon_limited: false, upper_bound: v, first_difference: Some(k) });
        }
        pos += n as u64;
    }
    Ok(Distance {
        value: Rational::zero(),
        horizon_limited: true,
        upper_bound: base_power(base, horizon),
        first_difference: None,
    })
}

/// Shift metric between two equal-length words read in base `base`.
pub fn word_distance(a: &[Symbol], b: &[Symbol], base: u32) -> Result<Distance> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("word lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::ZeroHorizon);
    }
    Ok(match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(i) => {
            let v = base_power(base, i as u64);
            Distance { value: v.clone(), horizon_limited: false, upper_bound: v, first_difference: Some(i as u64 + 1) }
        }
        None => Distance {
            value: Rational::zero(),
            horizon_limited: true,
            upper_bound: base_power(base, a.len() as u64),
            first_difference: None,
        },
    })
}

// Bare words report a countable alphabet; they compare against anything.
fn is_word_alphabet(a: Alphabet) -> bool {
    a == Alphabet::Countable
}

/// Replaces the first `|v|` symbols of `x` by `v`.
pub fn theta_replace<'a, S: SymbolSource + ?Sized>(v: &[Symbol], x: &'a S) -> Result<Theta<'a, S>> {
    let a = x.alphabet();
    a.check_word(v).map_err(|e| Error::AlphabetMismatch(e.to_string()))?;
    Ok(Theta { prefix: v.to_vec(), inner: x })
}

/// Streams the first `out_len` symbols of `x` that survive deleting the
/// positions in `marks`, calling `sink` on consecutive chunks.
pub fn gamma_erase_chunks(
    marks: &dyn PositionSet,
    x: &(impl SymbolSource + ?Sized),
    out_len: &BigUint,
    mut sink: impl FnMut(&[Symbol]) -> Result<()>,
) -> Result<()> {
    let mut emitted = BigUint::zero();
    let mut pos = BigUint::one();
    let mut buf = Vec::with_capacity(CHUNK);
    while &emitted < out_len {
        let need = out_len - &emitted;
        // Length of the unmarked run starting at `pos`.
        let run = marks.next_run(&pos);
        let free = match &run {
            Some((s, _)) if s <= &pos => BigUint::zero(),
            Some((s, _)) => s - &pos,
            None => need.clone(),
        };
        let take = free.min(need);
        if !take.is_zero() {
            check_defined(x, &(&pos + &take - 1u32), out_len, &emitted)?;
            let mut left = take.clone();
            while !left.is_zero() {
                let n = left.to_usize().map_or(CHUNK, |l| l.min(CHUNK));
                buf.clear();
                x.read_into(&pos, n, &mut buf)?;
                sink(&buf)?;
                pos += n;
                left -= n;
                emitted += n;
            }
        }
        if &emitted < out_len {
            if let Some((s, l)) = run {
                if s <= pos {
                    let next = s + l;
                    if next <= pos {
                        return Err(Error::InsufficientLength { needed: out_len.clone(), available: emitted });
                    }
                    pos = next;
                }
            }
        }
    }
    Ok(())
}

fn check_defined(
    x: &(impl SymbolSource + ?Sized),
    last: &BigUint,
    out_len: &BigUint,
    emitted: &BigUint,
) -> Result<()> {
    if let Some(l) = x.defined_len() {
        if last > &l {
            let _ = emitted;
            return Err(Error::InsufficientLength { needed: out_len.clone(), available: l });
        }
    }
    Ok(())
}

/// `gamma_A(x)` truncated to `out_len` symbols.
pub fn gamma_erase(
    marks: &dyn PositionSet,
    x: &(impl SymbolSource + ?Sized),
    out_len: usize,
) -> Result<Word> {
    let mut out = Vec::with_capacity(out_len);
    gamma_erase_chunks(marks, x, &BigUint::from(out_len), |c| {
        out.extend_from_slice(c);
        Ok(())
    })?;
    Ok(out)
}
