//! Infinite symbol sequences with random access at arbitrary positions.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Alphabet, Symbol, Word};
use crate::error::{Error, Result};

/// Read access to a (possibly infinite) sequence indexed from 1.
pub trait SymbolSource {
    fn alphabet(&self) -> Alphabet;

    /// Number of defined positions, `None` when infinite.
    fn defined_len(&self) -> Option<BigUint>;

    /// Appends the `len` symbols starting at `start` to `out`.
    fn read_into(&self, start: &BigUint, len: usize, out: &mut Vec<Symbol>) -> Result<()>;

    fn read(&self, start: &BigUint, len: usize) -> Result<Word> {
        let mut out = Vec::with_capacity(len);
        self.read_into(start, len, &mut out)?;
        Ok(out)
    }

    fn symbol(&self, pos: &BigUint) -> Result<Symbol> {
        Ok(self.read(pos, 1)?[0])
    }

    fn prefix(&self, len: usize) -> Result<Word> {
        self.read(&BigUint::one(), len)
    }
}

fn check_start(start: &BigUint) -> Result<()> {
    if start.is_zero() {
        return Err(Error::InvalidInput("positions are 1-based".into()));
    }
    Ok(())
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_position(seed: u64, pos: &BigUint) -> u64 {
    let mut h = splitmix(seed);
    for limb in pos.iter_u64_digits() {
        h = splitmix(h ^ limb);
    }
    h
}

/// Concrete sequences that can be written to and read from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stream {
    /// A finite word; reads past its end fail.
    Finite { alphabet: Alphabet, symbols: Word },
    /// The word repeated forever.
    Periodic { alphabet: Alphabet, symbols: Word },
    /// Pseudo-random symbols in `1..=max_symbol`; with `w_capped` the symbol
    /// at position `i` is at most `i`.
    Hashed { alphabet: Alphabet, seed: u64, max_symbol: Symbol, w_capped: bool },
    /// A constant default with explicit overrides.
    Sparse {
        alphabet: Alphabet,
        default: Symbol,
        #[serde(with = "sparse_map")]
        overrides: BTreeMap<BigUint, Symbol>,
    },
    /// `prefix` followed by `tail` read from position `|prefix| + 1` on.
    Prefixed { prefix: Word, tail: Box<Stream> },
}

mod sparse_map {
    use std::collections::BTreeMap;

    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<BigUint, u32>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(String, u32)> = m.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<BigUint, u32>, D::Error> {
        let v = Vec::<(String, u32)>::deserialize(d)?;
        v.into_iter()
            .map(|(k, s)| k.parse().map(|k| (k, s)).map_err(|_| D::Error::custom("bad position")))
            .collect()
    }
}

impl Stream {
    pub fn periodic(alphabet: Alphabet, symbols: Word) -> Result<Stream> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("periodic stream needs a nonempty period".into()));
        }
        alphabet.check_word(&symbols)?;
        Ok(Stream::Periodic { alphabet, symbols })
    }

    pub fn constant(alphabet: Alphabet, s: Symbol) -> Stream {
        Stream::Sparse { alphabet, default: s, overrides: BTreeMap::new() }
    }

    pub fn hashed(alphabet: Alphabet, seed: u64) -> Stream {
        let max_symbol = match alphabet {
            Alphabet::Finite(n) => n,
            Alphabet::Countable => u32::MAX,
        };
        Stream::Hashed { alphabet, seed, max_symbol, w_capped: alphabet == Alphabet::Countable }
    }

    pub fn prefixed(prefix: Word, tail: Stream) -> Stream {
        Stream::Prefixed { prefix, tail: Box::new(tail) }
    }

    /// Checks that every symbol of the first `len` positions is admissible
    /// and, for countable alphabets, lies in `W` (`x_i <= i`).
    pub fn validate_prefix(&self, len: usize, require_w: bool) -> Result<()> {
        let avail = match self.defined_len() {
            Some(l) => l.to_usize().unwrap_or(usize::MAX).min(len),
            None => len,
        };
        let w = self.prefix(avail)?;
        self.alphabet().check_word(&w)?;
        if require_w {
            if let Some(i) = w.iter().enumerate().position(|(i, &s)| s as usize > i + 1) {
                return Err(Error::InvalidInput(format!(
                    "symbol {} at position {} breaks the digit cap x_i <= i",
                    w[i],
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

impl SymbolSource for Stream {
    fn alphabet(&self) -> Alphabet {
        match self {
            Stream::Finite { alphabet, .. }
            | Stream::Periodic { alphabet, .. }
            | Stream::Hashed { alphabet, .. }
            | Stream::Sparse { alphabet, .. } => *alphabet,
            Stream::Prefixed { tail, .. } => tail.alphabet(),
        }
    }

    fn defined_len(&self) -> Option<BigUint> {
        match self {
            Stream::Finite { symbols, .. } => Some(BigUint::from(symbols.len())),
            Stream::Prefixed { prefix, tail } => tail.defined_len().map(|l| l + prefix.len()),
            _ => None,
        }
    }

    fn read_into(&self, start: &BigUint, len: usize, out: &mut Vec<Symbol>) -> Result<()> {
        check_start(start)?;
        if len == 0 {
            return Ok(());
        }
        match self {
            Stream::Finite { symbols, .. } => {
                let s = start.to_usize().filter(|s| s - 1 + len <= symbols.len());
                match s {
                    Some(s) => {
                        out.extend_from_slice(&symbols[s - 1..s - 1 + len]);
                        Ok(())
                    }
                    None => Err(Error::Undefined(start + len - 1u32)),
                }
            }
            Stream::Periodic { symbols, .. } => {
                let p = symbols.len();
                let mut i = ((start - 1u32) % p).to_usize().unwrap();
                let mut left = len;
                while left > 0 {
                    let take = left.min(p - i);
                    out.extend_from_slice(&symbols[i..i + take]);
                    left -= take;
                    i = 0;
                }
                Ok(())
            }
            Stream::Hashed { seed, max_symbol, w_capped, .. } => {
                let max = *max_symbol as u64;
                if let Some(s) = start.to_u64().filter(|s| s.checked_add(len as u64).is_some()) {
                    let base = splitmix(*seed);
                    if !*w_capped && max.is_power_of_two() {
                        out.extend((s..s + len as u64).map(|p| 1 + (splitmix(base ^ p) & (max - 1)) as Symbol));
                        return Ok(());
                    }
                    for p in s..s + len as u64 {
                        let cap = if *w_capped { max.min(p) } else { max };
                        let h = splitmix(base ^ p);
                        out.push(1 + (h % cap) as Symbol);
                    }
                } else {
                    let mut p = start.clone();
                    for _ in 0..len {
                        out.push(1 + (hash_position(*seed, &p) % max) as Symbol);
                        p += 1u32;
                    }
                }
                Ok(())
            }
            Stream::Sparse { default, overrides, .. } => {
                let end = start + len;
                let from = out.len();
                out.resize(from + len, *default);
                for (k, v) in overrides.range(start.clone()..end) {
                    let off = (k - start).to_usize().unwrap();
                    out[from + off] = *v;
                }
                Ok(())
            }
            Stream::Prefixed { prefix, tail } => {
                let pl = prefix.len();
                let mut left = len;
                let mut pos = start.clone();
                if let Some(s) = start.to_usize().filter(|&s| s <= pl) {
                    let take = left.min(pl - s + 1);
                    out.extend_from_slice(&prefix[s - 1..s - 1 + take]);
                    left -= take;
                    pos += take;
                }
                if left > 0 {
                    // Tail positions keep their original indices.
                    tail.read_into(&pos, left, out)?;
                }
                Ok(())
            }
        }
    }
}

/// `theta(v, x)`: the sequence `x` with its first `|v|` symbols replaced by `v`.
#[derive(Clone, Debug)]
pub struct Theta<'a, S: SymbolSource + ?Sized> {
    pub prefix: Word,
    pub inner: &'a S,
}

impl<S: SymbolSource + ?Sized> SymbolSource for Theta<'_, S> {
    fn alphabet(&self) -> Alphabet {
        self.inner.alphabet()
    }

    fn defined_len(&self) -> Option<BigUint> {
        self.inner.defined_len().map(|l| l.max(BigUint::from(self.prefix.len())))
    }

    fn read_into(&self, start: &BigUint, len: usize, out: &mut Vec<Symbol>) -> Result<()> {
        check_start(start)?;
        let pl = self.prefix.len();
        let mut left = len;
        let mut pos = start.clone();
        if let Some(s) = start.to_usize().filter(|&s| s <= pl) {
            let take = left.min(pl - s + 1);
            out.extend_from_slice(&self.prefix[s - 1..s - 1 + take]);
            left -= take;
            pos += take;
        }
        if left > 0 {
            self.inner.read_into(&pos, left, out)?;
        }
        Ok(())
    }
}

/// Finite words act as sources too.
impl SymbolSource for [Symbol] {
    fn alphabet(&self) -> Alphabet {
        Alphabet::Countable
    }

    fn defined_len(&self) -> Option<BigUint> {
        Some(BigUint::from(self.len()))
    }

    fn read_into(&self, start: &BigUint, len: usize, out: &mut Vec<Symbol>) -> Result<()> {
        check_start(start)?;
        match start.to_usize().filter(|s| s - 1 + len <= self.len()) {
            Some(s) => {
                out.extend_from_slice(&self[s - 1..s - 1 + len]);
                Ok(())
            }
            None => Err(Error::Undefined(start + len - 1u32)),
        }
    }
}
