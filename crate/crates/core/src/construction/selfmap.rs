//! Self-maps of `{1..b}^n` in canonical (lexicographic value-table) order.
//!
//! The domain words are ranked lexicographically from 0. A map is its value
//! table `(v_0, ..., v_{D-1})` of image ranks, read as a base-`D` numeral
//! with `v_0` most significant; that numeral is the map's canonical index.
//! Index 0 is the constant map onto `11...1`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, Symbol, Word};

/// Letters per coordinate at stage `n`: `N`, or `n` for countable alphabets.
pub fn letters_for(alphabet: Alphabet, n: u32) -> u32 {
    match alphabet {
        Alphabet::Finite(k) => k,
        Alphabet::Countable => n,
    }
}

/// `D = b^n`, the number of domain words.
pub fn domain_size(letters: u32, n: u32) -> BigUint {
    BigUint::from(letters).pow(n)
}

/// `D^D`, or `None` when it has more than `max_bits` bits.
pub fn full_table_size(letters: u32, n: u32, max_bits: u64) -> Option<BigUint> {
    let d = domain_size(letters, n);
    let dd = d.to_u64()?;
    let bits = (dd as f64) * (dd as f64).log2();
    if bits > max_bits as f64 {
        return None;
    }
    Some(d.pow(dd as u32))
}

/// `l_n` as an exact integer when small enough to write down.
pub fn table_size(alphabet: Alphabet, n: u32) -> Option<BigUint> {
    full_table_size(letters_for(alphabet, n), n, 1 << 20)
}

/// Canonical indices of maps in table order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfMapTable {
    pub letters: u32,
    pub n: u32,
    pub maps: Vec<BigUint>,
}

impl SelfMapTable {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Applies map number `idx` (1-based).
    pub fn apply(&self, idx: usize, w: &[Symbol]) -> Result<Word> {
        let c = self
            .maps
            .get(idx.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidInput(format!("no map {idx} in a table of {}", self.maps.len())))?;
        apply_canonical(c, self.letters, self.n, w)
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("stage must be at least 1".into()));
    }
    Ok(())
}

/// All `D^D` maps, failing when the table would exceed `cap`.
pub fn enumerate_self_maps(alphabet: Alphabet, n: u32, cap: u64) -> Result<SelfMapTable> {
    check_n(n)?;
    let letters = letters_for(alphabet, n);
    let size = full_table_size(letters, n, 64).filter(|s| s <= &BigUint::from(cap));
    match size {
        Some(s) => {
            let count = s.to_u64().unwrap();
            Ok(SelfMapTable { letters, n, maps: (0..count).map(BigUint::from).collect() })
        }
        None => Err(Error::CapExceeded {
            what: format!("self-map table at stage {n}"),
            count: full_table_size(letters, n, 1 << 16)
                .unwrap_or_else(|| BigUint::from(u64::MAX) << 64u32),
            cap: cap.into(),
        }),
    }
}

/// The first `first` maps together with every constant map, in canonical
/// order. Equals the full table when `first >= D^D`.
pub fn budget_self_maps(alphabet: Alphabet, n: u32, first: u64, cap: u64) -> Result<SelfMapTable> {
    check_n(n)?;
    let letters = letters_for(alphabet, n);
    let d = domain_size(letters, n);
    let dd = d.to_u64().filter(|&v| v <= cap).ok_or_else(|| Error::CapExceeded {
        what: format!("constant maps at stage {n}"),
        count: d.clone(),
        cap: cap.into(),
    })?;
    let full = full_table_size(letters, n, 64);
    let first = match &full {
        Some(f) => BigUint::from(first).min(f.clone()),
        None => BigUint::from(first),
    };
    let mut maps: Vec<BigUint> = Vec::new();
    let mut i = BigUint::zero();
    while i < first {
        maps.push(i.clone());
        i += 1u32;
    }
    // The constant map onto rank r has every digit equal to r, so its index
    // is r * (D^D - 1) / (D - 1) (or 0 when D = 1).
    let repunit = if dd == 1 {
        BigUint::zero()
    } else {
        (d.pow(dd as u32) - 1u32) / (&d - 1u32)
    };
    for r in 0..dd {
        maps.push(&repunit * r);
    }
    maps.sort();
    maps.dedup();
    if maps.len() as u64 > cap {
        return Err(Error::CapExceeded {
            what: format!("budgeted self-map table at stage {n}"),
            count: maps.len().into(),
            cap: cap.into(),
        });
    }
    Ok(SelfMapTable { letters, n, maps })
}

/// Lexicographic rank (from 0) of `w` among words of `{1..letters}^|w|`.
pub fn word_rank(w: &[Symbol], letters: u32) -> Result<BigUint> {
    let mut r = BigUint::zero();
    for &s in w {
        if s == 0 || s > letters {
            return Err(Error::InvalidInput(format!("symbol {s} outside 1..={letters}")));
        }
        r = r * letters + (s - 1);
    }
    Ok(r)
}

pub fn word_unrank(mut r: BigUint, letters: u32, n: u32) -> Word {
    let mut w = vec![1; n as usize];
    let b = BigUint::from(letters);
    for i in (0..n as usize).rev() {
        let (q, d) = r.div_rem(&b);
        w[i] = d.to_u32().unwrap() + 1;
        r = q;
    }
    w
}

/// Applies the map with canonical index `c` to a domain word.
pub fn apply_canonical(c: &BigUint, letters: u32, n: u32, w: &[Symbol]) -> Result<Word> {
    if w.len() != n as usize {
        return Err(Error::InvalidInput(format!("map argument has length {}, expected {n}", w.len())));
    }
    let d = domain_size(letters, n);
    let dd = d.to_u32().ok_or_else(|| Error::InvalidInput("domain too large".into()))?;
    let rank = word_rank(w, letters)?.to_u32().unwrap();
    let place = if dd == 1 { BigUint::one() } else { d.pow(dd - 1 - rank) };
    let v = (c / place) % &d;
    Ok(word_unrank(v, letters, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_letters_stage_one() {
        let t = enumerate_self_maps(Alphabet::Finite(2), 1, 1 << 20).unwrap();
        assert_eq!(t.len(), 4);
        // Value tables in order: (1,1), (1,2), (2,1), (2,2).
        let tables: Vec<(Word, Word)> =
            (1..=4).map(|i| (t.apply(i, &[1]).unwrap(), t.apply(i, &[2]).unwrap())).collect();
        assert_eq!(tables, vec![(vec![1], vec![1]), (vec![1], vec![2]), (vec![2], vec![1]), (vec![2], vec![2])]);
    }

    #[test]
    fn stage_two_count_and_cap() {
        let t = enumerate_self_maps(Alphabet::Finite(2), 2, 1 << 20).unwrap();
        assert_eq!(t.len(), 256);
        let first = t.apply(1, &[2, 1]).unwrap();
        assert_eq!(first, vec![1, 1]);
        assert!(matches!(
            enumerate_self_maps(Alphabet::Finite(3), 2, 1 << 20),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn budget_contains_constants() {
        let t = budget_self_maps(Alphabet::Finite(2), 2, 3, 1 << 20).unwrap();
        for r in 1..=4u32 {
            let target = word_unrank((r - 1).into(), 2, 2);
            let has = (1..=t.len()).any(|i| {
                (0..4u32).all(|a| t.apply(i, &word_unrank(a.into(), 2, 2)).unwrap() == target)
            });
            assert!(has, "constant onto {target:?} missing");
        }
        let full = budget_self_maps(Alphabet::Finite(2), 1, 10, 1 << 20).unwrap();
        assert_eq!(full, enumerate_self_maps(Alphabet::Finite(2), 1, 1 << 20).unwrap());
    }

    #[test]
    fn countable_domains() {
        let t = enumerate_self_maps(Alphabet::Countable, 1, 16).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.apply(1, &[1]).unwrap(), vec![1]);
        assert_eq!(enumerate_self_maps(Alphabet::Countable, 2, 1 << 20).unwrap().len(), 256);
    }

    #[test]
    fn rank_roundtrip() {
        for r in 0..27u32 {
            let w = word_unrank(r.into(), 3, 3);
            assert_eq!(word_rank(&w, 3).unwrap(), r.into());
        }
    }
}
