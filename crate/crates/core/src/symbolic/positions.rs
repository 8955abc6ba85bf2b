//! Sets of marked positions in `N`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub trait PositionSet {
    /// `#(A ∩ [1, m])`.
    fn count_le(&self, m: &BigUint) -> BigUint;

    /// A run of consecutive marks, as `(start, len)`, that is the first one
    /// ending at or after `from`. The run may begin before `from` and need
    /// not be maximal.
    fn next_run(&self, from: &BigUint) -> Option<(BigUint, BigUint)>;

    fn contains(&self, p: &BigUint) -> bool {
        matches!(self.next_run(p), Some((s, _)) if &s <= p)
    }
}

/// An explicit sorted list of positions.
#[derive(Clone, Debug, Default)]
pub struct ExplicitPositions {
    sorted: Vec<BigUint>,
}

impl ExplicitPositions {
    pub fn new(mut v: Vec<BigUint>) -> Self {
        v.sort();
        v.dedup();
        v.retain(|p| !p.is_zero());
        ExplicitPositions { sorted: v }
    }
}

impl PositionSet for ExplicitPositions {
    fn count_le(&self, m: &BigUint) -> BigUint {
        BigUint::from(self.sorted.partition_point(|p| p <= m))
    }

    fn next_run(&self, from: &BigUint) -> Option<(BigUint, BigUint)> {
        let i = self.sorted.partition_point(|p| p < from);
        let first = self.sorted.get(i)?;
        // Extend backwards and forwards over consecutive entries.
        let mut lo = i;
        while lo > 0 && &self.sorted[lo - 1] + 1u32 == self.sorted[lo] {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < self.sorted.len() && &self.sorted[hi] + 1u32 == self.sorted[hi + 1] {
            hi += 1;
        }
        let _ = first;
        Some((self.sorted[lo].clone(), BigUint::from(hi - lo + 1)))
    }
}

/// `{first, first + step, first + 2 step, ...}`.
#[derive(Clone, Debug)]
pub struct ArithmeticPositions {
    first: BigUint,
    step: BigUint,
}

impl ArithmeticPositions {
    pub fn new(first: BigUint, step: BigUint) -> Result<Self> {
        if first.is_zero() || step.is_zero() {
            return Err(Error::InvalidInput("arithmetic positions need first, step >= 1".into()));
        }
        Ok(ArithmeticPositions { first, step })
    }
}

impl PositionSet for ArithmeticPositions {
    fn count_le(&self, m: &BigUint) -> BigUint {
        if m < &self.first {
            BigUint::zero()
        } else {
            (m - &self.first) / &self.step + 1u32
        }
    }

    fn next_run(&self, from: &BigUint) -> Option<(BigUint, BigUint)> {
        if self.step.is_one() {
            // A single infinite run; report a length past any real request.
            return Some((self.first.clone(), BigUint::from(u64::MAX) << 64));
        }
        if from <= &self.first {
            return Some((self.first.clone(), BigUint::one()));
        }
        let k = (from - &self.first).div_ceil(&self.step);
        Some((&self.first + k * &self.step, BigUint::one()))
    }
}

/// `#(A ∩ [1, m]) / m`.
pub fn upper_density(a: &dyn PositionSet, m: &BigUint) -> Result<Rational> {
    if m.is_zero() {
        return Err(Error::InvalidInput("density needs m >= 1".into()));
    }
    Ok(Rational::new(a.count_le(m).into(), m.clone().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn densities() {
        let evens = ArithmeticPositions::new(2u32.into(), 2u32.into()).unwrap();
        assert_eq!(upper_density(&evens, &10u32.into()).unwrap(), rat(1, 2));
        let e = ExplicitPositions::new(vec![]);
        assert_eq!(upper_density(&e, &7u32.into()).unwrap(), rat(0, 1));
        assert!(upper_density(&e, &0u32.into()).is_err());
    }

    #[test]
    fn runs() {
        let e = ExplicitPositions::new([3u32, 4, 5, 9].iter().map(|&v| v.into()).collect());
        assert_eq!(e.next_run(&1u32.into()), Some((3u32.into(), 3u32.into())));
        assert_eq!(e.next_run(&4u32.into()), Some((3u32.into(), 3u32.into())));
        assert_eq!(e.next_run(&6u32.into()), Some((9u32.into(), 1u32.into())));
        assert_eq!(e.next_run(&10u32.into()), None);
        assert!(e.contains(&4u32.into()));
        assert!(!e.contains(&6u32.into()));
    }
}
