//! Admissible color sets.
//!
//! A [`ColorSet`] is a subset of `{1..d}` kept in admissible form: of the two
//! complementary sets `C`, `Ĉ` we keep the smaller one, and on a tie the one
//! containing color 1. The dimension is not stored; containers carry it.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported number of colors.
pub const MAX_COLORS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColorSetError {
    #[error("color set must be a proper non-empty subset of 1..={d}")]
    EmptyOrFullColorSet { d: usize },
    #[error("color {color} outside 1..={d}")]
    ColorOutOfRange { color: usize, d: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColorSet {
    mask: u32,
}

impl ColorSet {
    /// Builds the admissible representative of `colors` (or of its complement).
    pub fn new(d: usize, colors: &[usize]) -> Result<Self, ColorSetError> {
        Self::raw(d, colors)?.normalized(d)
    }

    /// Builds the set as given, without normalization.
    pub fn raw(d: usize, colors: &[usize]) -> Result<Self, ColorSetError> {
        let mut mask = 0u32;
        for &c in colors {
            if c == 0 || c > d || c > MAX_COLORS {
                return Err(ColorSetError::ColorOutOfRange { color: c, d });
            }
            mask |= 1 << (c - 1);
        }
        Ok(ColorSet { mask })
    }

    pub fn single(c: usize) -> Self {
        assert!((1..=MAX_COLORS).contains(&c));
        ColorSet { mask: 1 << (c - 1) }
    }

    pub fn full(d: usize) -> Self {
        ColorSet { mask: full_mask(d) }
    }

    pub fn empty() -> Self {
        ColorSet { mask: 0 }
    }

    pub fn from_mask(mask: u32) -> Self {
        ColorSet { mask }
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    /// Admissible representative of `{self, complement}`.
    pub fn normalized(self, d: usize) -> Result<Self, ColorSetError> {
        let full = full_mask(d);
        if self.mask & !full != 0 {
            let c = (32 - (self.mask & !full).leading_zeros()) as usize;
            return Err(ColorSetError::ColorOutOfRange { color: c, d });
        }
        if self.mask == 0 || self.mask == full {
            return Err(ColorSetError::EmptyOrFullColorSet { d });
        }
        let k = self.len();
        let flip = 2 * k > d || (2 * k == d && self.mask & 1 == 0);
        Ok(if flip { self.complement(d) } else { self })
    }

    pub fn is_admissible(self, d: usize) -> bool {
        self.normalized(d).map(|n| n == self).unwrap_or(false)
    }

    pub fn complement(self, d: usize) -> Self {
        ColorSet { mask: full_mask(d) & !self.mask }
    }

    pub fn contains(self, c: usize) -> bool {
        (1..=MAX_COLORS).contains(&c) && self.mask & (1 << (c - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn insert(&mut self, c: usize) {
        assert!((1..=MAX_COLORS).contains(&c));
        self.mask |= 1 << (c - 1);
    }

    /// Colors in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=MAX_COLORS).filter(move |&c| self.mask & (1 << (c - 1)) != 0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// `|C| < d/2`.
    pub fn is_unbalanced(self, d: usize) -> bool {
        2 * self.len() < d
    }

    /// `|C| = d/2`.
    pub fn is_balanced(self, d: usize) -> bool {
        2 * self.len() == d
    }

    /// All admissible color sets at dimension `d`, in the crate's order.
    pub fn all_admissible(d: usize) -> Vec<ColorSet> {
        assert!((1..=MAX_COLORS).contains(&d) && d < 32);
        let mut out: Vec<ColorSet> =
            (1..(1u32 << d) - 1).map(ColorSet::from_mask).filter(|c| c.is_admissible(d)).collect();
        out.sort();
        out
    }
}

pub(crate) fn full_mask(d: usize) -> u32 {
    if d >= 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

// Lexicographic on the sorted member list, so {1} < {1,2} < {2}.
impl Ord for ColorSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for ColorSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for ColorSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

// Deserialization is raw; owners normalize against their own `d`.
impl<'de> Deserialize<'de> for ColorSet {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(de)?;
        ColorSet::raw(MAX_COLORS, &v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_to_smaller_side() {
        let c = ColorSet::new(3, &[2, 3]).unwrap();
        assert_eq!(c.to_vec(), vec![1]);
        let c = ColorSet::new(4, &[3, 4]).unwrap();
        assert_eq!(c.to_vec(), vec![1, 2]);
        let c = ColorSet::new(4, &[1, 3]).unwrap();
        assert_eq!(c.to_vec(), vec![1, 3]);
    }

    #[test]
    fn rejects_empty_full_and_out_of_range() {
        assert!(matches!(ColorSet::new(3, &[1, 2, 3]), Err(ColorSetError::EmptyOrFullColorSet { d: 3 })));
        assert!(ColorSet::new(3, &[]).is_err());
        assert!(matches!(ColorSet::new(3, &[4]), Err(ColorSetError::ColorOutOfRange { color: 4, d: 3 })));
    }

    #[test]
    fn admissible_counts() {
        // d odd: 2^(d-1) - 1 sets; d even: 2^(d-1) - 1 as well (ties split in half).
        for d in 3..=7 {
            assert_eq!(ColorSet::all_admissible(d).len(), (1 << (d - 1)) - 1);
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        let a = ColorSet::single(1);
        let b = ColorSet::new(4, &[1, 2]).unwrap();
        let c = ColorSet::single(2);
        assert!(a < b && b < c);
    }

    #[test]
    fn serde_as_list() {
        let c = ColorSet::new(4, &[1, 4]).unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "[1,4]");
        let back: ColorSet = serde_json::from_str("[1,4]").unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn complement_normalizes_equal(d in 3usize..9, mask in 1u32..255) {
            let m = mask & full_mask(d);
            prop_assume!(m != 0 && m != full_mask(d));
            let c = ColorSet::from_mask(m);
            let n1 = c.normalized(d).unwrap();
            let n2 = c.complement(d).normalized(d).unwrap();
            prop_assert_eq!(n1, n2);
            prop_assert!(2 * n1.len() <= d);
            if 2 * n1.len() == d { prop_assert!(n1.contains(1)); }
            prop_assert_eq!(n1.normalized(d).unwrap(), n1);
        }
    }
}
