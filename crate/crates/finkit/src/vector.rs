//! k-vectors: finitely supported maps from the naturals into `{0, …, k}`
//! that attain the top value `k`, together with the tetris shift and
//! disjoint block sums.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FinError;

/// A finitely supported vector with values in `{1, …, level}`.
///
/// A vector of level `k ≥ 1` is nonempty and attains `k` somewhere; the
/// unique vector of level 0 is the zero vector. Entries are stored as
/// `(position, value)` pairs with strictly ascending positions and values
/// in `1..=level` (zeros are implicit).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KVector {
    level: u8,
    entries: Vec<(u64, u8)>,
}

impl KVector {
    /// Builds a vector after checking every structural invariant.
    pub fn new(level: u8, entries: Vec<(u64, u8)>) -> Result<Self, FinError> {
        if level == 0 {
            if !entries.is_empty() {
                return Err(FinError::InvalidInput(
                    "a level-0 vector must be the zero vector".into(),
                ));
            }
            return Ok(KVector { level, entries });
        }
        if entries.is_empty() {
            return Err(FinError::InvalidInput(format!(
                "a level-{level} vector must have nonempty support"
            )));
        }
        let mut attains = false;
        for (i, &(pos, val)) in entries.iter().enumerate() {
            if val == 0 || val > level {
                return Err(FinError::InvalidInput(format!(
                    "value {val} at position {pos} is outside 1..={level}"
                )));
            }
            if i > 0 && entries[i - 1].0 >= pos {
                return Err(FinError::InvalidInput(format!(
                    "support positions must be strictly ascending near {pos}"
                )));
            }
            attains |= val == level;
        }
        if !attains {
            return Err(FinError::InvalidInput(format!(
                "a level-{level} vector must attain the value {level}"
            )));
        }
        Ok(KVector { level, entries })
    }

    /// The zero vector, the unique vector of level 0.
    pub fn zero() -> Self {
        KVector { level: 0, entries: Vec::new() }
    }

    /// The level `k` of the vector (0 for the zero vector).
    pub fn level(&self) -> u8 {
        self.level
    }

    /// The `(position, value)` entries, ascending by position.
    pub fn entries(&self) -> &[(u64, u8)] {
        &self.entries
    }

    /// Whether this is the zero vector.
    pub fn is_zero(&self) -> bool {
        self.level == 0
    }

    /// Least support position, if the vector is nonzero.
    pub fn min_supp(&self) -> Option<u64> {
        self.entries.first().map(|&(p, _)| p)
    }

    /// Greatest support position, if the vector is nonzero.
    pub fn max_supp(&self) -> Option<u64> {
        self.entries.last().map(|&(p, _)| p)
    }

    /// The value at `pos` (0 off the support).
    pub fn value_at(&self, pos: u64) -> u8 {
        match self.entries.binary_search_by_key(&pos, |&(p, _)| p) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// First position carrying the value `v`, if any.
    pub fn min_of_value(&self, v: u8) -> Option<u64> {
        self.entries.iter().find(|&&(_, val)| val == v).map(|&(p, _)| p)
    }

    /// Last position carrying the value `v`, if any.
    pub fn max_of_value(&self, v: u8) -> Option<u64> {
        self.entries.iter().rev().find(|&&(_, val)| val == v).map(|&(p, _)| p)
    }

    /// The tetris shift: every value drops by `i`, values at most `i` vanish.
    ///
    /// Total on all vectors; shifting by the full level (or more) yields the
    /// zero vector, and the result of a nonzero shift has level `level − i`.
    pub fn tetris(&self, i: u8) -> KVector {
        if i == 0 {
            return self.clone();
        }
        if self.level <= i {
            return KVector::zero();
        }
        let entries: Vec<(u64, u8)> = self
            .entries
            .iter()
            .filter(|&&(_, v)| v > i)
            .map(|&(p, v)| (p, v - i))
            .collect();
        KVector { level: self.level - i, entries }
    }

    /// Sums vectors with pairwise disjoint supports.
    ///
    /// The result's level is the maximum of the summands' levels; zero
    /// summands are allowed and contribute nothing.
    pub fn block_sum(parts: &[KVector]) -> Result<KVector, FinError> {
        if parts.is_empty() {
            return Err(FinError::EmptyInput);
        }
        let mut entries: Vec<(u64, u8)> = Vec::new();
        let mut level = 0u8;
        for part in parts {
            level = level.max(part.level);
            entries.extend_from_slice(&part.entries);
        }
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FinError::OverlappingSupports(w[0].0));
            }
        }
        Ok(KVector { level, entries })
    }

    /// The entries of `self` whose positions are off the support of `other`.
    ///
    /// The result keeps the surviving values and is re-levelled to its own
    /// maximum value (zero if nothing survives).
    pub fn support_minus(&self, other: &KVector) -> KVector {
        let entries: Vec<(u64, u8)> = self
            .entries
            .iter()
            .filter(|&&(p, _)| other.value_at(p) == 0)
            .copied()
            .collect();
        Self::from_entries_releveled(entries)
    }

    /// Builds a vector from entries, setting the level to the maximum value.
    pub(crate) fn from_entries_releveled(entries: Vec<(u64, u8)>) -> KVector {
        let level = entries.iter().map(|&(_, v)| v).max().unwrap_or(0);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        KVector { level, entries }
    }
}

impl fmt::Display for KVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{{", self.level)?;
        for (i, (p, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}:{v}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for KVector {
    type Err = FinError;

    /// Parses the canonical form `k:{pos:val,…}`, e.g. `2:{0:1,2:2}`.
    fn from_str(s: &str) -> Result<Self, FinError> {
        let bad = |msg: &str| FinError::ParseError(format!("{msg} in k-vector {s:?}"));
        let (head, body) = s.split_once(":{").ok_or_else(|| bad("missing `:{`"))?;
        let level: u8 = head.trim().parse().map_err(|_| bad("bad level"))?;
        let body = body.strip_suffix('}').ok_or_else(|| bad("missing closing `}`"))?;
        let mut entries = Vec::new();
        for item in body.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (p, v) = item.split_once(':').ok_or_else(|| bad("entry needs `pos:val`"))?;
            let pos: u64 = p.trim().parse().map_err(|_| bad("bad position"))?;
            let val: u8 = v.trim().parse().map_err(|_| bad("bad value"))?;
            entries.push((pos, val));
        }
        KVector::new(level, entries)
    }
}

impl Serialize for KVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for KVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
