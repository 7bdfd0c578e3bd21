//! Fronts over a base sequence: uniform and explicit member families, the
//! front axioms with diagnostic verdicts, and colorings of members by
//! built-in rules or explicit tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::block::{approximations, leq, BlockSequence, TermTable};
use crate::error::FinError;
use crate::vector::KVector;

/// How a front's member family was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontKind {
    /// Every block subsequence of the base with exactly this many blocks.
    UniformRank(usize),
    /// An explicit member list.
    Explicit,
}

/// A family of finite block subsequences of a base sequence, intended to
/// satisfy the front axioms (each member below the base, no member an
/// initial segment of another, every maximal branch covered).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Front {
    base: BlockSequence,
    members: Vec<BlockSequence>,
    kind: FrontKind,
}

impl Front {
    /// The uniform front of the given rank: all block subsequences of the
    /// base with exactly `rank` blocks.
    pub fn uniform(base: BlockSequence, rank: usize) -> Result<Front, FinError> {
        let members = approximations(&base, rank)?;
        Ok(Front { base, members, kind: FrontKind::UniformRank(rank) })
    }

    /// A front with an explicit member list. Members must share the base's
    /// level; they are sorted and deduplicated, but the axioms are only
    /// tested by [`front_check`].
    pub fn explicit(base: BlockSequence, members: Vec<BlockSequence>) -> Result<Front, FinError> {
        for m in &members {
            if m.level() != base.level() {
                return Err(FinError::LevelMismatch { left: m.level(), right: base.level() });
            }
        }
        let mut members = members;
        members.sort();
        members.dedup();
        Ok(Front { base, members, kind: FrontKind::Explicit })
    }

    /// The base sequence.
    pub fn base(&self) -> &BlockSequence {
        &self.base
    }

    /// The members, sorted for explicit fronts and in canonical enumeration
    /// order for uniform ones.
    pub fn members(&self) -> &[BlockSequence] {
        &self.members
    }

    /// How the member family was specified.
    pub fn kind(&self) -> FrontKind {
        self.kind
    }

    /// The common member length, if every member has the same one.
    pub fn arity(&self) -> Option<usize> {
        match self.kind {
            FrontKind::UniformRank(n) => Some(n),
            FrontKind::Explicit => {
                let first = self.members.first()?.len();
                self.members.iter().all(|m| m.len() == first).then_some(first)
            }
        }
    }

    /// Whether the sequence is a member.
    pub fn is_member(&self, s: &BlockSequence) -> bool {
        self.members.iter().any(|m| m == s)
    }

    /// Every initial segment of every member (including the empty sequence
    /// and the members themselves), sorted and deduplicated.
    pub fn hat(&self) -> Vec<BlockSequence> {
        let mut out: Vec<BlockSequence> = self
            .members
            .iter()
            .flat_map(|m| (0..=m.len()).map(|n| m.restrict(n).expect("prefix within length")))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Members having `t` as an initial segment (possibly `t` itself).
    pub fn members_extending(&self, t: &BlockSequence) -> Vec<BlockSequence> {
        self.members.iter().filter(|m| m.starts_with(t)).cloned().collect()
    }

    /// The front restricted to a coarser universe: a uniform front stays
    /// uniform over `y`, an explicit one keeps the members below `y`.
    pub fn restrict(&self, y: &BlockSequence) -> Result<Front, FinError> {
        match self.kind {
            FrontKind::UniformRank(n) => Front::uniform(y.clone(), n),
            FrontKind::Explicit => {
                let mut kept = Vec::new();
                for m in &self.members {
                    if leq(m, y, false)?.is_some() {
                        kept.push(m.clone());
                    }
                }
                Ok(Front { base: y.clone(), members: kept, kind: FrontKind::Explicit })
            }
        }
    }
}

/// Outcome of testing the front axioms, reporting the first failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrontCheckResult {
    /// All three axioms hold.
    Pass,
    /// A member is not a block subsequence of the base.
    NotSubsequence {
        /// The offending member.
        member: BlockSequence,
    },
    /// One member is a proper initial segment of another.
    AntichainViolation {
        /// The initial segment.
        shorter: BlockSequence,
        /// Its extension.
        longer: BlockSequence,
    },
    /// A maximal branch of the base meets no member.
    CoverGap {
        /// The first uncovered maximal branch in depth-first order.
        witness: BlockSequence,
    },
}

impl fmt::Display for FrontCheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrontCheckResult::Pass => write!(f, "front axioms hold"),
            FrontCheckResult::NotSubsequence { member } => {
                write!(f, "member ({member}) is not a block subsequence of the base")
            }
            FrontCheckResult::AntichainViolation { shorter, longer } => {
                write!(f, "member ({shorter}) is an initial segment of member ({longer})")
            }
            FrontCheckResult::CoverGap { witness } => {
                write!(f, "maximal branch ({witness}) meets no member")
            }
        }
    }
}

/// Tests the front axioms in order: membership below the base, the
/// antichain condition, then branch cover.
///
/// Cover is decided by walking every block subsequence of the base in
/// depth-first order, stopping at members; an inextensible branch that met
/// no member is a gap. Branches shorter than the shortest member are
/// ignored: they only fail by running out of base blocks, which says
/// nothing about the front on a longer base.
pub fn front_check(front: &Front) -> FrontCheckResult {
    let base = front.base();
    for member in front.members() {
        if !matches!(leq(member, base, false), Ok(Some(_))) {
            return FrontCheckResult::NotSubsequence { member: member.clone() };
        }
    }
    let members = front.members();
    for (i, shorter) in members.iter().enumerate() {
        for longer in &members[i + 1..] {
            if longer.len() > shorter.len() && longer.starts_with(shorter) {
                return FrontCheckResult::AntichainViolation {
                    shorter: shorter.clone(),
                    longer: longer.clone(),
                };
            }
            if shorter.len() > longer.len() && shorter.starts_with(longer) {
                return FrontCheckResult::AntichainViolation {
                    shorter: longer.clone(),
                    longer: shorter.clone(),
                };
            }
        }
    }

    let member_blocks: HashSet<&[KVector]> =
        members.iter().map(|m| m.blocks()).collect();
    let min_len = members.iter().map(|m| m.len()).min().unwrap_or(0);
    let table = TermTable::build(base);
    let mut stack: Vec<KVector> = Vec::new();
    match cover_dfs(base, &table, &member_blocks, min_len, &mut stack, 0) {
        Some(witness) => FrontCheckResult::CoverGap { witness },
        None => FrontCheckResult::Pass,
    }
}

fn cover_dfs(
    base: &BlockSequence,
    table: &TermTable,
    members: &HashSet<&[KVector]>,
    min_len: usize,
    stack: &mut Vec<KVector>,
    next_start: usize,
) -> Option<BlockSequence> {
    if members.contains(stack.as_slice()) {
        return None; // branch covered, nothing below matters
    }
    if next_start == base.len() {
        // Inextensible. Short branches are truncation artifacts: they could
        // still reach a member over a longer base.
        if stack.len() >= min_len {
            return Some(BlockSequence::from_validated(base.level(), stack.clone()));
        }
        return None;
    }
    for n in table.from_start(next_start) {
        let (block, term) = &table.entries[n];
        stack.push(block.clone());
        let gap = cover_dfs(base, table, members, min_len, stack, term.max_index() + 1);
        stack.pop();
        if gap.is_some() {
            return gap;
        }
    }
    None
}

/// Built-in coloring rules, all reading the union of a member's blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorRule {
    /// The union itself, in text form.
    Union,
    /// The single color `"0"`.
    Constant,
    /// Parity of the least support position.
    MinParity,
    /// The value at the least support position.
    FirstValue,
}

impl fmt::Display for ColorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ColorRule::Union => "union",
            ColorRule::Constant => "constant",
            ColorRule::MinParity => "min-parity",
            ColorRule::FirstValue => "first-value",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for ColorRule {
    type Err = FinError;

    fn from_str(s: &str) -> Result<Self, FinError> {
        match s {
            "union" => Ok(ColorRule::Union),
            "constant" => Ok(ColorRule::Constant),
            "min-parity" => Ok(ColorRule::MinParity),
            "first-value" => Ok(ColorRule::FirstValue),
            _ => Err(FinError::ParseError(format!("unknown coloring rule {s:?}"))),
        }
    }
}

/// Where a coloring's values come from: a built-in rule or an explicit
/// table keyed by member text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColorSource {
    /// A built-in rule.
    Rule(ColorRule),
    /// Member text form to color.
    Table(BTreeMap<String, String>),
}

impl Serialize for ColorSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        match self {
            ColorSource::Rule(rule) => map.serialize_entry("rule", rule)?,
            ColorSource::Table(table) => {
                let pairs: Vec<(&String, &String)> = table.iter().collect();
                map.serialize_entry("table", &pairs)?;
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ColorSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rule: Option<ColorRule>,
            table: Option<Vec<(String, String)>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        match (raw.rule, raw.table) {
            (Some(rule), None) => Ok(ColorSource::Rule(rule)),
            (None, Some(pairs)) => Ok(ColorSource::Table(pairs.into_iter().collect())),
            _ => Err(D::Error::custom("expected exactly one of \"rule\" or \"table\"")),
        }
    }
}

/// A coloring of a front's members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    front: Front,
    source: ColorSource,
}

impl Coloring {
    /// Attaches a color source to a front. A table source must cover every
    /// member.
    pub fn new(front: Front, source: ColorSource) -> Result<Coloring, FinError> {
        if let ColorSource::Table(table) = &source {
            for member in front.members() {
                let key = member_key(member);
                if !table.contains_key(&key) {
                    return Err(FinError::ColorMissing(key));
                }
            }
        }
        Ok(Coloring { front, source })
    }

    /// The underlying front.
    pub fn front(&self) -> &Front {
        &self.front
    }

    /// The color source.
    pub fn source(&self) -> &ColorSource {
        &self.source
    }

    /// The color of a member. Rules act on the union of the member's blocks
    /// and are total (an empty member reads `"0"`); a table lookup fails
    /// with the missing key.
    pub fn color(&self, member: &BlockSequence) -> Result<String, FinError> {
        match &self.source {
            ColorSource::Table(table) => {
                let key = member_key(member);
                table.get(&key).cloned().ok_or(FinError::ColorMissing(key))
            }
            ColorSource::Rule(rule) => {
                if member.is_empty() {
                    return Ok("0".into());
                }
                let union = KVector::block_sum(member.blocks())?;
                Ok(match rule {
                    ColorRule::Union => union.to_string(),
                    ColorRule::Constant => "0".into(),
                    ColorRule::MinParity => match union.min_supp() {
                        Some(p) => (p % 2).to_string(),
                        None => "0".into(),
                    },
                    ColorRule::FirstValue => match union.min_supp() {
                        Some(p) => union.value_at(p).to_string(),
                        None => "0".into(),
                    },
                })
            }
        }
    }
}

/// The table key of a member: its space-joined text form.
pub fn member_key(member: &BlockSequence) -> String {
    member.to_string()
}
