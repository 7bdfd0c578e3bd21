//! Block sequences and the structure they generate: combinatorial spans,
//! span membership, the block-subsequence order and its finalized variant,
//! approximations, depth, and tails.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FinError;
use crate::vector::KVector;

/// An ordered list of same-level vectors whose supports strictly ascend:
/// the maximum support of each block lies below the minimum support of the
/// next. The empty sequence is allowed and still carries its level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockSequence {
    level: u8,
    blocks: Vec<KVector>,
}

impl BlockSequence {
    /// Builds a sequence after checking levels and support separation.
    pub fn new(level: u8, blocks: Vec<KVector>) -> Result<Self, FinError> {
        if level == 0 {
            return Err(FinError::InvalidInput(
                "a block sequence must have level at least 1".into(),
            ));
        }
        for block in &blocks {
            if block.level() != level {
                return Err(FinError::LevelMismatch { left: level, right: block.level() });
            }
        }
        for pair in blocks.windows(2) {
            // Both supports are nonempty because each block attains the level.
            if pair[0].max_supp() >= pair[1].min_supp() {
                return Err(FinError::InvalidInput(format!(
                    "supports must be strictly separated, but {} does not end below {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(BlockSequence { level, blocks })
    }

    /// Builds a sequence the caller has already shown to be valid.
    pub(crate) fn from_validated(level: u8, blocks: Vec<KVector>) -> Self {
        debug_assert!(BlockSequence::new(level, blocks.clone()).is_ok());
        BlockSequence { level, blocks }
    }

    /// The sequence of unit singletons `[i:1]` at level 1, the smallest
    /// universe for finite-unions demonstrations.
    pub fn units(count: usize) -> Self {
        let blocks = (0..count as u64)
            .map(|i| KVector::new(1, vec![(i, 1)]).expect("singletons are valid"))
            .collect();
        BlockSequence { level: 1, blocks }
    }

    /// The common level of all blocks.
    pub fn level(&self) -> u8 {
        self.level
    }

    /// The blocks in order.
    pub fn blocks(&self) -> &[KVector] {
        &self.blocks
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    /// Whether the sequence has no blocks.
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The first `n` blocks.
    pub fn restrict(&self, n: usize) -> Result<BlockSequence, FinError> {
        if n > self.blocks.len() {
            return Err(FinError::OutOfRange { index: n, len: self.blocks.len() });
        }
        Ok(BlockSequence { level: self.level, blocks: self.blocks[..n].to_vec() })
    }

    /// Whether `prefix` is an initial segment of `self` (possibly all of it).
    pub fn starts_with(&self, prefix: &BlockSequence) -> bool {
        prefix.blocks.len() <= self.blocks.len()
            && self.blocks[..prefix.blocks.len()] == prefix.blocks[..]
    }
}

impl fmt::Display for BlockSequence {
    /// Space-joined block encodings, e.g. `1:{0:1} 1:{2:1}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{block}")?;
        }
        Ok(())
    }
}

impl Serialize for BlockSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.blocks.iter().map(|b| b.to_string()))
    }
}

impl<'de> Deserialize<'de> for BlockSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let texts = Vec::<String>::deserialize(deserializer)?;
        let blocks = texts
            .iter()
            .map(|t| t.parse::<KVector>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let level = match blocks.first() {
            Some(b) => b.level(),
            None => {
                return Err(D::Error::custom("cannot infer the level of an empty sequence"))
            }
        };
        BlockSequence::new(level, blocks).map_err(D::Error::custom)
    }
}

/// A formal combination `T^{s_1} x_{i_1} + … + T^{s_r} x_{i_r}` naming a
/// span element: strictly ascending block indices with shifts in
/// `0..level−1`, at least one of them 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanTerm {
    parts: Vec<(usize, u8)>,
}

impl SpanTerm {
    /// Builds a term after checking index order and the zero-shift rule.
    pub fn new(parts: Vec<(usize, u8)>) -> Result<Self, FinError> {
        if parts.is_empty() {
            return Err(FinError::EmptyInput);
        }
        if !parts.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(FinError::InvalidInput(
                "term block indices must be strictly ascending".into(),
            ));
        }
        if !parts.iter().any(|&(_, s)| s == 0) {
            return Err(FinError::InvalidInput(
                "a term needs at least one unshifted part".into(),
            ));
        }
        Ok(SpanTerm { parts })
    }

    pub(crate) fn from_validated(parts: Vec<(usize, u8)>) -> Self {
        debug_assert!(SpanTerm::new(parts.clone()).is_ok());
        SpanTerm { parts }
    }

    /// The `(block_index, shift)` parts, ascending by index.
    pub fn parts(&self) -> &[(usize, u8)] {
        &self.parts
    }

    /// Least block index used.
    pub fn min_index(&self) -> usize {
        self.parts[0].0
    }

    /// Greatest block index used.
    pub fn max_index(&self) -> usize {
        self.parts[self.parts.len() - 1].0
    }

    /// Evaluates the term over a concrete sequence.
    pub fn realize(&self, x: &BlockSequence) -> Result<KVector, FinError> {
        let mut parts = Vec::with_capacity(self.parts.len());
        for &(i, s) in &self.parts {
            let block = x
                .blocks()
                .get(i)
                .ok_or(FinError::OutOfRange { index: i, len: x.len() })?;
            if s >= x.level() {
                return Err(FinError::InvalidInput(format!(
                    "shift {s} annihilates a level-{} block",
                    x.level()
                )));
            }
            parts.push(block.tetris(s));
        }
        KVector::block_sum(&parts)
    }
}

impl Ord for SpanTerm {
    /// Index lists compare first (subset order), shift tuples break ties.
    fn cmp(&self, other: &Self) -> Ordering {
        let indices = self.parts.iter().map(|p| p.0).cmp(other.parts.iter().map(|p| p.0));
        if indices != Ordering::Equal {
            return indices;
        }
        self.parts.iter().map(|p| p.1).cmp(other.parts.iter().map(|p| p.1))
    }
}

impl PartialOrd for SpanTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SpanTerm {
    /// Shift-annotated parts, e.g. `T1[0]+T0[1]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, &(i, s)) in self.parts.iter().enumerate() {
            if n > 0 {
                write!(f, "+")?;
            }
            write!(f, "T{s}[{i}]")?;
        }
        Ok(())
    }
}

impl Serialize for SpanTerm {
    /// Serializes as the bare part list `[[index, shift], …]`.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.parts.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpanTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts = Vec::<(usize, u8)>::deserialize(deserializer)?;
        SpanTerm::new(parts).map_err(D::Error::custom)
    }
}

/// Closed-form size of the span of `block_count` blocks at `level`:
/// `Σ_{r=1..m} C(m,r)·(k^r − (k−1)^r)`, the number of index subsets paired
/// with shift tuples that keep at least one part unshifted.
pub fn span_size(level: u8, block_count: usize) -> u128 {
    let k = level as u128;
    let mut total = 0u128;
    for r in 1..=block_count {
        let mut choose = 1u128;
        for t in 0..r {
            choose = choose * (block_count - t) as u128 / (t + 1) as u128;
        }
        total += choose * (k.pow(r as u32) - (k - 1).pow(r as u32));
    }
    total
}

/// Walks index subsets of `start..m` in subset order, calling `visit` on
/// every nonempty subset as it grows.
fn for_each_subset(m: usize, start: usize, current: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    for i in start..m {
        current.push(i);
        visit(current);
        for_each_subset(m, i + 1, current, visit);
        current.pop();
    }
}

/// Calls `visit` on every shift tuple of length `r` over `0..level` that
/// contains at least one zero, in ascending odometer order.
fn for_each_shift_tuple(level: u8, r: usize, visit: &mut dyn FnMut(&[u8])) {
    let mut shifts = vec![0u8; r];
    loop {
        if shifts.iter().any(|&s| s == 0) {
            visit(&shifts);
        }
        // Advance the odometer, rightmost digit fastest.
        let mut pos = r;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if shifts[pos] + 1 < level {
                shifts[pos] += 1;
                for digit in &mut shifts[pos + 1..] {
                    *digit = 0;
                }
                break;
            }
        }
    }
}

/// Enumerates the combinatorial span of `x`: every sum of tetris-shifted
/// blocks with at least one unshifted part, paired with its unique witnessing
/// term. The order — index subsets in subset order, then shift tuples in
/// odometer order — is part of the contract and matches `SpanTerm`'s `Ord`.
pub fn span_enumerate(x: &BlockSequence) -> Vec<(KVector, SpanTerm)> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for_each_subset(x.len(), 0, &mut current, &mut |subset| {
        for_each_shift_tuple(x.level(), subset.len(), &mut |shifts| {
            let parts: Vec<(usize, u8)> =
                subset.iter().copied().zip(shifts.iter().copied()).collect();
            let term = SpanTerm::from_validated(parts);
            let value = term.realize(x).expect("span terms realize over their own sequence");
            out.push((value, term));
        });
    });
    out
}

/// Decides span membership and recovers the unique witnessing term.
///
/// The support of `w` is partitioned by the block support windows of `x`;
/// each piece must reproduce a tetris image of its block exactly, the pieces
/// must cover all of `w`, and at least one piece must be unshifted.
pub fn span_contains(x: &BlockSequence, w: &KVector) -> Result<Option<SpanTerm>, FinError> {
    if w.level() != x.level() {
        return Err(FinError::LevelMismatch { left: x.level(), right: w.level() });
    }
    let entries = w.entries();
    let mut parts: Vec<(usize, u8)> = Vec::new();
    let mut at = 0usize;
    for (i, block) in x.blocks().iter().enumerate() {
        let (lo, hi) = (block.min_supp().unwrap(), block.max_supp().unwrap());
        if at < entries.len() && entries[at].0 < lo {
            return Ok(None); // a support point below every remaining window
        }
        let begin = at;
        while at < entries.len() && entries[at].0 <= hi {
            at += 1;
        }
        if begin == at {
            continue;
        }
        let piece = &entries[begin..at];
        // The piece's top value pins the only shift that could produce it.
        let top = piece.iter().map(|&(_, v)| v).max().unwrap();
        let shift = x.level() - top;
        if shift >= x.level() || block.tetris(shift).entries() != piece {
            return Ok(None);
        }
        parts.push((i, shift));
    }
    if at < entries.len() || parts.is_empty() {
        return Ok(None); // support past the last window, or w outside all windows
    }
    // w attains the full level, so the piece carrying it is unshifted.
    debug_assert!(parts.iter().any(|&(_, s)| s == 0));
    Ok(Some(SpanTerm::from_validated(parts)))
}

/// Decides the block-subsequence order `x ≤ y`, returning one witnessing
/// term per block of `x` on success.
///
/// With `finalized` set, additionally requires that `x` is not below any
/// proper prefix of `y` — equivalently, that the witnesses reach the last
/// block of `y` (an empty `x` is finalized only in an empty `y`).
pub fn leq(
    x: &BlockSequence,
    y: &BlockSequence,
    finalized: bool,
) -> Result<Option<Vec<SpanTerm>>, FinError> {
    if x.level() != y.level() {
        return Err(FinError::LevelMismatch { left: x.level(), right: y.level() });
    }
    let mut witnesses = Vec::with_capacity(x.len());
    for block in x.blocks() {
        match span_contains(y, block)? {
            Some(term) => witnesses.push(term),
            None => return Ok(None),
        }
    }
    if finalized {
        let reached = witnesses.last().map_or(y.is_empty(), |t| t.max_index() + 1 == y.len());
        if !reached {
            return Ok(None);
        }
    }
    Ok(Some(witnesses))
}

/// The realized span of `x` with each element's term, bucketed by least
/// block index so suffix universes can be iterated in canonical order.
pub(crate) struct TermTable {
    pub(crate) entries: Vec<(KVector, SpanTerm)>,
    by_min: Vec<Vec<usize>>,
}

impl TermTable {
    pub(crate) fn build(x: &BlockSequence) -> TermTable {
        let entries = span_enumerate(x);
        let mut by_min = vec![Vec::new(); x.len()];
        for (n, (_, term)) in entries.iter().enumerate() {
            by_min[term.min_index()].push(n);
        }
        TermTable { entries, by_min }
    }

    /// Indices of entries whose least block index is at least `start`, in
    /// canonical term order.
    pub(crate) fn from_start(&self, start: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_min[start.min(self.by_min.len())..].iter().flatten().copied()
    }
}

fn approx_dfs(
    table: &TermTable,
    level: u8,
    n: usize,
    next_start: usize,
    stack: &mut Vec<KVector>,
    out: &mut Vec<BlockSequence>,
) {
    if stack.len() == n {
        out.push(BlockSequence::from_validated(level, stack.clone()));
        return;
    }
    for e in table.from_start(next_start) {
        let (value, term) = &table.entries[e];
        stack.push(value.clone());
        approx_dfs(table, level, n, term.max_index() + 1, stack, out);
        stack.pop();
    }
}

/// All length-`n` block subsequences of `x`, in canonical order: the lists
/// of witnessing terms compare lexicographically, position by position.
pub fn approximations(x: &BlockSequence, n: usize) -> Result<Vec<BlockSequence>, FinError> {
    if n > x.len() {
        return Err(FinError::OutOfRange { index: n, len: x.len() });
    }
    let table = TermTable::build(x);
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(n);
    approx_dfs(&table, x.level(), n, 0, &mut stack, &mut out);
    Ok(out)
}

/// All block subsequences of `x` with between 1 and `max_blocks` blocks, in
/// depth-first prefix order: every sequence is emitted before its extensions.
pub fn subsequences_up_to(x: &BlockSequence, max_blocks: usize) -> Vec<BlockSequence> {
    fn walk(
        table: &TermTable,
        level: u8,
        max_blocks: usize,
        next_start: usize,
        stack: &mut Vec<KVector>,
        out: &mut Vec<BlockSequence>,
    ) {
        if stack.len() == max_blocks {
            return;
        }
        for e in table.from_start(next_start) {
            let (value, term) = &table.entries[e];
            stack.push(value.clone());
            out.push(BlockSequence::from_validated(level, stack.clone()));
            walk(table, level, max_blocks, term.max_index() + 1, stack, out);
            stack.pop();
        }
    }
    let table = TermTable::build(x);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    walk(&table, x.level(), max_blocks, 0, &mut stack, &mut out);
    out
}

/// The depth of `s` below `x`: the least prefix length of `x` whose span
/// already accommodates every block of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Depth {
    /// `s` first fits in this many blocks of the ambient sequence.
    Finite(usize),
    /// `s` fits in no prefix at all.
    Infinite,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Infinite => write!(f, "infinity"),
        }
    }
}

/// Computes the depth of `s` below `x` by scanning prefixes of `x`.
pub fn depth(x: &BlockSequence, s: &BlockSequence) -> Result<Depth, FinError> {
    if x.level() != s.level() {
        return Err(FinError::LevelMismatch { left: x.level(), right: s.level() });
    }
    for d in 0..=x.len() {
        if leq(s, &x.restrict(d)?, false)?.is_some() {
            return Ok(Depth::Finite(d));
        }
    }
    Ok(Depth::Infinite)
}

/// The blocks of `x` lying strictly past `pos`.
pub(crate) fn tail_past(x: &BlockSequence, pos: u64) -> BlockSequence {
    let blocks = x
        .blocks()
        .iter()
        .filter(|b| b.min_supp().unwrap() > pos)
        .cloned()
        .collect();
    BlockSequence::from_validated(x.level(), blocks)
}

/// The blocks of `x` whose supports lie strictly past all of `s`.
pub fn tail(x: &BlockSequence, s: &BlockSequence) -> Result<BlockSequence, FinError> {
    if x.level() != s.level() {
        return Err(FinError::LevelMismatch { left: x.level(), right: s.level() });
    }
    match s.blocks().last() {
        Some(last) => Ok(tail_past(x, last.max_supp().unwrap())),
        None => Ok(x.clone()),
    }
}

/// The blocks of `x` lying strictly past both `s` and `t`.
pub fn tail_pair(
    x: &BlockSequence,
    s: &BlockSequence,
    t: &BlockSequence,
) -> Result<BlockSequence, FinError> {
    tail(&tail(x, s)?, t)
}
