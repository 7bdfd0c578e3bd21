//! Staircase systems: the shape test with clause-level diagnostics, the
//! tetris-image test, strong decompositions, generators for staircase
//! universes, staircase functions with pointwise evaluation, and the
//! deduplicated enumeration that drives canonical-map counting.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::BlockSequence;
use crate::block::span_enumerate;
use crate::error::FinError;
use crate::vector::KVector;

/// The first clause a vector breaks when tested for the staircase shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SosViolation {
    /// Some value in `1..=level` is never attained.
    MissingValue(u8),
    /// The chain `min_i < min_j < max_i` fails for this pair `i < j`.
    Ordering {
        /// Lower value of the failing pair.
        i: u8,
        /// Higher value of the failing pair.
        j: u8,
    },
    /// The ascent window `[min_{i−1}, min_i)` does not range over `{0,…,i−1}`.
    AscentWindow {
        /// Value whose ascent window fails.
        i: u8,
    },
    /// The descent window `(max_i, max_{i−1}]` does not range over `{0,…,i−1}`.
    DescentWindow {
        /// Value whose descent window fails.
        i: u8,
    },
    /// The central window `[min_k, max_k]` does not range over `{0,…,k}`.
    CentralWindow,
}

impl fmt::Display for SosViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SosViolation::MissingValue(v) => write!(f, "value {v} is never attained"),
            SosViolation::Ordering { i, j } => {
                write!(f, "min/max ordering fails for the pair ({i},{j})")
            }
            SosViolation::AscentWindow { i } => write!(f, "ascent window before min_{i} is wrong"),
            SosViolation::DescentWindow { i } => write!(f, "descent window after max_{i} is wrong"),
            SosViolation::CentralWindow => write!(f, "central window is wrong"),
        }
    }
}

/// Positive values attained on the closed position interval `[lo, hi]`,
/// together with the number of zero slots there. An inverted interval is
/// empty.
fn window_profile(u: &KVector, lo: u64, hi: u64) -> (BTreeSet<u8>, u64) {
    if hi < lo {
        return (BTreeSet::new(), 0);
    }
    let mut values = BTreeSet::new();
    let mut support = 0u64;
    for &(p, v) in u.entries() {
        if p >= lo && p <= hi {
            values.insert(v);
            support += 1;
        }
    }
    (values, hi - lo + 1 - support)
}

/// Whether `[lo, hi]` shows exactly the positive values `1..=top` and at
/// least `zeros` zero slots.
fn window_ok(u: &KVector, lo: u64, hi: u64, top: u8, zeros: u64) -> bool {
    let (values, slack) = window_profile(u, lo, hi);
    values.len() == top as usize && values.iter().all(|&v| v <= top) && slack >= zeros
}

/// Tests the staircase shape, reporting the first violated clause.
///
/// Clauses are checked in a fixed order: every value attained (ascending),
/// the `min_i < min_j < max_i` chains (pairs in lexicographic order), ascent
/// windows, descent windows, and finally the central window. The level-0
/// zero vector passes vacuously.
pub fn check_sos(x: &KVector) -> Result<(), SosViolation> {
    let k = x.level();
    for v in 1..=k {
        if x.min_of_value(v).is_none() {
            return Err(SosViolation::MissingValue(v));
        }
    }
    let min = |v: u8| x.min_of_value(v).unwrap();
    let max = |v: u8| x.max_of_value(v).unwrap();
    for i in 1..=k {
        for j in i + 1..=k {
            if !(min(i) < min(j) && min(j) < max(i)) {
                return Err(SosViolation::Ordering { i, j });
            }
        }
    }
    for i in 2..=k {
        if !window_ok(x, min(i - 1), min(i) - 1, i - 1, 1) {
            return Err(SosViolation::AscentWindow { i });
        }
    }
    for i in 2..=k {
        if !window_ok(x, max(i) + 1, max(i - 1), i - 1, 1) {
            return Err(SosViolation::DescentWindow { i });
        }
    }
    if k > 0 && !window_ok(x, min(k), max(k), k, 1) {
        return Err(SosViolation::CentralWindow);
    }
    Ok(())
}

/// Whether the vector has the staircase shape.
pub fn is_sos(x: &KVector) -> bool {
    check_sos(x).is_ok()
}

/// Whether `u` is the `m`-fold tetris image of some staircase system at
/// level `u.level() + m`.
///
/// On top of the shape clauses this demands `m+1` zero slots per window —
/// room for the `m` erased values plus an original zero — and enough room
/// below the support (`m(m+3)/2` positions) to rebuild the erased ascent.
/// At `m = 0` this is exactly the shape test.
pub(crate) fn image_of_sos(u: &KVector, m: u8) -> bool {
    let j = u.level();
    if j == 0 {
        // The zero vector is the m-fold image of any level-m staircase system.
        return true;
    }
    for v in 1..=j {
        if u.min_of_value(v).is_none() {
            return false;
        }
    }
    let min = |v: u8| u.min_of_value(v).unwrap();
    let max = |v: u8| u.max_of_value(v).unwrap();
    for i in 1..=j {
        for jj in i + 1..=j {
            if !(min(i) < min(jj) && min(jj) < max(i)) {
                return false;
            }
        }
    }
    let zeros = m as u64 + 1;
    for i in 2..=j {
        if !window_ok(u, min(i - 1), min(i) - 1, i - 1, zeros) {
            return false;
        }
        if !window_ok(u, max(i) + 1, max(i - 1), i - 1, zeros) {
            return false;
        }
    }
    if !window_ok(u, min(j), max(j), j, zeros) {
        return false;
    }
    let room = (m as u64 * (m as u64 + 3)) / 2;
    u.min_supp().unwrap() >= room
}

/// Searches for a split of the support into `2k` consecutive chunks with
/// levels `1,…,k−1,k,k,k−1,…,1` where each outer chunk of level `i` is an
/// `(k−i)`-fold tetris image of a staircase system and the middle two merely
/// attain `k`.
fn strong_decomposable(w: &KVector) -> bool {
    let k = w.level();
    if k == 0 {
        return false;
    }
    let mut targets: Vec<u8> = (1..k).collect();
    targets.push(k);
    targets.push(k);
    targets.extend((1..k).rev());
    split_chunks(w.entries(), &targets, k)
}

fn split_chunks(entries: &[(u64, u8)], targets: &[u8], k: u8) -> bool {
    let Some((&target, rest)) = targets.split_first() else {
        return entries.is_empty();
    };
    let mut top = 0u8;
    for len in 1..=entries.len() {
        top = top.max(entries[len - 1].1);
        if top > target {
            return false; // every longer chunk overshoots as well
        }
        if top == target {
            let chunk = KVector::from_entries_releveled(entries[..len].to_vec());
            let ok = target == k || image_of_sos(&chunk, k - target);
            if ok && split_chunks(&entries[len..], rest, k) {
                return true;
            }
        }
    }
    false
}

/// Whether every block is a staircase system; with `strong` set, every block
/// must also decompose into the strong chunk pattern.
pub fn is_sos_sequence(x: &BlockSequence, strong: bool) -> bool {
    x.blocks()
        .iter()
        .all(|b| check_sos(b).is_ok() && (!strong || strong_decomposable(b)))
}

/// A minimal staircase pattern of the given level with every gap widened to
/// `gap` zero slots; `gap = 1` is the tightest legal shape.
fn widened_pattern(level: u8, gap: usize) -> Vec<u8> {
    let mut v = Vec::new();
    for a in 1..level {
        v.push(a);
        v.extend(1..a);
        v.extend(std::iter::repeat(0).take(gap));
    }
    v.push(level);
    v.extend(std::iter::repeat(0).take(gap));
    v.extend(1..level);
    v.push(level);
    for a in (1..level).rev() {
        v.extend(std::iter::repeat(0).take(gap));
        v.extend(1..=a);
    }
    v
}

/// A block pattern that splits into the strong chunk sequence: a zero lead-in
/// buying room for the first chunk, widened staircase pieces ascending in
/// level, the two level-`k` middle chunks, and the mirrored descent.
fn strong_pattern(level: u8) -> Vec<u8> {
    let k = level as usize;
    let mut v = vec![0u8; (k - 1) * (k + 2) / 2];
    let mut segments: Vec<Vec<u8>> = Vec::new();
    for i in 1..level {
        segments.push(widened_pattern(i, (level - i + 1) as usize));
    }
    segments.push(vec![level]);
    let mut mid: Vec<u8> = (1..level).collect();
    mid.push(level);
    segments.push(mid);
    for i in (1..level).rev() {
        segments.push(widened_pattern(i, (level - i + 1) as usize));
    }
    for (n, seg) in segments.iter().enumerate() {
        if n > 0 {
            v.push(0);
        }
        v.extend(seg);
    }
    v
}

/// Generates `count` consecutive staircase-system blocks starting at
/// `origin`. Plain blocks use the tightest pattern (width `k²+2k`); strong
/// blocks use the decomposable pattern. Level 0 is rejected.
pub fn make_sos(
    level: u8,
    count: usize,
    strong: bool,
    origin: u64,
) -> Result<BlockSequence, FinError> {
    if level == 0 {
        return Err(FinError::InvalidInput("staircase systems need level at least 1".into()));
    }
    let pattern = if strong { strong_pattern(level) } else { widened_pattern(level, 1) };
    let width = pattern.len() as u64;
    let mut blocks = Vec::with_capacity(count);
    for b in 0..count as u64 {
        let start = origin + b * width;
        let entries: Vec<(u64, u8)> = pattern
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v > 0)
            .map(|(off, &v)| (start + off as u64, v))
            .collect();
        blocks.push(KVector::new(level, entries)?);
    }
    BlockSequence::new(level, blocks)
}

/// The reference universe used to compare staircase functions: like the
/// plain generator but with doubled gaps and an enriched middle, wide enough
/// that distinct function classes stay distinct on its span.
pub(crate) fn dedupe_reference(level: u8, count: usize) -> BlockSequence {
    let k = level;
    let mut pattern: Vec<u8> = Vec::new();
    for i in 1..k {
        pattern.push(i);
        pattern.extend(1..i);
        pattern.extend([0, 0]);
    }
    pattern.push(k);
    pattern.extend([0, 0]);
    pattern.extend(1..k);
    pattern.push(k);
    pattern.extend(1..k);
    pattern.extend([0, 0]);
    pattern.push(k);
    for i in (1..k).rev() {
        pattern.extend([0, 0]);
        pattern.extend(1..=i);
    }
    let width = pattern.len() as u64;
    let blocks: Vec<KVector> = (0..count as u64)
        .map(|b| {
            let entries: Vec<(u64, u8)> = pattern
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v > 0)
                .map(|(off, &v)| (b * width + off as u64, v))
                .collect();
            KVector::new(level, entries).expect("reference pattern attains its level")
        })
        .collect();
    BlockSequence::from_validated(level, blocks)
}

/// The primitive readings a staircase function is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    /// The first position carrying value `i`, kept at value `i`.
    Min(u8),
    /// The last position carrying value `i`, kept at value `i`.
    Max(u8),
    /// Value-`l` entries strictly between `min_i` and `min_{i+1}`.
    Theta0 {
        /// Window index, `1..level`.
        i: u8,
        /// Value selected inside the window, `1..=i`.
        l: u8,
    },
    /// Value-`l` entries strictly between `max_{i+1}` and `max_i`.
    Theta1 {
        /// Window index, `1..level`.
        i: u8,
        /// Value selected inside the window, `1..=i`.
        l: u8,
    },
    /// Value-`l` entries strictly between `min_k` and `max_k`; `l = 0` reads
    /// the zero vector.
    Theta2(u8),
}

/// An atom bound to the level it reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StairAtom {
    level: u8,
    kind: AtomKind,
}

impl StairAtom {
    /// Builds an atom after checking its parameters against the level.
    pub fn new(level: u8, kind: AtomKind) -> Result<Self, FinError> {
        if level == 0 {
            return Err(FinError::InvalidInput("atoms need level at least 1".into()));
        }
        let ok = match kind {
            AtomKind::Min(i) | AtomKind::Max(i) => 1 <= i && i <= level,
            AtomKind::Theta0 { i, l } | AtomKind::Theta1 { i, l } => {
                1 <= i && i < level && 1 <= l && l <= i
            }
            AtomKind::Theta2(l) => l <= level,
        };
        if !ok {
            return Err(FinError::InvalidInput(format!(
                "atom parameters out of range at level {level}: {kind:?}"
            )));
        }
        Ok(StairAtom { level, kind })
    }

    /// The level the atom reads.
    pub fn level(&self) -> u8 {
        self.level
    }

    /// The primitive reading.
    pub fn kind(&self) -> AtomKind {
        self.kind
    }
}

fn open_window(w: &KVector, lo: u64, hi: u64, value: u8) -> Vec<(u64, u8)> {
    w.entries()
        .iter()
        .copied()
        .filter(|&(p, v)| lo < p && p < hi && v == value)
        .collect()
}

/// Evaluates an atom on a vector of matching level. Undefined `min_i` or
/// `max_i` positions read as 0, so evaluation is total on the level.
pub fn eval_atom(atom: &StairAtom, w: &KVector) -> Result<KVector, FinError> {
    if atom.level != w.level() {
        return Err(FinError::LevelMismatch { left: atom.level, right: w.level() });
    }
    let minp = |v: u8| w.min_of_value(v).unwrap_or(0);
    let maxp = |v: u8| w.max_of_value(v).unwrap_or(0);
    let entries = match atom.kind {
        AtomKind::Min(i) => vec![(minp(i), i)],
        AtomKind::Max(i) => vec![(maxp(i), i)],
        AtomKind::Theta0 { i, l } => open_window(w, minp(i), minp(i + 1), l),
        AtomKind::Theta1 { i, l } => open_window(w, maxp(i + 1), maxp(i), l),
        AtomKind::Theta2(0) => Vec::new(),
        AtomKind::Theta2(l) => open_window(w, minp(atom.level), maxp(atom.level), l),
    };
    Ok(KVector::from_entries_releveled(entries))
}

/// Raw field mirror used to validate deserialized staircase functions.
#[derive(Deserialize)]
struct StairFunctionData {
    level: u8,
    #[serde(default)]
    i0: Vec<u8>,
    #[serde(default)]
    theta0: Vec<(u8, u8)>,
    #[serde(default)]
    theta2: Option<u8>,
    #[serde(default)]
    i1: Vec<u8>,
    #[serde(default)]
    theta1: Vec<(u8, u8)>,
}

/// A join of atoms in the canonical parameterized form: min readings over
/// `i0`, ascent window readings `theta0` keyed by the upper value `j` (the
/// atom reads the window before `min_j`), an optional central reading
/// `theta2`, max readings over `i1`, and descent window readings `theta1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "StairFunctionData")]
pub struct StairFunction {
    level: u8,
    i0: Vec<u8>,
    theta0: Vec<(u8, u8)>,
    theta2: Option<u8>,
    i1: Vec<u8>,
    theta1: Vec<(u8, u8)>,
}

impl TryFrom<StairFunctionData> for StairFunction {
    type Error = FinError;

    fn try_from(d: StairFunctionData) -> Result<Self, FinError> {
        StairFunction::new(d.level, d.i0, d.theta0, d.theta2, d.i1, d.theta1)
    }
}

fn check_side(level: u8, iset: &[u8], theta: &[(u8, u8)]) -> Result<(), FinError> {
    if !iset.windows(2).all(|w| w[0] < w[1]) || iset.iter().any(|&i| i < 1 || i > level) {
        return Err(FinError::InvalidInput(
            "min/max indices must ascend within 1..=level".into(),
        ));
    }
    if !theta.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(FinError::InvalidInput("window readings must ascend by key".into()));
    }
    for &(j, l) in theta {
        if !(iset.contains(&j) && iset.contains(&(j - 1)) && 1 <= l && l < j) {
            return Err(FinError::InvalidInput(format!(
                "window reading ({j},{l}) needs {}, {j} selected and l below {j}",
                j - 1
            )));
        }
    }
    Ok(())
}

impl StairFunction {
    /// Builds a staircase function after validating every parameter group.
    pub fn new(
        level: u8,
        i0: Vec<u8>,
        theta0: Vec<(u8, u8)>,
        theta2: Option<u8>,
        i1: Vec<u8>,
        theta1: Vec<(u8, u8)>,
    ) -> Result<Self, FinError> {
        if level == 0 {
            return Err(FinError::InvalidInput("staircase functions need level at least 1".into()));
        }
        check_side(level, &i0, &theta0)?;
        check_side(level, &i1, &theta1)?;
        if let Some(l) = theta2 {
            if l > level {
                return Err(FinError::InvalidInput(format!(
                    "central reading {l} exceeds level {level}"
                )));
            }
        }
        Ok(StairFunction { level, i0, theta0, theta2, i1, theta1 })
    }

    /// The constant (empty) function at a level.
    pub fn constant(level: u8) -> Result<Self, FinError> {
        StairFunction::new(level, Vec::new(), Vec::new(), None, Vec::new(), Vec::new())
    }

    /// The level the function reads.
    pub fn level(&self) -> u8 {
        self.level
    }

    /// Values with a min reading.
    pub fn i0(&self) -> &[u8] {
        &self.i0
    }

    /// Ascent window readings as `(j, l)` pairs.
    pub fn theta0(&self) -> &[(u8, u8)] {
        &self.theta0
    }

    /// The central reading, if any.
    pub fn theta2(&self) -> Option<u8> {
        self.theta2
    }

    /// Values with a max reading.
    pub fn i1(&self) -> &[u8] {
        &self.i1
    }

    /// Descent window readings as `(j, l)` pairs.
    pub fn theta1(&self) -> &[(u8, u8)] {
        &self.theta1
    }

    /// Whether the function reads nothing and so evaluates to the zero
    /// vector everywhere (a central reading of 0 also reads nothing).
    pub fn is_empty(&self) -> bool {
        self.i0.is_empty()
            && self.theta0.is_empty()
            && self.i1.is_empty()
            && self.theta1.is_empty()
            && matches!(self.theta2, None | Some(0))
    }

    /// The same function with a zero central reading dropped.
    pub fn normalized(&self) -> StairFunction {
        let mut f = self.clone();
        if f.theta2 == Some(0) {
            f.theta2 = None;
        }
        f
    }

    /// The atoms in display order: mins, ascent windows, center, maxes,
    /// descent windows.
    pub fn atoms(&self) -> Vec<StairAtom> {
        let mut out = Vec::new();
        for &i in &self.i0 {
            out.push(StairAtom { level: self.level, kind: AtomKind::Min(i) });
        }
        for &(j, l) in &self.theta0 {
            out.push(StairAtom { level: self.level, kind: AtomKind::Theta0 { i: j - 1, l } });
        }
        if let Some(l) = self.theta2 {
            out.push(StairAtom { level: self.level, kind: AtomKind::Theta2(l) });
        }
        for &i in &self.i1 {
            out.push(StairAtom { level: self.level, kind: AtomKind::Max(i) });
        }
        for &(j, l) in &self.theta1 {
            out.push(StairAtom { level: self.level, kind: AtomKind::Theta1 { i: j - 1, l } });
        }
        out
    }

    /// Parses the display form at a known level. The constant function is
    /// written `const` (an empty string is accepted too).
    pub fn parse(level: u8, text: &str) -> Result<StairFunction, FinError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "const" {
            return StairFunction::constant(level);
        }
        let mut i0 = Vec::new();
        let mut theta0 = Vec::new();
        let mut theta2 = None;
        let mut i1 = Vec::new();
        let mut theta1 = Vec::new();
        for token in trimmed.split_whitespace() {
            let (name, rest) = token
                .split_once('{')
                .ok_or_else(|| FinError::ParseError(format!("expected name{{…}}, got {token:?}")))?;
            let body = rest
                .strip_suffix('}')
                .ok_or_else(|| FinError::ParseError(format!("unclosed group in {token:?}")))?;
            match name {
                "min" => i0 = parse_values(body)?,
                "max" => i1 = parse_values(body)?,
                "theta2" => {
                    theta2 = Some(body.parse::<u8>().map_err(|_| {
                        FinError::ParseError(format!("bad central reading {body:?}"))
                    })?)
                }
                "theta0" => theta0 = parse_pairs(body)?,
                "theta1" => theta1 = parse_pairs(body)?,
                _ => return Err(FinError::ParseError(format!("unknown group {name:?}"))),
            }
        }
        StairFunction::new(level, i0, theta0, theta2, i1, theta1)
    }
}

fn parse_values(body: &str) -> Result<Vec<u8>, FinError> {
    body.split(',')
        .map(|t| t.trim().parse::<u8>().map_err(|_| FinError::ParseError(format!("bad value {t:?}"))))
        .collect()
}

fn parse_pairs(body: &str) -> Result<Vec<(u8, u8)>, FinError> {
    let inner = body
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| FinError::ParseError(format!("expected (j,l) pairs, got {body:?}")))?;
    inner
        .split("),(")
        .map(|pair| {
            let (j, l) = pair
                .split_once(',')
                .ok_or_else(|| FinError::ParseError(format!("bad pair {pair:?}")))?;
            Ok((
                j.trim().parse::<u8>().map_err(|_| FinError::ParseError(format!("bad pair {pair:?}")))?,
                l.trim().parse::<u8>().map_err(|_| FinError::ParseError(format!("bad pair {pair:?}")))?,
            ))
        })
        .collect()
}

impl fmt::Display for StairFunction {
    /// Space-joined groups with empty groups omitted, e.g.
    /// `min{1,2} theta2{1} max{1}`; the constant function prints `const`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let join_values = |vs: &[u8]| {
            vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        };
        let join_pairs = |ps: &[(u8, u8)]| {
            ps.iter().map(|(j, l)| format!("({j},{l})")).collect::<Vec<_>>().join(",")
        };
        if !self.i0.is_empty() {
            parts.push(format!("min{{{}}}", join_values(&self.i0)));
        }
        if !self.theta0.is_empty() {
            parts.push(format!("theta0{{{}}}", join_pairs(&self.theta0)));
        }
        if let Some(l) = self.theta2 {
            parts.push(format!("theta2{{{l}}}"));
        }
        if !self.i1.is_empty() {
            parts.push(format!("max{{{}}}", join_values(&self.i1)));
        }
        if !self.theta1.is_empty() {
            parts.push(format!("theta1{{{}}}", join_pairs(&self.theta1)));
        }
        if parts.is_empty() {
            write!(f, "const")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Evaluates a staircase function as the join of its atoms, rejecting any
/// position read by two atoms. On staircase systems the atom supports are
/// pairwise disjoint, so the join is a plain union there.
pub fn eval(f: &StairFunction, w: &KVector) -> Result<KVector, FinError> {
    let mut entries: Vec<(u64, u8)> = Vec::new();
    for atom in f.atoms() {
        entries.extend(eval_atom(&atom, w)?.entries().iter().copied());
    }
    entries.sort_unstable();
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(FinError::AtomOverlap(pair[0].0));
        }
    }
    Ok(KVector::from_entries_releveled(entries))
}

/// Overlap-tolerant evaluation taking the pointwise maximum; total on the
/// level. The deduplication loop inlines this join against cached atom
/// outputs; the standalone form remains as the reference the tests compare
/// strict evaluation against.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn eval_join(f: &StairFunction, w: &KVector) -> KVector {
    let mut entries: Vec<(u64, u8)> = Vec::new();
    for atom in f.atoms() {
        let out = eval_atom(&atom, w).expect("atom and input levels match");
        entries.extend(out.entries().iter().copied());
    }
    entries.sort_unstable();
    entries.dedup_by(|later, earlier| {
        // Sorted ascending, so the survivor keeps the larger value.
        if earlier.0 == later.0 {
            earlier.1 = earlier.1.max(later.1);
            true
        } else {
            false
        }
    });
    KVector::from_entries_releveled(entries)
}

/// One side's worth of raw choices: the selected values plus the window
/// readings over them, in enumeration order.
fn side_choices(level: u8) -> Vec<(Vec<u8>, Vec<(u8, u8)>)> {
    let values: Vec<u8> = (1..=level).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << level) {
        let iset: Vec<u8> = values
            .iter()
            .enumerate()
            .filter(|&(n, _)| mask >> n & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        let eligible: Vec<u8> = iset
            .iter()
            .copied()
            .filter(|&j| j >= 3 && iset.contains(&(j - 1)))
            .collect();
        for jmask in 0u32..(1 << eligible.len()) {
            let js: Vec<u8> = eligible
                .iter()
                .enumerate()
                .filter(|&(n, _)| jmask >> n & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            // Shift odometer, rightmost position fastest.
            let mut ls: Vec<u8> = vec![1; js.len()];
            'odometer: loop {
                out.push((iset.clone(), js.iter().copied().zip(ls.iter().copied()).collect()));
                let mut pos = ls.len();
                loop {
                    if pos == 0 {
                        break 'odometer;
                    }
                    pos -= 1;
                    if ls[pos] < js[pos] - 2 {
                        ls[pos] += 1;
                        break;
                    }
                    ls[pos] = 1; // exhausted, carry left
                }
            }
        }
    }
    out
}

/// Enumerates staircase functions at a level with the default reference
/// universe (four blocks) for deduplication.
pub fn enumerate_stair_functions(level: u8, dedupe: bool) -> Vec<StairFunction> {
    enumerate_stair_functions_ref(level, dedupe, 4)
}

/// Enumerates staircase functions at a level.
///
/// Without `dedupe`, lists every raw parameter tuple in a fixed order (min
/// side outermost, then the central reading, then the max side). With
/// `dedupe`, functions inducing the same partition of the reference span are
/// merged; classes keep first-occurrence order, and each is represented by
/// its fullest member — largest total output support, then most atoms.
pub fn enumerate_stair_functions_ref(
    level: u8,
    dedupe: bool,
    reference_blocks: usize,
) -> Vec<StairFunction> {
    if level == 0 {
        return Vec::new();
    }
    let sides = side_choices(level);
    let mut centers: Vec<Option<u8>> = vec![None];
    centers.extend((0..=level).map(Some));
    let mut raw = Vec::new();
    for (i0, theta0) in &sides {
        for &theta2 in &centers {
            for (i1, theta1) in &sides {
                raw.push(StairFunction {
                    level,
                    i0: i0.clone(),
                    theta0: theta0.clone(),
                    theta2,
                    i1: i1.clone(),
                    theta1: theta1.clone(),
                });
            }
        }
    }
    if !dedupe {
        return raw;
    }

    // Deduplication scans every function over the whole reference span, and
    // callers (notably the canonical-map counts) repeat the same enumeration,
    // so memoize it; the result is a pure function of the cache key.
    static DEDUPED: OnceLock<Mutex<HashMap<(u8, usize), Vec<StairFunction>>>> = OnceLock::new();
    let cache = DEDUPED.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(done) = cache.lock().unwrap().get(&(level, reference_blocks)) {
        return done.clone();
    }
    let out = dedupe_functions(level, raw, reference_blocks);
    cache.lock().unwrap().insert((level, reference_blocks), out.clone());
    out
}

/// Merges raw functions inducing the same partition of the reference span.
fn dedupe_functions(
    level: u8,
    raw: Vec<StairFunction>,
    reference_blocks: usize,
) -> Vec<StairFunction> {
    let reference = dedupe_reference(level, reference_blocks);
    let span: Vec<KVector> = span_enumerate(&reference).into_iter().map(|(w, _)| w).collect();
    let normalized: Vec<StairFunction> = raw.iter().map(|f| f.normalized()).collect();
    // The functions recombine a small pool of atoms, so evaluate each atom
    // over the whole span once and join from the cache.
    let atom_index: HashMap<StairAtom, usize> = normalized
        .iter()
        .flat_map(|f| f.atoms())
        .collect::<HashSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(n, atom)| (atom, n))
        .collect();
    let mut atom_table: Vec<(&StairAtom, Vec<Vec<(u64, u8)>>)> =
        atom_index.keys().map(|atom| (atom, Vec::new())).collect();
    atom_table.par_iter_mut().for_each(|(atom, outputs)| {
        *outputs = span
            .iter()
            .map(|w| eval_atom(atom, w).expect("atom and input levels match").entries().to_vec())
            .collect();
    });
    let atom_outputs: Vec<&Vec<Vec<(u64, u8)>>> = {
        let mut by_id = vec![None; atom_index.len()];
        for (atom, outputs) in &atom_table {
            by_id[atom_index[atom]] = Some(outputs);
        }
        by_id.into_iter().map(|o| o.expect("every atom id filled")).collect()
    };
    // Partition signature and total output support for every raw function.
    let profiles: Vec<(Vec<u32>, u64)> = normalized
        .par_iter()
        .map(|nf| {
            let atom_ids: Vec<usize> =
                nf.atoms().iter().map(|atom| atom_index[atom]).collect();
            let mut ids = Vec::with_capacity(span.len());
            let mut seen: HashMap<Vec<(u64, u8)>, u32> = HashMap::new();
            let mut support = 0u64;
            for wi in 0..span.len() {
                let mut entries: Vec<(u64, u8)> = Vec::new();
                for &ai in &atom_ids {
                    entries.extend_from_slice(&atom_outputs[ai][wi]);
                }
                entries.sort_unstable();
                entries.dedup_by(|later, earlier| {
                    // Sorted ascending, so the survivor keeps the larger value.
                    if earlier.0 == later.0 {
                        earlier.1 = earlier.1.max(later.1);
                        true
                    } else {
                        false
                    }
                });
                support += entries.len() as u64;
                let next = seen.len() as u32;
                ids.push(*seen.entry(entries).or_insert(next));
            }
            (ids, support)
        })
        .collect();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<&[u32], usize> = HashMap::new();
    for (n, (sig, _)) in profiles.iter().enumerate() {
        match index.get(sig.as_slice()) {
            Some(&g) => groups[g].push(n),
            None => {
                index.insert(sig.as_slice(), groups.len());
                groups.push(vec![n]);
            }
        }
    }
    groups
        .iter()
        .map(|members| {
            let mut best = members[0];
            for &cand in &members[1..] {
                let score = |n: usize| (profiles[n].1, normalized[n].atoms().len());
                if score(cand) > score(best) {
                    best = cand;
                }
            }
            normalized[best].clone()
        })
        .collect()
}

/// The partition of `elements` induced by pointwise evaluation: indices with
/// equal images share a part, parts ordered by least index.
pub fn induced_relation(
    f: &StairFunction,
    elements: &[KVector],
) -> Result<Vec<Vec<usize>>, FinError> {
    let mut parts: Vec<(KVector, Vec<usize>)> = Vec::new();
    for (n, w) in elements.iter().enumerate() {
        let out = eval(f, w)?;
        match parts.iter_mut().find(|(u, _)| *u == out) {
            Some((_, ix)) => ix.push(n),
            None => parts.push((out, vec![n])),
        }
    }
    Ok(parts.into_iter().map(|(_, ix)| ix).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> KVector {
        s.parse().unwrap()
    }

    #[test]
    fn shape_test_reports_first_violation() {
        assert!(is_sos(&v("2:{0:1,2:2,4:1,5:2,7:1}")));
        assert_eq!(check_sos(&v("2:{0:2}")), Err(SosViolation::MissingValue(1)));
        assert_eq!(check_sos(&v("1:{0:1}")), Err(SosViolation::CentralWindow));
        assert_eq!(check_sos(&v("1:{0:1,1:1}")), Err(SosViolation::CentralWindow));
        assert!(is_sos(&KVector::zero())); // vacuous at level 0
        // Values out of order: the 2-run starts before the 1-run.
        assert_eq!(
            check_sos(&v("2:{0:2,2:1,4:2,5:1,7:2}")),
            Err(SosViolation::Ordering { i: 1, j: 2 })
        );
    }

    #[test]
    fn generator_blocks_are_pinned_and_valid() {
        let x = make_sos(1, 2, false, 0).unwrap();
        assert_eq!(x.to_string(), "1:{0:1,2:1} 1:{3:1,5:1}");
        let x = make_sos(2, 1, false, 0).unwrap();
        assert_eq!(x.to_string(), "2:{0:1,2:2,4:1,5:2,7:1}");
        let s = make_sos(1, 1, true, 0).unwrap();
        assert_eq!(s.to_string(), "1:{0:1,2:1}");
        let s = make_sos(2, 1, true, 0).unwrap();
        assert_eq!(s.to_string(), "2:{2:1,5:1,7:2,9:1,10:2,12:1,15:1}");
        for level in 1..=4 {
            let plain = make_sos(level, 3, false, 0).unwrap();
            assert!(is_sos_sequence(&plain, false), "plain level {level}");
            let strong = make_sos(level, 3, true, 0).unwrap();
            assert!(is_sos_sequence(&strong, true), "strong level {level}");
        }
        assert!(make_sos(0, 1, false, 0).is_err());
        assert!(make_sos(2, 0, false, 0).unwrap().is_empty());
        // Shifting the origin translates every entry uniformly.
        let base = make_sos(3, 2, false, 0).unwrap();
        let moved = make_sos(3, 2, false, 7).unwrap();
        for (a, b) in base.blocks().iter().zip(moved.blocks()) {
            let translated: Vec<(u64, u8)> =
                a.entries().iter().map(|&(p, val)| (p + 7, val)).collect();
            assert_eq!(b.entries(), translated.as_slice());
        }
    }

    #[test]
    fn tetris_images_keep_the_shape() {
        for level in 1..=4 {
            for block in make_sos(level, 5, false, 3).unwrap().blocks() {
                let image = block.tetris(1);
                assert!(is_sos(&image), "level {level} image {image}");
                assert!(image_of_sos(&image, 1));
            }
        }
        // The image test at m = 0 is exactly the shape test.
        for w in ["2:{0:1,2:2,4:1,5:2,7:1}", "2:{0:2}", "1:{0:1}", "1:{0:1,2:1}", "2:{2:2,5:1}"] {
            assert_eq!(is_sos(&v(w)), image_of_sos(&v(w), 0), "{w}");
        }
        // The tight level-1 block leaves no room to be a deeper image, while
        // a level-2 block's first image keeps a spare zero slot.
        assert!(!image_of_sos(&v("1:{0:1,2:1}"), 1));
        let wide = make_sos(2, 1, false, 0).unwrap();
        assert!(image_of_sos(&wide.blocks()[0].tetris(1), 1));
    }

    #[test]
    fn strong_decompositions_need_the_widened_pattern() {
        // Every level-1 staircase system splits into two level-1 chunks.
        for w in ["1:{0:1,2:1}", "1:{0:1,2:1,5:1}", "1:{3:1,5:1,6:1,9:1}"] {
            assert!(is_sos(&v(w)) && strong_decomposable(&v(w)), "{w}");
        }
        // The tight plain block at level 2 has no room for hidden values.
        assert!(!strong_decomposable(&v("2:{0:1,2:2,4:1,5:2,7:1}")));
        assert!(strong_decomposable(&v("2:{2:1,5:1,7:2,9:1,10:2,12:1,15:1}")));
    }

    #[test]
    fn atom_evaluation_matches_the_examples() {
        let w = v("2:{0:1,2:2,4:1,5:2,7:1}");
        let atom = |kind| StairAtom::new(2, kind).unwrap();
        assert_eq!(eval_atom(&atom(AtomKind::Min(2)), &w).unwrap(), v("2:{2:2}"));
        assert_eq!(eval_atom(&atom(AtomKind::Max(1)), &w).unwrap(), v("1:{7:1}"));
        assert_eq!(eval_atom(&atom(AtomKind::Theta2(1)), &w).unwrap(), v("1:{4:1}"));
        assert!(eval_atom(&atom(AtomKind::Theta2(0)), &w).unwrap().is_zero());
        let min_max = StairFunction::new(2, vec![1], vec![], None, vec![1], vec![]).unwrap();
        assert_eq!(eval(&min_max, &w).unwrap(), v("1:{0:1,7:1}"));
        let triple = StairFunction::new(2, vec![2], vec![], Some(1), vec![1], vec![]).unwrap();
        assert_eq!(eval(&triple, &w).unwrap(), v("2:{2:2,4:1,7:1}"));
        let wrong_level = StairFunction::new(1, vec![1], vec![], None, vec![], vec![]).unwrap();
        assert!(matches!(eval(&wrong_level, &w), Err(FinError::LevelMismatch { .. })));
    }

    #[test]
    fn overlapping_atoms_are_rejected_strictly_and_joined_totally() {
        // A single value-1 entry makes min_1 and max_1 coincide.
        let w = v("2:{0:1,1:2}");
        let f = StairFunction::new(2, vec![1], vec![], None, vec![1], vec![]).unwrap();
        assert_eq!(eval(&f, &w), Err(FinError::AtomOverlap(0)));
        assert_eq!(eval_join(&f, &w), v("1:{0:1}"));
        // Strict evaluation never trips on staircase systems.
        for level in 1..=3 {
            let blocks = make_sos(level, 2, false, 0).unwrap();
            for f in enumerate_stair_functions(level, false) {
                for b in blocks.blocks() {
                    eval(&f, b).unwrap();
                }
            }
        }
    }

    #[test]
    fn raw_enumeration_counts() {
        assert_eq!(enumerate_stair_functions(1, false).len(), 12);
        assert_eq!(enumerate_stair_functions(2, false).len(), 64);
        assert_eq!(enumerate_stair_functions(3, false).len(), 500);
        assert_eq!(enumerate_stair_functions(4, false).len(), 6144);
        assert!(enumerate_stair_functions(0, false).is_empty());
    }

    #[test]
    fn deduplication_at_level_one_leaves_five_classes() {
        let deduped = enumerate_stair_functions(1, true);
        let shown: Vec<String> = deduped.iter().map(|f| f.to_string()).collect();
        assert_eq!(
            shown,
            vec!["const", "max{1}", "min{1} theta2{1} max{1}", "min{1}", "min{1} max{1}"]
        );
        // Exactly one class keeps a central reading.
        assert_eq!(deduped.iter().filter(|f| f.theta2().is_some()).count(), 1);
        // The identity class representative really is the identity on spans.
        let identity = &deduped[2];
        for (w, _) in span_enumerate(&make_sos(1, 3, false, 0).unwrap()) {
            assert_eq!(eval(identity, &w).unwrap(), w);
        }
    }

    #[test]
    fn deduplication_is_stable_under_a_longer_reference() {
        for level in 1..=2 {
            let short = enumerate_stair_functions_ref(level, true, 4);
            let long = enumerate_stair_functions_ref(level, true, 5);
            assert_eq!(short, long, "level {level}");
        }
    }

    #[test]
    fn reference_universe_is_pinned_and_valid() {
        assert_eq!(dedupe_reference(1, 1).to_string(), "1:{0:1,3:1,6:1}");
        assert_eq!(dedupe_reference(2, 1).to_string(), "2:{0:1,3:2,6:1,7:2,8:1,11:2,14:1}");
        for level in 1..=4 {
            assert!(is_sos_sequence(&dedupe_reference(level, 4), false), "level {level}");
        }
    }

    #[test]
    fn induced_partition_groups_by_image() {
        let x = BlockSequence::units(2);
        let elements: Vec<KVector> = span_enumerate(&x).into_iter().map(|(w, _)| w).collect();
        let min = StairFunction::new(1, vec![1], vec![], None, vec![], vec![]).unwrap();
        assert_eq!(induced_relation(&min, &elements).unwrap(), vec![vec![0, 1], vec![2]]);
        let constant = StairFunction::constant(1).unwrap();
        assert_eq!(induced_relation(&constant, &elements).unwrap(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn function_codecs_round_trip() {
        let f = StairFunction::new(3, vec![1, 2], vec![], Some(2), vec![3], vec![]).unwrap();
        assert_eq!(f.to_string(), "min{1,2} theta2{2} max{3}");
        assert_eq!(StairFunction::parse(3, &f.to_string()).unwrap(), f);
        let g = StairFunction::new(
            4,
            vec![2, 3, 4],
            vec![(3, 1), (4, 2)],
            None,
            vec![1],
            vec![],
        )
        .unwrap();
        assert_eq!(g.to_string(), "min{2,3,4} theta0{(3,1),(4,2)} max{1}");
        assert_eq!(StairFunction::parse(4, &g.to_string()).unwrap(), g);
        let c = StairFunction::constant(2).unwrap();
        assert_eq!(c.to_string(), "const");
        assert_eq!(StairFunction::parse(2, "const").unwrap(), c);
        assert_eq!(StairFunction::parse(2, "").unwrap(), c);

        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<StairFunction>(&json).unwrap(), g);
        // Window readings over unselected values are rejected on re-parse.
        assert!(serde_json::from_str::<StairFunction>(
            r#"{"level":4,"i0":[3],"theta0":[[3,1]],"theta2":null,"i1":[],"theta1":[]}"#
        )
        .is_err());
        assert!(StairFunction::new(2, vec![1], vec![], Some(3), vec![], vec![]).is_err());
    }
}
