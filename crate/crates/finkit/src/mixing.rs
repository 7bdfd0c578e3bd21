//! Separation and mixing of front prefixes over reducts of the base sequence.
//!
//! For two proper member prefixes `s` and `t` of a colored front, a reduct `y`
//! of the base *separates* them when the members extending `s` inside `y` and
//! the members extending `t` inside `y` take disjoint color sets.  Extending
//! "inside `y`" is meant strictly: every block of the extended member,
//! including the blocks of the prefix itself, must lie in the span of `y`.
//! [`decide_mixing`] sweeps every reduct up to a block budget and reports the
//! first separating one, or certifies that the pair stayed mixed at that
//! horizon.  For a mixed pair of strictly increasing depths it also looks for
//! a weak-mixing witness: a vector drawn from the deeper prefix's union that
//! can be folded into the shallower prefix while keeping a shared color
//! available on every compatible reduct.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{approximations, depth, leq, subsequences_up_to, tail, BlockSequence};
use crate::error::FinError;
use crate::front::{Coloring, Front, FrontKind};
use crate::vector::KVector;

/// Scope of a mixing sweep: how far it looked and what it saw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    /// Block budget the reduct enumeration ran under.
    pub max_blocks: usize,
    /// Number of reducts the sweep examined.
    pub reducts_checked: usize,
    /// How many of them admitted extensions of both prefixes.
    pub compatible_reducts: usize,
}

/// How a pair of prefixes relates under a coloring, as far as a sweep can tell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MixVerdict {
    /// Some reduct gives the two prefixes disjoint color sets.
    Separated {
        /// The first separating reduct in enumeration order.
        witness: BlockSequence,
    },
    /// Every compatible reduct within the budget lets the color sets meet.
    MixedAtHorizon,
    /// An input is not a proper member prefix, so the question does not apply.
    Incomparable,
}

/// Outcome of a mixing decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixReport {
    /// The verdict reached within the horizon.
    #[serde(flatten)]
    pub verdict: MixVerdict,
    /// For a mixed pair of strictly increasing depths, the first vector from
    /// the deeper union that folds into the shallower prefix while keeping a
    /// shared color available on every compatible reduct.
    pub weak_witness: Option<KVector>,
    /// What the sweep actually covered.
    pub horizon: Horizon,
}

/// Whether `q` is a proper initial segment of some member of the front.
fn is_proper_prefix(front: &Front, q: &BlockSequence) -> bool {
    q.level() == front.base().level()
        && !front.is_member(q)
        && front.members().iter().any(|m| m.starts_with(q))
}

/// Members of the front restricted to `y` having `q` as an initial segment.
///
/// A uniform front contributes `q` extended by further blocks from the span
/// of `y` past `q`, provided the blocks of `q` themselves all lie in the span
/// of `y`; an explicit front contributes its listed members below `y`.
fn extensions(
    front: &Front,
    y: &BlockSequence,
    q: &BlockSequence,
) -> Result<Vec<BlockSequence>, FinError> {
    match front.kind() {
        FrontKind::UniformRank(n) => {
            if q.len() > n || leq(q, y, false)?.is_none() {
                return Ok(Vec::new());
            }
            let need = n - q.len();
            if need == 0 {
                return Ok(vec![q.clone()]);
            }
            let rest = tail(y, q)?;
            if need > rest.len() {
                return Ok(Vec::new());
            }
            Ok(approximations(&rest, need)?
                .into_iter()
                .map(|u| {
                    let mut blocks = q.blocks().to_vec();
                    blocks.extend(u.blocks().iter().cloned());
                    BlockSequence::from_validated(y.level(), blocks)
                })
                .collect())
        }
        FrontKind::Explicit => {
            let mut out = Vec::new();
            for m in front.members_extending(q) {
                if leq(&m, y, false)?.is_some() {
                    out.push(m);
                }
            }
            Ok(out)
        }
    }
}

/// The colors a set of members takes.
fn color_set(coloring: &Coloring, members: &[BlockSequence]) -> Result<HashSet<String>, FinError> {
    members.iter().map(|m| coloring.color(m)).collect()
}

/// Classifies one reduct: 0 if a side has no extensions, 1 if both sides
/// extend and share a color, 2 if both sides extend with disjoint colors.
fn reduct_code(
    coloring: &Coloring,
    y: &BlockSequence,
    s: &BlockSequence,
    t: &BlockSequence,
) -> Result<u8, FinError> {
    let front = coloring.front();
    let ext_s = extensions(front, y, s)?;
    if ext_s.is_empty() {
        return Ok(0);
    }
    let ext_t = extensions(front, y, t)?;
    if ext_t.is_empty() {
        return Ok(0);
    }
    let colors_s = color_set(coloring, &ext_s)?;
    let colors_t = color_set(coloring, &ext_t)?;
    Ok(if colors_s.is_disjoint(&colors_t) { 2 } else { 1 })
}

/// Whether the reduct `z` gives `s` and `t` disjoint color sets.
///
/// Both prefixes must be proper initial segments of members of the coloring's
/// front.  A reduct extending only one side (or neither) is incompatible with
/// the pair and reported as an error rather than as a separation.
pub fn separates(
    z: &BlockSequence,
    s: &BlockSequence,
    t: &BlockSequence,
    coloring: &Coloring,
) -> Result<bool, FinError> {
    let front = coloring.front();
    for q in [s, t] {
        if !is_proper_prefix(front, q) {
            return Err(FinError::FrontMismatch(format!(
                "{q} is not a proper prefix of a member of the front"
            )));
        }
    }
    match reduct_code(coloring, z, s, t)? {
        0 => Err(FinError::IncompatibleReduct),
        code => Ok(code == 2),
    }
}

/// `s` with `w` folded into its final block, if the fold still forms a valid
/// block sequence (an empty `s` takes `w` as its only block).
fn fold_into_last(s: &BlockSequence, w: &KVector) -> Option<BlockSequence> {
    let mut blocks = s.blocks().to_vec();
    let merged = match blocks.pop() {
        Some(last) => KVector::block_sum(&[last, w.clone()]).ok()?,
        None => w.clone(),
    };
    blocks.push(merged);
    BlockSequence::new(s.level(), blocks).ok()
}

/// Searches for a weak-mixing witness for a pair already known to be mixed.
///
/// Candidates are the nonempty sub-vectors of `t`'s union supported off `s`'s
/// union, tried smallest support first and in position order within a size.
/// A candidate succeeds when, on every compatible reduct, the members
/// extending the folded prefix share a color with the members extending `t`.
fn weak_witness(
    coloring: &Coloring,
    s: &BlockSequence,
    t: &BlockSequence,
    compatible: &[&BlockSequence],
) -> Result<Option<KVector>, FinError> {
    let union_s = if s.is_empty() {
        None
    } else {
        Some(KVector::block_sum(s.blocks()).expect("blocks of a sequence never overlap"))
    };
    let spare: Vec<(u64, u8)> = match t.blocks() {
        [] => return Ok(None),
        blocks => KVector::block_sum(blocks)
            .expect("blocks of a sequence never overlap")
            .entries()
            .iter()
            .filter(|&&(pos, _)| union_s.as_ref().map_or(true, |u| u.value_at(pos) == 0))
            .copied()
            .collect(),
    };
    if spare.is_empty() {
        return Ok(None);
    }
    if spare.len() > 20 {
        return Err(FinError::InvalidInput(format!(
            "weak-witness search over {} spare positions is out of range",
            spare.len()
        )));
    }
    let mut candidates: Vec<Vec<(u64, u8)>> = (1u64..(1 << spare.len()))
        .map(|mask| {
            spare
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &entry)| entry)
                .collect()
        })
        .collect();
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let front = coloring.front();
    'candidates: for entries in candidates {
        let w = KVector::from_entries_releveled(entries);
        let Some(folded) = fold_into_last(s, &w) else { continue };
        for y in compatible {
            let ext_w = extensions(front, y, &folded)?;
            if ext_w.is_empty() {
                continue 'candidates;
            }
            let colors_w = color_set(coloring, &ext_w)?;
            let colors_t = color_set(coloring, &extensions(front, y, t)?)?;
            if colors_w.is_disjoint(&colors_t) {
                continue 'candidates;
            }
        }
        return Ok(Some(w));
    }
    Ok(None)
}

/// Sweeps every reduct of `x` with at most `max_blocks` blocks, deciding
/// whether any of them separates `s` from `t` under the coloring.
///
/// The coloring's front must live on `x`.  Inputs that are not proper member
/// prefixes yield an [`MixVerdict::Incomparable`] verdict.  Otherwise the
/// first separating reduct in enumeration order becomes the witness; if none
/// appears the pair is mixed at this horizon, and when `s` sits strictly
/// shallower below `x` than `t` the report also carries the weak-mixing
/// witness found by [`weak_witness`], if any.  A budget leaving no compatible
/// reduct at all is an error.
pub fn decide_mixing(
    x: &BlockSequence,
    s: &BlockSequence,
    t: &BlockSequence,
    coloring: &Coloring,
    max_blocks: usize,
) -> Result<MixReport, FinError> {
    let front = coloring.front();
    if front.base() != x {
        return Err(FinError::FrontMismatch(format!(
            "the coloring's front lives on {}, not on {x}",
            front.base()
        )));
    }
    if !is_proper_prefix(front, s) || !is_proper_prefix(front, t) {
        return Ok(MixReport {
            verdict: MixVerdict::Incomparable,
            weak_witness: None,
            horizon: Horizon { max_blocks, reducts_checked: 0, compatible_reducts: 0 },
        });
    }
    let reducts = subsequences_up_to(x, max_blocks);
    let codes = reducts
        .par_iter()
        .map(|y| reduct_code(coloring, y, s, t))
        .collect::<Result<Vec<u8>, FinError>>()?;
    let compatible_reducts = codes.iter().filter(|&&code| code > 0).count();
    if compatible_reducts == 0 {
        return Err(FinError::IncompatibleReduct);
    }
    let horizon = Horizon { max_blocks, reducts_checked: reducts.len(), compatible_reducts };
    if let Some(i) = codes.iter().position(|&code| code == 2) {
        return Ok(MixReport {
            verdict: MixVerdict::Separated { witness: reducts[i].clone() },
            weak_witness: None,
            horizon,
        });
    }
    let weak_witness = if depth(x, s)? < depth(x, t)? {
        let compatible: Vec<&BlockSequence> = reducts
            .iter()
            .zip(&codes)
            .filter(|&(_, &code)| code > 0)
            .map(|(y, _)| y)
            .collect();
        weak_witness(coloring, s, t, &compatible)?
    } else {
        None
    };
    Ok(MixReport { verdict: MixVerdict::MixedAtHorizon, weak_witness, horizon })
}
