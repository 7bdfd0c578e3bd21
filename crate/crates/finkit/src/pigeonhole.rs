//! Exhaustive search for block subsequences on which a coloring is constant.
//!
//! Every finite coloring of the rank-`n` block subsequences of a sequence is
//! constant on the rank-`n` subsequences of some coarser sequence.  At desk
//! scale no bound on the required universe is available, so [`find_homogeneous`]
//! searches a truncated universe depth-first, in canonical term order, for the
//! least witness of a requested length — pruning a partial choice as soon as
//! two colors appear among its completed approximations — and reports
//! exhaustion with full statistics when the budget runs out.  An optional
//! seeded probe first samples random completions; a homogeneous sample bounds
//! the canonical search without affecting which witness is returned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::block::{approximations, BlockSequence, TermTable};
use crate::error::FinError;
use crate::front::Coloring;
use crate::vector::KVector;

/// Bounds on a homogeneity search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Use at most this many leading blocks of the universe.
    pub max_universe_blocks: usize,
    /// Number of blocks the witness must have.
    pub target_length: usize,
    /// Abort after visiting this many search nodes, if set.
    pub node_limit: Option<u64>,
    /// Seed for the randomized probe priming the canonical bound, if any.
    /// The witness never depends on the seed, only the node counts do.
    pub seed: Option<u64>,
}

/// Statistics of one homogeneity search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    /// Search nodes visited, one per block placement.
    pub nodes: u64,
    /// Subtrees cut because two colors appeared among the completed
    /// approximations of the partial sequence.
    pub color_prunes: u64,
    /// Sibling families cut because no completion could precede the probe's
    /// homogeneous sample in canonical order.
    pub bound_prunes: u64,
    /// Whether the node limit stopped the search before exhaustion.
    pub budget_exhausted: bool,
    /// Nodes per partial length; index `i` counts placements of block `i + 1`.
    pub depth_histogram: Vec<u64>,
    /// Random completions the probe attempted.
    pub probe_samples: u64,
    /// Whether any probe completion was homogeneous.
    pub probe_hit: bool,
}

/// Result of a homogeneity search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    /// The least witness of the target length, in canonical order.
    Found {
        /// The homogeneous block subsequence.
        witness: BlockSequence,
        /// How the search went.
        report: SearchReport,
    },
    /// No witness exists within the budget.
    Exhausted {
        /// How the search went.
        report: SearchReport,
    },
}

/// Checks from scratch that every rank-`n` subsequence of `y` receives one
/// color.  Deliberately shares no state with the search pruning.
pub fn certify_homogeneous(
    y: &BlockSequence,
    coloring: &Coloring,
    n: usize,
) -> Result<bool, FinError> {
    let mut seen: Option<String> = None;
    for member in approximations(y, n)? {
        let color = coloring.color(&member)?;
        match &seen {
            Some(first) if *first != color => return Ok(false),
            Some(_) => {}
            None => seen = Some(color),
        }
    }
    Ok(true)
}

/// Whether the completed rank-`n` approximations of a partial choice still
/// all take one color.  Prefixes too short to have any approximation pass.
fn single_colored(
    coloring: &Coloring,
    level: u8,
    blocks: &[KVector],
    n: usize,
) -> Result<bool, FinError> {
    if blocks.len() < n {
        return Ok(true);
    }
    let partial = BlockSequence::from_validated(level, blocks.to_vec());
    let mut seen: Option<String> = None;
    for member in approximations(&partial, n)? {
        let color = coloring.color(&member)?;
        match &seen {
            Some(first) if *first != color => return Ok(false),
            Some(_) => {}
            None => seen = Some(color),
        }
    }
    Ok(true)
}

/// Samples random completions, returning the canonically least homogeneous
/// one as a term-index tuple for the search to prune against.
fn probe(
    coloring: &Coloring,
    table: &TermTable,
    level: u8,
    n: usize,
    target: usize,
    seed: u64,
    report: &mut SearchReport,
) -> Result<Option<Vec<usize>>, FinError> {
    const SAMPLES: u64 = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bound: Option<Vec<usize>> = None;
    for _ in 0..SAMPLES {
        report.probe_samples += 1;
        let mut terms = Vec::with_capacity(target);
        let mut blocks = Vec::with_capacity(target);
        let mut next_start = 0usize;
        for _ in 0..target {
            let choices: Vec<usize> = table.from_start(next_start).collect();
            if choices.is_empty() {
                break;
            }
            let e = choices[rng.gen_range(0..choices.len())];
            let (value, term) = &table.entries[e];
            terms.push(e);
            blocks.push(value.clone());
            next_start = term.max_index() + 1;
        }
        if blocks.len() < target || !single_colored(coloring, level, &blocks, n)? {
            continue;
        }
        report.probe_hit = true;
        if bound.as_ref().is_none_or(|b| terms < *b) {
            bound = Some(terms);
        }
    }
    Ok(bound)
}

struct Search<'a> {
    coloring: &'a Coloring,
    table: &'a TermTable,
    level: u8,
    rank: usize,
    target: usize,
    node_limit: Option<u64>,
    bound: Option<Vec<usize>>,
    report: SearchReport,
}

enum Walk {
    Found(BlockSequence),
    Stopped,
    Done,
}

impl Search<'_> {
    fn walk(
        &mut self,
        terms: &mut Vec<usize>,
        blocks: &mut Vec<KVector>,
        next_start: usize,
    ) -> Result<Walk, FinError> {
        for e in self.table.from_start(next_start) {
            if self.node_limit.is_some_and(|limit| self.report.nodes >= limit) {
                self.report.budget_exhausted = true;
                return Ok(Walk::Stopped);
            }
            terms.push(e);
            // Siblings come in ascending canonical order, so once the prefix
            // passes the known homogeneous bound the whole family is beaten.
            if self.bound.as_ref().is_some_and(|b| terms[..] > b[..terms.len()]) {
                terms.pop();
                self.report.bound_prunes += 1;
                break;
            }
            self.report.nodes += 1;
            self.report.depth_histogram[terms.len() - 1] += 1;
            let (value, term) = &self.table.entries[e];
            blocks.push(value.clone());
            if !single_colored(self.coloring, self.level, blocks, self.rank)? {
                self.report.color_prunes += 1;
            } else if blocks.len() == self.target {
                return Ok(Walk::Found(BlockSequence::from_validated(self.level, blocks.clone())));
            } else {
                match self.walk(terms, blocks, term.max_index() + 1)? {
                    Walk::Done => {}
                    outcome => return Ok(outcome),
                }
            }
            blocks.pop();
            terms.pop();
        }
        Ok(Walk::Done)
    }
}

/// Searches the first `max_universe_blocks` blocks of `x` for the least
/// block subsequence, in canonical term order, of `target_length` blocks on
/// whose rank-`n` subsequences the coloring is constant.
///
/// The coloring's front must live on `x` with uniform arity `n`.  Exhaustion
/// — whether the truncated universe genuinely has no witness or the node
/// limit ran out — is an ordinary outcome carrying the search statistics.
pub fn find_homogeneous(
    coloring: &Coloring,
    x: &BlockSequence,
    n: usize,
    budget: &SearchBudget,
) -> Result<SearchOutcome, FinError> {
    if budget.target_length > budget.max_universe_blocks {
        return Err(FinError::InvalidInput(format!(
            "target length {} exceeds the universe budget {}",
            budget.target_length, budget.max_universe_blocks
        )));
    }
    if n > budget.target_length {
        return Err(FinError::InvalidInput(format!(
            "rank {n} exceeds the target length {}",
            budget.target_length
        )));
    }
    let front = coloring.front();
    if front.base() != x {
        return Err(FinError::FrontMismatch(format!(
            "the coloring's front lives on {}, not on {x}",
            front.base()
        )));
    }
    match front.arity() {
        None => return Err(FinError::NonUniformFront),
        Some(arity) if arity != n => {
            return Err(FinError::InvalidArity(format!(
                "the coloring's front has arity {arity}, not {n}"
            )));
        }
        Some(_) => {}
    }
    let universe = x.restrict(budget.max_universe_blocks.min(x.len()))?;
    let mut report = SearchReport {
        nodes: 0,
        color_prunes: 0,
        bound_prunes: 0,
        budget_exhausted: false,
        depth_histogram: vec![0; budget.target_length],
        probe_samples: 0,
        probe_hit: false,
    };
    if budget.target_length == 0 {
        // The empty sequence is the only candidate and its single empty
        // approximation is trivially one color.
        let witness = BlockSequence::from_validated(universe.level(), Vec::new());
        return Ok(SearchOutcome::Found { witness, report });
    }
    let table = TermTable::build(&universe);
    let bound = match budget.seed {
        Some(seed) => {
            probe(coloring, &table, universe.level(), n, budget.target_length, seed, &mut report)?
        }
        None => None,
    };
    let mut search = Search {
        coloring,
        table: &table,
        level: universe.level(),
        rank: n,
        target: budget.target_length,
        node_limit: budget.node_limit,
        bound,
        report,
    };
    let mut terms = Vec::new();
    let mut blocks = Vec::new();
    let walk = search.walk(&mut terms, &mut blocks, 0)?;
    let report = search.report;
    Ok(match walk {
        Walk::Found(witness) => SearchOutcome::Found { witness, report },
        Walk::Stopped | Walk::Done => SearchOutcome::Exhausted { report },
    })
}
