//! Command-line toolkit over the finkit library: span enumeration, staircase
//! shape tests, staircase-function listings, canonical-map counts,
//! homogeneity searches, mixing verdicts, and canonization.
//!
//! Results go to stdout as JSON, CSV, or an aligned table; diagnostics go to
//! stderr. The exit status is 0 when an answer or witness was produced, 1
//! when a search exhausted its space or an operation failed, and 2 on usage
//! errors. `FINKIT_THREADS` caps the worker threads of parallel library
//! calls.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use finkit::{
    canonize, check_sos, count_canonical, decide_mixing, enumerate_stair_functions,
    find_homogeneous, is_sos_sequence, make_sos, span_enumerate, BlockSequence, CanonicalMap,
    CanonizeMode, CanonizeOutcome, ColorRule, ColorSource, Coloring, Front, KVector, MixVerdict,
    SearchBudget, SearchOutcome, SpanTerm,
};

#[derive(Parser)]
#[command(name = "finkit", version, about = "Combinatorics of FIN_k block sequences")]
struct Cli {
    /// Output format for the result document.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the combinatorial span of a block sequence.
    Span(SpanArgs),
    /// Test one vector for the staircase-system shape.
    Sos(SosArgs),
    /// List staircase functions at a level, raw or deduplicated.
    Stairs(StairsArgs),
    /// Count staircase-function grades and canonical maps at an arity.
    Count(CountArgs),
    /// Search for a subsequence homogeneous under a coloring.
    Homog(HomogArgs),
    /// Decide whether a universe mixes two prefixes under a coloring.
    Mixing(MixingArgs),
    /// Canonize a front coloring over a staircase universe.
    Canonize(CanonizeArgs),
}

/// A failed invocation: usage errors exit 2, everything else exits 1.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::Usage(message.into())
}

fn runtime(error: impl ToString) -> Failure {
    Failure::Runtime(error.to_string())
}

/// One result ready to emit: the JSON value plus its tabular projection.
struct Document {
    value: serde_json::Value,
    headers: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    exhausted: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(failure) = init_threads() {
        return fail(failure);
    }
    let result = match &cli.command {
        Command::Span(args) => run_span(args),
        Command::Sos(args) => run_sos(args),
        Command::Stairs(args) => run_stairs(args),
        Command::Count(args) => run_count(args),
        Command::Homog(args) => run_homog(args),
        Command::Mixing(args) => run_mixing(args),
        Command::Canonize(args) => run_canonize(args),
    };
    match result {
        Ok(document) => {
            emit(cli.format, &document);
            if document.exhausted {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(failure) => fail(failure),
    }
}

fn fail(failure: Failure) -> ExitCode {
    match failure {
        Failure::Usage(message) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
        Failure::Runtime(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    match std::env::var("FINKIT_THREADS") {
        Ok(text) => {
            let threads: usize = text
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    usage(format!("FINKIT_THREADS: {text:?} is not a positive thread count"))
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(runtime)
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(error) => Err(usage(format!("FINKIT_THREADS: {error}"))),
    }
}

// ---------------------------------------------------------------------------
// Shared argument plumbing

/// Level and optional explicit blocks for subcommands that read a universe.
#[derive(Args)]
struct UniverseArgs {
    /// Level of the universe.
    #[arg(long, default_value_t = 1)]
    k: u8,
    /// Whitespace-separated vector literals `k:{pos:val,…}` for the blocks;
    /// omitted, the subcommand's default universe at that level is used.
    #[arg(long)]
    blocks: Option<String>,
}

/// Coloring selection: a built-in rule or a color table from a JSON file.
#[derive(Args)]
struct ColorArgs {
    /// Built-in rule: union, constant, min-parity, or first-value.
    #[arg(long, conflicts_with = "table")]
    rule: Option<String>,
    /// Path to a JSON object mapping member text to colors.
    #[arg(long)]
    table: Option<PathBuf>,
}

fn parse_vector(text: &str, flag: &str) -> Result<KVector, Failure> {
    text.parse().map_err(|error| usage(format!("{flag}: {error}")))
}

fn parse_blocks(level: u8, text: &str, flag: &str) -> Result<BlockSequence, Failure> {
    let mut blocks = Vec::new();
    for literal in text.split_whitespace() {
        blocks.push(parse_vector(literal, flag)?);
    }
    BlockSequence::new(level, blocks).map_err(|error| usage(format!("{flag}: {error}")))
}

fn universe(
    args: &UniverseArgs,
    default: fn(u8) -> Result<BlockSequence, Failure>,
) -> Result<BlockSequence, Failure> {
    if args.k == 0 {
        return Err(usage("--k: the level must be at least 1"));
    }
    match &args.blocks {
        Some(text) => parse_blocks(args.k, text, "--blocks"),
        None => default(args.k),
    }
}

/// Default demo universe: eight unit blocks at level 1, otherwise eight
/// staircase blocks at the requested level.
fn demo_universe(level: u8) -> Result<BlockSequence, Failure> {
    if level == 1 {
        Ok(BlockSequence::units(8))
    } else {
        make_sos(level, 8, false, 0).map_err(runtime)
    }
}

/// Default canonization universe: six staircase blocks, honoring the
/// staircase precondition of the classification search.
fn staircase_universe(level: u8) -> Result<BlockSequence, Failure> {
    make_sos(level, 6, false, 0).map_err(runtime)
}

fn color_source(args: &ColorArgs) -> Result<ColorSource, Failure> {
    match (&args.rule, &args.table) {
        (Some(name), None) => name
            .parse::<ColorRule>()
            .map(ColorSource::Rule)
            .map_err(|error| usage(format!("--rule: {error}"))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|error| usage(format!("--table: {error}")))?;
            let map: BTreeMap<String, String> = serde_json::from_str(&text)
                .map_err(|error| usage(format!("--table: {error}")))?;
            Ok(ColorSource::Table(map))
        }
        (None, None) => Err(usage("one of --rule or --table is required")),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting flags"),
    }
}

/// Parses a prefix pair like `"x0 | x0+x2"`: `|` splits the sides, `,`
/// separates the blocks of one side, and `+` sums universe blocks by index.
fn parse_pair(
    x: &BlockSequence,
    text: &str,
) -> Result<(BlockSequence, BlockSequence), Failure> {
    let mut sides = text.split('|');
    let (Some(left), Some(right), None) = (sides.next(), sides.next(), sides.next()) else {
        return Err(usage("--pair: expected exactly one '|' between the two sides"));
    };
    Ok((parse_side(x, left)?, parse_side(x, right)?))
}

fn parse_side(x: &BlockSequence, side: &str) -> Result<BlockSequence, Failure> {
    let mut blocks = Vec::new();
    for piece in side.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(usage("--pair: empty block between commas"));
        }
        let mut parts = Vec::new();
        for token in piece.split('+') {
            let token = token.trim();
            let index: usize = token
                .strip_prefix('x')
                .unwrap_or(token)
                .parse()
                .map_err(|_| usage(format!("--pair: {token:?} is not a block index")))?;
            let block = x.blocks().get(index).ok_or_else(|| {
                usage(format!(
                    "--pair: block index {index} exceeds the universe of {} blocks",
                    x.len()
                ))
            })?;
            parts.push(block.clone());
        }
        blocks.push(KVector::block_sum(&parts).map_err(|error| usage(format!("--pair: {error}")))?);
    }
    BlockSequence::new(x.level(), blocks).map_err(|error| usage(format!("--pair: {error}")))
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(value).map_err(runtime)
}

fn kv_rows(pairs: Vec<(&'static str, String)>) -> Vec<Vec<String>> {
    pairs.into_iter().map(|(key, value)| vec![key.to_string(), value]).collect()
}

// ---------------------------------------------------------------------------
// Subcommands

#[derive(Args)]
struct SpanArgs {
    /// Level of the blocks.
    #[arg(long)]
    k: u8,
    /// Whitespace-separated vector literals forming the block sequence.
    #[arg(long)]
    blocks: String,
}

#[derive(Serialize)]
struct SpanRow {
    element: KVector,
    term: SpanTerm,
}

fn run_span(args: &SpanArgs) -> Result<Document, Failure> {
    if args.k == 0 {
        return Err(usage("--k: the level must be at least 1"));
    }
    let x = parse_blocks(args.k, &args.blocks, "--blocks")?;
    let span = span_enumerate(&x);
    let rows = span
        .iter()
        .enumerate()
        .map(|(n, (element, term))| vec![n.to_string(), element.to_string(), term.to_string()])
        .collect();
    let document: Vec<SpanRow> =
        span.into_iter().map(|(element, term)| SpanRow { element, term }).collect();
    Ok(Document {
        value: to_value(&document)?,
        headers: vec!["index", "element", "term"],
        rows,
        exhausted: false,
    })
}

#[derive(Args)]
struct SosArgs {
    /// The vector to test, as `k:{pos:val,…}`.
    #[arg(long)]
    vector: String,
    /// Also require a strong decomposition.
    #[arg(long)]
    strong: bool,
}

#[derive(Serialize)]
struct SosDoc {
    vector: KVector,
    sos: bool,
    clause: Option<String>,
}

fn run_sos(args: &SosArgs) -> Result<Document, Failure> {
    let vector = parse_vector(&args.vector, "--vector")?;
    let clause = match check_sos(&vector) {
        Err(violation) => Some(violation.to_string()),
        Ok(()) if args.strong => {
            let single =
                BlockSequence::new(vector.level(), vec![vector.clone()]).map_err(runtime)?;
            (!is_sos_sequence(&single, true)).then(|| "no strong decomposition".to_string())
        }
        Ok(()) => None,
    };
    let document = SosDoc { vector: vector.clone(), sos: clause.is_none(), clause };
    let rows = vec![vec![
        vector.to_string(),
        document.sos.to_string(),
        document.clause.clone().unwrap_or_else(|| "-".to_string()),
    ]];
    Ok(Document {
        value: to_value(&document)?,
        headers: vec!["vector", "sos", "clause"],
        rows,
        exhausted: false,
    })
}

#[derive(Args)]
struct StairsArgs {
    /// Level of the functions.
    #[arg(long)]
    k: u8,
    /// List the raw parameter tuples instead of the deduplicated classes.
    #[arg(long)]
    raw: bool,
}

#[derive(Serialize)]
struct StairsDoc {
    level: u8,
    raw_count: usize,
    deduped_count: usize,
    functions: Vec<finkit::StairFunction>,
}

fn run_stairs(args: &StairsArgs) -> Result<Document, Failure> {
    if args.k == 0 {
        return Err(usage("--k: the level must be at least 1"));
    }
    let raw = enumerate_stair_functions(args.k, false);
    let deduped = enumerate_stair_functions(args.k, true);
    let document = StairsDoc {
        level: args.k,
        raw_count: raw.len(),
        deduped_count: deduped.len(),
        functions: if args.raw { raw } else { deduped },
    };
    let rows = document
        .functions
        .iter()
        .enumerate()
        .map(|(n, f)| vec![n.to_string(), f.to_string(), f.atoms().len().to_string()])
        .collect();
    Ok(Document {
        value: to_value(&document)?,
        headers: vec!["index", "function", "atoms"],
        rows,
        exhausted: false,
    })
}

#[derive(Args)]
struct CountArgs {
    /// Level of the maps.
    #[arg(long)]
    k: u8,
    /// Arity of the counted maps, at least 2.
    #[arg(long)]
    d: usize,
}

fn run_count(args: &CountArgs) -> Result<Document, Failure> {
    if args.k == 0 {
        return Err(usage("--k: the level must be at least 1"));
    }
    if args.d < 2 {
        return Err(usage("--d: the arity must be at least 2"));
    }
    let report = count_canonical(args.k, args.d).map_err(runtime)?;
    let rows = vec![vec![
        report.level.to_string(),
        report.arity.to_string(),
        report.t.to_string(),
        report.t_prime.to_string(),
        report.t_tilde.to_string(),
        report.c.to_string(),
    ]];
    Ok(Document {
        value: to_value(&report)?,
        headers: vec!["level", "arity", "t", "t_prime", "t_tilde", "c"],
        rows,
        exhausted: false,
    })
}

#[derive(Args)]
struct HomogArgs {
    #[command(flatten)]
    universe: UniverseArgs,
    #[command(flatten)]
    color: ColorArgs,
    /// Front arity the coloring reads.
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Number of blocks the witness must have.
    #[arg(long, default_value_t = 2)]
    target_len: usize,
    /// Abort after this many search nodes.
    #[arg(long)]
    budget_nodes: Option<u64>,
    /// Use at most this many leading blocks of the universe.
    #[arg(long)]
    max_universe: Option<usize>,
    /// Seed for the randomized probe; statistics only, the witness is
    /// seed-independent.
    #[arg(long)]
    seed: Option<u64>,
}

fn run_homog(args: &HomogArgs) -> Result<Document, Failure> {
    let x = universe(&args.universe, demo_universe)?;
    let source = color_source(&args.color)?;
    let front = Front::uniform(x.clone(), args.rank).map_err(runtime)?;
    let coloring = Coloring::new(front, source).map_err(runtime)?;
    let budget = SearchBudget {
        max_universe_blocks: args.max_universe.unwrap_or(x.len()),
        target_length: args.target_len,
        node_limit: args.budget_nodes,
        seed: args.seed,
    };
    let outcome = find_homogeneous(&coloring, &x, args.rank, &budget).map_err(runtime)?;
    let (exhausted, mut pairs) = match &outcome {
        SearchOutcome::Found { witness, .. } => {
            (false, vec![("outcome", "found".to_string()), ("witness", witness.to_string())])
        }
        SearchOutcome::Exhausted { .. } => (true, vec![("outcome", "exhausted".to_string())]),
    };
    let report = match &outcome {
        SearchOutcome::Found { report, .. } | SearchOutcome::Exhausted { report } => report,
    };
    pairs.extend([
        ("nodes", report.nodes.to_string()),
        ("color_prunes", report.color_prunes.to_string()),
        ("bound_prunes", report.bound_prunes.to_string()),
        ("budget_exhausted", report.budget_exhausted.to_string()),
        ("probe_samples", report.probe_samples.to_string()),
        ("probe_hit", report.probe_hit.to_string()),
    ]);
    Ok(Document {
        value: to_value(&outcome)?,
        headers: vec!["field", "value"],
        rows: kv_rows(pairs),
        exhausted,
    })
}

#[derive(Args)]
struct MixingArgs {
    #[command(flatten)]
    universe: UniverseArgs,
    #[command(flatten)]
    color: ColorArgs,
    /// The two prefixes, e.g. "x0 | x0+x2": universe blocks by index, `+`
    /// sums blocks, `,` separates the blocks of one side.
    #[arg(long)]
    pair: String,
    /// Front arity; defaults to one more than the longer prefix.
    #[arg(long)]
    rank: Option<usize>,
    /// Largest reduct size the sweep enumerates.
    #[arg(long, default_value_t = 8)]
    horizon_blocks: usize,
}

fn run_mixing(args: &MixingArgs) -> Result<Document, Failure> {
    let x = universe(&args.universe, demo_universe)?;
    let source = color_source(&args.color)?;
    let (s, t) = parse_pair(&x, &args.pair)?;
    let rank = args.rank.unwrap_or(s.len().max(t.len()) + 1);
    let front = Front::uniform(x.clone(), rank).map_err(runtime)?;
    let coloring = Coloring::new(front, source).map_err(runtime)?;
    let report = decide_mixing(&x, &s, &t, &coloring, args.horizon_blocks).map_err(runtime)?;
    let verdict = match &report.verdict {
        MixVerdict::Separated { .. } => "separated",
        MixVerdict::MixedAtHorizon => "mixed_at_horizon",
        MixVerdict::Incomparable => "incomparable",
    };
    let mut pairs = vec![("verdict", verdict.to_string())];
    if let MixVerdict::Separated { witness } = &report.verdict {
        pairs.push(("witness", witness.to_string()));
    }
    pairs.extend([
        (
            "weak_witness",
            report.weak_witness.as_ref().map_or("-".to_string(), |w| w.to_string()),
        ),
        ("max_blocks", report.horizon.max_blocks.to_string()),
        ("reducts_checked", report.horizon.reducts_checked.to_string()),
        ("compatible_reducts", report.horizon.compatible_reducts.to_string()),
    ]);
    Ok(Document {
        value: to_value(&report)?,
        headers: vec!["field", "value"],
        rows: kv_rows(pairs),
        exhausted: false,
    })
}

#[derive(Args)]
struct CanonizeArgs {
    #[command(flatten)]
    universe: UniverseArgs,
    #[command(flatten)]
    color: ColorArgs,
    /// Front arity the coloring reads.
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Blocks per inner universe.
    #[arg(long, default_value_t = 3)]
    target_len: usize,
    /// Which classification to run.
    #[arg(long, value_enum, default_value_t = ModeArg::General)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Exhaust every canonical map of the front's arity.
    General,
    /// Restrict to the arity-1 staircase classification.
    Arity1,
}

fn map_text(map: &CanonicalMap) -> String {
    if map.is_constant() {
        return "const".to_string();
    }
    map.groups()
        .iter()
        .map(|group| {
            format!("coords {:?} shifts {:?} via {}", group.coords(), group.shifts(), group.g())
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

fn run_canonize(args: &CanonizeArgs) -> Result<Document, Failure> {
    let x = universe(&args.universe, staircase_universe)?;
    let source = color_source(&args.color)?;
    let front = Front::uniform(x.clone(), args.rank).map_err(runtime)?;
    let coloring = Coloring::new(front, source).map_err(runtime)?;
    let mode = match args.mode {
        ModeArg::General => CanonizeMode::General,
        ModeArg::Arity1 => CanonizeMode::Arity1,
    };
    let outcome = canonize(&coloring, &x, args.target_len, mode).map_err(runtime)?;
    let (exhausted, pairs) = match &outcome {
        CanonizeOutcome::Found { y, map } => (
            false,
            vec![
                ("outcome", "found".to_string()),
                ("y", y.to_string()),
                ("map", map_text(map)),
            ],
        ),
        CanonizeOutcome::Exhausted(report) => (
            true,
            vec![
                ("outcome", "exhausted".to_string()),
                ("y_candidates", report.y_candidates.to_string()),
                ("map_candidates", report.map_candidates.to_string()),
                ("arity", report.arity.to_string()),
                ("target_len", report.target_len.to_string()),
            ],
        ),
    };
    Ok(Document {
        value: to_value(&outcome)?,
        headers: vec!["field", "value"],
        rows: kv_rows(pairs),
        exhausted,
    })
}

// ---------------------------------------------------------------------------
// Emission

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn emit(format: Format, document: &Document) {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&document.value)
                .expect("a built JSON value re-serializes");
            println!("{text}");
        }
        Format::Csv => {
            println!("{}", document.headers.join(","));
            for row in &document.rows {
                let line: Vec<String> = row.iter().map(|cell| csv_field(cell)).collect();
                println!("{}", line.join(","));
            }
        }
        Format::Table => {
            let mut widths: Vec<usize> =
                document.headers.iter().map(|header| header.len()).collect();
            for row in &document.rows {
                for (n, cell) in row.iter().enumerate() {
                    widths[n] = widths[n].max(cell.len());
                }
            }
            let render = |cells: &[String]| -> String {
                let mut line = String::new();
                for (n, cell) in cells.iter().enumerate() {
                    if n > 0 {
                        line.push_str("  ");
                    }
                    line.push_str(&format!("{cell:<width$}", width = widths[n]));
                }
                line.trim_end().to_string()
            };
            let headers: Vec<String> =
                document.headers.iter().map(|header| header.to_string()).collect();
            println!("{}", render(&headers));
            for row in &document.rows {
                println!("{}", render(row));
            }
        }
    }
}
