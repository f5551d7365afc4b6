//! Command-line front end for the strategy engine: term denotation,
//! equality checking, normalization, strategy readback, composition, and
//! validation of strategy files and plays.
//!
//! Exit codes: 0 success, 1 invalid input (parse, type, file, or validation
//! error), 2 internal bound exceeded, 3 the terms of `equal` are inequal.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use gamesem::{
    arena_of_kind, compose_weighted, denote_bounded, equal_bounded, is_p_view, kinds_of_arena,
    normalize, parse_context, parse_kind, parse_term, product_many, read_strategy, readback,
    validate_play, validate_weights, verify_extension_sheaf, write_strategy, ArenaPair,
    ComposeError, Context, EqMode, LambdaError, Play, StrategyFile, ViewStrategy, DEFAULT_BOUND,
};

#[derive(Parser)]
#[command(name = "gamesem", version, about = "Innocent-strategy toolkit for a weighted lambda calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denote a term as a weighted view strategy, printed in the strategy
    /// file format.
    Denote {
        /// The term, e.g. "\x:o. f x" or "(1/2 * y) + z".
        term: String,
        /// Typed context, e.g. "f:o -> o, y:o, z:o". Order is significant.
        #[arg(long, default_value = "")]
        ctx: String,
        /// Cap on internal moves during composition.
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        max_internal: usize,
        /// Name written into the strategy header.
        #[arg(long, default_value = "denoted")]
        name: String,
    },
    /// Decide whether two terms of the same kind are equal. Prints "equal"
    /// (exit 0) or "inequal" (exit 3).
    Equal {
        term1: String,
        term2: String,
        /// Typed context shared by both terms.
        #[arg(long, default_value = "")]
        ctx: String,
        /// Decision procedure: strategy isomorphism, normal forms, or both.
        #[arg(long, value_enum, default_value_t = ModeArg::Semantic)]
        mode: ModeArg,
        /// Cap on internal moves during composition.
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        max_internal: usize,
    },
    /// Print the canonical normal form of a term.
    Normalize {
        term: String,
        #[arg(long, default_value = "")]
        ctx: String,
    },
    /// Read a term back from a strategy file.
    Readback {
        /// Path to a strategy file.
        file: PathBuf,
        /// Variable names and kinds for the left arena. Defaults to
        /// x1, x2, ... with kinds recovered from the file header.
        #[arg(long)]
        ctx: Option<String>,
    },
    /// Compose two strategy files (the right arena of the first must match
    /// the left arena of the second) and print the composite.
    Compose {
        file1: PathBuf,
        file2: PathBuf,
        /// Cap on internal moves per composite view.
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        max_internal: usize,
        /// Name written into the composite's header.
        #[arg(long, default_value = "composite")]
        name: String,
    },
    /// Validate a strategy file: well-formed views and weights, annotation
    /// counts matching state counts, and the sheaf condition for the
    /// strategy's play-level extension.
    ValidateStrategy {
        file: PathBuf,
        /// Largest play length, in blocks, sampled for the sheaf check.
        #[arg(long, default_value_t = 8)]
        max_play_blocks: usize,
    },
    /// Validate a play over an arena pair and report whether it is a P-view.
    CheckPlay {
        /// The play, e.g. "r1[*] l1[1]".
        play: String,
        /// The arena pair, e.g. "(o -> o ; o)" or "o, o -> o ; o".
        #[arg(long)]
        over: String,
    },
    /// Run the built-in fixture checks and print one line per check.
    Selftest,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Semantic,
    Syntactic,
    Both,
}

impl From<ModeArg> for EqMode {
    fn from(m: ModeArg) -> EqMode {
        match m {
            ModeArg::Semantic => EqMode::Semantic,
            ModeArg::Syntactic => EqMode::Syntactic,
            ModeArg::Both => EqMode::Both,
        }
    }
}

/// A failed run, carrying the exit code distinction the caller relies on.
enum Failure {
    /// Invalid input of any kind: exit 1.
    Input(String),
    /// An internal bound was exceeded: exit 2.
    Bound(String),
    /// The two terms of `equal` differ: exit 3.
    Inequal,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Failure {
        Failure::Input(e.to_string())
    }
}

impl From<LambdaError> for Failure {
    fn from(e: LambdaError) -> Failure {
        match e {
            LambdaError::Compose(ComposeError::ChatteringBoundExceeded)
            | LambdaError::MaxDepthExceeded { .. } => Failure::Bound(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<ComposeError> for Failure {
    fn from(e: ComposeError) -> Failure {
        match e {
            ComposeError::ChatteringBoundExceeded => Failure::Bound(e.to_string()),
            ComposeError::PairMismatch => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Inequal) => {
            println!("inequal");
            ExitCode::from(3)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Bound(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Denote { term, ctx, max_internal, name } => {
            let ctx = parse_context(&ctx).map_err(Failure::input)?;
            let term = parse_term(&term).map_err(Failure::input)?;
            let (t, w) = denote_bounded(&ctx, &term, max_internal)?;
            write_strategy(&name, &t, &w).map_err(Failure::input)
        }
        Command::Equal { term1, term2, ctx, mode, max_internal } => {
            let ctx = parse_context(&ctx).map_err(Failure::input)?;
            let m = parse_term(&term1).map_err(Failure::input)?;
            let n = parse_term(&term2).map_err(Failure::input)?;
            if equal_bounded(&ctx, &m, &n, mode.into(), max_internal)? {
                Ok("equal\n".to_string())
            } else {
                Err(Failure::Inequal)
            }
        }
        Command::Normalize { term, ctx } => {
            let ctx = parse_context(&ctx).map_err(Failure::input)?;
            let term = parse_term(&term).map_err(Failure::input)?;
            let nf = normalize(&ctx, &term).map_err(Failure::input)?;
            Ok(format!("{nf}\n"))
        }
        Command::Readback { file, ctx } => {
            let sf = load_strategy(&file)?;
            let ctx = match ctx {
                Some(text) => {
                    let ctx = parse_context(&text).map_err(Failure::input)?;
                    if ctx.arena() != sf.strategy.pair.left {
                        return Err(Failure::Input(
                            "the context kinds do not match the file's left arena".to_string(),
                        ));
                    }
                    ctx
                }
                None => {
                    let kinds = kinds_of_arena(&sf.strategy.pair.left);
                    let vars = kinds
                        .into_iter()
                        .enumerate()
                        .map(|(i, k)| (format!("x{}", i + 1), k));
                    Context::new(vars).map_err(Failure::input)?
                }
            };
            let kinds = kinds_of_arena(&sf.strategy.pair.right);
            let [kind] = kinds.as_slice() else {
                return Err(Failure::Input(
                    "the right arena is not a single kind".to_string(),
                ));
            };
            let term = readback(&sf.strategy, &sf.weights, &ctx, kind)?;
            Ok(format!("{term}\n"))
        }
        Command::Compose { file1, file2, max_internal, name } => {
            let f1 = load_strategy(&file1)?;
            let f2 = load_strategy(&file2)?;
            let (t, w) =
                compose_weighted(&f1.strategy, &f1.weights, &f2.strategy, &f2.weights, max_internal)?;
            write_strategy(&name, &t, &w).map_err(Failure::input)
        }
        Command::ValidateStrategy { file, max_play_blocks } => {
            let sf = load_strategy(&file)?;
            validate_annotations(&sf.strategy)?;
            let families = verify_extension_sheaf(&sf.strategy, max_play_blocks, 2)
                .map_err(Failure::input)?;
            let states: usize = sf.strategy.views.values().map(|d| d.states.len()).sum();
            Ok(format!(
                "ok: {}: {} views, {} states, sheaf condition holds on {} covering families\n",
                sf.name,
                sf.strategy.views.len(),
                states,
                families,
            ))
        }
        Command::CheckPlay { play, over } => {
            let pair = parse_pair(&over)?;
            let p: Play = play.parse().map_err(Failure::input)?;
            validate_play(&pair, &p).map_err(Failure::input)?;
            let view = if is_p_view(&pair, &p) { "yes" } else { "no" };
            let blocks = p.len() / 2;
            let noun = if blocks == 1 { "block" } else { "blocks" };
            Ok(format!("ok: valid play of {blocks} {noun}; p-view: {view}\n"))
        }
        Command::Selftest => selftest(),
    }
}

fn load_strategy(path: &std::path::Path) -> Result<StrategyFile, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let sf = read_strategy(&text).map_err(Failure::input)?;
    sf.strategy.validate().map_err(Failure::input)?;
    validate_weights(&sf.strategy, &sf.weights).map_err(Failure::input)?;
    Ok(sf)
}

/// Every view must admit exactly one annotation per state: the play-level
/// extension then counts states, not just reachability.
fn validate_annotations(t: &ViewStrategy) -> Result<(), Failure> {
    for (view, data) in &t.views {
        let found = t.extend(view).len();
        if found != data.states.len() {
            return Err(Failure::Input(format!(
                "view {view} has {} states but {found} annotations",
                data.states.len(),
            )));
        }
    }
    Ok(())
}

/// Parses "(<kinds> ; <kind>)", parens optional, the left list possibly
/// empty, into the corresponding arena pair.
fn parse_pair(text: &str) -> Result<ArenaPair, Failure> {
    let s = text.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(s);
    let (lhs, rhs) = inner
        .split_once(';')
        .ok_or_else(|| Failure::Input("expected \"<kinds> ; <kind>\"".to_string()))?;
    let mut left = Vec::new();
    if !lhs.trim().is_empty() {
        for seg in lhs.split(',') {
            let k = parse_kind(seg.trim()).map_err(Failure::input)?;
            left.push(arena_of_kind(&k));
        }
    }
    let right = parse_kind(rhs.trim()).map_err(Failure::input)?;
    Ok(ArenaPair::new(product_many(&left), arena_of_kind(&right)))
}

fn selftest() -> Result<String, Failure> {
    let mut out = String::new();
    let pair = parse_pair("((o -> o -> o) -> o ; o)")?;
    let p0: Play = "r1[*] l1[1]".parse().map_err(Failure::input)?;
    let p1: Play = "r1[*] l1[1] l1.1[2] l1.1.1[3]".parse().map_err(Failure::input)?;
    let p2: Play = "r1[*] l1[1] l1.1[2] l1.1.2[3]".parse().map_err(Failure::input)?;
    let replay: Play = "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[2] l1.1.2[5]"
        .parse()
        .map_err(Failure::input)?;

    // One strategy whose branches share a state, one whose branches do not.
    let mut shared = ViewStrategy::empty(pair.clone());
    shared.insert_view(p0.clone(), ["x1"], [] as [(&str, &str); 0]);
    shared.insert_view(p1.clone(), ["y1"], [("y1", "x1")]);
    shared.insert_view(p2.clone(), ["z1"], [("z1", "x1")]);
    shared.validate().map_err(Failure::input)?;

    let mut split = ViewStrategy::empty(pair);
    split.insert_view(p0, ["x21", "x22"], [] as [(&str, &str); 0]);
    split.insert_view(p1, ["y2"], [("y2", "x21")]);
    split.insert_view(p2, ["z2"], [("z2", "x22")]);
    split.validate().map_err(Failure::input)?;

    let anns = shared.extend(&replay);
    selfcheck(
        &mut out,
        "replayed block is annotated once from the shared initial state",
        anns.len() == 1 && anns[0].entries == ["x1", "y1", "z1"],
    )?;
    selfcheck(
        &mut out,
        "split initial states leave the replayed block unannotated",
        split.extend(&replay).is_empty(),
    )?;
    let first = split.views.keys().next().expect("split has views");
    selfcheck(
        &mut out,
        "the split strategy keeps two initial states",
        split.views[first].states.len() == 2,
    )?;

    let ctx = parse_context("y:o").map_err(Failure::input)?;
    let beta = equal_bounded(
        &ctx,
        &parse_term("(\\x:o. x) y").map_err(Failure::input)?,
        &parse_term("y").map_err(Failure::input)?,
        EqMode::Both,
        DEFAULT_BOUND,
    )?;
    selfcheck(&mut out, "beta contraction is an equality", beta)?;

    let empty = Context::empty();
    let m1 = parse_term(
        "\\f:(o -> o -> o) -> o. f ((\\x:o. \\y:o. x) + (\\x:o. \\y:o. y))",
    )
    .map_err(Failure::input)?;
    let m2 = parse_term(
        "(\\f:(o -> o -> o) -> o. f (\\x:o. \\y:o. x)) + (\\f:(o -> o -> o) -> o. f (\\x:o. \\y:o. y))",
    )
    .map_err(Failure::input)?;
    let separated = equal_bounded(&empty, &m1, &m2, EqMode::Both, DEFAULT_BOUND)?;
    selfcheck(
        &mut out,
        "a sum inside an argument differs from a sum of applications",
        !separated,
    )?;

    let ctx_z = parse_context("z:o").map_err(Failure::input)?;
    let squared = equal_bounded(
        &ctx_z,
        &parse_term("(\\f:o -> o. f (f z)) (1/2 * (\\x:o. x))").map_err(Failure::input)?,
        &parse_term("1/4 * z").map_err(Failure::input)?,
        EqMode::Both,
        DEFAULT_BOUND,
    )?;
    selfcheck(&mut out, "a weight used twice squares", squared)?;

    out.push_str("selftest: ok\n");
    Ok(out)
}

fn selfcheck(out: &mut String, what: &str, ok: bool) -> Result<(), Failure> {
    if !ok {
        return Err(Failure::Input(format!("selftest failed: {what}")));
    }
    writeln!(out, "check: {what}").expect("writing to a string");
    Ok(())
}
