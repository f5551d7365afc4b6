//! Plain-text strategy files: a header naming the arena pair by its kinds,
//! then one `view` line per support view with its `states` and `parent`
//! lines, then optional `weight` lines (weight 1 when omitted).
//!
//! ```text
//! strategy branch over ((o -> o -> o) -> o ; o)
//! view v0 : r1[*] l1[1]
//! states v0 : x
//! view v1 : r1[*] l1[1] l1.1[2] l1.1.1[3]
//! states v1 : y
//! parent v1 : y -> x
//! weight v0.x = 1/2
//! ```
//!
//! The header's left side lists the context kinds, comma separated and
//! possibly empty; the right side is a single kind. Blank lines and lines
//! starting with `#` are skipped. A view id may not contain `.`; state
//! tokens may also use `.`, `*` and `'`. Reading checks the file's internal
//! references only; run `ViewStrategy::validate` and `validate_weights` on
//! the result for the semantic strategy conditions.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arena::{arena_of_kind, kinds_of_arena, product_many, ArenaPair};
use crate::kind::{parse_kind, KindParseError};
use crate::play::Play;
use crate::strategy::{trivial_weights, Rat, ViewStrategy, WeightMap};

/// A named weighted strategy, as stored in one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyFile {
    pub name: String,
    pub strategy: ViewStrategy,
    pub weights: WeightMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("missing `strategy <name> over (<kinds> ; <kind>)` header")]
    MissingHeader,
    #[error("line {line}: expected `strategy <name> over (<kinds> ; <kind>)`")]
    BadHeader { line: usize },
    #[error("line {line}: bad kind: {source}")]
    Kind { line: usize, source: KindParseError },
    #[error("line {line}: unknown directive {directive:?}")]
    UnknownDirective { line: usize, directive: String },
    #[error("line {line}: expected `{expected}`")]
    Malformed { line: usize, expected: String },
    #[error("line {line}: bad play: {reason}")]
    BadPlay { line: usize, reason: String },
    #[error("line {line}: bad token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("line {line}: state {state} listed twice")]
    DuplicateState { line: usize, state: String },
    #[error("line {line}: duplicate view id {vid}")]
    DuplicateView { line: usize, vid: String },
    #[error("line {line}: unknown view id {vid}")]
    UnknownView { line: usize, vid: String },
    #[error("line {line}: repeated `{directive}` line for view {vid}")]
    RepeatedDirective { line: usize, directive: String, vid: String },
    #[error("line {line}: bad weight value {value:?}")]
    BadWeight { line: usize, value: String },
    #[error("line {line}: duplicate weight for {vid}.{state}")]
    DuplicateWeight { line: usize, vid: String, state: String },
    #[error("line {line}: state {state} is not declared for view {vid}")]
    UndeclaredState { line: usize, vid: String, state: String },
    #[error("view {vid} has no `states` line")]
    MissingStates { vid: String },
    #[error("view ids {first} and {second} name the same play")]
    DuplicatePlay { first: String, second: String },
    #[error("the right arena is not a single kind tree")]
    RightNotAKind,
    #[error("token {token:?} cannot be written to a strategy file")]
    UnwritableToken { token: String },
}

fn is_vid(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\''))
}

fn is_state_token(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '.' | '*'))
}

fn parse_weight_value(s: &str) -> Option<Rat> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if n <= BigInt::zero() || d <= BigInt::zero() {
        return None;
    }
    Some(Rat::new(n, d))
}

fn show_weight_value(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

struct ViewEntry {
    play: Play,
    states: Option<Vec<String>>,
    parent: Option<Vec<(String, String)>>,
}

/// Parses one file. References are resolved after the whole file is read, so
/// `weight` lines may precede the `states` lines they refer to; `states` and
/// `parent` lines must follow their `view` line.
pub fn read_strategy(text: &str) -> Result<StrategyFile, FormatError> {
    let mut name: Option<String> = None;
    let mut pair: Option<ArenaPair> = None;
    let mut order: Vec<String> = Vec::new();
    let mut entries: BTreeMap<String, ViewEntry> = BTreeMap::new();
    let mut weight_lines: Vec<(usize, String, String, Rat)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (directive, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let rest = rest.trim();
        if name.is_none() {
            if directive != "strategy" {
                return Err(FormatError::MissingHeader);
            }
            let (nm, after) = rest
                .split_once(char::is_whitespace)
                .ok_or(FormatError::BadHeader { line })?;
            if !is_vid(nm) {
                return Err(FormatError::BadToken { line, token: nm.to_string() });
            }
            let after = after
                .trim()
                .strip_prefix("over")
                .ok_or(FormatError::BadHeader { line })?
                .trim();
            let inner = after
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or(FormatError::BadHeader { line })?;
            let (lhs, rhs) = inner.split_once(';').ok_or(FormatError::BadHeader { line })?;
            let mut left = Vec::new();
            if !lhs.trim().is_empty() {
                for seg in lhs.split(',') {
                    let k = parse_kind(seg.trim())
                        .map_err(|source| FormatError::Kind { line, source })?;
                    left.push(arena_of_kind(&k));
                }
            }
            let right = parse_kind(rhs.trim())
                .map_err(|source| FormatError::Kind { line, source })?;
            name = Some(nm.to_string());
            pair = Some(ArenaPair::new(product_many(&left), arena_of_kind(&right)));
            continue;
        }
        match directive {
            "view" => {
                let (vid, play_text) = rest.split_once(':').ok_or(FormatError::Malformed {
                    line,
                    expected: "view <vid> : <play>".into(),
                })?;
                let vid = vid.trim();
                if !is_vid(vid) {
                    return Err(FormatError::BadToken { line, token: vid.to_string() });
                }
                let play: Play = play_text
                    .trim()
                    .parse()
                    .map_err(|reason| FormatError::BadPlay { line, reason })?;
                if entries.contains_key(vid) {
                    return Err(FormatError::DuplicateView { line, vid: vid.to_string() });
                }
                order.push(vid.to_string());
                entries
                    .insert(vid.to_string(), ViewEntry { play, states: None, parent: None });
            }
            "states" => {
                let (vid, toks) = rest.split_once(':').ok_or(FormatError::Malformed {
                    line,
                    expected: "states <vid> : <tok>, ...".into(),
                })?;
                let vid = vid.trim();
                let entry = entries
                    .get_mut(vid)
                    .ok_or_else(|| FormatError::UnknownView { line, vid: vid.to_string() })?;
                if entry.states.is_some() {
                    return Err(FormatError::RepeatedDirective {
                        line,
                        directive: "states".into(),
                        vid: vid.to_string(),
                    });
                }
                let mut states = Vec::new();
                for tok in toks.split(',') {
                    let tok = tok.trim();
                    if !is_state_token(tok) {
                        return Err(FormatError::BadToken { line, token: tok.to_string() });
                    }
                    if states.iter().any(|s| s == tok) {
                        return Err(FormatError::DuplicateState { line, state: tok.to_string() });
                    }
                    states.push(tok.to_string());
                }
                entry.states = Some(states);
            }
            "parent" => {
                let (vid, maps) = rest.split_once(':').ok_or(FormatError::Malformed {
                    line,
                    expected: "parent <vid> : <tok> -> <tok>, ...".into(),
                })?;
                let vid = vid.trim();
                let entry = entries
                    .get_mut(vid)
                    .ok_or_else(|| FormatError::UnknownView { line, vid: vid.to_string() })?;
                if entry.parent.is_some() {
                    return Err(FormatError::RepeatedDirective {
                        line,
                        directive: "parent".into(),
                        vid: vid.to_string(),
                    });
                }
                let mut parent = Vec::new();
                for seg in maps.split(',') {
                    let (child, par) = seg.split_once("->").ok_or(FormatError::Malformed {
                        line,
                        expected: "parent <vid> : <tok> -> <tok>, ...".into(),
                    })?;
                    let (child, par) = (child.trim(), par.trim());
                    for tok in [child, par] {
                        if !is_state_token(tok) {
                            return Err(FormatError::BadToken { line, token: tok.to_string() });
                        }
                    }
                    if parent.iter().any(|(c, _)| c == child) {
                        return Err(FormatError::DuplicateState {
                            line,
                            state: child.to_string(),
                        });
                    }
                    parent.push((child.to_string(), par.to_string()));
                }
                entry.parent = Some(parent);
            }
            "weight" => {
                let (target, value) = rest.split_once('=').ok_or(FormatError::Malformed {
                    line,
                    expected: "weight <vid>.<tok> = <int>[/<int>]".into(),
                })?;
                let (vid, state) =
                    target.trim().split_once('.').ok_or(FormatError::Malformed {
                        line,
                        expected: "weight <vid>.<tok> = <int>[/<int>]".into(),
                    })?;
                let (vid, state) = (vid.trim(), state.trim());
                if !is_vid(vid) {
                    return Err(FormatError::BadToken { line, token: vid.to_string() });
                }
                if !is_state_token(state) {
                    return Err(FormatError::BadToken { line, token: state.to_string() });
                }
                let value = value.trim();
                let w = parse_weight_value(value)
                    .ok_or_else(|| FormatError::BadWeight { line, value: value.to_string() })?;
                weight_lines.push((line, vid.to_string(), state.to_string(), w));
            }
            _ => {
                return Err(FormatError::UnknownDirective {
                    line,
                    directive: directive.to_string(),
                })
            }
        }
    }

    let (name, pair) = match (name, pair) {
        (Some(n), Some(p)) => (n, p),
        _ => return Err(FormatError::MissingHeader),
    };
    let mut strategy = ViewStrategy::empty(pair);
    let mut plays_seen: BTreeMap<Play, String> = BTreeMap::new();
    for vid in &order {
        let entry = &entries[vid];
        let states = entry
            .states
            .as_ref()
            .ok_or_else(|| FormatError::MissingStates { vid: vid.clone() })?;
        let state_set: BTreeSet<&str> = states.iter().map(String::as_str).collect();
        let parent = entry.parent.clone().unwrap_or_default();
        for (child, _) in &parent {
            if !state_set.contains(child.as_str()) {
                return Err(FormatError::UndeclaredState {
                    line: 0,
                    vid: vid.clone(),
                    state: child.clone(),
                });
            }
        }
        if let Some(first) = plays_seen.insert(entry.play.clone(), vid.clone()) {
            return Err(FormatError::DuplicatePlay { first, second: vid.clone() });
        }
        strategy.insert_view(entry.play.clone(), states.clone(), parent);
    }
    let mut weights = trivial_weights(&strategy);
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (line, vid, state, value) in weight_lines {
        let entry = entries
            .get(&vid)
            .ok_or_else(|| FormatError::UnknownView { line, vid: vid.clone() })?;
        let declared = entry.states.as_ref().map(|s| s.iter().any(|t| *t == state));
        if declared != Some(true) {
            return Err(FormatError::UndeclaredState { line, vid, state });
        }
        if !seen.insert((vid.clone(), state.clone())) {
            return Err(FormatError::DuplicateWeight { line, vid, state });
        }
        weights.delta.insert((entry.play.clone(), state), value);
    }
    Ok(StrategyFile { name, strategy, weights })
}

/// Serializes deterministically: views in play order named `v0, v1, ...`,
/// states and parent entries in token order, then the non-unit weights.
/// Reading the output back recovers the strategy and weight map exactly
/// whenever the weight map is total on the strategy's states.
pub fn write_strategy(
    name: &str,
    t: &ViewStrategy,
    w: &WeightMap,
) -> Result<String, FormatError> {
    if !is_vid(name) {
        return Err(FormatError::UnwritableToken { token: name.to_string() });
    }
    let right = match kinds_of_arena(&t.pair.right).as_slice() {
        [k] => k.to_string(),
        _ => return Err(FormatError::RightNotAKind),
    };
    let left = kinds_of_arena(&t.pair.left)
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = if left.is_empty() {
        format!("strategy {name} over (; {right})\n")
    } else {
        format!("strategy {name} over ({left} ; {right})\n")
    };
    let mut vids: Vec<(&Play, String)> = Vec::new();
    for (i, (view, data)) in t.views.iter().enumerate() {
        let vid = format!("v{i}");
        for tok in data.states.iter().chain(data.parent.values()) {
            if !is_state_token(tok) {
                return Err(FormatError::UnwritableToken { token: tok.clone() });
            }
        }
        out.push_str(&format!("view {vid} : {view}\n"));
        let states: Vec<&str> = data.states.iter().map(String::as_str).collect();
        out.push_str(&format!("states {vid} : {}\n", states.join(", ")));
        if !data.parent.is_empty() {
            let maps: Vec<String> =
                data.parent.iter().map(|(c, p)| format!("{c} -> {p}")).collect();
            out.push_str(&format!("parent {vid} : {}\n", maps.join(", ")));
        }
        vids.push((view, vid));
    }
    for (view, vid) in &vids {
        let data = &t.views[*view];
        for state in &data.states {
            if let Some(value) = w.delta.get(&((*view).clone(), state.clone())) {
                if !value.is_one() {
                    out.push_str(&format!(
                        "weight {vid}.{state} = {}\n",
                        show_weight_value(value)
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::validate_weights;

    fn pl(s: &str) -> Play {
        s.parse().unwrap()
    }

    fn branching_fixture() -> (ViewStrategy, WeightMap) {
        let pair = ArenaPair::new(
            arena_of_kind(&parse_kind("(o -> o -> o) -> o").unwrap()),
            arena_of_kind(&parse_kind("o").unwrap()),
        );
        let mut t = ViewStrategy::empty(pair);
        t.insert_view(pl("r1[*] l1[1]"), ["x"], Vec::<(&str, &str)>::new());
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.1[3]"), ["y"], [("y", "x")]);
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.2[3]"), ["z"], [("z", "x")]);
        let mut w = trivial_weights(&t);
        w.delta.insert((pl("r1[*] l1[1]"), "x".into()), Rat::new(1.into(), 2.into()));
        (t, w)
    }

    const BRANCH_FILE: &str = "\
strategy branch over ((o -> o -> o) -> o ; o)
view v0 : r1[*] l1[1]
states v0 : x
view v1 : r1[*] l1[1] l1.1[2] l1.1.1[3]
states v1 : y
parent v1 : y -> x
view v2 : r1[*] l1[1] l1.1[2] l1.1.2[3]
states v2 : z
parent v2 : z -> x
weight v0.x = 1/2
";

    #[test]
    fn reads_the_golden_file() {
        let f = read_strategy(BRANCH_FILE).unwrap();
        let (t, w) = branching_fixture();
        assert_eq!(f.name, "branch");
        assert_eq!(f.strategy, t);
        assert_eq!(f.weights, w);
        assert_eq!(f.strategy.validate(), Ok(()));
        assert_eq!(validate_weights(&f.strategy, &f.weights), Ok(()));
    }

    #[test]
    fn writes_the_golden_file() {
        let (t, w) = branching_fixture();
        assert_eq!(write_strategy("branch", &t, &w).unwrap(), BRANCH_FILE);
    }

    #[test]
    fn read_write_round_trips() {
        let (t, w) = branching_fixture();
        let text = write_strategy("branch", &t, &w).unwrap();
        let f = read_strategy(&text).unwrap();
        assert_eq!((f.strategy, f.weights), (t, w));
        assert_eq!(write_strategy(&f.name, &read_strategy(&text).unwrap().strategy, &read_strategy(&text).unwrap().weights).unwrap(), text);
    }

    #[test]
    fn tolerates_comments_blank_lines_and_any_weight_position() {
        let text = "\
# a comment
strategy s over (o ; o)

weight v0.a = 2
view v0 : r1[*] l1[1]
states v0 : a, b
";
        let f = read_strategy(text).unwrap();
        assert_eq!(f.strategy.views.len(), 1);
        assert_eq!(
            f.weights.delta[&(pl("r1[*] l1[1]"), "a".into())],
            Rat::new(2.into(), 1.into())
        );
        assert_eq!(f.weights.delta[&(pl("r1[*] l1[1]"), "b".into())], Rat::one());
    }

    #[test]
    fn header_kind_lists_give_product_contexts() {
        let f = read_strategy("strategy s over (o, o -> o ; o)\n").unwrap();
        let left = product_many(&[
            arena_of_kind(&parse_kind("o").unwrap()),
            arena_of_kind(&parse_kind("o -> o").unwrap()),
        ]);
        assert_eq!(f.strategy.pair.left, left);
        let g = read_strategy("strategy s over (; o -> o)\n").unwrap();
        assert!(g.strategy.pair.left.is_empty());
        assert_eq!(write_strategy("s", &g.strategy, &g.weights).unwrap(), "strategy s over (; o -> o)\n");
    }

    #[test]
    fn generated_state_tokens_survive_a_round_trip() {
        let pair = ArenaPair::new(
            arena_of_kind(&parse_kind("o").unwrap()),
            arena_of_kind(&parse_kind("o").unwrap()),
        );
        let mut t = ViewStrategy::empty(pair);
        t.insert_view(pl("r1[*] l1[1]"), ["*", "l.i0", "r.x'"], Vec::<(&str, &str)>::new());
        let w = trivial_weights(&t);
        let text = write_strategy("s", &t, &w).unwrap();
        let f = read_strategy(&text).unwrap();
        assert_eq!((f.strategy, f.weights), (t, w));
    }

    #[test]
    fn rejects_malformed_files() {
        assert_eq!(read_strategy(""), Err(FormatError::MissingHeader));
        assert_eq!(
            read_strategy("view v0 : r1[*]\n"),
            Err(FormatError::MissingHeader)
        );
        assert!(matches!(
            read_strategy("strategy s over (o)\n"),
            Err(FormatError::BadHeader { line: 1 })
        ));
        assert!(matches!(
            read_strategy("strategy s over (o ; o)\nfrobnicate x\n"),
            Err(FormatError::UnknownDirective { line: 2, .. })
        ));
        assert!(matches!(
            read_strategy("strategy s over (o ; o)\nstates v0 : a\n"),
            Err(FormatError::UnknownView { line: 2, .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nview v0 : r1[*] l1[1]\n"
            ),
            Err(FormatError::DuplicateView { line: 3, .. })
        ));
        assert!(matches!(
            read_strategy("strategy s over (o ; o)\nview v0 : r1[*] x9[1]\n"),
            Err(FormatError::BadPlay { line: 2, .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nstates v0 : a\nweight v0.b = 1\n"
            ),
            Err(FormatError::UndeclaredState { line: 4, .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nstates v0 : a\nweight v0.a = 0\n"
            ),
            Err(FormatError::BadWeight { line: 4, .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nstates v0 : a\nweight v0.a = 1\nweight v0.a = 2\n"
            ),
            Err(FormatError::DuplicateWeight { line: 5, .. })
        ));
        assert!(matches!(
            read_strategy("strategy s over (o ; o)\nview v0 : r1[*] l1[1]\n"),
            Err(FormatError::MissingStates { .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nstates v0 : a\nparent v0 : b -> a\n"
            ),
            Err(FormatError::UndeclaredState { .. })
        ));
        assert!(matches!(
            read_strategy(
                "strategy s over (o ; o)\nview v0 : r1[*] l1[1]\nstates v0 : a\nview v1 : r1[*] l1[1]\nstates v1 : b\n"
            ),
            Err(FormatError::DuplicatePlay { .. })
        ));
    }

    #[test]
    fn write_rejects_unserializable_input() {
        let (t, w) = branching_fixture();
        assert!(matches!(
            write_strategy("bad name", &t, &w),
            Err(FormatError::UnwritableToken { .. })
        ));
        let pair = ArenaPair::new(
            arena_of_kind(&parse_kind("o").unwrap()),
            product_many(&[
                arena_of_kind(&parse_kind("o").unwrap()),
                arena_of_kind(&parse_kind("o").unwrap()),
            ]),
        );
        let t2 = ViewStrategy::empty(pair);
        assert_eq!(
            write_strategy("s", &t2, &WeightMap::default()),
            Err(FormatError::RightNotAKind)
        );
        let pair3 = ArenaPair::new(
            arena_of_kind(&parse_kind("o").unwrap()),
            arena_of_kind(&parse_kind("o").unwrap()),
        );
        let mut t3 = ViewStrategy::empty(pair3);
        t3.insert_view(pl("r1[*] l1[1]"), ["bad token"], Vec::<(&str, &str)>::new());
        assert!(matches!(
            write_strategy("s", &t3, &trivial_weights(&t3)),
            Err(FormatError::UnwritableToken { .. })
        ));
    }
}
