//! Innocent strategies as finite sheaves on P-views.
//!
//! A strategy stores, for every P-view in its support, a finite set of state
//! tokens and (for views of length at least 4) a parent map sending each
//! state to a state of the view with its last O-P block removed. The
//! play-level strategy is recovered by `extend`, which enumerates coherent
//! annotations; weights attach an exact positive rational to every state.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arena::{Arena, ArenaPair, Move, PairMove, Side, Tree};
use crate::play::{is_p_view, standalone_view_at, validate_play, Play, PlayMorphism};

pub type Rat = BigRational;

/// States and parent map of one support view.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ViewData {
    pub states: BTreeSet<String>,
    /// For views of length >= 4: state -> state of the parent view.
    /// Empty for views of length 2 (their parent is the empty view).
    pub parent: BTreeMap<String, String>,
}

/// A finite sheaf on P-views: the view-level presentation of an innocent
/// strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewStrategy {
    pub pair: ArenaPair,
    pub views: BTreeMap<Play, ViewData>,
}

/// A coherent annotation of a play: one state per O-P block, each belonging
/// to the P-view at that block, chained by the parent maps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Annotation {
    pub play: Play,
    /// `entries[l]` annotates the block ending at position 2(l+1).
    pub entries: Vec<String>,
}

/// Exact positive rational weight per (view, state).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightMap {
    pub delta: BTreeMap<(Play, String), Rat>,
}

/// A family of per-view state bijections commuting with the parent maps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StrategyIso {
    pub map: BTreeMap<Play, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("view {view} is invalid: {reason}")]
    BadView { view: String, reason: String },
    #[error("support misses the parent of view {view}")]
    DownClosureViolated { view: String },
    #[error("state {state} of view {view} has no valid parent entry")]
    PartialParentMap { view: String, state: String },
    #[error("strategies live over different arena pairs")]
    PairMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("state {state} of view {view} has weight {value}, not positive")]
    NotPositive { view: String, state: String, value: String },
    #[error("state {state} of view {view} has no weight")]
    Missing { view: String, state: String },
    #[error("weight for unknown view/state {view} / {state}")]
    Unknown { view: String, state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StripError {
    #[error("strip requires a unique initial view with a single state")]
    StripOnNonDeterministicInitial,
}

impl ViewStrategy {
    pub fn empty(pair: ArenaPair) -> ViewStrategy {
        ViewStrategy { pair, views: BTreeMap::new() }
    }

    pub fn insert_view(
        &mut self,
        view: Play,
        states: impl IntoIterator<Item = impl Into<String>>,
        parent: impl IntoIterator<Item = (impl Into<String>, impl Into<String>)>,
    ) {
        self.views.insert(
            view,
            ViewData {
                states: states.into_iter().map(Into::into).collect(),
                parent: parent.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
            },
        );
    }

    pub fn states(&self, view: &Play) -> Option<&BTreeSet<String>> {
        self.views.get(view).map(|d| &d.states)
    }

    /// Removes views with no states; harmless because parent maps always
    /// land in existing states, so only childless views can be empty.
    pub fn prune(&mut self) {
        self.views.retain(|_, d| !d.states.is_empty());
    }

    /// Checks that every support view is a valid non-empty P-view, that the
    /// support is closed under removing the last O-P block, and that parent
    /// maps are total and land in the parent view's states.
    pub fn validate(&self) -> Result<(), StrategyError> {
        for (view, data) in &self.views {
            if !is_p_view(&self.pair, view) {
                let reason = match validate_play(&self.pair, view) {
                    Err(e) => e.to_string(),
                    Ok(()) if view.is_empty() => "empty view".to_string(),
                    Ok(()) => "play is not its own P-view".to_string(),
                };
                return Err(StrategyError::BadView { view: view.to_string(), reason });
            }
            if view.len() == 2 {
                if !data.parent.is_empty() {
                    return Err(StrategyError::PartialParentMap {
                        view: view.to_string(),
                        state: data.parent.keys().next().unwrap().clone(),
                    });
                }
                continue;
            }
            let parent_view = view.parent_view().expect("length >= 4");
            let Some(parent_data) = self.views.get(&parent_view) else {
                return Err(StrategyError::DownClosureViolated { view: view.to_string() });
            };
            for state in &data.states {
                match data.parent.get(state) {
                    Some(target) if parent_data.states.contains(target) => {}
                    _ => {
                        return Err(StrategyError::PartialParentMap {
                            view: view.to_string(),
                            state: state.clone(),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// All coherent annotations of the play `s`: one state per O-P block,
    /// where the state of a block whose O-move is justified by the P-move
    /// closing block l must restrict (via the parent map) to the state of
    /// block l. The empty play has exactly one annotation.
    pub fn extend(&self, s: &Play) -> Vec<Annotation> {
        let mut partials: Vec<Vec<String>> = vec![Vec::new()];
        for k in (2..=s.len()).step_by(2) {
            let view = standalone_view_at(s, k);
            let Some(data) = self.views.get(&view) else { return Vec::new() };
            let justifier = s.ptr_at(k - 1);
            let mut next = Vec::new();
            for partial in &partials {
                for state in &data.states {
                    let coherent = if justifier == 0 {
                        true
                    } else {
                        data.parent.get(state) == Some(&partial[justifier / 2 - 1])
                    };
                    if coherent {
                        let mut grown = partial.clone();
                        grown.push(state.clone());
                        next.push(grown);
                    }
                }
            }
            if next.is_empty() {
                return Vec::new();
            }
            partials = next;
        }
        partials
            .into_iter()
            .map(|entries| Annotation { play: s.clone(), entries })
            .collect()
    }

    /// The state of the length-2 chain restriction of `state` at `view`.
    pub fn root_state<'a>(&'a self, view: &Play, state: &'a str) -> &'a str {
        let mut v = view.clone();
        let mut e = state;
        while v.len() > 2 {
            e = &self.views[&v].parent[e];
            v = v.parent_view().unwrap();
        }
        e
    }
}

/// Functor action of the extension on a play morphism: selects the entries of
/// the target annotation at the images of the source blocks.
pub fn restrict_annotation(f: &PlayMorphism, a: &Annotation) -> Annotation {
    let entries = (1..=f.source.len() / 2)
        .map(|l| a.entries[f.map[2 * l - 1] / 2 - 1].clone())
        .collect();
    Annotation { play: f.source.clone(), entries }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafCheckError {
    #[error("the family does not cover the play")]
    NotCovering,
}

/// Verifies the sheaf condition for the extension of `t` at `s` over the
/// given covering family: every matching family of annotations (agreeing on
/// pullbacks) has exactly one amalgamation in extend(t, s).
pub fn check_sheaf_condition(
    t: &ViewStrategy,
    s: &Play,
    family: &[PlayMorphism],
) -> Result<bool, SheafCheckError> {
    if !crate::play::is_covering(family, s) {
        return Err(SheafCheckError::NotCovering);
    }
    let candidates: Vec<Vec<Annotation>> = family.iter().map(|f| t.extend(&f.source)).collect();
    let amalgamations = t.extend(s);
    let n = family.len();
    // Pullback legs depend only on the member pair, so restrict every
    // candidate once up front; the product enumeration compares entry
    // vectors (the restricted plays coincide by construction).
    let mut left: Vec<Vec<Vec<Vec<String>>>> = vec![vec![Vec::new(); n]; n];
    let mut right: Vec<Vec<Vec<Vec<String>>>> = vec![vec![Vec::new(); n]; n];
    for i in 0..n {
        for j in 0..i {
            let Some((_, into_j, into_i)) = crate::play::pullback(&family[j], &family[i]) else {
                return Err(SheafCheckError::NotCovering);
            };
            left[i][j] = candidates[j]
                .iter()
                .map(|a| restrict_annotation(&into_j, a).entries)
                .collect();
            right[i][j] = candidates[i]
                .iter()
                .map(|a| restrict_annotation(&into_i, a).entries)
                .collect();
        }
    }
    // Enumerate the product of candidate choices, keeping matching ones.
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    for (i, cands) in candidates.iter().enumerate() {
        let mut next = Vec::new();
        for partial in &stack {
            'cand: for ci in 0..cands.len() {
                for (j, &cj) in partial.iter().enumerate() {
                    if left[i][j][cj] != right[i][j][ci] {
                        continue 'cand;
                    }
                }
                let mut grown = partial.clone();
                grown.push(ci);
                next.push(grown);
            }
        }
        stack = next;
    }
    let restricted: Vec<Vec<Vec<String>>> = amalgamations
        .iter()
        .map(|a| family.iter().map(|f| restrict_annotation(f, a).entries).collect())
        .collect();
    for matching in &stack {
        let glue = restricted
            .iter()
            .filter(|r| (0..n).all(|i| r[i] == candidates[i][matching[i]].entries))
            .count();
        if glue != 1 {
            return Ok(false);
        }
    }
    // Every amalgamation restricts to a matching family, so distinct
    // amalgamations of the same family would already have failed above.
    Ok(true)
}

fn pair_moves_by_owner(pair: &ArenaPair) -> (Vec<PairMove>, Vec<PairMove>) {
    let mut all: Vec<PairMove> =
        pair.left.moves().into_iter().map(PairMove::left).collect();
    all.extend(pair.right.moves().into_iter().map(PairMove::right));
    let o_moves = all
        .iter()
        .filter(|m| m.polarity() == crate::arena::Owner::O)
        .cloned()
        .collect();
    let p_moves = all
        .iter()
        .filter(|m| m.polarity() == crate::arena::Owner::P)
        .cloned()
        .collect();
    (o_moves, p_moves)
}

/// The one-block extensions of `s` that stay in the support of `t`, in a
/// deterministic order.
fn support_extensions(
    t: &ViewStrategy,
    o_moves: &[PairMove],
    p_moves: &[PairMove],
    s: &Play,
) -> Vec<Play> {
    let pair = &t.pair;
    let mut out = Vec::new();
    for om in o_moves {
        for oj in 0..=s.len() {
            let justifier = if oj == 0 { None } else { Some(s.move_at(oj)) };
            if !pair.enables(justifier, om) {
                continue;
            }
            let mut so = s.clone();
            so.push(om.clone(), oj);
            for pm in p_moves {
                for pj in 1..=so.len() {
                    if !pair.enables(Some(so.move_at(pj)), pm) {
                        continue;
                    }
                    let mut sp = so.clone();
                    sp.push(pm.clone(), pj);
                    if validate_play(pair, &sp).is_err() {
                        continue;
                    }
                    if !t.views.contains_key(&crate::play::standalone_view(&sp)) {
                        continue;
                    }
                    out.push(sp);
                }
            }
        }
    }
    out
}

/// Every play of at most `max_blocks` O-P blocks all of whose block views
/// lie in the support of `t` (the empty play included). Breadth-first, so
/// shorter plays come first; the order is deterministic.
pub fn support_plays(t: &ViewStrategy, max_blocks: usize) -> Vec<Play> {
    let (o_moves, p_moves) = pair_moves_by_owner(&t.pair);
    let mut out = vec![Play::empty()];
    let mut i = 0;
    while i < out.len() {
        let s = out[i].clone();
        i += 1;
        if s.len() / 2 >= max_blocks {
            continue;
        }
        out.extend(support_extensions(t, &o_moves, &p_moves, &s));
    }
    out
}

/// A deterministic depth-first sample of at most `cap` non-empty support
/// plays. Depth-first so deep plays, which replay blocks and carry the
/// interesting gluing cases, appear even when the play tree is too wide to
/// exhaust.
fn sampled_support_plays(t: &ViewStrategy, max_blocks: usize, cap: usize) -> Vec<Play> {
    let (o_moves, p_moves) = pair_moves_by_owner(&t.pair);
    let mut out = Vec::new();
    let mut stack = vec![Play::empty()];
    while let Some(s) = stack.pop() {
        if !s.is_empty() {
            if out.len() == cap {
                break;
            }
            out.push(s.clone());
        }
        if s.len() / 2 < max_blocks {
            let mut ext = support_extensions(t, &o_moves, &p_moves, &s);
            ext.reverse();
            stack.extend(ext);
        }
    }
    out
}

/// A play and covering family on which the extension of a strategy fails the
/// sheaf condition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sheaf condition fails at play `{play}` for a covering family of {family_size} morphisms")]
pub struct SheafViolation {
    pub play: Play,
    pub family_size: usize,
}

/// How many sampled support plays the sheaf verifier checks.
const SHEAF_PLAY_CAP: usize = 64;
/// Block count up to which every minimal covering family is enumerated.
/// Beyond it the play can have factorially many morphisms into it.
const SHEAF_EXHAUSTIVE_BLOCKS: usize = 4;
/// Largest family fed to the matching-family product search.
const SHEAF_FAMILY_MEMBER_CAP: usize = 8;

/// Two covering families every play admits: the view embeddings at all
/// P-positions (each position lies in the view of its own block), and the
/// last-block decomposition into the shorter prefix plus the final view.
fn canonical_families(s: &Play) -> Vec<Vec<PlayMorphism>> {
    let n = s.len();
    let views = (1..=n / 2).map(|b| PlayMorphism::view_embedding(s, 2 * b)).collect();
    let last = vec![
        PlayMorphism::prefix_embedding(s, n - 2),
        PlayMorphism::view_embedding(s, n),
    ];
    vec![views, last]
}

/// Checks the sheaf condition of the play-level extension of `t` on a
/// deterministic sample of support plays of at most `max_blocks` blocks.
/// Short plays get every minimal covering family of at most `max_family`
/// morphisms plus the full morphism family; longer plays, where the
/// morphism count grows factorially, get the canonical view-embedding and
/// last-block families. Returns the number of (play, family) pairs checked.
pub fn verify_extension_sheaf(
    t: &ViewStrategy,
    max_blocks: usize,
    max_family: usize,
) -> Result<usize, SheafViolation> {
    let mut checked = 0;
    for s in sampled_support_plays(t, max_blocks, SHEAF_PLAY_CAP) {
        let families: Vec<Vec<PlayMorphism>> = if s.len() / 2 <= SHEAF_EXHAUSTIVE_BLOCKS {
            let morphisms = crate::play::morphisms_into(&t.pair, &s);
            crate::play::covering_families(&morphisms, &s, max_family)
                .into_iter()
                .filter(|f| f.len() <= SHEAF_FAMILY_MEMBER_CAP)
                .map(|f| f.iter().map(|&i| morphisms[i].clone()).collect())
                .collect()
        } else {
            canonical_families(&s)
        };
        for family in families {
            let ok = check_sheaf_condition(t, &s, &family)
                .expect("families are covering by construction");
            if !ok {
                return Err(SheafViolation { play: s, family_size: family.len() });
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Canonical key of each state's descendant tree: states form a forest
/// (each state has at most one parent in the parent view), so a bottom-up
/// label of (own label, sorted child keys tagged by child view) decides
/// forest isomorphism exactly.
fn canonical_keys(
    t: &ViewStrategy,
    kids: &BTreeMap<Play, Vec<&Play>>,
    label: &dyn Fn(&Play, &str) -> String,
) -> BTreeMap<(Play, String), String> {
    let mut order: Vec<&Play> = t.views.keys().collect();
    order.sort_by_key(|p| (std::cmp::Reverse(p.len()), (*p).clone()));
    let mut canon: BTreeMap<(Play, String), String> = BTreeMap::new();
    for view in order {
        let data = &t.views[view];
        for e in &data.states {
            let mut parts: Vec<String> = Vec::new();
            for child_view in kids.get(view).map_or(&[][..], |v| v) {
                let cd = &t.views[*child_view];
                for f in &cd.states {
                    if cd.parent.get(f) == Some(e) {
                        let key = &canon[&((*child_view).clone(), f.clone())];
                        parts.push(format!("{child_view}>{key}"));
                    }
                }
            }
            parts.sort();
            let key = format!("[{}|{}]", label(view, e), parts.join(","));
            canon.insert((view.clone(), e.clone()), key);
        }
    }
    canon
}

fn iso_search(
    t1: &ViewStrategy,
    t2: &ViewStrategy,
    label1: &dyn Fn(&Play, &str) -> String,
    label2: &dyn Fn(&Play, &str) -> String,
) -> Option<StrategyIso> {
    if t1.views.keys().collect::<BTreeSet<_>>() != t2.views.keys().collect::<BTreeSet<_>>() {
        return None;
    }
    let mut kids: BTreeMap<Play, Vec<&Play>> = BTreeMap::new();
    for view in t1.views.keys() {
        if let Some(parent) = view.parent_view() {
            kids.entry(parent).or_default().push(view);
        }
    }
    let canon1 = canonical_keys(t1, &kids, label1);
    let canon2 = canonical_keys(t2, &kids, label2);

    // Pair states top-down: within each parent-respecting group, states
    // sorted by canonical key must match keywise for an isomorphism to
    // exist, and that pairing is one.
    let mut order: Vec<&Play> = t1.views.keys().collect();
    order.sort_by_key(|p| (p.len(), (*p).clone()));
    let mut map: BTreeMap<Play, BTreeMap<String, String>> = BTreeMap::new();
    for view in order {
        let d1 = &t1.views[view];
        let d2 = &t2.views[view];
        if d1.states.len() != d2.states.len() {
            return None;
        }
        let parent_map = view.parent_view().and_then(|p| map.get(&p).cloned());
        let mut group1: BTreeMap<Option<&String>, Vec<&String>> = BTreeMap::new();
        for e in &d1.states {
            group1.entry(d1.parent.get(e)).or_default().push(e);
        }
        let mut group2: BTreeMap<Option<&String>, Vec<&String>> = BTreeMap::new();
        for e in &d2.states {
            group2.entry(d2.parent.get(e)).or_default().push(e);
        }
        if group1.len() != group2.len() {
            return None;
        }
        let mut view_map = BTreeMap::new();
        for (key1, mut xs) in group1 {
            let key2 = match key1 {
                None => None,
                Some(e) => Some(parent_map.as_ref()?.get(e)?),
            };
            let Some(ys) = group2.get(&key2) else { return None };
            let mut ys = ys.clone();
            if xs.len() != ys.len() {
                return None;
            }
            xs.sort_by_key(|x| (&canon1[&(view.clone(), (*x).clone())], *x));
            ys.sort_by_key(|y| (&canon2[&(view.clone(), (*y).clone())], *y));
            for (x, y) in xs.iter().zip(&ys) {
                if canon1[&(view.clone(), (*x).clone())] != canon2[&(view.clone(), (*y).clone())] {
                    return None;
                }
                view_map.insert((*x).clone(), (*y).clone());
            }
        }
        map.insert(view.clone(), view_map);
    }
    Some(StrategyIso { map })
}

/// Searches for a family of per-view state bijections commuting with the
/// parent maps. `None` means the strategies are not isomorphic.
pub fn iso(t1: &ViewStrategy, t2: &ViewStrategy) -> Result<Option<StrategyIso>, StrategyError> {
    if t1.pair != t2.pair {
        return Err(StrategyError::PairMismatch);
    }
    let unlabeled = |_: &Play, _: &str| String::new();
    Ok(iso_search(t1, t2, &unlabeled, &unlabeled))
}

/// Like `iso`, but the bijections must also preserve the weights exactly.
pub fn iso_weighted(
    t1: &ViewStrategy,
    w1: &WeightMap,
    t2: &ViewStrategy,
    w2: &WeightMap,
) -> Result<Option<StrategyIso>, StrategyError> {
    if t1.pair != t2.pair {
        return Err(StrategyError::PairMismatch);
    }
    fn weight_label(w: &WeightMap) -> impl Fn(&Play, &str) -> String + '_ {
        |view, x| {
            w.delta
                .get(&(view.clone(), x.to_string()))
                .map_or_else(String::new, |r| r.to_string())
        }
    }
    Ok(iso_search(t1, t2, &weight_label(w1), &weight_label(w2)))
}

/// Pointwise disjoint union of states; parent maps act componentwise.
pub fn coproduct(t1: &ViewStrategy, t2: &ViewStrategy) -> Result<ViewStrategy, StrategyError> {
    if t1.pair != t2.pair {
        return Err(StrategyError::PairMismatch);
    }
    let mut views: BTreeMap<Play, ViewData> = BTreeMap::new();
    for (tag, t) in [("l.", t1), ("r.", t2)] {
        for (view, data) in &t.views {
            let entry = views.entry(view.clone()).or_default();
            for s in &data.states {
                entry.states.insert(format!("{tag}{s}"));
            }
            for (s, p) in &data.parent {
                entry.parent.insert(format!("{tag}{s}"), format!("{tag}{p}"));
            }
        }
    }
    Ok(ViewStrategy { pair: t1.pair.clone(), views })
}

/// Weighted coproduct: the weight map tags along with the states.
pub fn coproduct_weighted(
    t1: &ViewStrategy,
    w1: &WeightMap,
    t2: &ViewStrategy,
    w2: &WeightMap,
) -> Result<(ViewStrategy, WeightMap), StrategyError> {
    let t = coproduct(t1, t2)?;
    let mut delta = BTreeMap::new();
    for (tag, w) in [("l.", w1), ("r.", w2)] {
        for ((view, state), value) in &w.delta {
            delta.insert((view.clone(), format!("{tag}{state}")), value.clone());
        }
    }
    Ok((t, WeightMap { delta }))
}

/// Shifts the root index of every right move of a view by `offset`.
fn shift_right_roots(view: &Play, offset: i64) -> Play {
    let moves = view
        .moves
        .iter()
        .map(|m| match m.side {
            Side::Left => m.clone(),
            Side::Right => {
                let mut path = m.mv.0.clone();
                path[0] = (path[0] as i64 + offset) as u32;
                PairMove::right(Move(path))
            }
        })
        .collect();
    Play { moves, ptr: view.ptr.clone() }
}

/// Pairing into a product: each non-empty view of (C, product of the B_i)
/// opens with an initial move in exactly one factor, and all its right moves
/// stay in that factor; the view is taken from that factor's strategy with
/// right roots shifted.
pub fn pair_many(factors: &[&ViewStrategy]) -> Result<ViewStrategy, StrategyError> {
    let Some(first) = factors.first() else {
        return Ok(ViewStrategy::empty(ArenaPair::new(Arena::empty(), Arena::empty())));
    };
    let left = first.pair.left.clone();
    if factors.iter().any(|t| t.pair.left != left) {
        return Err(StrategyError::PairMismatch);
    }
    let right = crate::arena::product_many(
        &factors.iter().map(|t| t.pair.right.clone()).collect::<Vec<_>>(),
    );
    let mut views = BTreeMap::new();
    let mut offset = 0i64;
    for t in factors {
        for (view, data) in &t.views {
            views.insert(shift_right_roots(view, offset), data.clone());
        }
        offset += t.pair.right.root_count() as i64;
    }
    Ok(ViewStrategy { pair: ArenaPair::new(left, right), views })
}

pub fn pair(t1: &ViewStrategy, t2: &ViewStrategy) -> Result<ViewStrategy, StrategyError> {
    pair_many(&[t1, t2])
}

/// Weighted pairing: weights transported along the root shift.
pub fn pair_many_weighted(
    factors: &[(&ViewStrategy, &WeightMap)],
) -> Result<(ViewStrategy, WeightMap), StrategyError> {
    let t = pair_many(&factors.iter().map(|(t, _)| *t).collect::<Vec<_>>())?;
    let mut delta = BTreeMap::new();
    let mut offset = 0i64;
    for (f, w) in factors {
        for ((view, state), value) in &w.delta {
            delta.insert((shift_right_roots(view, offset), state.clone()), value.clone());
        }
        offset += f.pair.right.root_count() as i64;
    }
    Ok((t, WeightMap { delta }))
}

/// Splits a strategy over (C, product of factors) back into one strategy per
/// factor; `roots` lists the root count of each factor's right arena.
/// Total because every view keeps all its right moves in one factor.
pub fn unpair(t: &ViewStrategy, roots: &[usize]) -> Vec<ViewStrategy> {
    let mut offsets = Vec::with_capacity(roots.len());
    let mut acc = 0usize;
    for r in roots {
        offsets.push(acc);
        acc += r;
    }
    let factor_arenas: Vec<Arena> = {
        let trees = t.pair.right.trees();
        offsets
            .iter()
            .zip(roots)
            .map(|(&o, &r)| Arena::from_trees(trees[o..o + r].to_vec()))
            .collect()
    };
    let mut out: Vec<ViewStrategy> = factor_arenas
        .into_iter()
        .map(|arena| ViewStrategy::empty(ArenaPair::new(t.pair.left.clone(), arena)))
        .collect();
    for (view, data) in &t.views {
        let root = view.move_at(1).mv.0[0] as usize;
        let i = offsets
            .iter()
            .zip(roots)
            .position(|(&o, &r)| root > o && root <= o + r)
            .expect("initial move lies in a factor");
        out[i]
            .views
            .insert(shift_right_roots(view, -(offsets[i] as i64)), data.clone());
    }
    out
}

/// Relabels a strategy over (A x B, C) as one over (A, B => C); states and
/// parent maps are transported unchanged. `a_roots` splits the left arena.
pub fn curry(t: &ViewStrategy, a_roots: usize) -> ViewStrategy {
    let trees = t.pair.left.trees();
    let a = Arena::from_trees(trees[..a_roots].to_vec());
    let b = Arena::from_trees(trees[a_roots..].to_vec());
    let b_roots = b.root_count();
    let pair = ArenaPair::new(a, crate::arena::exponential(&b, &t.pair.right));
    let views = t
        .views
        .iter()
        .map(|(v, d)| (crate::play::theta_inv(v, a_roots, b_roots), d.clone()))
        .collect();
    ViewStrategy { pair, views }
}

/// Inverse of `curry`: `b` is the arena whose trees were grafted in front of
/// every right root.
pub fn uncurry(t: &ViewStrategy, b: &Arena) -> ViewStrategy {
    let a_roots = t.pair.left.root_count();
    let b_roots = b.root_count();
    let c = Arena::from_trees(
        t.pair
            .right
            .trees()
            .iter()
            .map(|tree| Tree { children: tree.children[b_roots..].to_vec() })
            .collect(),
    );
    let pair = ArenaPair::new(crate::arena::product(&t.pair.left, b), c);
    let views = t
        .views
        .iter()
        .map(|(v, d)| (crate::play::theta(v, a_roots, b_roots), d.clone()))
        .collect();
    ViewStrategy { pair, views }
}

/// Transports weights along a view relabelling.
pub fn transport_weights(w: &WeightMap, f: impl Fn(&Play) -> Play) -> WeightMap {
    WeightMap {
        delta: w
            .delta
            .iter()
            .map(|((view, state), value)| ((f(view), state.clone()), value.clone()))
            .collect(),
    }
}

/// Weighted `curry`: weights transported along the same view relabelling.
pub fn curry_weighted(t: &ViewStrategy, w: &WeightMap, a_roots: usize) -> (ViewStrategy, WeightMap) {
    let b_roots = t.pair.left.root_count() - a_roots;
    let out = curry(t, a_roots);
    let wm = transport_weights(w, |v| crate::play::theta_inv(v, a_roots, b_roots));
    (out, wm)
}

/// Weighted `uncurry`.
pub fn uncurry_weighted(t: &ViewStrategy, w: &WeightMap, b: &Arena) -> (ViewStrategy, WeightMap) {
    let a_roots = t.pair.left.root_count();
    let b_roots = b.root_count();
    let out = uncurry(t, b);
    let wm = transport_weights(w, |v| crate::play::theta(v, a_roots, b_roots));
    (out, wm)
}

/// Weighted `unpair`: each factor keeps the weights of its own views.
pub fn unpair_weighted(
    t: &ViewStrategy,
    w: &WeightMap,
    roots: &[usize],
) -> Vec<(ViewStrategy, WeightMap)> {
    let parts = unpair(t, roots);
    let mut offsets = Vec::with_capacity(roots.len());
    let mut acc = 0usize;
    for r in roots {
        offsets.push(acc);
        acc += r;
    }
    parts
        .into_iter()
        .zip(offsets)
        .map(|(part, offset)| {
            let delta = part
                .views
                .iter()
                .flat_map(|(view, data)| {
                    let original = shift_right_roots(view, offset as i64);
                    data.states.iter().map(move |e| {
                        let value = w.delta[&(original.clone(), e.clone())].clone();
                        ((view.clone(), e.clone()), value)
                    })
                })
                .collect();
            (part, WeightMap { delta })
        })
        .collect()
}

/// The token of the single state of the initial view introduced by `prepend`.
pub const PREPEND_STATE: &str = "*";

/// The two-move view inserted by `prepend`: the initial ground question and
/// the initial move of the head tree.
pub fn prepend_initial_block(head: u32) -> Play {
    let mut init = Play::empty();
    init.push(PairMove::right(Move::root(1)), 0);
    init.push(PairMove::left(Move::root(head)), 1);
    init
}

/// The view relabelling used by `prepend`: right moves relocate under the
/// head tree, pointers shift past the inserted block.
pub fn prepend_view(view: &Play, head: u32) -> Play {
    let mut mapped = prepend_initial_block(head);
    for k in 1..=view.len() {
        let m = view.move_at(k);
        let new_move = match m.side {
            Side::Left => m.clone(),
            Side::Right => {
                let mut path = vec![head];
                path.extend_from_slice(&m.mv.0);
                PairMove::left(Move(path))
            }
        };
        let p = view.ptr_at(k);
        // Initial left moves re-point at the new ground opener; everything
        // else shifts past the inserted block (the old opener lands at 3).
        let new_ptr = match p {
            0 => 2,
            1 if m.side == Side::Left => 1,
            _ => p + 2,
        };
        mapped.push(new_move, new_ptr);
    }
    mapped
}

/// Inserts the block (initial ground move, initial move of the left factor
/// `head`) before every view. `t` must live over (A, subforest of A's tree
/// `head`); the result lives over (A, ground). The inserted view gets one
/// state, and old pointers are rewired: justified-by-star right moves now
/// point at the inserted left move, moves pointing at the old first move now
/// point at the new first move, everything else shifts by 2.
pub fn prepend(t: &ViewStrategy, head: u32) -> ViewStrategy {
    let ground = arena_from_ground();
    let pair = ArenaPair::new(t.pair.left.clone(), ground);
    debug_assert_eq!(
        t.pair.right,
        t.pair.left.subforest(head).expect("head tree exists"),
        "prepend requires the right arena to be the head's argument forest"
    );
    let mut views = BTreeMap::new();
    views.insert(
        prepend_initial_block(head),
        ViewData { states: BTreeSet::from([PREPEND_STATE.to_string()]), parent: BTreeMap::new() },
    );
    for (view, data) in &t.views {
        let mut new_data = data.clone();
        if view.len() == 2 {
            for s in &data.states {
                new_data.parent.insert(s.clone(), PREPEND_STATE.to_string());
            }
        }
        views.insert(prepend_view(view, head), new_data);
    }
    ViewStrategy { pair, views }
}

/// Weighted `prepend`: the inserted initial block gets weight 1.
pub fn prepend_weighted(t: &ViewStrategy, w: &WeightMap, head: u32) -> (ViewStrategy, WeightMap) {
    let out = prepend(t, head);
    let mut wm = transport_weights(w, |v| prepend_view(v, head));
    wm.delta.insert((prepend_initial_block(head), PREPEND_STATE.to_string()), Rat::one());
    (out, wm)
}

fn arena_from_ground() -> Arena {
    crate::arena::arena_of_kind(&crate::kind::Kind::ground())
}

/// True when the justification chain of position `k`, followed through moves
/// inside the head tree, lands on the inserted head occurrence at position 2.
/// Chains landing on a later head occurrence belong to the left arena (the
/// head variable replayed) and stay left.
fn chains_to_inserted_head(view: &Play, head: u32, k: usize) -> bool {
    let mut pos = k;
    loop {
        let m = view.move_at(pos);
        if m.side == Side::Left && m.mv.0[0] == head && m.mv.0.len() >= 2 {
            pos = view.ptr_at(pos);
        } else {
            return pos == 2;
        }
    }
}

/// The inverse view relabelling used by `strip`: drops the initial block and
/// relocates the moves the prepend moved under the head tree.
pub fn strip_view(view: &Play, head: u32) -> Play {
    let mut stripped = Play::empty();
    for k in 3..=view.len() {
        let m = view.move_at(k);
        let new_move = if m.side == Side::Left
            && m.mv.0[0] == head
            && m.mv.0.len() >= 2
            && chains_to_inserted_head(view, head, k)
        {
            PairMove::right(Move(m.mv.0[1..].to_vec()))
        } else {
            m.clone()
        };
        let p = view.ptr_at(k);
        let new_ptr = match p {
            2 => 0,
            1 => 1,
            _ => p - 2,
        };
        stripped.push(new_move, new_ptr);
    }
    stripped
}

/// The head tree index of a strategy in prepend shape: exactly one length-2
/// view, with exactly one state, whose second move is an initial left move.
fn strip_head(t: &ViewStrategy) -> Result<u32, StripError> {
    let initials: Vec<(&Play, &ViewData)> =
        t.views.iter().filter(|(v, _)| v.len() == 2).collect();
    let [(init, init_data)] = initials[..] else {
        return Err(StripError::StripOnNonDeterministicInitial);
    };
    if init_data.states.len() != 1 {
        return Err(StripError::StripOnNonDeterministicInitial);
    }
    let head_move = init.move_at(2);
    if head_move.side != Side::Left || !head_move.mv.is_initial() {
        return Err(StripError::StripOnNonDeterministicInitial);
    }
    Ok(head_move.mv.0[0])
}

/// Inverse of `prepend`: requires the support to contain exactly one view of
/// length 2, with exactly one state.
pub fn strip(t: &ViewStrategy) -> Result<ViewStrategy, StripError> {
    let head = strip_head(t)?;
    let right = t.pair.left.subforest(head).expect("head tree exists");
    let pair = ArenaPair::new(t.pair.left.clone(), right);
    let mut views = BTreeMap::new();
    for (view, data) in &t.views {
        if view.len() == 2 {
            continue;
        }
        let stripped = strip_view(view, head);
        let mut new_data = data.clone();
        if stripped.len() == 2 {
            new_data.parent.clear();
        }
        views.insert(stripped, new_data);
    }
    Ok(ViewStrategy { pair, views })
}

/// Weighted `strip`: the dropped initial block must carry no information, so
/// its weight entry is discarded and the rest are relabelled.
pub fn strip_weighted(
    t: &ViewStrategy,
    w: &WeightMap,
) -> Result<(ViewStrategy, WeightMap), StripError> {
    let head = strip_head(t)?;
    let out = strip(t)?;
    let delta = w
        .delta
        .iter()
        .filter(|((view, _), _)| view.len() > 2)
        .map(|((view, state), value)| ((strip_view(view, head), state.clone()), value.clone()))
        .collect();
    Ok((out, WeightMap { delta }))
}

/// View-level determinism: for every support view (or the empty view), every
/// state of it (or the trivial state), and every O-move, at most one
/// (response, state) continues it.
pub fn is_deterministic(t: &ViewStrategy) -> bool {
    response_weights(t, None).values().all(|count| *count <= Rat::one())
}

/// Probabilistic bound: same quantification, with states counted by their
/// weight instead of 1.
pub fn is_probabilistic(t: &ViewStrategy, w: &WeightMap) -> bool {
    response_weights(t, Some(w)).values().all(|total| *total <= Rat::one())
}

/// Sums, per (parent view, parent state, O-move), the weights (or counts) of
/// the continuing states.
fn response_weights(
    t: &ViewStrategy,
    w: Option<&WeightMap>,
) -> BTreeMap<(Play, String, PairMove), Rat> {
    let mut totals: BTreeMap<(Play, String, PairMove), Rat> = BTreeMap::new();
    for (view, data) in &t.views {
        let o_move = view.move_at(view.len() - 1).clone();
        let parent_view = view.parent_view().expect("non-empty view");
        for state in &data.states {
            let parent_state = if view.len() == 2 {
                PREPEND_STATE.to_string()
            } else {
                data.parent[state].clone()
            };
            let inc = match w {
                None => Rat::one(),
                Some(w) => w.delta[&(view.clone(), state.clone())].clone(),
            };
            let key = (parent_view.clone(), parent_state, o_move.clone());
            *totals.entry(key).or_insert_with(Rat::zero) += inc;
        }
    }
    totals
}

/// Checks positivity and exact coverage of the support.
pub fn validate_weights(t: &ViewStrategy, w: &WeightMap) -> Result<(), WeightError> {
    for ((view, state), value) in &w.delta {
        if *value <= Rat::zero() {
            return Err(WeightError::NotPositive {
                view: view.to_string(),
                state: state.clone(),
                value: value.to_string(),
            });
        }
        if !t.views.get(view).is_some_and(|d| d.states.contains(state)) {
            return Err(WeightError::Unknown { view: view.to_string(), state: state.clone() });
        }
    }
    for (view, data) in &t.views {
        for state in &data.states {
            if !w.delta.contains_key(&(view.clone(), state.clone())) {
                return Err(WeightError::Missing {
                    view: view.to_string(),
                    state: state.clone(),
                });
            }
        }
    }
    Ok(())
}

/// The weight map assigning 1 everywhere.
pub fn trivial_weights(t: &ViewStrategy) -> WeightMap {
    let mut delta = BTreeMap::new();
    for (view, data) in &t.views {
        for state in &data.states {
            delta.insert((view.clone(), state.clone()), Rat::one());
        }
    }
    WeightMap { delta }
}

/// Multiplies the weight of every initial-block (length 2) view state by c.
pub fn scale(c: &Rat, w: &WeightMap) -> WeightMap {
    WeightMap {
        delta: w
            .delta
            .iter()
            .map(|((view, state), value)| {
                let scaled = if view.len() == 2 { value * c } else { value.clone() };
                ((view.clone(), state.clone()), scaled)
            })
            .collect(),
    }
}

/// Product of the per-block weight increments of an annotation.
pub fn weight_of_play(w: &WeightMap, a: &Annotation) -> Rat {
    let mut total = Rat::one();
    for (l, entry) in a.entries.iter().enumerate() {
        let view = standalone_view_at(&a.play, 2 * (l + 1));
        total *= w.delta[&(view, entry.clone())].clone();
    }
    total
}

/// Splits a strategy into one component per (initial view, initial state):
/// each component keeps exactly the states whose chain restriction to length
/// 2 is that state. The coproduct of the components is isomorphic to the
/// input.
pub fn decompose_initial(t: &ViewStrategy) -> Vec<(Play, String, ViewStrategy)> {
    let mut out = Vec::new();
    let initials: Vec<(Play, Vec<String>)> = t
        .views
        .iter()
        .filter(|(v, _)| v.len() == 2)
        .map(|(v, d)| (v.clone(), d.states.iter().cloned().collect()))
        .collect();
    for (init, states) in initials {
        for a in states {
            let mut views: BTreeMap<Play, ViewData> = BTreeMap::new();
            for (view, data) in &t.views {
                if view.prefix(2) != init {
                    continue;
                }
                let keep: BTreeSet<String> = data
                    .states
                    .iter()
                    .filter(|e| t.root_state(view, e) == a)
                    .cloned()
                    .collect();
                if keep.is_empty() {
                    continue;
                }
                let parent = data
                    .parent
                    .iter()
                    .filter(|(e, _)| keep.contains(*e))
                    .map(|(e, p)| (e.clone(), p.clone()))
                    .collect();
                views.insert(view.clone(), ViewData { states: keep, parent });
            }
            out.push((init.clone(), a.clone(), ViewStrategy { pair: t.pair.clone(), views }));
        }
    }
    out
}

/// Weighted decomposition: each component comes with the weight of its
/// initial state, and its own weight map renormalized so the initial block
/// has weight 1 while deeper increments are unchanged.
pub fn decompose_initial_weighted(
    t: &ViewStrategy,
    w: &WeightMap,
) -> Vec<(Play, String, Rat, ViewStrategy, WeightMap)> {
    decompose_initial(t)
        .into_iter()
        .map(|(init, state, component)| {
            let c = w.delta[&(init.clone(), state.clone())].clone();
            let mut delta = BTreeMap::new();
            for (view, data) in &component.views {
                for e in &data.states {
                    let value = if view.len() == 2 {
                        Rat::one()
                    } else {
                        w.delta[&(view.clone(), e.clone())].clone()
                    };
                    delta.insert((view.clone(), e.clone()), value);
                }
            }
            (init, state, c, component, WeightMap { delta })
        })
        .collect()
}
