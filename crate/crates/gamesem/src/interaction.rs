//! Interaction sequences over arena triples, the switching automaton, basic
//! blocks, projections, morphism lifting, strategy composition, and the
//! canonical strategies (copycat, projections, evaluation).
//!
//! Composition runs a frontier search over P-views of the outer pair (A, C):
//! each view carries witnesses (u, x, y) where u is an interaction sequence
//! projecting onto the view and x, y annotate its (A,B) and (B,C)
//! projections. Internal B-moves are driven by the two strategies' supports,
//! one basic block at a time.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::One;
use thiserror::Error;

use crate::arena::{Arena, ArenaPair, Move, Owner, PairMove, Side};
use crate::play::{p_view_at, view_o_extensions, Play, PlayError, PlayMorphism};
use crate::strategy::{Rat, ViewData, ViewStrategy, WeightMap};

/// Component of an arena triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comp {
    A,
    B,
    C,
}

/// A move of an arena triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripleMove {
    pub comp: Comp,
    pub mv: Move,
}

impl fmt::Display for TripleMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.comp {
            Comp::A => 'a',
            Comp::B => 'b',
            Comp::C => 'c',
        };
        write!(f, "{tag}{}", self.mv)
    }
}

impl FromStr for TripleMove {
    type Err = String;

    fn from_str(s: &str) -> Result<TripleMove, String> {
        let comp = match s.as_bytes().first() {
            Some(b'a') => Comp::A,
            Some(b'b') => Comp::B,
            Some(b'c') => Comp::C,
            _ => return Err(format!("triple move must start with a/b/c: {s:?}")),
        };
        Ok(TripleMove { comp, mv: s[1..].parse()? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArenaTriple {
    pub a: Arena,
    pub b: Arena,
    pub c: Arena,
}

impl ArenaTriple {
    pub fn component(&self, comp: Comp) -> &Arena {
        match comp {
            Comp::A => &self.a,
            Comp::B => &self.b,
            Comp::C => &self.c,
        }
    }

    pub fn contains(&self, m: &TripleMove) -> bool {
        self.component(m.comp).contains(&m.mv)
    }

    /// Enabling over the triple (`None` is `*`): within a component the
    /// component's forest, `*` enables initial C-moves, initial C-moves
    /// enable initial B-moves, initial B-moves enable initial A-moves.
    pub fn enables(&self, from: Option<&TripleMove>, to: &TripleMove) -> bool {
        if !self.contains(to) {
            return false;
        }
        match from {
            None => to.comp == Comp::C && to.mv.is_initial(),
            Some(j) => {
                if !self.contains(j) {
                    return false;
                }
                if j.comp == to.comp {
                    to.mv.parent().as_ref() == Some(&j.mv)
                } else {
                    j.mv.is_initial()
                        && to.mv.is_initial()
                        && matches!(
                            (j.comp, to.comp),
                            (Comp::C, Comp::B) | (Comp::B, Comp::A)
                        )
                }
            }
        }
    }
}

/// An interaction sequence: triple moves plus justification pointers
/// (1-based positions; 0 means justified by `*`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct InteractionSeq {
    pub moves: Vec<TripleMove>,
    pub ptr: Vec<usize>,
}

impl InteractionSeq {
    pub fn empty() -> InteractionSeq {
        InteractionSeq::default()
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn push(&mut self, m: TripleMove, ptr: usize) {
        self.moves.push(m);
        self.ptr.push(ptr);
    }

    pub fn move_at(&self, k: usize) -> &TripleMove {
        &self.moves[k - 1]
    }

    pub fn ptr_at(&self, k: usize) -> usize {
        self.ptr[k - 1]
    }

    pub fn prefix(&self, len: usize) -> InteractionSeq {
        InteractionSeq { moves: self.moves[..len].to_vec(), ptr: self.ptr[..len].to_vec() }
    }
}

impl fmt::Display for InteractionSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, p) in self.moves.iter().zip(&self.ptr) {
            if !first {
                write!(f, " ")?;
            }
            if *p == 0 {
                write!(f, "{m}[*]")?;
            } else {
                write!(f, "{m}[{p}]")?;
            }
            first = false;
        }
        Ok(())
    }
}

impl FromStr for InteractionSeq {
    type Err = String;

    fn from_str(s: &str) -> Result<InteractionSeq, String> {
        let mut u = InteractionSeq::empty();
        for token in s.split_whitespace() {
            let open = token
                .find('[')
                .ok_or_else(|| format!("occurrence {token:?} lacks a [justifier]"))?;
            if !token.ends_with(']') {
                return Err(format!("occurrence {token:?} lacks a closing bracket"));
            }
            let m: TripleMove = token[..open].parse()?;
            let inner = &token[open + 1..token.len() - 1];
            let ptr = if inner == "*" {
                0
            } else {
                inner.parse().map_err(|_| format!("bad justifier index {inner:?}"))?
            };
            u.push(m, ptr);
        }
        Ok(u)
    }
}

/// Generalized move class: the component together with the move's ownership
/// in that component's own arena.
fn move_class(m: &TripleMove) -> (Comp, Owner) {
    (m.comp, m.mv.owner())
}

/// True for generalized P-moves of the outer pair: O-moves of A, P-moves of C.
fn is_outer_p(m: &TripleMove) -> bool {
    matches!(move_class(m), (Comp::A, Owner::O) | (Comp::C, Owner::P))
}

/// State of the switching automaton; each letter says who sees the position
/// as their turn to wait (the component pairs AB, BC, AC in order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchState {
    Ooo,
    Opp,
    Pop,
}

/// One automaton step; `None` means the move is not allowed in this state.
pub fn switch_step(state: SwitchState, m: &TripleMove) -> Option<SwitchState> {
    match (state, move_class(m)) {
        (SwitchState::Ooo, (Comp::C, Owner::O)) => Some(SwitchState::Opp),
        (SwitchState::Ooo, (Comp::A, Owner::P)) => Some(SwitchState::Pop),
        (SwitchState::Opp, (Comp::C, Owner::P)) => Some(SwitchState::Ooo),
        (SwitchState::Opp, (Comp::B, Owner::O)) => Some(SwitchState::Pop),
        (SwitchState::Pop, (Comp::B, Owner::P)) => Some(SwitchState::Opp),
        (SwitchState::Pop, (Comp::A, Owner::O)) => Some(SwitchState::Ooo),
        _ => None,
    }
}

/// The three projections of an interaction sequence, maintained move by move
/// together with position translation tables (index 0 is a dummy so that
/// 1-based u-positions index directly).
#[derive(Debug, Clone)]
struct Projections {
    ab: Play,
    bc: Play,
    ac: Play,
    u_to_ab: Vec<usize>,
    u_to_bc: Vec<usize>,
    u_to_ac: Vec<usize>,
    ab_to_u: Vec<usize>,
    bc_to_u: Vec<usize>,
    ac_to_u: Vec<usize>,
}

impl Projections {
    fn new() -> Projections {
        Projections {
            ab: Play::empty(),
            bc: Play::empty(),
            ac: Play::empty(),
            u_to_ab: vec![0],
            u_to_bc: vec![0],
            u_to_ac: vec![0],
            ab_to_u: vec![0],
            bc_to_u: vec![0],
            ac_to_u: vec![0],
        }
    }

    /// Incorporates the last move of `u`. Pointer surgery: initial B-moves
    /// are repointed to `*` in (A,B); initial A-moves are repointed in (A,C)
    /// to the initial C-move found two links up.
    fn push(&mut self, u: &InteractionSeq) {
        let k = u.len();
        let m = u.move_at(k);
        let uptr = u.ptr_at(k);
        self.u_to_ab.push(0);
        self.u_to_bc.push(0);
        self.u_to_ac.push(0);
        match m.comp {
            Comp::A => {
                self.ab.push(PairMove::left(m.mv.clone()), self.u_to_ab[uptr]);
                self.ab_to_u.push(k);
                self.u_to_ab[k] = self.ab.len();
                let ac_ptr = if m.mv.is_initial() {
                    self.u_to_ac[u.ptr_at(uptr)]
                } else {
                    self.u_to_ac[uptr]
                };
                self.ac.push(PairMove::left(m.mv.clone()), ac_ptr);
                self.ac_to_u.push(k);
                self.u_to_ac[k] = self.ac.len();
            }
            Comp::B => {
                let ab_ptr = if m.mv.is_initial() { 0 } else { self.u_to_ab[uptr] };
                self.ab.push(PairMove::right(m.mv.clone()), ab_ptr);
                self.ab_to_u.push(k);
                self.u_to_ab[k] = self.ab.len();
                self.bc.push(PairMove::left(m.mv.clone()), self.u_to_bc[uptr]);
                self.bc_to_u.push(k);
                self.u_to_bc[k] = self.bc.len();
            }
            Comp::C => {
                let bc_ptr = if uptr == 0 { 0 } else { self.u_to_bc[uptr] };
                self.bc.push(PairMove::right(m.mv.clone()), bc_ptr);
                self.bc_to_u.push(k);
                self.u_to_bc[k] = self.bc.len();
                let ac_ptr = if uptr == 0 { 0 } else { self.u_to_ac[uptr] };
                self.ac.push(PairMove::right(m.mv.clone()), ac_ptr);
                self.ac_to_u.push(k);
                self.u_to_ac[k] = self.ac.len();
            }
        }
    }

    fn replay(u: &InteractionSeq) -> Projections {
        let mut p = Projections::new();
        for len in 1..=u.len() {
            p.push(&u.prefix(len));
        }
        p
    }
}

pub fn project_ab(u: &InteractionSeq) -> Play {
    Projections::replay(u).ab
}

pub fn project_bc(u: &InteractionSeq) -> Play {
    Projections::replay(u).bc
}

pub fn project_ac(u: &InteractionSeq) -> Play {
    Projections::replay(u).ac
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InteractionError {
    #[error("moves and pointers have different lengths")]
    LengthMismatch,
    #[error("move at position {position} is not in the arena triple")]
    UnknownMove { position: usize },
    #[error("pointer at position {position} violates bound or enabling")]
    BadPointer { position: usize },
    #[error("the last move is not an O-move of A or a P-move of C")]
    BadLastMove,
    #[error("the {which} projection is not a play: {inner}")]
    ProjectionNotPlay { which: &'static str, inner: PlayError },
    #[error("move at position {position} violates the switching condition")]
    SwitchingViolated { position: usize },
}

/// Checks pointers against the triple's enabling, the class of the last
/// move, that all three projections are plays of their pairs, and (as a
/// redundant cross-check) the switching condition.
pub fn validate_interaction(triple: &ArenaTriple, u: &InteractionSeq) -> Result<(), InteractionError> {
    if u.moves.len() != u.ptr.len() {
        return Err(InteractionError::LengthMismatch);
    }
    for k in 1..=u.len() {
        let m = u.move_at(k);
        if !triple.contains(m) {
            return Err(InteractionError::UnknownMove { position: k });
        }
        let p = u.ptr_at(k);
        if p >= k {
            return Err(InteractionError::BadPointer { position: k });
        }
        let justifier = if p == 0 { None } else { Some(u.move_at(p)) };
        if !triple.enables(justifier, m) {
            return Err(InteractionError::BadPointer { position: k });
        }
    }
    if !u.is_empty() && !is_outer_p(u.move_at(u.len())) {
        return Err(InteractionError::BadLastMove);
    }
    let proj = Projections::replay(u);
    let pair_ab = ArenaPair::new(triple.a.clone(), triple.b.clone());
    let pair_bc = ArenaPair::new(triple.b.clone(), triple.c.clone());
    let pair_ac = ArenaPair::new(triple.a.clone(), triple.c.clone());
    for (which, pair, play) in [
        ("(A,B)", &pair_ab, &proj.ab),
        ("(B,C)", &pair_bc, &proj.bc),
        ("(A,C)", &pair_ac, &proj.ac),
    ] {
        if let Err(inner) = crate::play::validate_play(pair, play) {
            return Err(InteractionError::ProjectionNotPlay { which, inner });
        }
    }
    let mut state = SwitchState::Ooo;
    for k in 1..=u.len() {
        match switch_step(state, u.move_at(k)) {
            Some(next) => state = next,
            None => return Err(InteractionError::SwitchingViolated { position: k }),
        }
    }
    Ok(())
}

/// Partition into basic blocks: each starts at a generalized O-move of the
/// outer pair, ends at the next generalized P-move, and contains only
/// B-moves in between. Returns inclusive 1-based ranges.
/// Requires a validated interaction sequence.
pub fn basic_blocks(u: &InteractionSeq) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = None;
    for k in 1..=u.len() {
        let m = u.move_at(k);
        if start.is_none() {
            start = Some(k);
        }
        if is_outer_p(m) {
            blocks.push((start.take().expect("open block"), k));
        }
    }
    debug_assert!(start.is_none(), "trailing moves after the last generalized P-move");
    blocks
}

/// Lifts a play morphism along the outer projection: selects the basic
/// blocks of `v` corresponding to the target blocks hit by `f`, concatenated
/// in source order. Returns the lifted sequence and the position map into
/// `v`. Requires project_ac(v) = target(f).
pub fn lift(f: &PlayMorphism, v: &InteractionSeq) -> (InteractionSeq, Vec<usize>) {
    let blocks = basic_blocks(v);
    debug_assert_eq!(blocks.len() * 2, f.target.len(), "target blocks mismatch");
    let mut positions: Vec<usize> = Vec::new();
    for l in 1..=f.source.len() / 2 {
        let (start, end) = blocks[f.map[2 * l - 1] / 2 - 1];
        positions.extend(start..=end);
    }
    let mut index = vec![0usize; v.len() + 1];
    for (i, &p) in positions.iter().enumerate() {
        index[p] = i + 1;
    }
    let mut u = InteractionSeq::empty();
    for &p in &positions {
        let ptr = v.ptr_at(p);
        u.push(v.move_at(p).clone(), if ptr == 0 { 0 } else { index[ptr] });
    }
    (u, positions)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("the strategies do not share the middle arena")]
    PairMismatch,
    #[error("composition exceeded the internal-move bound")]
    ChatteringBoundExceeded,
}

/// A partial composite element: the interaction sequence, its maintained
/// projections, the two annotations, and the running weight.
#[derive(Debug, Clone)]
struct Witness {
    u: InteractionSeq,
    proj: Projections,
    x: Vec<String>,
    y: Vec<String>,
    b_count: usize,
    weight: Rat,
}

impl Witness {
    fn new() -> Witness {
        Witness {
            u: InteractionSeq::empty(),
            proj: Projections::new(),
            x: Vec::new(),
            y: Vec::new(),
            b_count: 0,
            weight: Rat::one(),
        }
    }

    fn push(&mut self, comp: Comp, mv: Move, uptr: usize) {
        if comp == Comp::B {
            self.b_count += 1;
        }
        self.u.push(TripleMove { comp, mv }, uptr);
        self.proj.push(&self.u);
    }

    /// Canonical serialization; used as a sort key and for parent lookups.
    fn key(&self) -> String {
        format!("{}|{}|{}", self.u, self.x.join(","), self.y.join(","))
    }
}

/// Which strategy moves next, given the last move of a running block.
fn mover(last: &TripleMove) -> SwitchState {
    match move_class(last) {
        (Comp::C, Owner::O) | (Comp::B, Owner::P) => SwitchState::Opp,
        (Comp::A, Owner::P) | (Comp::B, Owner::O) => SwitchState::Pop,
        _ => SwitchState::Ooo,
    }
}

/// Index from each odd view prefix to the support views extending it by one
/// P-move.
fn children_index(t: &ViewStrategy) -> BTreeMap<Play, Vec<Play>> {
    let mut index: BTreeMap<Play, Vec<Play>> = BTreeMap::new();
    for view in t.views.keys() {
        index.entry(view.prefix(view.len() - 1)).or_default().push(view.clone());
    }
    index
}

struct CompEntry {
    key: String,
    parent_key: Option<String>,
    delta: Rat,
}

fn compose_core(
    t1: &ViewStrategy,
    w1: Option<&WeightMap>,
    t2: &ViewStrategy,
    w2: Option<&WeightMap>,
    bound: usize,
) -> Result<(ViewStrategy, WeightMap), ComposeError> {
    if t1.pair.right != t2.pair.left {
        return Err(ComposeError::PairMismatch);
    }
    let pair_ac = ArenaPair::new(t1.pair.left.clone(), t2.pair.right.clone());
    let hard_cap = 64 + 8 * bound;
    // Branching chattering multiplies partial dialogues and their witnesses
    // faster than any length bound alone can stop, so the search also
    // budgets explored dialogue nodes and completed witnesses per view.
    let witness_cap = hard_cap.max(256);
    let mut node_budget = hard_cap.saturating_mul(64);
    let child1 = children_index(t1);
    let child2 = children_index(t2);

    let mut collected: BTreeMap<Play, Vec<CompEntry>> = BTreeMap::new();
    let mut frontier: Vec<(Play, Vec<Witness>)> = vec![(Play::empty(), vec![Witness::new()])];

    while let Some((p, witnesses)) = frontier.pop() {
        for (m, jp) in view_o_extensions(&pair_ac, &p) {
            let mut by_view: BTreeMap<Play, Vec<(Witness, Rat, Option<String>)>> = BTreeMap::new();
            for w in &witnesses {
                let parent_key = if p.is_empty() { None } else { Some(w.key()) };
                let mut opened = w.clone();
                let uptr = if jp == 0 { 0 } else { w.proj.ac_to_u[jp] };
                let comp = match m.side {
                    Side::Left => Comp::A,
                    Side::Right => Comp::C,
                };
                opened.push(comp, m.mv.clone(), uptr);
                let mut stack = vec![opened];
                while let Some(cur) = stack.pop() {
                    if cur.b_count > bound || cur.u.len() > hard_cap {
                        return Err(ComposeError::ChatteringBoundExceeded);
                    }
                    node_budget = node_budget
                        .checked_sub(1)
                        .ok_or(ComposeError::ChatteringBoundExceeded)?;
                    let turn = mover(cur.u.move_at(cur.u.len()));
                    let (proj, proj_to_u, strat, child) = match turn {
                        SwitchState::Opp => (&cur.proj.bc, &cur.proj.bc_to_u, t2, &child2),
                        SwitchState::Pop => (&cur.proj.ab, &cur.proj.ab_to_u, t1, &child1),
                        SwitchState::Ooo => unreachable!("blocks end at generalized P-moves"),
                    };
                    let n = proj.len();
                    let view_positions = p_view_at(proj, n);
                    let odd_view = {
                        let mut extracted = Play::empty();
                        let mut index = vec![0usize; n + 1];
                        for (i, &q) in view_positions.iter().enumerate() {
                            index[q] = i + 1;
                        }
                        for &q in &view_positions {
                            let ptr = proj.ptr_at(q);
                            extracted
                                .push(proj.move_at(q).clone(), if ptr == 0 { 0 } else { index[ptr] });
                        }
                        extracted
                    };
                    let Some(kids) = child.get(&odd_view) else { continue };
                    let block_o_justifier = proj.ptr_at(n);
                    for full in kids {
                        let data = &strat.views[full];
                        for state in &data.states {
                            if block_o_justifier != 0 {
                                let required = match turn {
                                    SwitchState::Opp => &cur.y[block_o_justifier / 2 - 1],
                                    _ => &cur.x[block_o_justifier / 2 - 1],
                                };
                                if data.parent.get(state) != Some(required) {
                                    continue;
                                }
                            }
                            let response = full.move_at(full.len());
                            let jv = full.ptr_at(full.len());
                            let uptr = proj_to_u[view_positions[jv - 1]];
                            let comp = match (turn, response.side) {
                                (SwitchState::Opp, Side::Left) => Comp::B,
                                (SwitchState::Opp, Side::Right) => Comp::C,
                                (SwitchState::Pop, Side::Left) => Comp::A,
                                (SwitchState::Pop, Side::Right) => Comp::B,
                                _ => unreachable!(),
                            };
                            let mut next = cur.clone();
                            next.push(comp, response.mv.clone(), uptr);
                            match turn {
                                SwitchState::Opp => next.y.push(state.clone()),
                                _ => next.x.push(state.clone()),
                            }
                            if let Some(wm) = match turn {
                                SwitchState::Opp => w2,
                                _ => w1,
                            } {
                                next.weight *= wm.delta[&(full.clone(), state.clone())].clone();
                            }
                            if matches!(comp, Comp::A | Comp::C) {
                                let delta = next.weight.clone() / w.weight.clone();
                                by_view
                                    .entry(next.proj.ac.clone())
                                    .or_default()
                                    .push((next, delta, parent_key.clone()));
                            } else {
                                stack.push(next);
                            }
                        }
                    }
                }
            }
            for (p2, ws) in by_view {
                let entries = collected.entry(p2.clone()).or_default();
                if entries.len() + ws.len() > witness_cap {
                    return Err(ComposeError::ChatteringBoundExceeded);
                }
                let mut next_witnesses = Vec::new();
                for (wit, delta, parent_key) in ws {
                    entries.push(CompEntry { key: wit.key(), parent_key, delta });
                    next_witnesses.push(wit);
                }
                frontier.push((p2, next_witnesses));
            }
        }
    }

    // Canonical tokens: per view, sort entries by key and index them.
    let mut views: BTreeMap<Play, ViewData> = BTreeMap::new();
    let mut weights = WeightMap::default();
    let mut key_to_token: BTreeMap<Play, BTreeMap<String, String>> = BTreeMap::new();
    let mut by_length: Vec<(&Play, &Vec<CompEntry>)> = collected.iter().collect();
    by_length.sort_by_key(|(p, _)| (p.len(), (*p).clone()));
    for (p, entries) in by_length {
        let mut sorted: Vec<&CompEntry> = entries.iter().collect();
        sorted.sort_by(|a, b| a.key.cmp(&b.key));
        let mut data = ViewData::default();
        let mut tokens = BTreeMap::new();
        for (i, e) in sorted.iter().enumerate() {
            let token = format!("i{i}");
            tokens.insert(e.key.clone(), token.clone());
            data.states.insert(token.clone());
            if let Some(pk) = &e.parent_key {
                let parent_view = p.parent_view().expect("length >= 4");
                let parent_token = key_to_token[&parent_view][pk].clone();
                data.parent.insert(token.clone(), parent_token);
            }
            weights.delta.insert((p.clone(), token), e.delta.clone());
        }
        key_to_token.insert(p.clone(), tokens);
        views.insert(p.clone(), data);
    }
    Ok((ViewStrategy { pair: pair_ac, views }, weights))
}

/// Composition of view strategies along a shared middle arena.
pub fn compose(
    t1: &ViewStrategy,
    t2: &ViewStrategy,
    bound: usize,
) -> Result<ViewStrategy, ComposeError> {
    compose_core(t1, None, t2, None, bound).map(|(t, _)| t)
}

/// Weighted composition: the weight of a composite state is the product of
/// the component weights; per-state increments divide out the parent weight.
pub fn compose_weighted(
    t1: &ViewStrategy,
    w1: &WeightMap,
    t2: &ViewStrategy,
    w2: &WeightMap,
    bound: usize,
) -> Result<(ViewStrategy, WeightMap), ComposeError> {
    compose_core(t1, Some(w1), t2, Some(w2), bound)
}

/// The copycat strategy over (A, A): one view per node of A, echoing the
/// path from the root, with a single state each.
pub fn copycat(a: &Arena) -> ViewStrategy {
    let mut t = ViewStrategy::empty(ArenaPair::new(a.clone(), a.clone()));
    for node in a.moves() {
        t.views.insert(copycat_view(&node), copycat_data(node.0.len()));
    }
    t
}

/// The zig-zag view visiting the path prefixes of `node`: block j plays the
/// prefix of length j on both sides, right first for odd j, left first for
/// even j.
fn copycat_view(node: &Move) -> Play {
    let mut view = Play::empty();
    for j in 1..=node.0.len() {
        let prefix = Move(node.0[..j].to_vec());
        let (first, second) = if j % 2 == 1 { (Side::Right, Side::Left) } else { (Side::Left, Side::Right) };
        let first_ptr = if j == 1 { 0 } else { 2 * (j - 1) };
        let second_ptr = if j == 1 { 1 } else { 2 * j - 3 };
        view.push(PairMove { side: first, mv: prefix.clone() }, first_ptr);
        view.push(PairMove { side: second, mv: prefix }, second_ptr);
    }
    view
}

fn copycat_data(depth: usize) -> ViewData {
    let mut data = ViewData::default();
    data.states.insert("*".to_string());
    if depth >= 2 {
        data.parent.insert("*".to_string(), "*".to_string());
    }
    data
}

/// Shifts the root index of every left move of a view by `offset`.
fn shift_left_roots(view: &Play, offset: usize) -> Play {
    let moves = view
        .moves
        .iter()
        .map(|m| match m.side {
            Side::Right => m.clone(),
            Side::Left => {
                let mut path = m.mv.0.clone();
                path[0] += offset as u32;
                PairMove::left(Move(path))
            }
        })
        .collect();
    Play { moves, ptr: view.ptr.clone() }
}

/// First projection: copycat views of A inside (A x B, A).
pub fn proj1(a: &Arena, b: &Arena) -> ViewStrategy {
    let cc = copycat(a);
    ViewStrategy {
        pair: ArenaPair::new(crate::arena::product(a, b), a.clone()),
        views: cc.views,
    }
}

/// Second projection: copycat views of B inside (A x B, B), left roots
/// shifted past A.
pub fn proj2(a: &Arena, b: &Arena) -> ViewStrategy {
    let cc = copycat(b);
    ViewStrategy {
        pair: ArenaPair::new(crate::arena::product(a, b), b.clone()),
        views: cc
            .views
            .into_iter()
            .map(|(v, d)| (shift_left_roots(&v, a.root_count()), d))
            .collect(),
    }
}

/// Projection onto the i-th factor (0-based) of a product of arenas: the
/// factor's copycat with left roots shifted past the earlier factors.
pub fn proj_at(factors: &[Arena], i: usize) -> ViewStrategy {
    let offset: usize = factors[..i].iter().map(Arena::root_count).sum();
    let cc = copycat(&factors[i]);
    ViewStrategy {
        pair: ArenaPair::new(crate::arena::product_many(factors), factors[i].clone()),
        views: cc
            .views
            .into_iter()
            .map(|(v, d)| (shift_left_roots(&v, offset), d))
            .collect(),
    }
}

/// The evaluation strategy over ((B => C) x B, C): the copycat of B => C
/// transported to the applied shape.
pub fn ev(b: &Arena, c: &Arena) -> ViewStrategy {
    crate::strategy::uncurry(&copycat(&crate::arena::exponential(b, c)), b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::arena_of_kind;
    use crate::kind::parse_kind;
    use crate::strategy::{
        self, decompose_initial, is_deterministic, iso, pair, prepend, scale, trivial_weights,
    };

    fn arena(s: &str) -> Arena {
        arena_of_kind(&parse_kind(s).unwrap())
    }

    fn pl(s: &str) -> Play {
        s.parse().unwrap()
    }

    fn useq(s: &str) -> InteractionSeq {
        s.parse().unwrap()
    }

    fn no_parent() -> Vec<(&'static str, &'static str)> {
        Vec::new()
    }

    /// The branching strategy over ((o -> o -> o) -> o ; o): one initial
    /// state, both continuations below it.
    fn sigma1() -> ViewStrategy {
        let mut t = ViewStrategy::empty(ArenaPair::new(arena("(o -> o -> o) -> o"), arena("o")));
        t.insert_view(pl("r1[*] l1[1]"), ["x1"], no_parent());
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.1[3]"), ["y1"], [("y1", "x1")]);
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.2[3]"), ["z1"], [("z1", "x1")]);
        t
    }

    /// Same support, but the branching sits in the initial states.
    fn sigma2() -> ViewStrategy {
        let mut t = ViewStrategy::empty(ArenaPair::new(arena("(o -> o -> o) -> o"), arena("o")));
        t.insert_view(pl("r1[*] l1[1]"), ["x21", "x22"], no_parent());
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.1[3]"), ["y2"], [("y2", "x21")]);
        t.insert_view(pl("r1[*] l1[1] l1.1[2] l1.1.2[3]"), ["z2"], [("z2", "x22")]);
        t
    }

    /// A tester over (o ; (o -> o -> o) -> o): answers the initial probe by
    /// calling its function argument; the first argument of that call
    /// diverges, the second calls the function again, whose first argument
    /// is the context variable.
    fn tester() -> ViewStrategy {
        let mut t = ViewStrategy::empty(ArenaPair::new(arena("o"), arena("(o -> o -> o) -> o")));
        t.insert_view(pl("r1[*] r1.1[1]"), ["n0"], no_parent());
        t.insert_view(pl("r1[*] r1.1[1] r1.1.2[2] r1.1[1]"), ["n1"], [("n1", "n0")]);
        t.insert_view(
            pl("r1[*] r1.1[1] r1.1.2[2] r1.1[1] r1.1.1[4] l1[1]"),
            ["n2"],
            [("n2", "n1")],
        );
        t
    }

    fn harmer_triple() -> ArenaTriple {
        ArenaTriple { a: arena("o"), b: arena("(o -> o -> o) -> o"), c: arena("o") }
    }

    /// The interaction realized when the tester meets sigma1.
    fn harmer_interaction() -> InteractionSeq {
        useq("c1[*] b1[1] b1.1[2] b1.1.2[3] b1.1[2] b1.1.1[5] a1[2]")
    }

    #[test]
    fn interaction_text_round_trip() {
        let u = harmer_interaction();
        assert_eq!(u.to_string(), "c1[*] b1[1] b1.1[2] b1.1.2[3] b1.1[2] b1.1.1[5] a1[2]");
        assert_eq!(u.to_string().parse::<InteractionSeq>().unwrap(), u);
    }

    #[test]
    fn empty_interaction_validates() {
        assert_eq!(validate_interaction(&harmer_triple(), &InteractionSeq::empty()), Ok(()));
    }

    #[test]
    fn harmer_interaction_validates() {
        assert_eq!(validate_interaction(&harmer_triple(), &harmer_interaction()), Ok(()));
    }

    #[test]
    fn truncated_interaction_has_bad_last_move() {
        let u = harmer_interaction().prefix(6);
        assert_eq!(
            validate_interaction(&harmer_triple(), &u),
            Err(InteractionError::BadLastMove)
        );
    }

    #[test]
    fn tampered_pointer_is_rejected() {
        let mut u = harmer_interaction();
        u.ptr[2] = 1;
        assert_eq!(
            validate_interaction(&harmer_triple(), &u),
            Err(InteractionError::BadPointer { position: 3 })
        );
    }

    #[test]
    fn non_alternating_projection_is_rejected() {
        // Repeating the closing A-move: pointers, enabling, and the last-move
        // class all pass, but the (A,B) projection stops alternating.
        let triple = harmer_triple();
        let u = useq("c1[*] b1[1] a1[2] a1[2]");
        assert!(matches!(
            validate_interaction(&triple, &u),
            Err(InteractionError::ProjectionNotPlay { which: "(A,B)", .. })
        ));
    }

    #[test]
    fn doubled_opening_question_violates_switching_class() {
        let triple = harmer_triple();
        let u = useq("c1[*] c1[*]");
        assert_eq!(
            validate_interaction(&triple, &u),
            Err(InteractionError::BadLastMove)
        );
    }

    #[test]
    fn projections_of_the_harmer_interaction() {
        let u = harmer_interaction();
        assert_eq!(
            project_ab(&u),
            pl("r1[*] r1.1[1] r1.1.2[2] r1.1[1] r1.1.1[4] l1[1]")
        );
        assert_eq!(
            project_bc(&u),
            pl("r1[*] l1[1] l1.1[2] l1.1.2[3] l1.1[2] l1.1.1[5]")
        );
        assert_eq!(project_ac(&u), pl("r1[*] l1[1]"));
    }

    #[test]
    fn off_turn_question_is_rejected() {
        // After the opening C-question the automaton expects a response from
        // the middle or right strategy; a second C-question is off-turn even
        // when pointers and enabling hold.
        let triple = ArenaTriple { a: arena("o"), b: arena("o -> o"), c: arena("o") };
        let u = useq("c1[*] b1[1] b1.1[2] c1[*] b1[4] a1[2]");
        let outcome = validate_interaction(&triple, &u);
        assert!(matches!(
            outcome,
            Err(InteractionError::ProjectionNotPlay { .. })
                | Err(InteractionError::SwitchingViolated { .. })
        ));
    }

    #[test]
    fn basic_blocks_of_harmer_interaction() {
        let u = harmer_interaction();
        assert_eq!(basic_blocks(&u), vec![(1, 7)]);
        assert_eq!(basic_blocks(&InteractionSeq::empty()), vec![]);
    }

    #[test]
    fn two_block_interaction() {
        // Copycats on o -> o interacting: two blocks of three moves.
        let id = copycat(&arena("o -> o"));
        let composite = compose(&id, &id, 64).unwrap();
        assert!(iso(&composite, &id).unwrap().is_some());
    }

    #[test]
    fn lift_of_identity_and_prefix() {
        let u = harmer_interaction();
        let ac = project_ac(&u);
        let f = PlayMorphism::identity(&ac);
        let (lifted, map) = lift(&f, &u);
        assert_eq!(lifted, u);
        assert_eq!(map, (1..=7).collect::<Vec<_>>());
        let empty_prefix = PlayMorphism::prefix_embedding(&ac, 0);
        let (lifted0, map0) = lift(&empty_prefix, &u);
        assert!(lifted0.is_empty());
        assert!(map0.is_empty());
    }

    #[test]
    fn compose_harmer_distinguishes_sigma1_from_sigma2() {
        let n = tester();
        let against_sigma1 = compose(&n, &sigma1(), 64).unwrap();
        let mut expected = ViewStrategy::empty(ArenaPair::new(arena("o"), arena("o")));
        expected.insert_view(pl("r1[*] l1[1]"), ["w"], no_parent());
        assert!(iso(&against_sigma1, &expected).unwrap().is_some());

        let against_sigma2 = compose(&n, &sigma2(), 64).unwrap();
        assert!(against_sigma2.views.is_empty());
    }

    #[test]
    fn compose_with_empty_is_empty() {
        let e = ViewStrategy::empty(ArenaPair::new(arena("o"), arena("(o -> o -> o) -> o")));
        let composite = compose(&e, &sigma1(), 64).unwrap();
        assert!(composite.views.is_empty());
    }

    #[test]
    fn identity_laws_up_to_iso() {
        let s1 = sigma1();
        let left_id = compose(&copycat(&arena("(o -> o -> o) -> o")), &s1, 64).unwrap();
        assert!(iso(&left_id, &s1).unwrap().is_some());
        let right_id = compose(&s1, &copycat(&arena("o")), 64).unwrap();
        assert!(iso(&right_id, &s1).unwrap().is_some());
    }

    #[test]
    fn composition_preserves_determinacy() {
        let n = tester();
        assert!(is_deterministic(&n));
        for (_, _, component) in decompose_initial(&sigma2()) {
            assert!(is_deterministic(&component));
            let composite = compose(&n, &component, 64).unwrap();
            assert!(is_deterministic(&composite));
        }
    }

    #[test]
    fn composite_states_use_canonical_tokens() {
        let n = tester();
        let composite = compose(&n, &sigma1(), 64).unwrap();
        let data = &composite.views[&pl("r1[*] l1[1]")];
        assert_eq!(data.states.iter().cloned().collect::<Vec<_>>(), ["i0"]);
    }

    #[test]
    fn weighted_composition_multiplies_increments() {
        let ground = ArenaPair::new(arena("o"), arena("o"));
        let mut t1 = ViewStrategy::empty(ground.clone());
        t1.insert_view(pl("r1[*] l1[1]"), ["e"], no_parent());
        let t2 = t1.clone();
        let w1 = scale(&Rat::new(1.into(), 2.into()), &trivial_weights(&t1));
        let w2 = scale(&Rat::new(1.into(), 3.into()), &trivial_weights(&t2));
        let (composite, w) = compose_weighted(&t1, &w1, &t2, &w2, 64).unwrap();
        let view = pl("r1[*] l1[1]");
        let state = composite.views[&view].states.first().unwrap().clone();
        assert_eq!(w.delta[&(view, state)], Rat::new(1.into(), 6.into()));
    }

    #[test]
    fn trivial_weights_compose_trivially() {
        let n = tester();
        let s1 = sigma1();
        let (composite, w) =
            compose_weighted(&n, &trivial_weights(&n), &s1, &trivial_weights(&s1), 64).unwrap();
        for value in w.delta.values() {
            assert_eq!(*value, Rat::one());
        }
        assert_eq!(strategy::validate_weights(&composite, &w), Ok(()));
    }

    #[test]
    fn copycat_views_and_determinism() {
        let cc = copycat(&arena("o -> o"));
        assert_eq!(cc.validate(), Ok(()));
        let expected: Vec<Play> = vec![pl("r1[*] l1[1]"), pl("r1[*] l1[1] l1.1[2] r1.1[1]")];
        assert_eq!(cc.views.keys().cloned().collect::<Vec<_>>(), expected);
        assert!(is_deterministic(&cc));
        assert!(copycat(&Arena::empty()).views.is_empty());
    }

    #[test]
    fn copycat_of_deeper_arena_validates() {
        let cc = copycat(&arena("(o -> o) -> o"));
        assert_eq!(cc.validate(), Ok(()));
        assert_eq!(cc.views.len(), 3);
    }

    #[test]
    fn projections_are_deterministic_copycats() {
        let p1 = proj1(&arena("o -> o"), &arena("o"));
        assert_eq!(p1.validate(), Ok(()));
        assert!(is_deterministic(&p1));
        let p2 = proj2(&arena("o -> o"), &arena("o"));
        assert_eq!(p2.validate(), Ok(()));
        assert!(p2.views.contains_key(&pl("r1[*] l2[1]")));
    }

    #[test]
    fn pairing_then_projecting_recovers_the_factor() {
        let c = arena("o");
        let mut t1 = ViewStrategy::empty(ArenaPair::new(c.clone(), arena("o")));
        t1.insert_view(pl("r1[*] l1[1]"), ["u"], no_parent());
        let mut t2 = ViewStrategy::empty(ArenaPair::new(c.clone(), arena("o")));
        t2.insert_view(pl("r1[*] l1[1]"), ["v"], no_parent());
        let paired = pair(&t1, &t2).unwrap();
        let first = compose(&paired, &proj1(&arena("o"), &arena("o")), 64).unwrap();
        assert!(iso(&first, &t1).unwrap().is_some());
        let second = compose(&paired, &proj2(&arena("o"), &arena("o")), 64).unwrap();
        assert!(iso(&second, &t2).unwrap().is_some());
    }

    #[test]
    fn indexed_projection_matches_the_binary_ones() {
        let factors = [arena("o -> o"), arena("o"), arena("(o -> o) -> o")];
        let p0 = proj_at(&factors, 0);
        assert_eq!(p0.validate(), Ok(()));
        assert_eq!(p0.pair.right, factors[0]);
        // Middle factor: its copycat opens at the shifted root.
        let p1 = proj_at(&factors, 1);
        assert_eq!(p1.validate(), Ok(()));
        assert!(p1.views.contains_key(&pl("r1[*] l2[1]")));
        let p2 = proj_at(&factors, 2);
        assert_eq!(p2.validate(), Ok(()));
        assert!(p2.views.contains_key(&pl("r1[*] l3[1]")));
        // Two factors reduce to the binary projections.
        let two = [arena("o -> o"), arena("o")];
        assert_eq!(proj_at(&two, 0), proj1(&two[0], &two[1]));
        assert_eq!(proj_at(&two, 1), proj2(&two[0], &two[1]));
    }

    #[test]
    fn ev_validates_and_is_deterministic() {
        let e = ev(&arena("o"), &arena("o"));
        assert_eq!(e.validate(), Ok(()));
        assert!(is_deterministic(&e));
        assert_eq!(
            e.pair,
            ArenaPair::new(
                crate::arena::product(&arena("o -> o"), &arena("o")),
                arena("o")
            )
        );
    }

    #[test]
    fn key_lemma_shape_for_empty_arguments() {
        // Context: one variable of kind o -> o. Head application with a
        // diverging argument vs the pairing-with-evaluation route.
        let a = arena("o -> o");
        let tau = ViewStrategy::empty(ArenaPair::new(a.clone(), a.subforest(1).unwrap()));
        let direct = prepend(&tau, 1);
        let head = proj1(&a, &Arena::empty());
        let head = ViewStrategy { pair: ArenaPair::new(a.clone(), a.clone()), views: head.views };
        let paired = pair(&head, &tau).unwrap();
        let routed = compose(&paired, &ev(&arena("o"), &arena("o")), 64).unwrap();
        assert!(iso(&routed, &direct).unwrap().is_some());
    }

    #[test]
    fn key_lemma_shape_for_a_value_argument() {
        // Context: (f : o -> o, z : o); compare the direct head application
        // f z with pairing f's copycat against the argument and evaluating.
        let ctx = crate::arena::product(&arena("o -> o"), &arena("o"));
        let mut tau = ViewStrategy::empty(ArenaPair::new(ctx.clone(), arena("o")));
        tau.insert_view(pl("r1[*] l2[1]"), ["s"], no_parent());
        let direct = prepend(&tau, 1);

        let head = proj1(&arena("o -> o"), &arena("o"));
        let paired = pair(&head, &tau).unwrap();
        let routed = compose(&paired, &ev(&arena("o"), &arena("o")), 64).unwrap();
        assert!(iso(&routed, &direct).unwrap().is_some());
    }

    #[test]
    fn beta_at_strategy_level() {
        // t over (o x o ; o) answering with its second variable equals the
        // composite through pairing, currying, projections and evaluation.
        let a = arena("o");
        let b = arena("o");
        let left = crate::arena::product(&a, &b);
        let mut t = ViewStrategy::empty(ArenaPair::new(left.clone(), arena("o")));
        t.insert_view(pl("r1[*] l2[1]"), ["s"], no_parent());
        let curried = strategy::curry(&t, 1);
        let lambda_part = compose(&proj1(&a, &b), &curried, 64).unwrap();
        let argument_part = proj2(&a, &b);
        let paired = pair(&lambda_part, &argument_part).unwrap();
        let routed = compose(&paired, &ev(&b, &arena("o")), 64).unwrap();
        assert!(iso(&routed, &t).unwrap().is_some());
    }
}
