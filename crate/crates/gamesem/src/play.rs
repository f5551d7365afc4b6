//! Justified sequences, plays, P-views, play morphisms, commutations,
//! covering families, pullbacks, and the index-preserving correspondence
//! between plays over (A, B => C) and plays over (A x B, C).
//!
//! A sequence stores its moves and a justification pointer per position
//! (1-based; 0 means justified by `*`). Validity relative to an arena pair is
//! a predicate, not a separate type: surgeries such as `commute` and `theta`
//! produce valid-by-construction sequences, and boundaries (parsers, strategy
//! validation) call `validate_play` explicitly.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::arena::{ArenaPair, Move, Owner, PairMove, Side};

/// A justified sequence: moves plus justification pointers.
///
/// Position k (1-based) holds move `moves[k-1]` with justifier position
/// `ptr[k-1]`; pointer 0 means justified by `*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Play {
    pub moves: Vec<PairMove>,
    pub ptr: Vec<usize>,
}

impl Play {
    pub fn empty() -> Play {
        Play::default()
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn push(&mut self, mv: PairMove, ptr: usize) {
        self.moves.push(mv);
        self.ptr.push(ptr);
    }

    /// Move at 1-based position `k`.
    pub fn move_at(&self, k: usize) -> &PairMove {
        &self.moves[k - 1]
    }

    /// Justifier position of the move at `k` (0 means `*`).
    pub fn ptr_at(&self, k: usize) -> usize {
        self.ptr[k - 1]
    }

    pub fn prefix(&self, len: usize) -> Play {
        Play { moves: self.moves[..len].to_vec(), ptr: self.ptr[..len].to_vec() }
    }

    pub fn last(&self) -> Option<(&PairMove, usize)> {
        let n = self.len();
        if n == 0 {
            None
        } else {
            Some((self.move_at(n), self.ptr_at(n)))
        }
    }

    /// For an even-length view, the view with the last O-P block removed.
    pub fn parent_view(&self) -> Option<Play> {
        if self.len() >= 2 {
            Some(self.prefix(self.len() - 2))
        } else {
            None
        }
    }

    /// Position of the initial move hereditarily justifying position `k`:
    /// follow pointers until one is 0.
    pub fn initial_ancestor(&self, k: usize) -> usize {
        let mut pos = k;
        while self.ptr_at(pos) != 0 {
            pos = self.ptr_at(pos);
        }
        pos
    }
}

impl fmt::Display for Play {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mv, ptr) in self.moves.iter().zip(&self.ptr) {
            if !first {
                write!(f, " ")?;
            }
            if *ptr == 0 {
                write!(f, "{mv}[*]")?;
            } else {
                write!(f, "{mv}[{ptr}]")?;
            }
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Play {
    type Err = String;

    fn from_str(s: &str) -> Result<Play, String> {
        let mut play = Play::empty();
        for token in s.split_whitespace() {
            let open = token
                .find('[')
                .ok_or_else(|| format!("occurrence {token:?} lacks a [justifier]"))?;
            if !token.ends_with(']') {
                return Err(format!("occurrence {token:?} lacks a closing bracket"));
            }
            let mv: PairMove = token[..open].parse()?;
            let inner = &token[open + 1..token.len() - 1];
            let ptr = if inner == "*" {
                0
            } else {
                let p: usize =
                    inner.parse().map_err(|_| format!("bad justifier index {inner:?}"))?;
                if p == 0 {
                    return Err("justifier indices are 1-based; use * for none".into());
                }
                p
            };
            play.push(mv, ptr);
        }
        Ok(play)
    }
}

/// First violated play condition, with the 1-based offending position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlayError {
    #[error("moves and pointers have different lengths")]
    LengthMismatch,
    #[error("move at position {position} is not in the arena pair")]
    UnknownMove { position: usize },
    #[error("pointer at position {position} violates bound or enabling")]
    BadPointer { position: usize },
    #[error("move at position {position} breaks O/P alternation")]
    NotAlternating { position: usize },
    #[error("sequence has odd length")]
    OddLength,
    #[error("P-move at position {position} points outside the P-view")]
    NotPVisible { position: usize },
}

/// Checks that the sequence is a play over `pair`: pointers respect bounds
/// and enabling, polarities alternate starting with O, the length is even,
/// and every P-move's justifier lies in the P-view of its prefix.
pub fn validate_play(pair: &ArenaPair, s: &Play) -> Result<(), PlayError> {
    if s.moves.len() != s.ptr.len() {
        return Err(PlayError::LengthMismatch);
    }
    for k in 1..=s.len() {
        let mv = s.move_at(k);
        if !pair.contains(mv) {
            return Err(PlayError::UnknownMove { position: k });
        }
        let p = s.ptr_at(k);
        if p >= k {
            return Err(PlayError::BadPointer { position: k });
        }
        let justifier = if p == 0 { None } else { Some(s.move_at(p)) };
        if !pair.enables(justifier, mv) {
            return Err(PlayError::BadPointer { position: k });
        }
        let expected = if k % 2 == 1 { Owner::O } else { Owner::P };
        if mv.polarity() != expected {
            return Err(PlayError::NotAlternating { position: k });
        }
    }
    if s.len() % 2 == 1 {
        return Err(PlayError::OddLength);
    }
    for k in (2..=s.len()).step_by(2) {
        let p = s.ptr_at(k);
        if p != 0 && !p_view_at(s, k - 1).contains(&p) {
            return Err(PlayError::NotPVisible { position: k });
        }
    }
    Ok(())
}

/// Positions of the P-view of the prefix of length `upto`, sorted ascending.
///
/// Backward walk: from a P-position step to the previous position, from an
/// O-position jump to its justifier (stopping at `*`). On alternating
/// sequences this computes the three inductive clauses; the selected
/// subsequence need not itself be justified when the input is not P-visible.
pub fn p_view_at(s: &Play, upto: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = upto;
    while i >= 1 {
        out.push(i);
        if i % 2 == 1 {
            let j = s.ptr_at(i);
            if j == 0 {
                break;
            }
            i = j;
        } else {
            i -= 1;
        }
    }
    out.reverse();
    out
}

/// Positions of the P-view of the whole sequence.
pub fn p_view(s: &Play) -> Vec<usize> {
    p_view_at(s, s.len())
}

/// The P-view of the prefix of length `upto` as a standalone re-indexed
/// sequence. On a valid play the result is again a valid play: every pointer
/// of a selected position lands on a selected position.
pub fn standalone_view_at(s: &Play, upto: usize) -> Play {
    extract(s, &p_view_at(s, upto))
}

pub fn standalone_view(s: &Play) -> Play {
    standalone_view_at(s, s.len())
}

/// Restriction of `s` to a sorted, pointer-closed position set.
fn extract(s: &Play, positions: &[usize]) -> Play {
    let mut index = vec![0usize; s.len() + 1];
    for (i, &p) in positions.iter().enumerate() {
        index[p] = i + 1;
    }
    let mut out = Play::empty();
    for &p in positions {
        let ptr = s.ptr_at(p);
        out.push(s.move_at(p).clone(), if ptr == 0 { 0 } else { index[ptr] });
    }
    out
}

/// True iff `s` is a non-empty play equal to its own P-view.
pub fn is_p_view(pair: &ArenaPair, s: &Play) -> bool {
    !s.is_empty()
        && validate_play(pair, s).is_ok()
        && p_view(s) == (1..=s.len()).collect::<Vec<_>>()
}

/// O-moves (with justifier position) extending the even-length view `v` to an
/// odd-length view: children of the last move with O polarity, or initial
/// right moves justified by `*` when `v` is empty.
pub fn view_o_extensions(pair: &ArenaPair, v: &Play) -> Vec<(PairMove, usize)> {
    match v.last() {
        None => (1..=pair.right.root_count())
            .map(|r| (PairMove::right(Move::root(r as u32)), 0))
            .collect(),
        Some((last, _)) => {
            let n = v.len();
            let node = pair.component(last.side).node(&last.mv).expect("move in arena");
            (1..=node.children.len())
                .map(|c| PairMove { side: last.side, mv: last.mv.child(c as u32) })
                .filter(|m| m.polarity() == Owner::O)
                .map(|m| (m, n))
                .collect()
        }
    }
}

/// P-moves (with justifier position) extending the odd-length view `v` to an
/// even-length view: for every O-position j, the P-children of the move at j,
/// plus every initial left move when the move at j is an initial right move.
pub fn view_p_extensions(pair: &ArenaPair, v: &Play) -> Vec<(PairMove, usize)> {
    let mut out = Vec::new();
    for j in (1..=v.len()).step_by(2) {
        let at = v.move_at(j);
        let node = pair.component(at.side).node(&at.mv).expect("move in arena");
        for c in 1..=node.children.len() {
            let m = PairMove { side: at.side, mv: at.mv.child(c as u32) };
            if m.polarity() == Owner::P {
                out.push((m, j));
            }
        }
        if at.side == Side::Right && at.mv.is_initial() {
            for r in 1..=pair.left.root_count() {
                out.push((PairMove::left(Move::root(r as u32)), j));
            }
        }
    }
    out
}

/// A morphism of plays: an injective index map preserving moves, pointers,
/// and O-P blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayMorphism {
    pub source: Play,
    pub target: Play,
    /// `map[k-1]` is the image of source position k (1-based).
    pub map: Vec<usize>,
}

impl PlayMorphism {
    pub fn identity(s: &Play) -> PlayMorphism {
        PlayMorphism { source: s.clone(), target: s.clone(), map: (1..=s.len()).collect() }
    }

    /// The inclusion of the prefix of length `len`.
    pub fn prefix_embedding(s: &Play, len: usize) -> PlayMorphism {
        PlayMorphism { source: s.prefix(len), target: s.clone(), map: (1..=len).collect() }
    }

    /// The embedding of the standalone P-view of the prefix of length `upto`.
    pub fn view_embedding(s: &Play, upto: usize) -> PlayMorphism {
        let positions = p_view_at(s, upto);
        PlayMorphism { source: extract(s, &positions), target: s.clone(), map: positions }
    }

    pub fn image(&self) -> Vec<usize> {
        let mut img = self.map.clone();
        img.sort_unstable();
        img
    }
}

/// Checks injectivity, move preservation, pointer preservation, and the
/// block condition f(2l-1)+1 = f(2l).
pub fn validate_morphism(m: &PlayMorphism) -> bool {
    let n = m.source.len();
    if m.map.len() != n || !n.is_multiple_of(2) || !m.target.len().is_multiple_of(2) {
        return false;
    }
    let mut seen = vec![false; m.target.len() + 1];
    for k in 1..=n {
        let fk = m.map[k - 1];
        if fk < 1 || fk > m.target.len() || seen[fk] {
            return false;
        }
        seen[fk] = true;
        if m.target.move_at(fk) != m.source.move_at(k) {
            return false;
        }
        let sp = m.source.ptr_at(k);
        let tp = m.target.ptr_at(fk);
        let expected = if sp == 0 { 0 } else { m.map[sp - 1] };
        if tp != expected {
            return false;
        }
        if k % 2 == 0 && fk != m.map[k - 2] + 1 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("target of the first morphism differs from source of the second")]
    Mismatch,
}

/// Diagrammatic composition: `f` into `g`'s target.
pub fn compose_morphisms(f: &PlayMorphism, g: &PlayMorphism) -> Result<PlayMorphism, MorphismError> {
    if f.target != g.source {
        return Err(MorphismError::Mismatch);
    }
    Ok(PlayMorphism {
        source: f.source.clone(),
        target: g.target.clone(),
        map: f.map.iter().map(|&i| g.map[i - 1]).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommuteError {
    #[error("commutation position {position} is not an odd index with two following blocks")]
    OutOfRange { position: usize },
    #[error("blocks at {position} interfere: the second O-move is justified by the first P-move")]
    Interfering { position: usize },
}

/// Swaps the adjacent O-P blocks at positions (k, k+1) and (k+2, k+3),
/// re-indexing pointers. Returns the commuted play and the induced
/// isomorphism from `s` to it. Fails when the second block's O-move is
/// justified by the first block's P-move.
pub fn commute(s: &Play, k: usize) -> Result<(Play, PlayMorphism), CommuteError> {
    if k.is_multiple_of(2) || k + 3 > s.len() {
        return Err(CommuteError::OutOfRange { position: k });
    }
    if s.ptr_at(k + 2) == k + 1 {
        return Err(CommuteError::Interfering { position: k });
    }
    let pi = |i: usize| -> usize {
        if i == k || i == k + 1 {
            i + 2
        } else if i == k + 2 || i == k + 3 {
            i - 2
        } else {
            i
        }
    };
    let n = s.len();
    let mut moves = vec![None; n];
    let mut ptr = vec![0usize; n];
    for i in 1..=n {
        let j = pi(i);
        moves[j - 1] = Some(s.move_at(i).clone());
        ptr[j - 1] = if s.ptr_at(i) == 0 { 0 } else { pi(s.ptr_at(i)) };
    }
    let commuted = Play { moves: moves.into_iter().map(Option::unwrap).collect(), ptr };
    let iso = PlayMorphism {
        source: s.clone(),
        target: commuted.clone(),
        map: (1..=n).map(pi).collect(),
    };
    Ok((commuted, iso))
}

/// Decomposes a morphism as a prefix embedding followed by commutations of
/// the target: returns the prefix length (always the source length) and the
/// positions at which to commute the target, in order, so that afterwards the
/// source is the prefix of the rewritten target and the morphism is the
/// composite of the prefix embedding with the inverse commutations.
///
/// Constructive bubble sort: find the leftmost odd source position k whose
/// image misses position f(k)-2 or whose image precedes it (a later source
/// position maps there), commute the target at f(k)-2, repeat. Terminates
/// because (inversions of f, sum of f) decreases lexicographically.
pub fn decompose_morphism(f: &PlayMorphism) -> (usize, Vec<usize>) {
    let mut map = f.map.clone();
    let mut target = f.target.clone();
    let mut commutations = Vec::new();
    loop {
        let mut chosen = None;
        for k in (1..=map.len()).step_by(2) {
            let fk = map[k - 1];
            if fk < 3 {
                continue;
            }
            let lower = fk - 2;
            let hit_earlier =
                map[..k - 1].contains(&lower);
            let hit_later = map[k..].contains(&lower);
            let hit_at_all = hit_earlier || hit_later;
            if !hit_at_all || hit_later {
                chosen = Some(lower);
                break;
            }
        }
        let Some(pos) = chosen else { break };
        let (commuted, iso) =
            commute(&target, pos).expect("flagged commutation is non-interfering");
        for v in &mut map {
            *v = iso.map[*v - 1];
        }
        target = commuted;
        commutations.push(pos);
    }
    (f.source.len(), commutations)
}

/// Replays a decomposition: applies the commutations to `target` in order and
/// returns the morphism they induce composed after the prefix embedding,
/// i.e. the original morphism when the decomposition came from it.
pub fn replay_decomposition(
    source: &Play,
    target: &Play,
    prefix_len: usize,
    commutations: &[usize],
) -> Option<PlayMorphism> {
    let mut rewritten = target.clone();
    let mut back: Vec<usize> = (1..=target.len()).collect();
    for &k in commutations {
        let (next, iso) = commute(&rewritten, k).ok()?;
        for v in &mut back {
            *v = iso.map[*v - 1];
        }
        rewritten = next;
    }
    if rewritten.prefix(prefix_len) != *source {
        return None;
    }
    // back maps original target positions to rewritten positions; invert it
    // on the prefix to embed the source into the original target.
    let mut inverse = vec![0usize; rewritten.len() + 1];
    for (orig, &rew) in back.iter().enumerate() {
        inverse[rew] = orig + 1;
    }
    Some(PlayMorphism {
        source: source.clone(),
        target: target.clone(),
        map: (1..=prefix_len).map(|i| inverse[i]).collect(),
    })
}

/// True iff the morphisms all target `s` and their images jointly cover it.
pub fn is_covering(family: &[PlayMorphism], s: &Play) -> bool {
    let mut hit = vec![false; s.len() + 1];
    for f in family {
        if &f.target != s {
            return false;
        }
        for &v in &f.map {
            hit[v] = true;
        }
    }
    hit[1..].iter().all(|&b| b)
}

/// The pullback of two morphisms with a common target: the restriction of the
/// target to the intersection of the images, with the two induced maps into
/// the sources.
pub fn pullback(
    f: &PlayMorphism,
    g: &PlayMorphism,
) -> Option<(Play, PlayMorphism, PlayMorphism)> {
    if f.target != g.target {
        return None;
    }
    let img_f = f.image();
    let img_g = g.image();
    let common: Vec<usize> = img_f.iter().copied().filter(|v| img_g.binary_search(v).is_ok()).collect();
    let apex = extract(&f.target, &common);
    let into = |m: &PlayMorphism| -> PlayMorphism {
        let mut back = vec![0usize; m.target.len() + 1];
        for (k, &v) in m.map.iter().enumerate() {
            back[v] = k + 1;
        }
        PlayMorphism {
            source: apex.clone(),
            target: m.source.clone(),
            map: common.iter().map(|&v| back[v]).collect(),
        }
    };
    Some((apex.clone(), into(f), into(g)))
}

/// All morphisms from `source` into `target`: backtracking over injective
/// block assignments (block permutations included, since commutation
/// isomorphisms are not monotone). Exponential worst case; test-scale use.
pub fn enumerate_morphisms(source: &Play, target: &Play) -> Vec<PlayMorphism> {
    let sb = source.len() / 2;
    let tb = target.len() / 2;
    let mut out = Vec::new();
    let mut assign: Vec<usize> = Vec::new();
    fn go(
        source: &Play,
        target: &Play,
        sb: usize,
        tb: usize,
        assign: &mut Vec<usize>,
        out: &mut Vec<PlayMorphism>,
    ) {
        if assign.len() == sb {
            let map: Vec<usize> = assign
                .iter()
                .flat_map(|&b| [2 * b - 1, 2 * b])
                .collect();
            let m = PlayMorphism { source: source.clone(), target: target.clone(), map };
            if validate_morphism(&m) {
                out.push(m);
            }
            return;
        }
        for b in 1..=tb {
            if assign.contains(&b) {
                continue;
            }
            // Cheap pruning: the block's moves must match.
            if target.move_at(2 * b - 1) != source.move_at(2 * assign.len() + 1)
                || target.move_at(2 * b) != source.move_at(2 * assign.len() + 2)
            {
                continue;
            }
            assign.push(b);
            go(source, target, sb, tb, assign, out);
            assign.pop();
        }
    }
    go(source, target, sb, tb, &mut assign, &mut out);
    out
}

/// All morphisms into `s` from any source: every ordered selection of
/// distinct blocks of `s` whose induced sequence is itself a valid play over
/// `pair`. Includes the identity, prefix embeddings, P-view embeddings, and
/// commutation isomorphisms. A block is added only once both its pointers
/// land inside the selection, and the play conditions are prefix-stable, so
/// invalid candidates prune their whole subtree. Exponential worst case;
/// test-scale use.
pub fn morphisms_into(pair: &ArenaPair, s: &Play) -> Vec<PlayMorphism> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        pair: &ArenaPair,
        s: &Play,
        blocks: usize,
        chosen: &mut Vec<usize>,
        src_pos: &mut Vec<usize>,
        source: &mut Play,
        out: &mut Vec<PlayMorphism>,
    ) {
        for b in 1..=blocks {
            if src_pos[2 * b - 1] != 0 {
                continue;
            }
            let n = source.len();
            let po = s.ptr_at(2 * b - 1);
            let pp = s.ptr_at(2 * b);
            let spo = if po == 0 { 0 } else { src_pos[po] };
            let spp = if pp == 0 {
                0
            } else if pp == 2 * b - 1 {
                n + 1
            } else {
                src_pos[pp]
            };
            if (po != 0 && spo == 0) || (pp != 0 && spp == 0) {
                continue;
            }
            source.push(s.move_at(2 * b - 1).clone(), spo);
            source.push(s.move_at(2 * b).clone(), spp);
            src_pos[2 * b - 1] = n + 1;
            src_pos[2 * b] = n + 2;
            chosen.push(b);
            if validate_play(pair, source).is_ok() {
                let map = chosen.iter().flat_map(|&c| [2 * c - 1, 2 * c]).collect();
                out.push(PlayMorphism { source: source.clone(), target: s.clone(), map });
                go(pair, s, blocks, chosen, src_pos, source, out);
            }
            chosen.pop();
            src_pos[2 * b - 1] = 0;
            src_pos[2 * b] = 0;
            *source = source.prefix(n);
        }
    }
    let mut out = Vec::new();
    go(
        pair,
        s,
        s.len() / 2,
        &mut Vec::new(),
        &mut vec![0; s.len() + 1],
        &mut Play::empty(),
        &mut out,
    );
    out
}

/// Index sets (into `morphisms`) of covering families of `s`: every minimal
/// covering subset of size at most `max_size` (supersets of a covering set
/// are skipped), plus the family of all morphisms when it covers and was not
/// already listed. Every listed family is jointly surjective onto `s`.
pub fn covering_families(
    morphisms: &[PlayMorphism],
    s: &Play,
    max_size: usize,
) -> Vec<Vec<usize>> {
    let images: Vec<Vec<usize>> = morphisms.iter().map(PlayMorphism::image).collect();
    let covers = |family: &[usize]| -> bool {
        let mut hit = vec![false; s.len() + 1];
        for &i in family {
            for &v in &images[i] {
                hit[v] = true;
            }
        }
        hit[1..].iter().all(|&b| b)
    };
    fn go(
        start: usize,
        count: usize,
        max_size: usize,
        cur: &mut Vec<usize>,
        covers: &dyn Fn(&[usize]) -> bool,
        out: &mut Vec<Vec<usize>>,
    ) {
        for i in start..count {
            cur.push(i);
            if covers(cur) {
                out.push(cur.clone());
            } else if cur.len() < max_size {
                go(i + 1, count, max_size, cur, covers, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, morphisms.len(), max_size, &mut Vec::new(), &covers, &mut out);
    if morphisms.len() > max_size {
        let all: Vec<usize> = (0..morphisms.len()).collect();
        if covers(&all) {
            out.push(all);
        }
    }
    out
}

/// Relabels a play over (A, B => C) as a play over (A x B, C), keeping order
/// and pointers. `a_roots` and `b_roots` are the root counts of A and B.
///
/// Right moves of B => C split by their path: `[r]` is the C-root r and stays
/// right; `[r, k, ..]` with k <= b_roots is a grafted B-move and becomes the
/// left move `[a_roots + k, ..]`; `[r, j, ..]` with j > b_roots is a C-move
/// and becomes the right move `[r, j - b_roots, ..]`. Left moves (A) keep
/// their paths, since A's trees come first in the product A x B.
pub fn theta(s: &Play, a_roots: usize, b_roots: usize) -> Play {
    let moves = s
        .moves
        .iter()
        .map(|m| match m.side {
            Side::Left => m.clone(),
            Side::Right => {
                let path = &m.mv.0;
                if path.len() == 1 {
                    m.clone()
                } else if (path[1] as usize) <= b_roots {
                    let mut p = vec![a_roots as u32 + path[1]];
                    p.extend_from_slice(&path[2..]);
                    PairMove::left(Move(p))
                } else {
                    let mut p = vec![path[0], path[1] - b_roots as u32];
                    p.extend_from_slice(&path[2..]);
                    PairMove::right(Move(p))
                }
            }
        })
        .collect();
    Play { moves, ptr: s.ptr.clone() }
}

/// Inverse of `theta`: relabels a play over (A x B, C) as a play over
/// (A, B => C). A left move rooted beyond `a_roots` is a B-move; the C-root
/// it re-attaches under is its hereditarily justifying initial move.
pub fn theta_inv(s: &Play, a_roots: usize, b_roots: usize) -> Play {
    let mut moves = Vec::with_capacity(s.len());
    for k in 1..=s.len() {
        let m = s.move_at(k);
        let new = match m.side {
            Side::Left => {
                let path = &m.mv.0;
                if (path[0] as usize) <= a_roots {
                    m.clone()
                } else {
                    let init = s.initial_ancestor(k);
                    let r = s.move_at(init).mv.0[0];
                    let mut p = vec![r, path[0] - a_roots as u32];
                    p.extend_from_slice(&path[1..]);
                    PairMove::right(Move(p))
                }
            }
            Side::Right => {
                let path = &m.mv.0;
                if path.len() == 1 {
                    m.clone()
                } else {
                    let mut p = vec![path[0], path[1] + b_roots as u32];
                    p.extend_from_slice(&path[2..]);
                    PairMove::right(Move(p))
                }
            }
        };
        moves.push(new);
    }
    Play { moves, ptr: s.ptr.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{arena_of_kind, exponential, product, Arena, ArenaPair};
    use crate::kind::parse_kind;

    fn pair(left: &str, right: &str) -> ArenaPair {
        let l = if left.is_empty() {
            Arena::empty()
        } else {
            arena_of_kind(&parse_kind(left).unwrap())
        };
        ArenaPair::new(l, arena_of_kind(&parse_kind(right).unwrap()))
    }

    /// The five-move pair ((o -> o -> o) -> o ; o) hosting the running
    /// example play r1 l1 l1.1 l1.1.1 l1.1 l1.1.2.
    fn example_pair() -> ArenaPair {
        pair("(o -> o -> o) -> o", "o")
    }

    fn example_play() -> Play {
        "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[2] l1.1.2[5]".parse().unwrap()
    }

    #[test]
    fn empty_play_validates() {
        assert_eq!(validate_play(&example_pair(), &Play::empty()), Ok(()));
    }

    #[test]
    fn example_play_validates() {
        assert_eq!(validate_play(&example_pair(), &example_play()), Ok(()));
    }

    #[test]
    fn repointing_the_second_question_to_an_answer_fails() {
        let s: Play = "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[4] l1.1.2[5]".parse().unwrap();
        assert_eq!(
            validate_play(&example_pair(), &s),
            Err(PlayError::BadPointer { position: 5 })
        );
    }

    #[test]
    fn forward_pointer_is_rejected() {
        let s = Play { moves: example_play().moves, ptr: vec![0, 2, 2, 3, 2, 5] };
        assert_eq!(validate_play(&example_pair(), &s), Err(PlayError::BadPointer { position: 2 }));
    }

    #[test]
    fn odd_length_is_rejected() {
        let s: Play = "r1[*] l1[1] l1.1[2]".parse().unwrap();
        assert_eq!(validate_play(&example_pair(), &s), Err(PlayError::OddLength));
    }

    #[test]
    fn alternation_is_checked() {
        // An enabled O-move placed at an even position.
        let p = pair("", "(o -> o) -> o");
        let s: Play = "r1[*] r1.1[1] r1.1.1[2] r1.1.1[2]".parse().unwrap();
        assert_eq!(validate_play(&p, &s), Err(PlayError::NotAlternating { position: 4 }));
    }

    #[test]
    fn unknown_moves_are_reported() {
        let s: Play = "r9[*] l1[1]".parse().unwrap();
        assert_eq!(
            validate_play(&example_pair(), &s),
            Err(PlayError::UnknownMove { position: 1 })
        );
    }

    #[test]
    fn visibility_is_checked() {
        // Over ((o -> o) -> o ; o) the second l1.1.1 points at a position
        // outside the P-view {1, 2, 5}.
        let p = pair("(o -> o) -> o", "o");
        let s: Play = "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[2] l1.1.1[3]".parse().unwrap();
        assert_eq!(validate_play(&p, &s), Err(PlayError::NotPVisible { position: 6 }));
        let ok: Play = "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[2] l1.1.1[5]".parse().unwrap();
        assert_eq!(validate_play(&p, &ok), Ok(()));
    }

    #[test]
    fn p_view_of_example_play() {
        assert_eq!(p_view(&example_play()), vec![1, 2, 5, 6]);
        let standalone = standalone_view(&example_play());
        assert_eq!(standalone, "r1[*] l1[1] l1.1[2] l1.1.2[3]".parse().unwrap());
        assert!(is_p_view(&example_pair(), &standalone));
    }

    #[test]
    fn p_view_restarts_at_initial_o_moves() {
        let p = pair("o", "o");
        let s: Play = "r1[*] l1[1] r1[*] l1[3]".parse().unwrap();
        assert_eq!(validate_play(&p, &s), Ok(()));
        assert_eq!(p_view(&s), vec![3, 4]);
    }

    #[test]
    fn p_view_of_odd_prefix() {
        assert_eq!(p_view_at(&example_play(), 5), vec![1, 2, 5]);
        assert_eq!(p_view_at(&example_play(), 3), vec![1, 2, 3]);
    }

    #[test]
    fn p_view_is_idempotent_on_views() {
        let v = standalone_view(&example_play());
        assert_eq!(p_view(&v), vec![1, 2, 3, 4]);
    }

    #[test]
    fn is_p_view_examples() {
        let p = example_pair();
        let ab: Play = "r1[*] l1[1]".parse().unwrap();
        assert!(is_p_view(&p, &ab));
        assert!(!is_p_view(&p, &Play::empty()));
        assert!(!is_p_view(&p, &example_play()));
    }

    #[test]
    fn view_extension_enumeration() {
        let p = example_pair();
        let empty = Play::empty();
        assert_eq!(view_o_extensions(&p, &empty), vec![("r1".parse().unwrap(), 0)]);
        let v: Play = "r1[*] l1[1]".parse().unwrap();
        assert_eq!(view_o_extensions(&p, &v), vec![("l1.1".parse().unwrap(), 2)]);
        let mut odd = v.clone();
        odd.push("l1.1".parse().unwrap(), 2);
        let exts = view_p_extensions(&p, &odd);
        assert_eq!(
            exts,
            vec![
                ("l1".parse::<PairMove>().unwrap(), 1),
                ("l1.1.1".parse::<PairMove>().unwrap(), 3),
                ("l1.1.2".parse::<PairMove>().unwrap(), 3),
            ]
        );
    }

    #[test]
    fn identity_and_prefix_morphisms_validate() {
        let s = example_play();
        assert!(validate_morphism(&PlayMorphism::identity(&s)));
        for len in [0, 2, 4, 6] {
            assert!(validate_morphism(&PlayMorphism::prefix_embedding(&s, len)));
        }
    }

    #[test]
    fn view_embedding_validates() {
        let s = example_play();
        let g = PlayMorphism::view_embedding(&s, s.len());
        assert_eq!(g.map, vec![1, 2, 5, 6]);
        assert!(validate_morphism(&g));
    }

    #[test]
    fn block_condition_is_enforced() {
        let s = example_play();
        let v = standalone_view(&s);
        let broken = PlayMorphism { source: v, target: s, map: vec![1, 2, 6, 5] };
        assert!(!validate_morphism(&broken));
    }

    #[test]
    fn composition_of_morphisms() {
        let s = example_play();
        let g = PlayMorphism::view_embedding(&s, s.len());
        let id = PlayMorphism::identity(&s);
        assert_eq!(compose_morphisms(&g, &id).unwrap(), g);
        // Prefix of the view, then the view embedding.
        let f = PlayMorphism::prefix_embedding(&g.source, 2);
        let composite = compose_morphisms(&f, &g).unwrap();
        assert!(validate_morphism(&composite));
        assert_eq!(composite.map, vec![1, 2]);
        let mismatched = PlayMorphism::identity(&Play::empty());
        assert_eq!(compose_morphisms(&mismatched, &g), Err(MorphismError::Mismatch));
    }

    #[test]
    fn commute_swaps_blocks() {
        let s = example_play();
        let (commuted, iso) = commute(&s, 3).unwrap();
        assert_eq!(
            commuted,
            "r1[*] l1[1] l1.1[2] l1.1.2[3] l1.1[2] l1.1.1[5]".parse().unwrap()
        );
        assert!(validate_morphism(&iso));
        assert_eq!(validate_play(&example_pair(), &commuted), Ok(()));
        let (back, _) = commute(&commuted, 3).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn interfering_blocks_cannot_commute() {
        let p = pair("", "((o -> o) -> o) -> o");
        let s: Play = "r1[*] r1.1[1] r1.1.1[2] r1.1.1.1[3]".parse().unwrap();
        assert_eq!(validate_play(&p, &s), Ok(()));
        assert_eq!(commute(&s, 1), Err(CommuteError::Interfering { position: 1 }));
    }

    #[test]
    fn decompose_prefix_is_trivial() {
        let s = example_play();
        let f = PlayMorphism::prefix_embedding(&s, 4);
        assert_eq!(decompose_morphism(&f), (4, vec![]));
    }

    #[test]
    fn decompose_view_embedding_needs_one_commutation() {
        let s = example_play();
        let g = PlayMorphism::view_embedding(&s, s.len());
        let (len, ks) = decompose_morphism(&g);
        assert_eq!((len, ks.clone()), (4, vec![3]));
        let replayed = replay_decomposition(&g.source, &g.target, len, &ks).unwrap();
        assert_eq!(replayed, g);
    }

    #[test]
    fn decompose_replays_every_enumerated_morphism() {
        let s = example_play();
        let (commuted, _) = commute(&s, 3).unwrap();
        for target in [s.clone(), commuted] {
            for upto in [2, 4, 6] {
                let source = standalone_view_at(&target, upto);
                for m in enumerate_morphisms(&source, &target) {
                    let (len, ks) = decompose_morphism(&m);
                    let replayed =
                        replay_decomposition(&m.source, &m.target, len, &ks).unwrap();
                    assert_eq!(replayed, m);
                }
            }
        }
    }

    #[test]
    fn joint_surjectivity_detection() {
        let s = example_play();
        let prefix = PlayMorphism::prefix_embedding(&s, 4);
        let view = PlayMorphism::view_embedding(&s, s.len());
        assert!(is_covering(&[prefix.clone(), view.clone()], &s));
        assert!(!is_covering(&[prefix], &s));
        assert!(!is_covering(&[view], &s));

        let t: Play = "r1[*] l1[1] r1[*] l1[3]".parse().unwrap();
        let ab: Play = "r1[*] l1[1]".parse().unwrap();
        let f = PlayMorphism { source: ab.clone(), target: t.clone(), map: vec![1, 2] };
        let g = PlayMorphism { source: ab.clone(), target: t.clone(), map: vec![3, 4] };
        assert!(validate_morphism(&f) && validate_morphism(&g));
        assert!(!is_covering(&[f.clone()], &t));
        assert!(is_covering(&[f, g], &t));
    }

    #[test]
    fn enumerates_every_morphism_into_the_example_play() {
        let s = example_play();
        let ms = morphisms_into(&example_pair(), &s);
        for m in &ms {
            assert!(validate_morphism(m));
            assert_eq!(validate_play(&example_pair(), &m.source), Ok(()));
        }
        // One-block inclusion, prefix, identity, P-view embedding, and the
        // commutation that swaps the two final blocks.
        assert_eq!(ms.len(), 5);
        assert!(ms.contains(&PlayMorphism::view_embedding(&s, s.len())));
        assert!(ms.iter().any(|m| m.map == vec![1, 2, 5, 6, 3, 4]));
        assert!(ms.contains(&PlayMorphism::identity(&s)));
    }

    #[test]
    fn covering_family_enumeration_is_minimal_plus_full() {
        let s = example_play();
        let ms = morphisms_into(&example_pair(), &s);
        let fams = covering_families(&ms, &s, 2);
        assert_eq!(fams.len(), 9);
        for f in &fams {
            let picked: Vec<PlayMorphism> = f.iter().map(|&i| ms[i].clone()).collect();
            assert!(is_covering(&picked, &s));
        }
        let prefix = PlayMorphism::prefix_embedding(&s, 4);
        let view = PlayMorphism::view_embedding(&s, s.len());
        assert!(fams.iter().any(|f| {
            f.len() == 2 && f.iter().any(|&i| ms[i] == prefix) && f.iter().any(|&i| ms[i] == view)
        }));
    }

    #[test]
    fn view_prefix_families_cover() {
        let s = example_play();
        let family: Vec<PlayMorphism> =
            (1..=3).map(|l| PlayMorphism::view_embedding(&s, 2 * l)).collect();
        assert!(family.iter().all(validate_morphism));
        assert!(is_covering(&family, &s));
    }

    #[test]
    fn pullback_of_identity_is_the_other_source() {
        let s = example_play();
        let g = PlayMorphism::view_embedding(&s, s.len());
        let (apex, to_id, to_g) = pullback(&PlayMorphism::identity(&s), &g).unwrap();
        assert_eq!(apex, g.source);
        assert_eq!(to_id.map, g.map);
        assert_eq!(to_g.map, vec![1, 2, 3, 4]);
    }

    #[test]
    fn pullback_of_prefix_and_view_is_the_common_part() {
        let s = example_play();
        let prefix = PlayMorphism::prefix_embedding(&s, 4);
        let view = PlayMorphism::view_embedding(&s, s.len());
        let (apex, into_prefix, into_view) = pullback(&prefix, &view).unwrap();
        assert_eq!(apex, "r1[*] l1[1]".parse().unwrap());
        assert!(validate_morphism(&into_prefix));
        assert!(validate_morphism(&into_view));
        assert_eq!(into_prefix.map, vec![1, 2]);
        assert_eq!(into_view.map, vec![1, 2]);
    }

    #[test]
    fn pullback_of_disjoint_images_is_empty() {
        let t: Play = "r1[*] l1[1] r1[*] l1[3]".parse().unwrap();
        let ab: Play = "r1[*] l1[1]".parse().unwrap();
        let f = PlayMorphism { source: ab.clone(), target: t.clone(), map: vec![1, 2] };
        let g = PlayMorphism { source: ab, target: t, map: vec![3, 4] };
        let (apex, _, _) = pullback(&f, &g).unwrap();
        assert!(apex.is_empty());
    }

    #[test]
    fn theta_round_trip() {
        // A = o, B = o, C = o: over (A, B => C) the B-move is r1.1; over
        // (A x B, C) it is l2.
        let a = arena_of_kind(&parse_kind("o").unwrap());
        let b = arena_of_kind(&parse_kind("o").unwrap());
        let c = arena_of_kind(&parse_kind("o").unwrap());
        let before = ArenaPair::new(a.clone(), exponential(&b, &c));
        let after = ArenaPair::new(product(&a, &b), c);
        let s: Play = "r1[*] r1.1[1] r1[*] l1[3]".parse().unwrap();
        assert_eq!(validate_play(&before, &s), Ok(()));
        let t = theta(&s, 1, 1);
        assert_eq!(t, "r1[*] l2[1] r1[*] l1[3]".parse().unwrap());
        assert_eq!(validate_play(&after, &t), Ok(()));
        assert_eq!(theta_inv(&t, 1, 1), s);
    }

    #[test]
    fn theta_uses_hereditary_justification() {
        // Two C-roots: B-copies under different initial moves map to the same
        // product tree, and theta_inv recovers the root from the pointer walk.
        let a = Arena::empty();
        let b = arena_of_kind(&parse_kind("o").unwrap());
        let c = product(
            &arena_of_kind(&parse_kind("o").unwrap()),
            &arena_of_kind(&parse_kind("o").unwrap()),
        );
        let before = ArenaPair::new(a.clone(), exponential(&b, &c));
        let after = ArenaPair::new(product(&a, &b), c.clone());
        let s: Play = "r2[*] r2.1[1] r1[*] r1.1[3]".parse().unwrap();
        assert_eq!(validate_play(&before, &s), Ok(()));
        let t = theta(&s, 0, 1);
        assert_eq!(t, "r2[*] l1[1] r1[*] l1[3]".parse().unwrap());
        assert_eq!(validate_play(&after, &t), Ok(()));
        assert_eq!(theta_inv(&t, 0, 1), s);
    }

    #[test]
    fn theta_preserves_views() {
        let a = arena_of_kind(&parse_kind("o").unwrap());
        let b = arena_of_kind(&parse_kind("o -> o").unwrap());
        let c = arena_of_kind(&parse_kind("o").unwrap());
        let before = ArenaPair::new(a.clone(), exponential(&b, &c));
        let after = ArenaPair::new(product(&a, &b), c);
        let v: Play = "r1[*] r1.1[1] r1.1.1[2] l1[1]".parse().unwrap();
        assert!(is_p_view(&before, &v));
        let t = theta(&v, 1, 1);
        assert!(is_p_view(&after, &t));
        assert_eq!(theta_inv(&t, 1, 1), v);
    }

    #[test]
    fn play_text_round_trip() {
        let s = example_play();
        assert_eq!(s.to_string(), "r1[*] l1[1] l1.1[2] l1.1.1[3] l1.1[2] l1.1.2[5]");
        assert_eq!(s.to_string().parse::<Play>().unwrap(), s);
        assert!("r1".parse::<Play>().is_err());
        assert!("r1[0]".parse::<Play>().is_err());
    }
}
