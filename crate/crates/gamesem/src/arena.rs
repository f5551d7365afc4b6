//! Arenas: finite forests of move occurrences with an enabling relation.
//!
//! An arena is an ordered forest. A move is identified by its path: the first
//! entry picks a root (1-based), each later entry picks a child. Everything
//! else is positional:
//!
//! * ownership: a move is an O-move iff its path has odd length;
//! * enabling: a move is enabled by its parent, roots are enabled by `*`.
//!
//! Constructions are fully canonical. `product` juxtaposes forests (the right
//! component's root indices are shifted), so it is literally associative with
//! the empty arena as unit. `exponential(a, b)` grafts the whole forest of `a`
//! in front of the children of every root of `b`: the grafted copies are the
//! pair moves (initial-b-move, a-move), and parity then flips ownership of the
//! grafted part exactly as required. As a consequence
//! `exponential(arena_of_kind(k1), arena_of_kind(k2)) == arena_of_kind(k1 -> k2)`
//! holds by construction.

use std::fmt;
use std::str::FromStr;

use crate::kind::Kind;

/// Ownership of a move, from the point of view of the arena it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    O,
    P,
}

impl Owner {
    pub fn flip(self) -> Owner {
        match self {
            Owner::O => Owner::P,
            Owner::P => Owner::O,
        }
    }
}

/// A node of the enabling forest. Only the shape matters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Tree {
    pub children: Vec<Tree>,
}

impl Tree {
    fn move_count(&self) -> usize {
        1 + self.children.iter().map(Tree::move_count).sum::<usize>()
    }

    fn kind(&self) -> Kind {
        Kind { args: self.children.iter().map(Tree::kind).collect() }
    }
}

fn tree_of_kind(kind: &Kind) -> Tree {
    Tree { children: kind.args.iter().map(tree_of_kind).collect() }
}

/// A move of an arena: the path locating it in the forest (all entries 1-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move(pub Vec<u32>);

impl Move {
    pub fn root(index: u32) -> Move {
        Move(vec![index])
    }

    pub fn is_initial(&self) -> bool {
        self.0.len() == 1
    }

    pub fn owner(&self) -> Owner {
        if self.0.len() % 2 == 1 {
            Owner::O
        } else {
            Owner::P
        }
    }

    pub fn parent(&self) -> Option<Move> {
        if self.0.len() <= 1 {
            None
        } else {
            Move(self.0[..self.0.len() - 1].to_vec()).into()
        }
    }

    pub fn child(&self, index: u32) -> Move {
        let mut path = self.0.clone();
        path.push(index);
        Move(path)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for step in &self.0 {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{step}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Move {
    type Err = String;

    fn from_str(s: &str) -> Result<Move, String> {
        let mut path = Vec::new();
        for part in s.split('.') {
            let step: u32 = part.parse().map_err(|_| format!("bad move path {s:?}"))?;
            if step == 0 {
                return Err(format!("move path indices are 1-based: {s:?}"));
            }
            path.push(step);
        }
        if path.is_empty() {
            return Err("empty move path".into());
        }
        Ok(Move(path))
    }
}

/// A finite arena.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Arena {
    trees: Vec<Tree>,
}

impl Arena {
    pub fn empty() -> Arena {
        Arena { trees: Vec::new() }
    }

    pub fn from_trees(trees: Vec<Tree>) -> Arena {
        Arena { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Number of roots, i.e. of initial moves.
    pub fn root_count(&self) -> usize {
        self.trees.len()
    }

    /// A prime arena has exactly one initial move.
    pub fn is_prime(&self) -> bool {
        self.trees.len() == 1
    }

    pub fn node(&self, mv: &Move) -> Option<&Tree> {
        let (first, rest) = mv.0.split_first()?;
        let mut node = self.trees.get(*first as usize - 1)?;
        for step in rest {
            node = node.children.get(*step as usize - 1)?;
        }
        Some(node)
    }

    pub fn contains(&self, mv: &Move) -> bool {
        self.node(mv).is_some()
    }

    pub fn move_count(&self) -> usize {
        self.trees.iter().map(Tree::move_count).sum()
    }

    /// All moves in depth-first order.
    pub fn moves(&self) -> Vec<Move> {
        fn walk(tree: &Tree, path: &mut Vec<u32>, out: &mut Vec<Move>) {
            out.push(Move(path.clone()));
            for (i, child) in tree.children.iter().enumerate() {
                path.push(i as u32 + 1);
                walk(child, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        for (i, tree) in self.trees.iter().enumerate() {
            let mut path = vec![i as u32 + 1];
            walk(tree, &mut path, &mut out);
        }
        out
    }

    /// Whether `from` enables `to` in this arena (`None` is `*`).
    pub fn enables(&self, from: Option<&Move>, to: &Move) -> bool {
        if !self.contains(to) {
            return false;
        }
        match from {
            None => to.is_initial(),
            Some(j) => self.contains(j) && to.parent().as_ref() == Some(j),
        }
    }

    /// The forest of subtrees below root `root` (1-based), i.e. the product of
    /// the argument arenas when this arena is a kind arena.
    pub fn subforest(&self, root: u32) -> Option<Arena> {
        let tree = self.trees.get(root as usize - 1)?;
        Some(Arena { trees: tree.children.clone() })
    }

    /// One kind per tree; a kind arena round-trips through `arena_of_kind`.
    pub fn kinds(&self) -> Vec<Kind> {
        self.trees.iter().map(Tree::kind).collect()
    }

    /// The kind of a prime arena.
    pub fn kind(&self) -> Option<Kind> {
        if self.is_prime() {
            Some(self.trees[0].kind())
        } else {
            None
        }
    }
}

/// The arena of a kind: one tree whose root has the argument kinds' trees as
/// children. The root is the unique initial move, an O-move of length 1.
pub fn arena_of_kind(kind: &Kind) -> Arena {
    Arena { trees: vec![tree_of_kind(kind)] }
}

/// The kind of each root tree; inverts `arena_of_kind` tree by tree, so
/// `kinds_of_arena(&arena_of_kind(k)) == vec![k]` and a product arena yields
/// one kind per factor root.
pub fn kinds_of_arena(a: &Arena) -> Vec<Kind> {
    a.trees.iter().map(Tree::kind).collect()
}

/// Forest juxtaposition. Moves of `b` keep their paths except that root
/// indices are shifted by `a.root_count()`.
pub fn product(a: &Arena, b: &Arena) -> Arena {
    let mut trees = a.trees.clone();
    trees.extend(b.trees.iter().cloned());
    Arena { trees }
}

pub fn product_many(factors: &[Arena]) -> Arena {
    let mut trees = Vec::new();
    for f in factors {
        trees.extend(f.trees.iter().cloned());
    }
    Arena { trees }
}

/// The exponential `a => b`: every root of `b` receives the whole forest of
/// `a` grafted in front of its own children. A grafted move `[r] ++ path`
/// is the pair (initial b-move r, a-move path); parity flips its ownership.
pub fn exponential(a: &Arena, b: &Arena) -> Arena {
    let trees = b
        .trees
        .iter()
        .map(|root| {
            let mut children = a.trees.clone();
            children.extend(root.children.iter().cloned());
            Tree { children }
        })
        .collect();
    Arena { trees }
}

/// Side of a move within an arena pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A move of an arena pair `(left, right)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairMove {
    pub side: Side,
    pub mv: Move,
}

impl PairMove {
    pub fn left(mv: Move) -> PairMove {
        PairMove { side: Side::Left, mv }
    }

    pub fn right(mv: Move) -> PairMove {
        PairMove { side: Side::Right, mv }
    }

    /// Ownership within the pair: left-component ownership is flipped, so the
    /// O-moves of the pair are the P-moves of `left` plus the O-moves of
    /// `right`.
    pub fn polarity(&self) -> Owner {
        match self.side {
            Side::Left => self.mv.owner().flip(),
            Side::Right => self.mv.owner(),
        }
    }
}

impl fmt::Display for PairMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::Left => write!(f, "l{}", self.mv),
            Side::Right => write!(f, "r{}", self.mv),
        }
    }
}

impl FromStr for PairMove {
    type Err = String;

    fn from_str(s: &str) -> Result<PairMove, String> {
        let (side, rest) = match s.as_bytes().first() {
            Some(b'l') => (Side::Left, &s[1..]),
            Some(b'r') => (Side::Right, &s[1..]),
            _ => return Err(format!("pair move must start with 'l' or 'r': {s:?}")),
        };
        Ok(PairMove { side, mv: rest.parse()? })
    }
}

/// An arena pair `(left, right)`: the ambient structure plays live over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArenaPair {
    pub left: Arena,
    pub right: Arena,
}

impl ArenaPair {
    pub fn new(left: Arena, right: Arena) -> ArenaPair {
        ArenaPair { left, right }
    }

    pub fn component(&self, side: Side) -> &Arena {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn contains(&self, m: &PairMove) -> bool {
        self.component(m.side).contains(&m.mv)
    }

    /// The enabling relation of the pair (`None` is `*`):
    /// * `*` enables exactly the initial right moves;
    /// * within a component, the component's own enabling applies;
    /// * an initial right move enables every initial left move.
    pub fn enables(&self, from: Option<&PairMove>, to: &PairMove) -> bool {
        if !self.contains(to) {
            return false;
        }
        match from {
            None => to.side == Side::Right && to.mv.is_initial(),
            Some(j) => {
                if !self.contains(j) {
                    return false;
                }
                if j.side == to.side {
                    to.mv.parent().as_ref() == Some(&j.mv)
                } else {
                    j.side == Side::Right
                        && j.mv.is_initial()
                        && to.side == Side::Left
                        && to.mv.is_initial()
                }
            }
        }
    }

    /// All moves of the pair, left component first, depth-first.
    pub fn moves(&self) -> Vec<PairMove> {
        let mut out: Vec<PairMove> = self.left.moves().into_iter().map(PairMove::left).collect();
        out.extend(self.right.moves().into_iter().map(PairMove::right));
        out
    }
}
