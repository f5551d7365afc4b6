//! Weighted nondeterministic lambda terms over simple kinds: surface syntax,
//! typechecking, eta-long normal forms, denotation as weighted view
//! strategies, readback from strategies to terms, and term equality.
//!
//! The term formers are variables, kind-annotated abstraction, application,
//! the divergent constant `bot`, binary sum, and scaling by a positive
//! rational. Application binds tightest, then scaling, then sum
//! (left-associative); a lambda body extends as far right as possible.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::arena::{arena_of_kind, product_many, Arena, ArenaPair};
use crate::interaction::{compose_weighted, ev, proj_at, ComposeError};
use crate::kind::{Kind, KindParseError, KindParser};
use crate::strategy::{
    coproduct_weighted, curry_weighted, decompose_initial_weighted, iso_weighted,
    pair_many_weighted, prepend_weighted, scale, strip_weighted, trivial_weights,
    uncurry_weighted, unpair_weighted, validate_weights, Rat, StrategyError, StripError,
    ViewStrategy, WeightError, WeightMap,
};

/// Default chattering bound used when denotation composes strategies.
pub const DEFAULT_BOUND: usize = 4096;

/// A surface term. `Bot` types at the ground kind unless the position forces
/// a higher kind; coefficients must be positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Lam(String, Kind, Box<Term>),
    App(Box<Term>, Box<Term>),
    Bot,
    Sum(Box<Term>, Box<Term>),
    Scale(Rat, Box<Term>),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, 0)
    }
}

/// Precedence levels: 0 top, 1 sum, 2 scale, 3 application, 4 atom.
fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, prec: u8) -> fmt::Result {
    match t {
        Term::Var(x) => write!(f, "{x}"),
        Term::Bot => write!(f, "bot"),
        Term::Lam(x, k, body) => {
            if prec > 0 {
                write!(f, "(")?;
            }
            write!(f, "\\{x}:{k}. ")?;
            write_term(f, body, 0)?;
            if prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::App(fun, arg) => {
            if prec > 3 {
                write!(f, "(")?;
            }
            write_term(f, fun, 3)?;
            write!(f, " ")?;
            write_term(f, arg, 4)?;
            if prec > 3 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Scale(c, body) => {
            if prec > 2 {
                write!(f, "(")?;
            }
            write!(f, "{c} * ")?;
            write_term(f, body, 2)?;
            if prec > 2 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::Sum(l, r) => {
            if prec > 1 {
                write!(f, "(")?;
            }
            write_term(f, l, 1)?;
            write!(f, " + ")?;
            write_term(f, r, 2)?;
            if prec > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("unexpected character {ch:?} at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected} at position {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("trailing input at position {pos}")]
    TrailingInput { pos: usize },
    #[error("coefficient at position {pos} must be positive")]
    ZeroCoefficient { pos: usize },
    #[error("zero denominator at position {pos}")]
    ZeroDenominator { pos: usize },
    #[error("duplicate context variable {name}")]
    DuplicateContextVar { name: String },
    #[error("bad kind annotation: {0}")]
    Kind(#[from] KindParseError),
}

struct TermParser<'a> {
    input: &'a [u8],
    pos: usize,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'\''
}

impl<'a> TermParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.input.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8, expected: &'static str) -> Result<(), TermParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(TermParseError::Expected { expected, pos: self.pos })
        }
    }

    fn ident(&mut self) -> Result<String, TermParseError> {
        match self.peek() {
            Some(b) if is_ident_start(b) => {}
            Some(b) => {
                return Err(TermParseError::UnexpectedChar { ch: b as char, pos: self.pos })
            }
            None => return Err(TermParseError::UnexpectedEnd),
        }
        let start = self.pos;
        while self.pos < self.input.len() && is_ident_char(self.input[self.pos]) {
            self.pos += 1;
        }
        Ok(String::from_utf8(self.input[start..self.pos].to_vec()).expect("ascii"))
    }

    fn int(&mut self) -> Result<BigInt, TermParseError> {
        let start = self.pos;
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(TermParseError::Expected { expected: "digits", pos: start });
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).expect("ascii");
        Ok(text.parse().expect("digits parse"))
    }

    /// `int` or `int/int`, strictly positive.
    fn rat(&mut self) -> Result<Rat, TermParseError> {
        let start = self.pos;
        let numer = self.int()?;
        let denom = if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let dpos = self.pos;
            let d = self.int()?;
            if d.is_zero() {
                return Err(TermParseError::ZeroDenominator { pos: dpos });
            }
            d
        } else {
            BigInt::one()
        };
        let value = Rat::new(numer, denom);
        if value.is_zero() {
            return Err(TermParseError::ZeroCoefficient { pos: start });
        }
        Ok(value)
    }

    fn embedded_kind(&mut self) -> Result<Kind, TermParseError> {
        let mut kp = KindParser { input: self.input, pos: self.pos };
        let kind = kp.kind()?;
        self.pos = kp.pos;
        Ok(kind)
    }

    fn term(&mut self) -> Result<Term, TermParseError> {
        let mut acc = self.scale_level()?;
        while self.peek() == Some(b'+') {
            self.pos += 1;
            let rhs = self.scale_level()?;
            acc = Term::Sum(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn scale_level(&mut self) -> Result<Term, TermParseError> {
        match self.peek() {
            Some(b) if b.is_ascii_digit() => {
                let c = self.rat()?;
                self.expect(b'*', "'*' after coefficient")?;
                let body = self.scale_level()?;
                Ok(Term::Scale(c, Box::new(body)))
            }
            _ => self.app(),
        }
    }

    fn app(&mut self) -> Result<Term, TermParseError> {
        let mut acc = self.atom()?;
        loop {
            match self.peek() {
                Some(b'(') | Some(b'\\') => {}
                Some(b) if is_ident_start(b) => {}
                _ => break,
            }
            let arg = self.atom()?;
            acc = Term::App(Box::new(acc), Box::new(arg));
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Term, TermParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(b')', "')'")?;
                Ok(t)
            }
            Some(b'\\') => {
                self.pos += 1;
                let name = self.ident()?;
                self.expect(b':', "':' after binder")?;
                let kind = self.embedded_kind()?;
                self.expect(b'.', "'.' after binder kind")?;
                let body = self.term()?;
                Ok(Term::Lam(name, kind, Box::new(body)))
            }
            Some(b) if is_ident_start(b) => {
                let id = self.ident()?;
                if id == "bot" {
                    Ok(Term::Bot)
                } else {
                    Ok(Term::Var(id))
                }
            }
            Some(b) => Err(TermParseError::UnexpectedChar { ch: b as char, pos: self.pos }),
            None => Err(TermParseError::UnexpectedEnd),
        }
    }
}

pub fn parse_term(input: &str) -> Result<Term, TermParseError> {
    let mut p = TermParser { input: input.as_bytes(), pos: 0 };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != p.input.len() {
        return Err(TermParseError::TrailingInput { pos: p.pos });
    }
    Ok(t)
}

/// An ordered typing context with distinct variable names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Context {
    pub vars: Vec<(String, Kind)>,
}

impl Context {
    pub fn empty() -> Context {
        Context::default()
    }

    pub fn new(
        vars: impl IntoIterator<Item = (impl Into<String>, Kind)>,
    ) -> Result<Context, TermParseError> {
        let mut out = Vec::new();
        for (name, kind) in vars {
            let name = name.into();
            if out.iter().any(|(n, _): &(String, Kind)| *n == name) {
                return Err(TermParseError::DuplicateContextVar { name });
            }
            out.push((name, kind));
        }
        Ok(Context { vars: out })
    }

    pub fn kinds(&self) -> Vec<Kind> {
        self.vars.iter().map(|(_, k)| k.clone()).collect()
    }

    /// The product of the variables' kind arenas, one root per variable.
    pub fn arena(&self) -> Arena {
        arena_of_kind_list(&self.kinds())
    }
}

fn arena_of_kind_list(kinds: &[Kind]) -> Arena {
    product_many(&kinds.iter().map(arena_of_kind).collect::<Vec<_>>())
}

/// Parses `x:kind, y:kind, ...`; the empty string is the empty context.
pub fn parse_context(input: &str) -> Result<Context, TermParseError> {
    let mut p = TermParser { input: input.as_bytes(), pos: 0 };
    let mut vars: Vec<(String, Kind)> = Vec::new();
    p.skip_ws();
    if p.pos == p.input.len() {
        return Ok(Context::default());
    }
    loop {
        let name = p.ident()?;
        p.expect(b':', "':' after context variable")?;
        let kind = p.embedded_kind()?;
        if vars.iter().any(|(n, _)| *n == name) {
            return Err(TermParseError::DuplicateContextVar { name });
        }
        vars.push((name, kind));
        match p.peek() {
            Some(b',') => p.pos += 1,
            None => break,
            Some(_) => return Err(TermParseError::TrailingInput { pos: p.pos }),
        }
    }
    Ok(Context { vars })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable {name}")]
    Unbound { name: String },
    #[error("kind mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("bot in function position cannot determine its kind")]
    BotAtHigherTypeWithoutEta,
    #[error("coefficient {value} is not positive")]
    NonPositiveCoefficient { value: String },
}

/// A kind-annotated term; variables carry their position in the combined
/// stack of context variables followed by enclosing binders.
#[derive(Debug, Clone, PartialEq, Eq)]
enum TTerm {
    Var { level: usize, kind: Kind },
    Lam { dom: Kind, body: Box<TTerm> },
    App { fun: Box<TTerm>, arg: Box<TTerm>, kind: Kind },
    Bot { kind: Kind },
    Sum { left: Box<TTerm>, right: Box<TTerm>, kind: Kind },
    Scale { coeff: Rat, body: Box<TTerm> },
}

impl TTerm {
    fn kind(&self) -> Kind {
        match self {
            TTerm::Var { kind, .. }
            | TTerm::App { kind, .. }
            | TTerm::Bot { kind }
            | TTerm::Sum { kind, .. } => kind.clone(),
            TTerm::Lam { dom, body } => Kind::arrow(dom.clone(), body.kind()),
            TTerm::Scale { body, .. } => body.kind(),
        }
    }
}

/// Rewrites the provisional ground kinds of a divergent subtree (built from
/// bot, sum, and scaling only) to the kind the context determined.
fn resolve_divergent(t: &mut TTerm, k: &Kind) {
    match t {
        TTerm::Bot { kind } => *kind = k.clone(),
        TTerm::Sum { left, right, kind } => {
            *kind = k.clone();
            resolve_divergent(left, k);
            resolve_divergent(right, k);
        }
        TTerm::Scale { body, .. } => resolve_divergent(body, k),
        _ => unreachable!("divergent subtrees contain only bot, sum, and scale"),
    }
}

/// Annotates a term with kinds. The boolean is true when the term is a
/// divergent subtree whose kind stayed undetermined (provisionally ground);
/// hints come from application arguments, sum siblings, and binder kinds.
fn annotate(
    stack: &mut Vec<(String, Kind)>,
    term: &Term,
    hint: Option<&Kind>,
) -> Result<(TTerm, bool), TypeError> {
    match term {
        Term::Var(x) => {
            let level = stack
                .iter()
                .rposition(|(n, _)| n == x)
                .ok_or_else(|| TypeError::Unbound { name: x.clone() })?;
            let kind = stack[level].1.clone();
            if let Some(h) = hint {
                if *h != kind {
                    return Err(TypeError::Mismatch {
                        expected: h.to_string(),
                        found: kind.to_string(),
                    });
                }
            }
            Ok((TTerm::Var { level, kind }, false))
        }
        Term::Lam(x, dom, body) => {
            let body_hint = match hint {
                Some(h) => match h.split_arrow() {
                    Some((hd, hr)) if hd == *dom => Some(hr),
                    Some((hd, _)) => {
                        return Err(TypeError::Mismatch {
                            expected: hd.to_string(),
                            found: dom.to_string(),
                        })
                    }
                    None => {
                        return Err(TypeError::Mismatch {
                            expected: h.to_string(),
                            found: format!("a function of {dom}"),
                        })
                    }
                },
                None => None,
            };
            stack.push((x.clone(), dom.clone()));
            let annotated = annotate(stack, body, body_hint.as_ref());
            stack.pop();
            let (mut tb, div) = annotated?;
            if div {
                resolve_divergent(&mut tb, &Kind::ground());
            }
            Ok((TTerm::Lam { dom: dom.clone(), body: Box::new(tb) }, false))
        }
        Term::App(fun, arg) => {
            let (tf, divf) = annotate(stack, fun, None)?;
            if divf {
                return Err(TypeError::BotAtHigherTypeWithoutEta);
            }
            let fk = tf.kind();
            let Some((ka, kr)) = fk.split_arrow() else {
                return Err(TypeError::Mismatch {
                    expected: "a function kind".to_string(),
                    found: fk.to_string(),
                });
            };
            let (ta, diva) = annotate(stack, arg, Some(&ka))?;
            debug_assert!(!diva, "a hinted subterm is always resolved");
            if let Some(h) = hint {
                if *h != kr {
                    return Err(TypeError::Mismatch {
                        expected: h.to_string(),
                        found: kr.to_string(),
                    });
                }
            }
            Ok((TTerm::App { fun: Box::new(tf), arg: Box::new(ta), kind: kr }, false))
        }
        Term::Bot => match hint {
            Some(h) => Ok((TTerm::Bot { kind: h.clone() }, false)),
            None => Ok((TTerm::Bot { kind: Kind::ground() }, true)),
        },
        Term::Sum(l, r) => {
            let (mut tl, dl) = annotate(stack, l, hint)?;
            let (mut tr, dr) = annotate(stack, r, hint)?;
            let (kind, div) = match (dl, dr) {
                (false, false) => {
                    let (kl, kr) = (tl.kind(), tr.kind());
                    if kl != kr {
                        return Err(TypeError::Mismatch {
                            expected: kl.to_string(),
                            found: kr.to_string(),
                        });
                    }
                    (kl, false)
                }
                (true, false) => {
                    let k = tr.kind();
                    resolve_divergent(&mut tl, &k);
                    (k, false)
                }
                (false, true) => {
                    let k = tl.kind();
                    resolve_divergent(&mut tr, &k);
                    (k, false)
                }
                (true, true) => (Kind::ground(), true),
            };
            Ok((TTerm::Sum { left: Box::new(tl), right: Box::new(tr), kind }, div))
        }
        Term::Scale(c, body) => {
            if *c <= Rat::zero() {
                return Err(TypeError::NonPositiveCoefficient { value: c.to_string() });
            }
            let (tb, db) = annotate(stack, body, hint)?;
            Ok((TTerm::Scale { coeff: c.clone(), body: Box::new(tb) }, db))
        }
    }
}

fn annotate_term(ctx: &Context, term: &Term) -> Result<TTerm, TypeError> {
    let mut stack = ctx.vars.clone();
    let (tt, _divergent) = annotate(&mut stack, term, None)?;
    Ok(tt)
}

/// The kind of a term; divergent terms with no kind constraint are ground.
pub fn typecheck(ctx: &Context, term: &Term) -> Result<Kind, TypeError> {
    Ok(annotate_term(ctx, term)?.kind())
}

/// A weighted sum of evaluated heads. The empty sum is divergence.
#[derive(Debug, Clone)]
struct Val(Vec<(Rat, Head)>);

#[derive(Debug, Clone)]
enum Head {
    /// A lambda waiting for its argument; the environment snapshots the
    /// levels below the binder.
    Closure { env: Vec<Val>, body: TTerm },
    /// A variable applied to evaluated arguments.
    Neutral { name: String, args: Vec<Val> },
}

fn eval(t: &TTerm, env: &[Val]) -> Val {
    match t {
        TTerm::Var { level, .. } => env[*level].clone(),
        TTerm::Lam { body, .. } => Val(vec![(
            Rat::one(),
            Head::Closure { env: env.to_vec(), body: (**body).clone() },
        )]),
        TTerm::App { fun, arg, .. } => {
            let fv = eval(fun, env);
            let av = eval(arg, env);
            apply(fv, &av)
        }
        TTerm::Bot { .. } => Val(Vec::new()),
        TTerm::Sum { left, right, .. } => {
            let mut out = eval(left, env).0;
            out.extend(eval(right, env).0);
            Val(out)
        }
        TTerm::Scale { coeff, body } => {
            Val(eval(body, env).0.into_iter().map(|(c, h)| (&c * coeff, h)).collect())
        }
    }
}

/// Call-by-name application: the function's summands each receive the whole
/// argument value, so sums inside the argument are never distributed.
fn apply(fun: Val, arg: &Val) -> Val {
    let mut out = Vec::new();
    for (c, h) in fun.0 {
        match h {
            Head::Closure { env, body } => {
                let mut inner = env;
                inner.push(arg.clone());
                for (c2, h2) in eval(&body, &inner).0 {
                    out.push((&c * &c2, h2));
                }
            }
            Head::Neutral { name, mut args } => {
                args.push(arg.clone());
                out.push((c, Head::Neutral { name, args }));
            }
        }
    }
    Val(out)
}

/// An eta-long normal form at a kind: a canonically ordered multiset of
/// weighted head forms. The empty multiset is the divergent form.
/// Duplicate summands are kept apart, never merged into one coefficient.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NormalForm {
    pub kind: Kind,
    pub summands: Vec<(Rat, HeadForm)>,
}

/// One summand: binders for the full arrow spine of the kind, then a head
/// variable fully applied to normal-form arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HeadForm {
    pub binders: Vec<(String, Kind)>,
    pub head: String,
    pub args: Vec<NormalForm>,
}

impl NormalForm {
    /// The term spelled by the normal form; the divergent form becomes
    /// binders over `bot`.
    pub fn to_term(&self) -> Term {
        if self.summands.is_empty() {
            let mut body = Term::Bot;
            for (i, k) in self.kind.args.iter().enumerate().rev() {
                body = Term::Lam(format!("x{}", i + 1), k.clone(), Box::new(body));
            }
            return body;
        }
        let mut terms = self.summands.iter().map(|(c, q)| {
            let t = q.to_term();
            if c.is_one() {
                t
            } else {
                Term::Scale(c.clone(), Box::new(t))
            }
        });
        let first = terms.next().expect("non-empty");
        terms.fold(first, |acc, t| Term::Sum(Box::new(acc), Box::new(t)))
    }
}

impl HeadForm {
    pub fn to_term(&self) -> Term {
        let mut t = Term::Var(self.head.clone());
        for a in &self.args {
            t = Term::App(Box::new(t), Box::new(a.to_term()));
        }
        for (x, k) in self.binders.iter().rev() {
            t = Term::Lam(x.clone(), k.clone(), Box::new(t));
        }
        t
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

fn fresh_name(taken: impl Fn(&str) -> bool) -> String {
    (1usize..)
        .map(|i| format!("x{i}"))
        .find(|n| !taken(n))
        .expect("unbounded name stream")
}

/// Reads a value back at a kind: binders are opened for the whole arrow
/// spine, each summand is applied to the binder variables, and the resulting
/// ground heads are collected. Summands whose application diverges (the
/// empty value) contribute nothing, absorbing `... + \x.bot`.
fn reify(val: &Val, kind: &Kind, scope: &BTreeMap<String, Kind>) -> Vec<(Rat, HeadForm)> {
    let mut inner = scope.clone();
    let mut binders = Vec::new();
    for bk in &kind.args {
        let name = fresh_name(|n| inner.contains_key(n));
        inner.insert(name.clone(), bk.clone());
        binders.push((name, bk.clone()));
    }
    let mut out = Vec::new();
    for (c, h) in &val.0 {
        let mut cur = Val(vec![(Rat::one(), h.clone())]);
        for (name, _) in &binders {
            let x = Val(vec![(Rat::one(), Head::Neutral { name: name.clone(), args: Vec::new() })]);
            cur = apply(cur, &x);
        }
        for (c2, h2) in cur.0 {
            let Head::Neutral { name: head, args } = h2 else {
                unreachable!("ground values have no closures")
            };
            let head_kind = inner[&head].clone();
            debug_assert_eq!(args.len(), head_kind.args.len(), "heads are fully applied");
            let arg_forms = args
                .iter()
                .zip(&head_kind.args)
                .map(|(a, ak)| NormalForm { kind: ak.clone(), summands: reify(a, ak, &inner) })
                .collect();
            out.push((c * &c2, HeadForm { binders: binders.clone(), head, args: arg_forms }));
        }
    }
    out.sort();
    out
}

/// The unique eta-long normal form, with summands in canonical order and
/// duplicates preserved.
pub fn normalize(ctx: &Context, term: &Term) -> Result<NormalForm, TypeError> {
    let tt = annotate_term(ctx, term)?;
    let kind = tt.kind();
    let mut env = Vec::new();
    let mut scope = BTreeMap::new();
    for (name, k) in &ctx.vars {
        env.push(Val(vec![(Rat::one(), Head::Neutral { name: name.clone(), args: Vec::new() })]));
        scope.insert(name.clone(), k.clone());
    }
    let val = eval(&tt, &env);
    let summands = reify(&val, &kind, &scope);
    Ok(NormalForm { kind, summands })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LambdaError {
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("composition failed: {0}")]
    Compose(#[from] ComposeError),
    #[error("strategy error: {0}")]
    Strategy(#[from] StrategyError),
    #[error("weight error: {0}")]
    Weight(#[from] WeightError),
    #[error("head extraction failed: {0}")]
    Strip(#[from] StripError),
    #[error("kinds differ: {left} vs {right}")]
    TypeMismatch { left: Kind, right: Kind },
    #[error("equality modes disagree: semantic {semantic}, syntactic {syntactic}")]
    ModesDisagree { semantic: bool, syntactic: bool },
    #[error("readback exceeded its recursion budget of {limit}")]
    MaxDepthExceeded { limit: usize },
}

/// The weighted strategy of a term over (context product, kind arena),
/// using the default chattering bound.
pub fn denote(ctx: &Context, term: &Term) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    denote_bounded(ctx, term, DEFAULT_BOUND)
}

pub fn denote_bounded(
    ctx: &Context,
    term: &Term,
    bound: usize,
) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    let tt = annotate_term(ctx, term)?;
    let mut kinds = ctx.kinds();
    den(&mut kinds, &tt, bound)
}

/// Structural denotation: variables are projections, abstraction curries,
/// application pairs with the evaluation strategy and composes, bot is the
/// empty strategy, sum is coproduct, scaling multiplies initial weights.
fn den(
    stack: &mut Vec<Kind>,
    t: &TTerm,
    bound: usize,
) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    match t {
        TTerm::Var { level, .. } => {
            let arenas: Vec<Arena> = stack.iter().map(arena_of_kind).collect();
            let p = proj_at(&arenas, *level);
            let w = trivial_weights(&p);
            Ok((p, w))
        }
        TTerm::Lam { dom, body } => {
            stack.push(dom.clone());
            let denoted = den(stack, body, bound);
            stack.pop();
            let (tb, wb) = denoted?;
            Ok(curry_weighted(&tb, &wb, stack.len()))
        }
        TTerm::App { fun, arg, kind } => {
            let (tf, wf) = den(stack, fun, bound)?;
            let (ta, wa) = den(stack, arg, bound)?;
            let (paired, wp) = pair_many_weighted(&[(&tf, &wf), (&ta, &wa)])?;
            let e = ev(&arena_of_kind(&arg.kind()), &arena_of_kind(kind));
            let we = trivial_weights(&e);
            Ok(compose_weighted(&paired, &wp, &e, &we, bound)?)
        }
        TTerm::Bot { kind } => {
            let pair = ArenaPair::new(arena_of_kind_list(stack), arena_of_kind(kind));
            Ok((ViewStrategy::empty(pair), WeightMap::default()))
        }
        TTerm::Sum { left, right, .. } => {
            let (tl, wl) = den(stack, left, bound)?;
            let (tr, wr) = den(stack, right, bound)?;
            Ok(coproduct_weighted(&tl, &wl, &tr, &wr)?)
        }
        TTerm::Scale { coeff, body } => {
            let (tb, wb) = den(stack, body, bound)?;
            Ok((tb, scale(coeff, &wb)))
        }
    }
}

/// Direct denotation of a normal form: each summand pairs its argument
/// denotations, prepends the head's initial block, and curries its binders;
/// summands are scaled and summed.
pub fn denote_normal(
    ctx: &Context,
    nf: &NormalForm,
) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    let mut stack = ctx.vars.clone();
    den_nf(&mut stack, nf)
}

fn den_nf(
    stack: &mut Vec<(String, Kind)>,
    nf: &NormalForm,
) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    let mut acc: Option<(ViewStrategy, WeightMap)> = None;
    for (c, q) in &nf.summands {
        let (tq, wq) = den_q(stack, q)?;
        let wq = scale(c, &wq);
        acc = Some(match acc {
            None => (tq, wq),
            Some((t0, w0)) => coproduct_weighted(&t0, &w0, &tq, &wq)?,
        });
    }
    Ok(acc.unwrap_or_else(|| {
        let kinds: Vec<Kind> = stack.iter().map(|(_, k)| k.clone()).collect();
        let pair = ArenaPair::new(arena_of_kind_list(&kinds), arena_of_kind(&nf.kind));
        (ViewStrategy::empty(pair), WeightMap::default())
    }))
}

fn den_q(
    stack: &mut Vec<(String, Kind)>,
    q: &HeadForm,
) -> Result<(ViewStrategy, WeightMap), LambdaError> {
    let base_len = stack.len();
    for (x, k) in &q.binders {
        stack.push((x.clone(), k.clone()));
    }
    let result = (|| {
        let level = stack
            .iter()
            .rposition(|(n, _)| n == &q.head)
            .ok_or_else(|| TypeError::Unbound { name: q.head.clone() })?;
        let (args_t, args_w) = if q.args.is_empty() {
            let kinds: Vec<Kind> = stack.iter().map(|(_, k)| k.clone()).collect();
            let pair = ArenaPair::new(arena_of_kind_list(&kinds), Arena::empty());
            (ViewStrategy::empty(pair), WeightMap::default())
        } else {
            let parts = q
                .args
                .iter()
                .map(|a| den_nf(stack, a))
                .collect::<Result<Vec<_>, LambdaError>>()?;
            let refs: Vec<(&ViewStrategy, &WeightMap)> =
                parts.iter().map(|(t, w)| (t, w)).collect();
            pair_many_weighted(&refs)?
        };
        let (mut t, mut w) = prepend_weighted(&args_t, &args_w, (level + 1) as u32);
        for i in (0..q.binders.len()).rev() {
            let (t2, w2) = curry_weighted(&t, &w, base_len + i);
            t = t2;
            w = w2;
        }
        Ok((t, w))
    })();
    stack.truncate(base_len);
    result
}

/// Recovers a term from a weighted strategy over (context product, kind
/// arena). Initial-state components become summands; each component opens
/// binders for the arrow spine, names its head from the initial response,
/// strips the head block, and reads the argument strategies back.
pub fn readback(
    t: &ViewStrategy,
    w: &WeightMap,
    ctx: &Context,
    kind: &Kind,
) -> Result<Term, LambdaError> {
    t.validate()?;
    validate_weights(t, w)?;
    if t.pair != ArenaPair::new(ctx.arena(), arena_of_kind(kind)) {
        return Err(StrategyError::PairMismatch.into());
    }
    let limit = t.views.values().map(|d| d.states.len()).sum::<usize>() + 1;
    let mut stack = ctx.vars.clone();
    read_at(t, w, &mut stack, kind, 0, limit)
}

fn read_at(
    t: &ViewStrategy,
    w: &WeightMap,
    stack: &mut Vec<(String, Kind)>,
    kind: &Kind,
    depth: usize,
    limit: usize,
) -> Result<Term, LambdaError> {
    if depth > limit {
        return Err(LambdaError::MaxDepthExceeded { limit });
    }
    let comps = decompose_initial_weighted(t, w);
    if comps.is_empty() {
        // Divergence, eta-expanded so the term keeps the kind.
        let mut names = Vec::new();
        for k in &kind.args {
            let name =
                fresh_name(|n| stack.iter().any(|(m, _)| m == n) || names.iter().any(|(m, _): &(String, Kind)| m == n));
            names.push((name, k.clone()));
        }
        let mut body = Term::Bot;
        for (name, k) in names.into_iter().rev() {
            body = Term::Lam(name, k, Box::new(body));
        }
        return Ok(body);
    }
    let mut summands = Vec::new();
    for (_, _, c, comp, cw) in &comps {
        let body = read_component(comp, cw, stack, kind, depth, limit)?;
        summands.push(if c.is_one() {
            body
        } else {
            Term::Scale(c.clone(), Box::new(body))
        });
    }
    let mut terms = summands.into_iter();
    let first = terms.next().expect("non-empty");
    Ok(terms.fold(first, |acc, s| Term::Sum(Box::new(acc), Box::new(s))))
}

/// One initial-state component: open binders down to ground, read the head
/// variable off the unique initial response, strip its block, split the
/// paired argument strategies, and recurse.
fn read_component(
    comp: &ViewStrategy,
    cw: &WeightMap,
    stack: &mut Vec<(String, Kind)>,
    kind: &Kind,
    depth: usize,
    limit: usize,
) -> Result<Term, LambdaError> {
    let base_len = stack.len();
    let mut binders = Vec::new();
    let mut t = comp.clone();
    let mut w = cw.clone();
    for dom in &kind.args {
        let name = fresh_name(|n| stack.iter().any(|(m, _)| m == n));
        let (t2, w2) = uncurry_weighted(&t, &w, &arena_of_kind(dom));
        stack.push((name.clone(), dom.clone()));
        binders.push((name, dom.clone()));
        t = t2;
        w = w2;
    }
    let result = (|| -> Result<Term, LambdaError> {
        let init = t
            .views
            .keys()
            .find(|v| v.len() == 2)
            .expect("components keep their initial view")
            .clone();
        let head_root = init.move_at(2).mv.0[0] as usize;
        let (head_name, head_kind) = stack[head_root - 1].clone();
        let (stripped, sw) = strip_weighted(&t, &w)?;
        let roots = vec![1usize; head_kind.args.len()];
        let parts = unpair_weighted(&stripped, &sw, &roots);
        let mut tm = Term::Var(head_name);
        for ((at, aw), ak) in parts.iter().zip(&head_kind.args) {
            let arg = read_at(at, aw, stack, ak, depth + 1, limit)?;
            tm = Term::App(Box::new(tm), Box::new(arg));
        }
        Ok(tm)
    })();
    stack.truncate(base_len);
    let mut out = result?;
    for (name, k) in binders.into_iter().rev() {
        out = Term::Lam(name, k, Box::new(out));
    }
    Ok(out)
}

/// How `equal` decides: by strategy isomorphism, by normal forms, or both
/// with any disagreement reported as an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqMode {
    Semantic,
    Syntactic,
    Both,
}

pub fn equal(ctx: &Context, m: &Term, n: &Term, mode: EqMode) -> Result<bool, LambdaError> {
    equal_bounded(ctx, m, n, mode, DEFAULT_BOUND)
}

pub fn equal_bounded(
    ctx: &Context,
    m: &Term,
    n: &Term,
    mode: EqMode,
    bound: usize,
) -> Result<bool, LambdaError> {
    let km = typecheck(ctx, m)?;
    let kn = typecheck(ctx, n)?;
    if km != kn {
        return Err(LambdaError::TypeMismatch { left: km, right: kn });
    }
    let semantic = |bound: usize| -> Result<bool, LambdaError> {
        let (tm, wm) = denote_bounded(ctx, m, bound)?;
        let (tn, wn) = denote_bounded(ctx, n, bound)?;
        Ok(iso_weighted(&tm, &wm, &tn, &wn)?.is_some())
    };
    let syntactic = || -> Result<bool, LambdaError> { Ok(normalize(ctx, m)? == normalize(ctx, n)?) };
    match mode {
        EqMode::Semantic => semantic(bound),
        EqMode::Syntactic => syntactic(),
        EqMode::Both => {
            let s = semantic(bound)?;
            let y = syntactic()?;
            if s != y {
                return Err(LambdaError::ModesDisagree { semantic: s, syntactic: y });
            }
            Ok(s)
        }
    }
}
