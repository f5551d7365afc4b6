//! Seeded deterministic generators shared by the integration suites.
#![allow(dead_code)]

use gamesem::{
    view_o_extensions, view_p_extensions, ArenaPair, Context, Kind, PairMove, Play, Rat, Term,
    ViewStrategy, WeightMap,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
    rat(rng.gen_range(1..=4), rng.gen_range(1..=4))
}

/// A random kind of nesting depth at most `depth`.
pub fn random_kind(rng: &mut ChaCha8Rng, depth: usize) -> Kind {
    if depth == 0 || rng.gen_bool(0.45) {
        return Kind::ground();
    }
    let n = rng.gen_range(1..=2);
    Kind { args: (0..n).map(|_| random_kind(rng, depth - 1)).collect() }
}

/// A random view strategy over `pair` with positive rational weights: grows
/// a prefix-closed tree of at most `max_views` views, each with 1..=
/// `max_states` states wired to random parent states.
pub fn random_strategy(
    rng: &mut ChaCha8Rng,
    pair: &ArenaPair,
    max_views: usize,
    max_states: usize,
) -> (ViewStrategy, WeightMap) {
    let mut t = ViewStrategy::empty(pair.clone());
    let mut w = WeightMap::default();
    let mut frontier: Vec<Play> = vec![Play::empty()];
    let mut counter = 0usize;
    let mut attempts = 0usize;
    // The attempt cap keeps the loop total when the reachable view tree is
    // smaller than max_views (tiny arenas exhaust quickly).
    while t.views.len() < max_views && !frontier.is_empty() && attempts < 20 * max_views {
        attempts += 1;
        let at = rng.gen_range(0..frontier.len());
        let base = frontier.swap_remove(at);
        let keep_base = rng.gen_bool(0.5);
        let os = view_o_extensions(pair, &base);
        if os.is_empty() {
            continue;
        }
        let (om, oj) = os[rng.gen_range(0..os.len())].clone();
        let mut v = base.clone();
        v.push(om, oj);
        let ps = view_p_extensions(pair, &v);
        if ps.is_empty() {
            continue;
        }
        let (pm, pj) = ps[rng.gen_range(0..ps.len())].clone();
        v.push(pm, pj);
        if t.views.contains_key(&v) {
            if keep_base {
                frontier.push(base);
            }
            continue;
        }
        let states: Vec<String> = (0..rng.gen_range(1..=max_states))
            .map(|_| {
                counter += 1;
                format!("s{counter}")
            })
            .collect();
        let parent: Vec<(String, String)> = if base.is_empty() {
            Vec::new()
        } else {
            let pool: Vec<&String> = t.views[&base].states.iter().collect();
            states
                .iter()
                .map(|s| (s.clone(), pool[rng.gen_range(0..pool.len())].clone()))
                .collect()
        };
        t.insert_view(v.clone(), states.clone(), parent);
        for s in &states {
            w.delta.insert((v.clone(), s.clone()), random_rat(rng));
        }
        frontier.push(v);
        if keep_base {
            frontier.push(base);
        }
    }
    t.validate().expect("generated strategies are valid");
    (t, w)
}

/// A random single-state-per-view strategy in which every (view, O-move)
/// pair has at most one response, so the strategy is deterministic.
pub fn random_deterministic_strategy(
    rng: &mut ChaCha8Rng,
    pair: &ArenaPair,
    max_views: usize,
) -> ViewStrategy {
    let mut t = ViewStrategy::empty(pair.clone());
    let mut frontier: Vec<Play> = vec![Play::empty()];
    let mut used: BTreeSet<(Play, PairMove)> = BTreeSet::new();
    let mut counter = 0usize;
    let mut attempts = 0usize;
    while t.views.len() < max_views && !frontier.is_empty() && attempts < 20 * max_views {
        attempts += 1;
        let at = rng.gen_range(0..frontier.len());
        let base = frontier.swap_remove(at);
        let os: Vec<(PairMove, usize)> = view_o_extensions(pair, &base)
            .into_iter()
            .filter(|(m, _)| !used.contains(&(base.clone(), m.clone())))
            .collect();
        if os.is_empty() {
            continue;
        }
        let (om, oj) = os[rng.gen_range(0..os.len())].clone();
        let mut v = base.clone();
        v.push(om.clone(), oj);
        let ps = view_p_extensions(pair, &v);
        if ps.is_empty() {
            continue;
        }
        let (pm, pj) = ps[rng.gen_range(0..ps.len())].clone();
        v.push(pm, pj);
        used.insert((base.clone(), om));
        counter += 1;
        let state = format!("s{counter}");
        let parent: Vec<(String, String)> = if base.is_empty() {
            Vec::new()
        } else {
            let p = t.views[&base].states.iter().next().expect("states").clone();
            vec![(state.clone(), p)]
        };
        t.insert_view(v.clone(), [state], parent);
        frontier.push(v);
        if os.len() > 1 {
            frontier.push(base);
        }
    }
    t.validate().expect("generated strategies are valid");
    t
}

/// A random well-kinded term of roughly `fuel` syntax nodes: arrows are
/// opened eta-long, ground bodies mix variables, head applications, sums,
/// scalings, and divergence.
pub fn random_term(rng: &mut ChaCha8Rng, ctx: &Context, kind: &Kind, fuel: usize) -> Term {
    let mut fuel = fuel;
    let mut fresh = 0usize;
    term_at(rng, &ctx.vars, kind, &mut fuel, &mut fresh)
}

fn term_at(
    rng: &mut ChaCha8Rng,
    scope: &[(String, Kind)],
    kind: &Kind,
    fuel: &mut usize,
    fresh: &mut usize,
) -> Term {
    if kind.args.is_empty() {
        return ground_term(rng, scope, fuel, fresh);
    }
    let mut inner = scope.to_vec();
    let mut binders = Vec::new();
    for a in &kind.args {
        *fresh += 1;
        let name = format!("b{fresh}");
        inner.push((name.clone(), a.clone()));
        binders.push((name, a.clone()));
    }
    let body = ground_term(rng, &inner, fuel, fresh);
    binders
        .into_iter()
        .rev()
        .fold(body, |acc, (n, k)| Term::Lam(n, k, Box::new(acc)))
}

fn ground_term(
    rng: &mut ChaCha8Rng,
    scope: &[(String, Kind)],
    fuel: &mut usize,
    fresh: &mut usize,
) -> Term {
    *fuel = fuel.saturating_sub(1);
    let grounds: Vec<&(String, Kind)> = scope.iter().filter(|(_, k)| k.args.is_empty()).collect();
    let ground_var = |rng: &mut ChaCha8Rng| {
        Term::Var(grounds[rng.gen_range(0..grounds.len())].0.clone())
    };
    if *fuel == 0 {
        return if grounds.is_empty() || rng.gen_bool(0.3) {
            Term::Bot
        } else {
            ground_var(rng)
        };
    }
    match rng.gen_range(0..10u32) {
        0 => Term::Bot,
        1..=3 if !grounds.is_empty() => ground_var(rng),
        4..=6 if !scope.is_empty() => {
            let (name, k) = scope[rng.gen_range(0..scope.len())].clone();
            let mut t = Term::Var(name);
            for a in &k.args {
                let arg = term_at(rng, scope, a, fuel, fresh);
                t = Term::App(Box::new(t), Box::new(arg));
            }
            t
        }
        7 | 8 => {
            let l = ground_term(rng, scope, fuel, fresh);
            let r = ground_term(rng, scope, fuel, fresh);
            Term::Sum(Box::new(l), Box::new(r))
        }
        9 => Term::Scale(random_rat(rng), Box::new(ground_term(rng, scope, fuel, fresh))),
        _ => Term::Bot,
    }
}

/// Capture-naive substitution of `n` for the free variable `x`. Callers
/// guarantee the binder names in `m` avoid `x` and the free variables of
/// `n` (the generators draw binders from a reserved namespace).
pub fn subst(m: &Term, x: &str, n: &Term) -> Term {
    match m {
        Term::Var(y) if y == x => n.clone(),
        Term::Var(_) | Term::Bot => m.clone(),
        Term::Lam(y, k, b) if y != x => {
            Term::Lam(y.clone(), k.clone(), Box::new(subst(b, x, n)))
        }
        Term::Lam(_, _, _) => m.clone(),
        Term::App(f, a) => Term::App(Box::new(subst(f, x, n)), Box::new(subst(a, x, n))),
        Term::Sum(l, r) => Term::Sum(Box::new(subst(l, x, n)), Box::new(subst(r, x, n))),
        Term::Scale(c, b) => Term::Scale(c.clone(), Box::new(subst(b, x, n))),
    }
}
