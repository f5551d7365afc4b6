//! Game-semantics engine: innocent strategies represented as finite sheaves
//! on P-views, composed through interaction sequences, and used to decide
//! semantic equality of simply typed lambda terms with divergence,
//! nondeterministic sum, and rational weights.

pub mod arena;
pub mod format;
pub mod interaction;
pub mod kind;
pub mod lambda;
pub mod play;
pub mod strategy;

pub use arena::{
    arena_of_kind, exponential, kinds_of_arena, product, product_many, Arena, ArenaPair, Move,
    Owner, PairMove, Side, Tree,
};
pub use format::{read_strategy, write_strategy, FormatError, StrategyFile};
pub use interaction::{
    basic_blocks, compose, compose_weighted, copycat, ev, lift, proj1, proj2, proj_at,
    project_ab, project_ac, project_bc, switch_step, validate_interaction, ArenaTriple, Comp,
    ComposeError, InteractionError, InteractionSeq, SwitchState, TripleMove,
};
pub use kind::{parse_kind, Kind, KindParseError};
pub use lambda::{
    denote, denote_bounded, denote_normal, equal, equal_bounded, normalize, parse_context,
    parse_term, readback, typecheck, Context, EqMode, HeadForm, LambdaError, NormalForm, Term,
    TermParseError, TypeError, DEFAULT_BOUND,
};
pub use play::{
    commute, compose_morphisms, covering_families, decompose_morphism, enumerate_morphisms,
    is_covering, is_p_view, morphisms_into, p_view, pullback, standalone_view, theta, theta_inv,
    validate_morphism, validate_play, view_o_extensions, view_p_extensions, Play, PlayError,
    PlayMorphism,
};
pub use strategy::{
    check_sheaf_condition, coproduct, coproduct_weighted, curry, curry_weighted,
    decompose_initial, decompose_initial_weighted, is_deterministic, is_probabilistic, iso,
    iso_weighted, pair, pair_many, pair_many_weighted, prepend, prepend_initial_block,
    prepend_view, prepend_weighted, restrict_annotation, scale, strip, strip_view, strip_weighted,
    support_plays, verify_extension_sheaf, SheafViolation,
    transport_weights, trivial_weights, uncurry, uncurry_weighted, unpair, unpair_weighted,
    validate_weights, weight_of_play, Annotation, Rat, SheafCheckError, StrategyError,
    StrategyIso, StripError, ViewData, ViewStrategy, WeightError, WeightMap, PREPEND_STATE,
};
