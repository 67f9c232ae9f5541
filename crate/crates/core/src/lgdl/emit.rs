//! Compiles an extensive-form game into a description that embeds one copy
//! of the game tree per player plus one copy tracking the true state.
//!
//! Vertex `p·|S| + i` of the board stands for state `i` in the copy owned by
//! player `p` (nature owns copy 0). The neutral marker walks copy 0 along the
//! true trajectory; player `p`'s markers cover its current information set in
//! copy `p`, and every copy is hidden from everyone except its owner.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::term::{render, Term, Value};
use crate::efg::{
    first_mover_swap, relabel_first_mover, validate_game, EfgNode, ExtensiveFormGame, PlayerId,
    StateId, ValidationReport, MAX_PLAYERS,
};
use crate::num::Rational;

/// Upper bound on `(k+1)·|S|` board vertices.
pub const MAX_VERTICES: usize = 20_000_000;
/// Upper bound on emitted move effects, `E·(2k + k(k−1) + 3)`.
pub const MAX_EFFECTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexIndex(pub usize);

impl fmt::Display for VertexIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("state {state} is out of range for {num_states} states")]
    StateOutOfRange { state: usize, num_states: usize },
    #[error("player {player} exceeds the supported maximum of {MAX_PLAYERS}")]
    PlayerOutOfRange { player: u32 },
    #[error("vertex index overflows")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightError {
    #[error("no probabilities given")]
    Empty,
    #[error("probability {index} is not positive")]
    NonPositive { index: usize },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: String },
    #[error("weights do not fit in 64 bits")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("invalid game: {}", .0.summary())]
    Invalid(ValidationReport),
    #[error("player {player} moves at the root; relabel so that player 1 moves first")]
    FirstMover { player: u32 },
    #[error("player {player}: the root shares an information set with states {others:?}")]
    RootNotSingleton { player: u32, others: Vec<usize> },
    #[error("state {from} has no branch {branch} leading to state {to}")]
    NoSuchEdge { from: usize, branch: usize, to: usize },
    #[error("state {state}: {source}")]
    Weights { state: usize, source: WeightError },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("description too large: {what} is {value}, limit {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },
}

/// A compiled game: a `game` term and its canonical text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LudiiDescription {
    pub name: String,
    pub root: Term,
}

impl LudiiDescription {
    pub fn text(&self) -> String {
        render(&self.root)
    }
}

impl fmt::Display for LudiiDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

pub fn vertex_index(p: PlayerId, i: StateId, num_states: usize) -> Result<VertexIndex, IndexError> {
    if i.0 >= num_states {
        return Err(IndexError::StateOutOfRange {
            state: i.0,
            num_states,
        });
    }
    if p.index() > MAX_PLAYERS {
        return Err(IndexError::PlayerOutOfRange { player: p.0 });
    }
    p.index()
        .checked_mul(num_states)
        .and_then(|base| base.checked_add(i.0))
        .map(VertexIndex)
        .ok_or(IndexError::Overflow)
}

/// Smallest positive integers proportional to `probs`.
pub fn probabilities_to_weights(probs: &[Rational]) -> Result<Vec<u64>, WeightError> {
    if probs.is_empty() {
        return Err(WeightError::Empty);
    }
    if let Some(index) = probs.iter().position(|p| !p.is_positive()) {
        return Err(WeightError::NonPositive { index });
    }
    let sum: Rational = probs.iter().sum();
    if !sum.is_one() {
        return Err(WeightError::NotNormalized {
            sum: crate::num::format_rational(&sum),
        });
    }
    let lcm = probs
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let scaled: Vec<_> = probs
        .iter()
        .map(|p| (p * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = scaled
        .iter()
        .fold(num_bigint::BigInt::zero(), |acc, w| acc.gcd(w));
    scaled
        .iter()
        .map(|w| (w / &gcd).to_u64().ok_or(WeightError::Overflow))
        .collect()
}

fn int(v: impl Into<usize>) -> Value {
    Value::int(v.into())
}

fn vertex(p: PlayerId, i: StateId, n: usize) -> Value {
    // Callers pass in-range ids; compile() bounds the total vertex count.
    Value::int(p.index() * n + i.0)
}

fn subgraph_name(p: usize) -> String {
    format!("Subgraph_{p}")
}

fn infoset_region_name(state: StateId, p: PlayerId) -> String {
    format!("InformationSet_{}_{}", state.0, p.0)
}

fn player_term(p: usize) -> Term {
    Term::new("player").arg(int(p))
}

fn sites_named(region: String) -> Term {
    Term::new("sites").arg(Value::str(region))
}

/// `(= (where "Marker" Neutral) v)`.
pub fn neutral_marker_at(v: usize) -> Term {
    Term::new("=")
        .arg(
            Term::new("where")
                .arg(Value::str("Marker"))
                .arg(Value::ident("Neutral")),
        )
        .arg(int(v))
}

/// Subgraph 0 hidden from all; subgraph `p` hidden from every `q ≠ p`.
pub fn hiding_block(k: usize) -> Vec<Term> {
    let mut out = Vec::with_capacity(1 + k * k.saturating_sub(1));
    for p in 0..=k {
        let hide = |to: Value| {
            Term::new("set")
                .arg(Value::ident("Hidden"))
                .arg(sites_named(subgraph_name(p)))
                .named("to", to)
        };
        if p == 0 {
            out.push(hide(Value::ident("All")));
        } else {
            out.extend((1..=k).filter(|&q| q != p).map(|q| hide(player_term(q).into())));
        }
    }
    out
}

fn region(name: String, members: impl IntoIterator<Item = usize>) -> Term {
    Term::new("regions")
        .arg(Value::str(name))
        .arg(Value::Array(members.into_iter().map(Value::int).collect()))
}

pub fn emit_equipment(g: &ExtensiveFormGame) -> Term {
    let n = g.num_states();
    let k = g.num_players();
    let vertices = (0..=k)
        .flat_map(|p| (0..n).map(move |i| Value::Array(vec![Value::int(i), Value::int(p)])))
        .collect();
    let tree_edges: Vec<(usize, usize)> = g
        .states()
        .flat_map(|s| g.node(s).children().into_iter().map(move |c| (s.0, c.0)))
        .collect();
    let edges = (0..=k)
        .flat_map(|p| {
            tree_edges
                .iter()
                .map(move |&(a, b)| Value::Array(vec![Value::int(p * n + a), Value::int(p * n + b)]))
        })
        .collect();
    let board = Term::new("board")
        .arg(
            Term::new("graph")
                .named("vertices", Value::Array(vertices))
                .named("edges", Value::Array(edges)),
        )
        .named("use", Value::ident("Vertex"));

    let mut items: Vec<Value> = vec![
        board.into(),
        Term::new("piece").arg(Value::str("Marker")).arg(Value::ident("Neutral")).into(),
        Term::new("piece").arg(Value::str("Marker")).arg(Value::ident("Each")).into(),
    ];
    items.extend((0..=k).map(|p| region(subgraph_name(p), p * n..(p + 1) * n).into()));
    for s in g.states() {
        for p in g.regular_players() {
            let members = g.infoset_members(p, s).iter().map(|&j| p.index() * n + j.0);
            items.push(region(infoset_region_name(s, p), members).into());
        }
    }
    Term::new("equipment").arg(Value::Array(items))
}

pub fn emit_start_rules(g: &ExtensiveFormGame) -> Term {
    let n = g.num_states();
    let k = g.num_players();
    let mut items: Vec<Value> = (0..=k)
        .map(|p| {
            Term::new("place")
                .arg(Value::str(format!("Marker{p}")))
                .arg(int(p * n))
                .into()
        })
        .collect();
    items.extend(hiding_block(k).into_iter().map(Value::from));
    Term::new("start").arg(Value::Array(items))
}

/// The move taking the `branch`-th edge of state `i`, which leads to `j`.
pub fn emit_move_rule(
    g: &ExtensiveFormGame,
    i: StateId,
    branch: usize,
    j: StateId,
) -> Result<Term, CompileError> {
    let n = g.num_states();
    let k = g.num_players();
    let no_edge = CompileError::NoSuchEdge {
        from: i.0,
        branch,
        to: j.0,
    };
    if i.0 >= n || g.node(i).children().get(branch) != Some(&j) {
        return Err(no_edge);
    }
    let mut effects: Vec<Value> = Vec::with_capacity(2 * k + k * k + 3);
    effects.push(
        Term::new("fromTo")
            .arg(Term::new("from").arg(vertex(PlayerId::NATURE, i, n)))
            .arg(Term::new("to").arg(vertex(PlayerId::NATURE, j, n)))
            .into(),
    );
    for p in g.regular_players() {
        effects.push(
            Term::new("remove")
                .arg(
                    Term::new("sites")
                        .arg(Value::ident("Occupied"))
                        .named("by", Value::ident(format!("P{}", p.0))),
                )
                .into(),
        );
    }
    for p in g.regular_players() {
        effects.push(
            Term::new("add")
                .arg(Term::new("piece").arg(int(p.index())))
                .arg(Term::new("to").arg(sites_named(infoset_region_name(j, p))))
                .into(),
        );
    }
    effects.extend(hiding_block(k).into_iter().map(Value::from));
    let next = match g.node(j) {
        EfgNode::Decision { mover, .. } => mover.index(),
        _ => 1,
    };
    effects.push(
        Term::new("set")
            .arg(Value::ident("NextPlayer"))
            .arg(player_term(next))
            .into(),
    );
    Ok(Term::new("move")
        .arg(Value::ident("Select"))
        .arg(Term::new("from").arg(int(branch)))
        .arg(Term::new("then").arg(Term::new("and").arg(Value::Array(effects)))))
}

fn clause_body(g: &ExtensiveFormGame, s: StateId) -> Result<Term, CompileError> {
    let children = g.node(s).children();
    let moves = children
        .iter()
        .enumerate()
        .map(|(b, &c)| emit_move_rule(g, s, b, c).map(Value::from))
        .collect::<Result<Vec<_>, _>>()?;
    match g.node(s) {
        EfgNode::Chance { branches } => {
            let probs: Vec<Rational> = branches.iter().map(|b| b.probability.clone()).collect();
            let weights = probabilities_to_weights(&probs)
                .map_err(|source| CompileError::Weights { state: s.0, source })?;
            Ok(Term::new("random")
                .arg(Value::Array(weights.into_iter().map(|w| Value::Number(w.into())).collect()))
                .arg(Value::Array(moves)))
        }
        _ => Ok(Term::new("or").arg(Value::Array(moves))),
    }
}

/// Right-nested `(if C A B)` chain over inner states in ascending order.
pub fn emit_play_rules(g: &ExtensiveFormGame) -> Result<Term, CompileError> {
    let n = g.num_states();
    let inner: Vec<StateId> = g.inner_states().collect();
    let mut chain = Term::new("or").arg(Value::Array(Vec::new()));
    // Built from the innermost clause outwards.
    for &s in inner.iter().rev() {
        chain = Term::new("if")
            .arg(neutral_marker_at(s.0 % n))
            .arg(clause_body(g, s)?)
            .arg(chain);
    }
    Ok(Term::new("play").arg(chain))
}

pub fn emit_end_rules(g: &ExtensiveFormGame) -> Term {
    let clauses = g
        .terminal_states()
        .map(|t| {
            let payoffs = g
                .node(t)
                .payoffs()
                .unwrap_or_default()
                .iter()
                .enumerate()
                .map(|(p, u)| {
                    Term::new("payoff")
                        .arg(Value::ident(format!("P{}", p + 1)))
                        .arg(Value::Number(u.clone()))
                        .into()
                })
                .collect();
            Term::new("if")
                .arg(neutral_marker_at(t.0))
                .arg(Term::new("payoffs").arg(Value::Array(payoffs)))
                .into()
        })
        .collect();
    Term::new("end").arg(Value::Array(clauses))
}

/// Alphanumeric characters of `name`, or `Game` if none remain.
pub fn sanitize_name(name: &str) -> String {
    let s: String = name.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    if s.is_empty() {
        "Game".to_string()
    } else {
        s
    }
}

/// Checks the preconditions of [`compile`].
pub fn check_compilable(g: &ExtensiveFormGame) -> Result<(), CompileError> {
    let report = validate_game(g);
    if !report.is_valid() {
        return Err(CompileError::Invalid(report));
    }
    if let Some(p) = first_mover_swap(g) {
        return Err(CompileError::FirstMover { player: p.0 });
    }
    for p in g.regular_players() {
        let members = g.infoset_members(p, StateId::ROOT);
        if members.len() > 1 {
            return Err(CompileError::RootNotSingleton {
                player: p.0,
                others: members.iter().filter(|s| s.0 != 0).map(|s| s.0).collect(),
            });
        }
    }
    let k = g.num_players();
    let vertices = (k + 1).saturating_mul(g.num_states());
    if vertices > MAX_VERTICES {
        return Err(CompileError::TooLarge {
            what: "vertex count",
            value: vertices,
            limit: MAX_VERTICES,
        });
    }
    let effects = g.num_edges().saturating_mul(2 * k + k * k.saturating_sub(1) + 3);
    if effects > MAX_EFFECTS {
        return Err(CompileError::TooLarge {
            what: "move effect count",
            value: effects,
            limit: MAX_EFFECTS,
        });
    }
    Ok(())
}

pub fn compile(g: &ExtensiveFormGame, name: &str) -> Result<LudiiDescription, CompileError> {
    check_compilable(g)?;
    let name = sanitize_name(name);
    let rules = Term::new("rules")
        .arg(emit_start_rules(g))
        .arg(emit_play_rules(g)?)
        .arg(emit_end_rules(g));
    let root = Term::new("game")
        .arg(Value::str(name.clone()))
        .arg(Term::new("players").arg(int(g.num_players())))
        .arg(emit_equipment(g))
        .arg(rules);
    Ok(LudiiDescription { name, root })
}

/// Applies the label swap needed for player 1 to move first, returning the
/// game together with a note for each transform applied.
pub fn prepare(g: &ExtensiveFormGame) -> (ExtensiveFormGame, Vec<String>) {
    match first_mover_swap(g) {
        Some(p) => (
            relabel_first_mover(g),
            vec![format!("relabel: swapped players 1 and {}", p.0)],
        ),
        None => (g.clone(), Vec::new()),
    }
}
