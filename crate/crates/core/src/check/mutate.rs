//! Single-point faults injected into compiled descriptions.

use std::collections::HashSet;

use crate::lgdl::{Term, Value};
use crate::num::Decimal;

use super::report::Criterion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Hands the turn to the wrong player after the first move into a decision state.
    ChangeNextPlayer,
    /// Drops the last move of the first decision clause.
    DeleteMove,
    /// Adds one to the first weight of the first chance clause.
    PerturbWeight,
    /// Adds one to the first payoff.
    PerturbPayoff,
    /// Removes every `set Hidden` effect from the moves.
    StripRehiding,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::ChangeNextPlayer,
        Mutation::DeleteMove,
        Mutation::PerturbWeight,
        Mutation::PerturbPayoff,
        Mutation::StripRehiding,
    ];

    /// The criterion this fault violates.
    pub fn target(self) -> Criterion {
        match self {
            Mutation::ChangeNextPlayer => Criterion::Mover,
            Mutation::DeleteMove => Criterion::MoveCount,
            Mutation::PerturbWeight => Criterion::ChanceDistribution,
            Mutation::PerturbPayoff => Criterion::Payoffs,
            Mutation::StripRehiding => Criterion::Indistinguishability,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mutation::ChangeNextPlayer => "change-next-player",
            Mutation::DeleteMove => "delete-move",
            Mutation::PerturbWeight => "perturb-weight",
            Mutation::PerturbPayoff => "perturb-payoff",
            Mutation::StripRehiding => "strip-rehiding",
        }
    }
}

fn number(v: &Value) -> Option<usize> {
    match v {
        Value::Number(d) => d.to_u64().map(|x| x as usize),
        _ => None,
    }
}


/// Vertex tested by an `(= (where ..) v)` condition.
fn tested_vertex(cond: &Term) -> Option<usize> {
    (cond.head == "=").then(|| cond.positional().nth(1).and_then(number)).flatten()
}

/// Vertices whose play clause is a deterministic `or`.
fn decision_vertices(game: &Term) -> HashSet<usize> {
    let mut out = HashSet::new();
    game.walk(|t| {
        if t.head != "if" {
            return;
        }
        let mut args = t.positional();
        let (Some(Value::Term(cond)), Some(Value::Term(body))) = (args.next(), args.next()) else {
            return;
        };
        if body.head == "or" {
            out.extend(tested_vertex(cond));
        }
    });
    out
}

fn players(game: &Term) -> Option<usize> {
    let mut k = None;
    game.walk(|t| {
        if t.head == "players" && k.is_none() {
            k = t.positional().next().and_then(number);
        }
    });
    k
}

/// Effects of a `move` term: the `and` array, or the single `then` effect.
fn effects_mut(mv: &mut Term) -> Vec<&mut Term> {
    let mut out = Vec::new();
    for a in &mut mv.args {
        let Value::Term(then) = &mut a.value else { continue };
        if then.head != "then" {
            continue;
        }
        for b in &mut then.args {
            let Value::Term(inner) = &mut b.value else { continue };
            if inner.head != "and" {
                out.push(inner);
                continue;
            }
            for c in &mut inner.args {
                match &mut c.value {
                    Value::Array(items) => out.extend(items.iter_mut().filter_map(|v| match v {
                        Value::Term(t) => Some(t),
                        _ => None,
                    })),
                    Value::Term(t) => out.push(t),
                    _ => {}
                }
            }
        }
    }
    out
}

fn move_target(effects: &[&mut Term]) -> Option<usize> {
    let ft = effects.iter().find(|e| e.head == "fromTo")?;
    let to = ft.positional().filter_map(Value::as_term).find(|t| t.head == "to")?;
    to.positional().next().and_then(number)
}

fn bump(d: &Decimal) -> Decimal {
    Decimal::from_rational(&(d.to_rational() + Decimal::from_int(1).to_rational())).expect("sum of decimals is a decimal")
}

/// Applies `m` to a compiled `game` term, or returns `None` if the
/// description has no site for it.
pub fn mutate(game: &Term, m: Mutation) -> Option<Term> {
    let mut out = game.clone();
    let mut done = false;
    match m {
        Mutation::ChangeNextPlayer => {
            let k = players(game).filter(|&k| k >= 2)?;
            let decisions = decision_vertices(game);
            out.walk_mut(&mut |t| {
                if done || t.head != "move" {
                    return;
                }
                let mut effects = effects_mut(t);
                if !move_target(&effects).is_some_and(|v| decisions.contains(&v)) {
                    return;
                }
                for e in effects.iter_mut().filter(|e| e.head == "set") {
                    if !matches!(e.positional().next(), Some(Value::Ident(s)) if s == "NextPlayer") {
                        continue;
                    }
                    for a in &mut e.args {
                        let Value::Term(p) = &mut a.value else { continue };
                        if p.head != "player" {
                            continue;
                        }
                        if let Some(arg) = p.args.first_mut() {
                            if let Some(q) = number(&arg.value) {
                                arg.value = Value::int(q % k + 1);
                                done = true;
                            }
                        }
                    }
                }
            });
        }
        Mutation::DeleteMove => out.walk_mut(&mut |t| {
            if done || t.head != "if" {
                return;
            }
            let Some(Value::Term(body)) = t.args.get_mut(1).map(|a| &mut a.value) else {
                return;
            };
            if body.head != "or" {
                return;
            }
            if let Some(Value::Array(moves)) = body.args.first_mut().map(|a| &mut a.value) {
                done = moves.pop().is_some();
            }
        }),
        Mutation::PerturbWeight => out.walk_mut(&mut |t| {
            if done || t.head != "random" {
                return;
            }
            if let Some(Value::Array(weights)) = t.args.first_mut().map(|a| &mut a.value) {
                if weights.len() >= 2 {
                    if let Some(Value::Number(w)) = weights.first_mut() {
                        *w = bump(w);
                        done = true;
                    }
                }
            }
        }),
        Mutation::PerturbPayoff => out.walk_mut(&mut |t| {
            if done || t.head != "payoff" {
                return;
            }
            if let Some(Value::Number(u)) = t.args.get_mut(1).map(|a| &mut a.value) {
                *u = bump(u);
                done = true;
            }
        }),
        Mutation::StripRehiding => out.walk_mut(&mut |t| {
            if t.head != "move" {
                return;
            }
            for a in &mut t.args {
                let Value::Term(then) = &mut a.value else { continue };
                if then.head != "then" {
                    continue;
                }
                for b in &mut then.args {
                    let Value::Term(and) = &mut b.value else { continue };
                    for c in &mut and.args {
                        let Value::Array(items) = &mut c.value else { continue };
                        let before = items.len();
                        items.retain(|v| {
                            !matches!(v, Value::Term(e) if e.head == "set"
                                && matches!(e.positional().next(), Some(Value::Ident(s)) if s == "Hidden"))
                        });
                        done |= items.len() != before;
                    }
                }
            }
        }),
    }
    done.then_some(out)
}
