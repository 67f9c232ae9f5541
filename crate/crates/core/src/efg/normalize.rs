//! Transforms that establish the compiler's preconditions: a single root
//! known to every player, and player 1 moving first at a decision root.

use num_traits::{One, Signed, Zero};

use super::{
    ChanceBranch, EfgNode, ExtensiveFormGame, InformationPartition, PlayerId, PlayerPartition, StateId,
};
use crate::num::{format_rational, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("no initial states given")]
    Empty,
    #[error("initial state probabilities sum to {} ≠ 1", format_rational(.0))]
    ProbabilitySum(Rational),
    #[error("initial state {index} has non-positive probability {}", format_rational(.probability))]
    NonPositive { index: usize, probability: Rational },
    #[error("fragment {index} has {found} players, expected {expected}")]
    PlayerMismatch { index: usize, expected: usize, found: usize },
}

/// Combines several possible initial games into one game whose root is a
/// chance state selecting among them.
///
/// Fragment `f`'s states keep their relative order and are shifted past the
/// new root and all earlier fragments. A single fragment with probability 1
/// is returned unchanged.
pub fn normalize_initial_states(
    fragments: Vec<(ExtensiveFormGame, Rational)>,
) -> Result<ExtensiveFormGame, NormalizeError> {
    let first = fragments.first().ok_or(NormalizeError::Empty)?;
    let players = first.0.num_players();
    let mut sum = Rational::zero();
    for (index, (game, prob)) in fragments.iter().enumerate() {
        if !prob.is_positive() {
            return Err(NormalizeError::NonPositive {
                index,
                probability: prob.clone(),
            });
        }
        if game.num_players() != players {
            return Err(NormalizeError::PlayerMismatch {
                index,
                expected: players,
                found: game.num_players(),
            });
        }
        sum += prob;
    }
    if !sum.is_one() {
        return Err(NormalizeError::ProbabilitySum(sum));
    }
    if fragments.len() == 1 {
        return Ok(fragments.into_iter().next().unwrap().0);
    }

    let total: usize = 1 + fragments.iter().map(|(g, _)| g.num_states()).sum::<usize>();
    let mut nodes = Vec::with_capacity(total);
    let mut groups: Vec<Vec<Vec<StateId>>> = vec![Vec::new(); players];
    let mut root_branches = Vec::with_capacity(fragments.len());
    nodes.push(EfgNode::Terminal { payoffs: Vec::new() }); // replaced below
    for (game, prob) in fragments {
        let offset = nodes.len();
        let shift = move |s: StateId| StateId(s.0 + offset);
        root_branches.push(ChanceBranch {
            probability: prob,
            child: StateId(offset),
        });
        let (_, frag_nodes, partition) = game.into_parts();
        for (p, part) in partition.iter() {
            groups[p.index() - 1].extend(part.remapped_groups(shift));
        }
        nodes.extend(frag_nodes.into_iter().map(|node| match node {
            EfgNode::Decision { mover, children } => EfgNode::Decision {
                mover,
                children: children.into_iter().map(shift).collect(),
            },
            EfgNode::Chance { branches } => EfgNode::Chance {
                branches: branches
                    .into_iter()
                    .map(|b| ChanceBranch {
                        probability: b.probability,
                        child: shift(b.child),
                    })
                    .collect(),
            },
            terminal => terminal,
        }));
    }
    nodes[0] = EfgNode::Chance {
        branches: root_branches,
    };
    let partitions = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            PlayerPartition::from_groups(PlayerId(i as u32 + 1), total, g)
                .expect("shifted fragment partitions stay disjoint")
        })
        .collect();
    Ok(ExtensiveFormGame::from_parts(
        players,
        nodes,
        InformationPartition::new(partitions),
    ))
}

/// The player that [`relabel_first_mover`] swaps with player 1, if any.
pub fn first_mover_swap(game: &ExtensiveFormGame) -> Option<PlayerId> {
    match game.node(StateId::ROOT) {
        EfgNode::Decision { mover, .. } if mover.0 != 1 => Some(*mover),
        _ => None,
    }
}

/// Swaps player labels so that player 1 moves first at a decision root.
pub fn relabel_first_mover(game: &ExtensiveFormGame) -> ExtensiveFormGame {
    let Some(other) = first_mover_swap(game) else {
        return game.clone();
    };
    let one = PlayerId(1);
    let swap = |p: PlayerId| match p {
        p if p == one => other,
        p if p == other => one,
        p => p,
    };
    let nodes = game
        .nodes()
        .iter()
        .map(|node| match node {
            EfgNode::Decision { mover, children } => EfgNode::Decision {
                mover: swap(*mover),
                children: children.clone(),
            },
            EfgNode::Terminal { payoffs } => {
                let mut payoffs = payoffs.clone();
                if payoffs.len() >= other.index() {
                    payoffs.swap(0, other.index() - 1);
                }
                EfgNode::Terminal { payoffs }
            }
            chance => chance.clone(),
        })
        .collect();
    let mut partition = game.partition().clone();
    partition.swap_players(one, other);
    ExtensiveFormGame::from_parts(game.num_players(), nodes, partition)
}
