use std::collections::VecDeque;

use num_traits::One;

use super::{EfgNode, ExtensiveFormGame, PlayerId, StateId};
use crate::num::Rational;

/// A root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// States from the root to a terminal.
    pub states: Vec<StateId>,
    /// Product of the chance probabilities along the path.
    pub probability: Rational,
    /// Mover of every inner state on the path (`NATURE` at chance states).
    pub movers: Vec<PlayerId>,
}

impl Trajectory {
    pub fn leaf(&self) -> StateId {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Probability of this path when every decision is made uniformly at random.
    pub fn uniform_policy_probability(&self, game: &ExtensiveFormGame) -> Rational {
        let mut prob = self.probability.clone();
        for s in &self.states[..self.states.len() - 1] {
            if let EfgNode::Decision { children, .. } = game.node(*s) {
                prob /= Rational::from_integer(children.len().into());
            }
        }
        prob
    }
}

/// States in breadth-first order from the root, children in declared order.
pub fn enumerate_states(game: &ExtensiveFormGame) -> Vec<StateId> {
    let mut order = Vec::with_capacity(game.num_states());
    let mut queue = VecDeque::from([StateId::ROOT]);
    while let Some(s) = queue.pop_front() {
        order.push(s);
        queue.extend(game.node(s).children());
    }
    order
}

/// Distance of every state from the root.
pub fn depths(game: &ExtensiveFormGame) -> Vec<usize> {
    let mut depth = vec![0; game.num_states()];
    for s in enumerate_states(game) {
        for c in game.node(s).children() {
            depth[c.0] = depth[s.0] + 1;
        }
    }
    depth
}

/// Every root-to-leaf trajectory, leaves in left-to-right order.
pub fn enumerate_trajectories(game: &ExtensiveFormGame) -> Vec<Trajectory> {
    let mut out = Vec::new();
    let mut path: Vec<StateId> = Vec::new();
    let mut movers: Vec<PlayerId> = Vec::new();
    // (state, depth along the path, probability so far)
    let mut stack = vec![(StateId::ROOT, 0usize, Rational::one())];
    while let Some((s, depth, prob)) = stack.pop() {
        path.truncate(depth);
        movers.truncate(depth);
        path.push(s);
        let node = game.node(s);
        match node {
            EfgNode::Terminal { .. } => out.push(Trajectory {
                states: path.clone(),
                probability: prob,
                movers: movers.clone(),
            }),
            EfgNode::Decision { mover, children } => {
                movers.push(*mover);
                for &c in children.iter().rev() {
                    stack.push((c, depth + 1, prob.clone()));
                }
            }
            EfgNode::Chance { branches } => {
                movers.push(PlayerId::NATURE);
                for b in branches.iter().rev() {
                    stack.push((b.child, depth + 1, &prob * &b.probability));
                }
            }
        }
    }
    out
}
