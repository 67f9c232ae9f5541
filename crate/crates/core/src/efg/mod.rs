//! Finite extensive-form games with chance nodes and information sets.
//!
//! A game is a rooted tree whose states are numbered densely from `0`
//! (the root) to `|S| - 1`. Inner states are either decision states with a
//! regular mover in `1..=k` or chance states whose outgoing branches carry
//! exact rational probabilities. Terminal states carry one exact decimal
//! payoff per player. Every player has a partition of *all* states into
//! information sets.

mod builder;
mod enumerate;
mod generate;
mod normalize;
mod partition;
mod validate;

use std::fmt;

use crate::num::{Decimal, Rational};

pub use builder::{BuildError, GameBuilder};
pub use enumerate::{depths, enumerate_states, enumerate_trajectories, Trajectory};
pub use generate::{generate_game, GeneratorConfig};
pub use normalize::{first_mover_swap, normalize_initial_states, relabel_first_mover, NormalizeError};
pub use partition::{InfosetId, InformationPartition, PartitionError, PlayerPartition};
pub use validate::{validate_game, ValidationReport, Violation, Warning};

/// Largest supported number of regular players.
pub const MAX_PLAYERS: usize = 100;
/// Largest supported number of states.
pub const MAX_STATES: usize = 1_000_000;

/// A player label. `0` is nature; `1..=k` are the regular players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub u32);

impl PlayerId {
    pub const NATURE: PlayerId = PlayerId(0);

    pub fn is_nature(self) -> bool {
        self.0 == 0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_nature() {
            write!(f, "nature")
        } else {
            write!(f, "P{}", self.0)
        }
    }
}

/// Index of a state; the root is always `StateId(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    pub const ROOT: StateId = StateId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChanceBranch {
    pub probability: Rational,
    pub child: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EfgNode {
    Decision {
        mover: PlayerId,
        children: Vec<StateId>,
    },
    Chance {
        branches: Vec<ChanceBranch>,
    },
    Terminal {
        payoffs: Vec<Decimal>,
    },
}

impl EfgNode {
    pub fn is_terminal(&self) -> bool {
        matches!(self, EfgNode::Terminal { .. })
    }

    pub fn is_chance(&self) -> bool {
        matches!(self, EfgNode::Chance { .. })
    }

    /// The player to move, `NATURE` for chance states, `None` for terminals.
    pub fn mover(&self) -> Option<PlayerId> {
        match self {
            EfgNode::Decision { mover, .. } => Some(*mover),
            EfgNode::Chance { .. } => Some(PlayerId::NATURE),
            EfgNode::Terminal { .. } => None,
        }
    }

    /// Children in declared order.
    pub fn children(&self) -> Vec<StateId> {
        match self {
            EfgNode::Decision { children, .. } => children.clone(),
            EfgNode::Chance { branches } => branches.iter().map(|b| b.child).collect(),
            EfgNode::Terminal { .. } => Vec::new(),
        }
    }

    pub fn num_children(&self) -> usize {
        match self {
            EfgNode::Decision { children, .. } => children.len(),
            EfgNode::Chance { branches } => branches.len(),
            EfgNode::Terminal { .. } => 0,
        }
    }

    pub fn payoffs(&self) -> Option<&[Decimal]> {
        match self {
            EfgNode::Terminal { payoffs } => Some(payoffs),
            _ => None,
        }
    }
}

/// A finite extensive-form game.
///
/// Construction does not validate; use [`validate_game`] or build through
/// [`GameBuilder`], which rejects invalid games.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensiveFormGame {
    players: usize,
    nodes: Vec<EfgNode>,
    partition: InformationPartition,
}

impl ExtensiveFormGame {
    /// Assembles a game without checking it. `nodes[i]` is state `i`.
    pub fn from_parts(players: usize, nodes: Vec<EfgNode>, partition: InformationPartition) -> Self {
        ExtensiveFormGame {
            players,
            nodes,
            partition,
        }
    }

    /// Number of regular players `k`.
    pub fn num_players(&self) -> usize {
        self.players
    }

    /// Number of states `|S|`.
    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: StateId) -> &EfgNode {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[EfgNode] {
        &self.nodes
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.nodes.len()).map(StateId)
    }

    pub fn partition(&self) -> &InformationPartition {
        &self.partition
    }

    /// Regular players `1..=k`.
    pub fn regular_players(&self) -> impl Iterator<Item = PlayerId> {
        (1..=self.players as u32).map(PlayerId)
    }

    /// The information set `I(p, s)` as its canonical id.
    pub fn infoset(&self, player: PlayerId, state: StateId) -> InfosetId {
        self.partition.player(player).infoset_of(state)
    }

    /// Members of `I(p, s)` in ascending order.
    pub fn infoset_members(&self, player: PlayerId, state: StateId) -> &[StateId] {
        let part = self.partition.player(player);
        part.members(part.infoset_of(state))
    }

    pub fn inner_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| !self.node(s).is_terminal())
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&s| self.node(s).is_terminal())
    }

    /// Number of tree edges, `|S| - 1` for a valid game.
    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(EfgNode::num_children).sum()
    }

    /// Parent of every state; `None` for the root or for states with no parent.
    pub fn parents(&self) -> Vec<Option<StateId>> {
        let mut parents = vec![None; self.nodes.len()];
        for s in self.states() {
            for c in self.node(s).children() {
                if let Some(slot) = parents.get_mut(c.0) {
                    slot.get_or_insert(s);
                }
            }
        }
        parents
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<EfgNode>, InformationPartition) {
        (self.players, self.nodes, self.partition)
    }
}
