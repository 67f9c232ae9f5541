use std::collections::BTreeMap;

use super::{
    validate_game, ChanceBranch, EfgNode, ExtensiveFormGame, InformationPartition, PartitionError,
    PlayerId, PlayerPartition, StateId, ValidationReport, MAX_PLAYERS, MAX_STATES,
};
use crate::num::{Decimal, NumError, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("player count {0} outside 1..={MAX_PLAYERS}")]
    PlayerCount(usize),
    #[error("state count {0} exceeds the limit of {MAX_STATES}")]
    TooManyStates(usize),
    #[error("no state with id 0")]
    MissingRoot,
    #[error("state {0} declared more than once")]
    DuplicateState(usize),
    #[error("state ids must be contiguous: id {0} is missing")]
    MissingState(usize),
    #[error("state {from} refers to undeclared state {to}")]
    UndeclaredState { from: usize, to: usize },
    #[error("information set refers to undeclared state {0}")]
    UndeclaredInfosetMember(usize),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("state {state}: {source}")]
    Payoff { state: usize, source: NumError },
    #[error("invalid game: {}", .0.summary())]
    Invalid(ValidationReport),
}

/// Incremental construction of a game from node declarations keyed by id.
#[derive(Debug, Clone)]
pub struct GameBuilder {
    players: usize,
    nodes: BTreeMap<usize, EfgNode>,
    infosets: Vec<(PlayerId, Vec<StateId>)>,
    error: Option<BuildError>,
}

impl GameBuilder {
    pub fn new(players: usize) -> Self {
        GameBuilder {
            players,
            nodes: BTreeMap::new(),
            infosets: Vec::new(),
            error: None,
        }
    }

    fn insert(mut self, id: usize, node: EfgNode) -> Self {
        if self.nodes.insert(id, node).is_some() && self.error.is_none() {
            self.error = Some(BuildError::DuplicateState(id));
        }
        self
    }

    pub fn contains(&self, id: usize) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn decision(self, id: usize, mover: u32, children: impl IntoIterator<Item = usize>) -> Self {
        let node = EfgNode::Decision {
            mover: PlayerId(mover),
            children: children.into_iter().map(StateId).collect(),
        };
        self.insert(id, node)
    }

    pub fn chance(self, id: usize, branches: impl IntoIterator<Item = (Rational, usize)>) -> Self {
        let node = EfgNode::Chance {
            branches: branches
                .into_iter()
                .map(|(probability, child)| ChanceBranch {
                    probability,
                    child: StateId(child),
                })
                .collect(),
        };
        self.insert(id, node)
    }

    /// Terminal state with payoffs written as decimal literals.
    pub fn terminal<S: AsRef<str>>(mut self, id: usize, payoffs: impl IntoIterator<Item = S>) -> Self {
        let parsed: Result<Vec<Decimal>, NumError> =
            payoffs.into_iter().map(|p| p.as_ref().parse()).collect();
        match parsed {
            Ok(payoffs) => self.terminal_payoffs(id, payoffs),
            Err(source) => {
                self.error.get_or_insert(BuildError::Payoff { state: id, source });
                self
            }
        }
    }

    pub fn terminal_payoffs(self, id: usize, payoffs: Vec<Decimal>) -> Self {
        self.insert(id, EfgNode::Terminal { payoffs })
    }

    /// Declares states that `player` cannot tell apart.
    pub fn infoset(mut self, player: u32, members: impl IntoIterator<Item = usize>) -> Self {
        self.infosets
            .push((PlayerId(player), members.into_iter().map(StateId).collect()));
        self
    }

    /// Assembles the game without running validation.
    pub fn build_unchecked(self) -> Result<ExtensiveFormGame, BuildError> {
        if let Some(err) = self.error {
            return Err(err);
        }
        if self.players == 0 || self.players > MAX_PLAYERS {
            return Err(BuildError::PlayerCount(self.players));
        }
        if self.nodes.len() > MAX_STATES {
            return Err(BuildError::TooManyStates(self.nodes.len()));
        }
        if !self.nodes.contains_key(&0) {
            return Err(BuildError::MissingRoot);
        }
        let num_states = self.nodes.len();
        if let Some(missing) = (0..num_states).find(|id| !self.nodes.contains_key(id)) {
            return Err(BuildError::MissingState(missing));
        }
        for (&id, node) in &self.nodes {
            if let Some(bad) = node.children().into_iter().find(|c| c.0 >= num_states) {
                return Err(BuildError::UndeclaredState { from: id, to: bad.0 });
            }
        }
        let mut groups: Vec<Vec<Vec<StateId>>> = vec![Vec::new(); self.players];
        for (player, members) in self.infosets {
            if player.is_nature() || player.index() > self.players {
                return Err(PartitionError::PlayerOutOfRange {
                    player: player.0,
                    players: self.players,
                }
                .into());
            }
            if let Some(bad) = members.iter().find(|s| s.0 >= num_states) {
                return Err(BuildError::UndeclaredInfosetMember(bad.0));
            }
            groups[player.index() - 1].push(members);
        }
        let partitions = groups
            .iter()
            .enumerate()
            .map(|(i, g)| PlayerPartition::from_groups(PlayerId(i as u32 + 1), num_states, g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExtensiveFormGame::from_parts(
            self.players,
            self.nodes.into_values().collect(),
            InformationPartition::new(partitions),
        ))
    }

    /// Assembles and validates the game.
    pub fn build(self) -> Result<ExtensiveFormGame, BuildError> {
        let game = self.build_unchecked()?;
        let report = validate_game(&game);
        if report.is_valid() {
            Ok(game)
        } else {
            Err(BuildError::Invalid(report))
        }
    }
}
