use super::{PlayerId, StateId};

/// Identifier of one information set within a single player's partition.
///
/// Ids are canonical: sets are numbered in ascending order of their
/// smallest member, so equal partitions always compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InfosetId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("player {player}: state {state} is out of range")]
    StateOutOfRange { player: u32, state: usize },
    #[error("player {player}: state {state} is listed in more than one information set")]
    Overlap { player: u32, state: usize },
    #[error("player {player} is out of range 1..={players}")]
    PlayerOutOfRange { player: u32, players: usize },
}

/// One player's partition of all states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerPartition {
    set_of: Vec<InfosetId>,
    sets: Vec<Vec<StateId>>,
}

impl PlayerPartition {
    /// Every state in its own information set.
    pub fn singletons(num_states: usize) -> Self {
        PlayerPartition {
            set_of: (0..num_states).map(InfosetId).collect(),
            sets: (0..num_states).map(|s| vec![StateId(s)]).collect(),
        }
    }

    /// Builds a partition from explicit groups; unlisted states become singletons.
    pub fn from_groups(
        player: PlayerId,
        num_states: usize,
        groups: &[Vec<StateId>],
    ) -> Result<Self, PartitionError> {
        let mut group_of: Vec<Option<usize>> = vec![None; num_states];
        for (g, members) in groups.iter().enumerate() {
            for &s in members {
                let slot = group_of.get_mut(s.0).ok_or(PartitionError::StateOutOfRange {
                    player: player.0,
                    state: s.0,
                })?;
                match slot {
                    Some(prev) if *prev == g => {}
                    Some(_) => {
                        return Err(PartitionError::Overlap {
                            player: player.0,
                            state: s.0,
                        })
                    }
                    None => *slot = Some(g),
                }
            }
        }
        // Canonical numbering by smallest member.
        let mut label_of_group: Vec<Option<InfosetId>> = vec![None; groups.len()];
        let mut set_of = Vec::with_capacity(num_states);
        let mut sets: Vec<Vec<StateId>> = Vec::new();
        for (s, group) in group_of.iter().enumerate() {
            let id = match group {
                Some(g) => *label_of_group[*g].get_or_insert_with(|| {
                    sets.push(Vec::new());
                    InfosetId(sets.len() - 1)
                }),
                None => {
                    sets.push(Vec::new());
                    InfosetId(sets.len() - 1)
                }
            };
            sets[id.0].push(StateId(s));
            set_of.push(id);
        }
        Ok(PlayerPartition { set_of, sets })
    }

    pub fn num_states(&self) -> usize {
        self.set_of.len()
    }

    pub fn infoset_of(&self, state: StateId) -> InfosetId {
        self.set_of[state.0]
    }

    /// Members of a set in ascending order.
    pub fn members(&self, id: InfosetId) -> &[StateId] {
        &self.sets[id.0]
    }

    pub fn sets(&self) -> &[Vec<StateId>] {
        &self.sets
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    /// Non-singleton sets with every member mapped through `f`.
    pub(crate) fn remapped_groups(&self, f: impl Fn(StateId) -> StateId) -> Vec<Vec<StateId>> {
        self.sets
            .iter()
            .filter(|set| set.len() > 1)
            .map(|set| set.iter().map(|&s| f(s)).collect())
            .collect()
    }
}

/// Information partitions for players `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationPartition {
    players: Vec<PlayerPartition>,
}

impl InformationPartition {
    pub fn singletons(num_players: usize, num_states: usize) -> Self {
        InformationPartition {
            players: (0..num_players)
                .map(|_| PlayerPartition::singletons(num_states))
                .collect(),
        }
    }

    pub fn new(players: Vec<PlayerPartition>) -> Self {
        InformationPartition { players }
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// The partition of regular player `p` (1-based).
    pub fn player(&self, p: PlayerId) -> &PlayerPartition {
        assert!(!p.is_nature(), "nature has no information partition");
        &self.players[p.index() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlayerId, &PlayerPartition)> {
        self.players
            .iter()
            .enumerate()
            .map(|(i, part)| (PlayerId(i as u32 + 1), part))
    }

    pub(crate) fn swap_players(&mut self, a: PlayerId, b: PlayerId) {
        self.players.swap(a.index() - 1, b.index() - 1);
    }
}
