use std::collections::VecDeque;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{EfgNode, ExtensiveFormGame, InfosetId, PlayerId, StateId, MAX_PLAYERS};
use crate::num::{format_rational, Rational};

/// A property of a well-formed game that does not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    PlayerCount(usize),
    NoStates,
    ChildOutOfRange { state: StateId, child: usize },
    /// A state listed as the child of two parents (or twice under one).
    NotATree { child: StateId, first: StateId, second: StateId },
    RootHasParent { parent: StateId },
    Unreachable { state: StateId },
    NoChildren { state: StateId },
    MoverOutOfRange { state: StateId, mover: PlayerId },
    DistributionSum { state: StateId, sum: Rational },
    NonPositiveProbability { state: StateId, branch: usize, probability: Rational },
    PayoffArity { state: StateId, expected: usize, found: usize },
    PartitionShape { players: usize, expected: usize },
    PartitionSize { player: PlayerId, states: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PlayerCount(k) => write!(f, "player count {k} outside 1..={MAX_PLAYERS}"),
            Violation::NoStates => write!(f, "game has no states"),
            Violation::ChildOutOfRange { state, child } => {
                write!(f, "state {state}: child {child} does not exist")
            }
            Violation::NotATree { child, first, second } => write!(
                f,
                "state {child}: not a tree (listed as child of {first} and {second})"
            ),
            Violation::RootHasParent { parent } => {
                write!(f, "state 0: not a tree (root is a child of {parent})")
            }
            Violation::Unreachable { state } => write!(f, "state {state}: unreachable from the root"),
            Violation::NoChildren { state } => {
                write!(f, "state {state}: inner state without children")
            }
            Violation::MoverOutOfRange { state, mover } => {
                write!(f, "state {state}: mover {} is not a regular player", mover.0)
            }
            Violation::DistributionSum { state, sum } => write!(
                f,
                "state {state}: distribution sums to {} ≠ 1",
                format_rational(sum)
            ),
            Violation::NonPositiveProbability { state, branch, probability } => write!(
                f,
                "state {state}: branch {branch} has non-positive probability {}",
                format_rational(probability)
            ),
            Violation::PayoffArity { state, expected, found } => write!(
                f,
                "state {state}: expected {expected} payoffs, found {found}"
            ),
            Violation::PartitionShape { players, expected } => write!(
                f,
                "information partitions given for {players} players, expected {expected}"
            ),
            Violation::PartitionSize { player, states } => write!(
                f,
                "player {}: information partition covers {states} states",
                player.0
            ),
        }
    }
}

/// Something legal but unusual about a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// The information set holds states with different movers.
    MixedMovers { player: PlayerId, infoset: InfosetId },
    /// The information set holds inner states with different branching factors.
    MixedBranching { player: PlayerId, infoset: InfosetId },
    /// The root shares an information set with another state.
    RootInfosetShared { player: PlayerId },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::MixedMovers { player, infoset } => write!(
                f,
                "player {}: information set {} mixes states with different movers",
                player.0, infoset.0
            ),
            Warning::MixedBranching { player, infoset } => write!(
                f,
                "player {}: information set {} mixes different branching factors",
                player.0, infoset.0
            ),
            Warning::RootInfosetShared { player } => write!(
                f,
                "player {}: the root shares its information set with other states",
                player.0
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// All violations joined into one line.
    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks every structural requirement of a game; violations are returned as data.
pub fn validate_game(game: &ExtensiveFormGame) -> ValidationReport {
    let mut report = ValidationReport::default();
    let k = game.num_players();
    let n = game.num_states();
    if k == 0 || k > MAX_PLAYERS {
        report.violations.push(Violation::PlayerCount(k));
    }
    if n == 0 {
        report.violations.push(Violation::NoStates);
        return report;
    }

    let mut parent: Vec<Option<StateId>> = vec![None; n];
    for s in game.states() {
        let node = game.node(s);
        for child in node.children() {
            if child.0 >= n {
                report.violations.push(Violation::ChildOutOfRange { state: s, child: child.0 });
                continue;
            }
            match parent[child.0] {
                Some(first) => report.violations.push(Violation::NotATree {
                    child,
                    first,
                    second: s,
                }),
                None => parent[child.0] = Some(s),
            }
        }
        match node {
            EfgNode::Decision { mover, children } => {
                if mover.is_nature() || mover.index() > k {
                    report.violations.push(Violation::MoverOutOfRange { state: s, mover: *mover });
                }
                if children.is_empty() {
                    report.violations.push(Violation::NoChildren { state: s });
                }
            }
            EfgNode::Chance { branches } => {
                if branches.is_empty() {
                    report.violations.push(Violation::NoChildren { state: s });
                    continue;
                }
                let mut sum = Rational::zero();
                for (i, b) in branches.iter().enumerate() {
                    if !b.probability.is_positive() {
                        report.violations.push(Violation::NonPositiveProbability {
                            state: s,
                            branch: i,
                            probability: b.probability.clone(),
                        });
                    }
                    sum += &b.probability;
                }
                if !sum.is_one() {
                    report.violations.push(Violation::DistributionSum { state: s, sum });
                }
            }
            EfgNode::Terminal { payoffs } => {
                if payoffs.len() != k {
                    report.violations.push(Violation::PayoffArity {
                        state: s,
                        expected: k,
                        found: payoffs.len(),
                    });
                }
            }
        }
    }
    if let Some(p) = parent[0] {
        report.violations.push(Violation::RootHasParent { parent: p });
    }

    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([StateId::ROOT]);
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        for c in game.node(s).children() {
            if c.0 < n && !seen[c.0] {
                seen[c.0] = true;
                queue.push_back(c);
            }
        }
    }
    for (i, _) in seen.iter().enumerate().filter(|(_, &v)| !v) {
        report.violations.push(Violation::Unreachable { state: StateId(i) });
    }

    let partition = game.partition();
    if partition.num_players() != k {
        report.violations.push(Violation::PartitionShape {
            players: partition.num_players(),
            expected: k,
        });
        return report;
    }
    for (player, part) in partition.iter() {
        if part.num_states() != n {
            report.violations.push(Violation::PartitionSize {
                player,
                states: part.num_states(),
            });
            continue;
        }
        if part.members(part.infoset_of(StateId::ROOT)).len() > 1 {
            report.warnings.push(Warning::RootInfosetShared { player });
        }
        for (id, members) in part.sets().iter().enumerate() {
            if members.len() < 2 {
                continue;
            }
            let infoset = InfosetId(id);
            let first = game.node(members[0]);
            if members.iter().any(|&m| game.node(m).mover() != first.mover()) {
                report.warnings.push(Warning::MixedMovers { player, infoset });
            }
            let inner: Vec<usize> = members
                .iter()
                .map(|&m| game.node(m))
                .filter(|node| !node.is_terminal())
                .map(EfgNode::num_children)
                .collect();
            if inner.windows(2).any(|w| w[0] != w[1]) {
                report.warnings.push(Warning::MixedBranching { player, infoset });
            }
        }
    }
    report
}
