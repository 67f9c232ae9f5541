//! Seeded random games for testing and the `gen` command.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::{ExtensiveFormGame, GameBuilder};
use crate::num::{Decimal, Rational};
use crate::rng::SplitMix64;

/// Generator policy. Defaults: 2 players, at most 400 states, branching up
/// to 4, chance rate 0.3, merge rate 0.5, depth at most 8.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub players: usize,
    pub max_nodes: usize,
    pub branching: usize,
    /// Probability that a non-root inner state is a chance state.
    pub chance_rate: f64,
    /// Probability that a state joins the open information set of its group.
    pub merge_rate: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            players: 2,
            max_nodes: 400,
            branching: 4,
            chance_rate: 0.3,
            merge_rate: 0.5,
            max_depth: 8,
            seed: 0,
        }
    }
}

/// Probability that a non-root state within budget stops early.
const EARLY_TERMINAL_RATE: f64 = 0.2;

enum Kind {
    Terminal,
    Chance(Vec<u64>),
    Decision(u32),
}

/// A random valid game. The root is a singleton decision state of player 1.
/// Information sets only merge decision states of the same depth, mover and
/// branching factor, for the mover.
pub fn generate_game(cfg: &GeneratorConfig) -> ExtensiveFormGame {
    let k = cfg.players.max(1);
    let max_nodes = cfg.max_nodes.max(1);
    let branching = cfg.branching.max(1);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut b = GameBuilder::new(k);
    let mut next_id = 1usize;
    // (state, depth), in breadth-first order.
    let mut frontier = std::collections::VecDeque::from([(0usize, 0usize)]);
    let mut groups: BTreeMap<(usize, u32, usize), Vec<usize>> = BTreeMap::new();
    while let Some((s, depth)) = frontier.pop_front() {
        let width = rng.range_inclusive(1, branching as u64) as usize;
        let width = if s == 0 { width.max(2.min(branching)) } else { width };
        let fits = next_id + width <= max_nodes && depth < cfg.max_depth;
        let kind = if !fits || (s != 0 && rng.chance(EARLY_TERMINAL_RATE)) {
            Kind::Terminal
        } else if s != 0 && rng.chance(cfg.chance_rate) {
            Kind::Chance((0..width).map(|_| rng.range_inclusive(1, 6)).collect())
        } else if s == 0 {
            Kind::Decision(1)
        } else {
            Kind::Decision(rng.range_inclusive(1, k as u64) as u32)
        };
        let children: Vec<usize> = match kind {
            Kind::Terminal => Vec::new(),
            _ => (next_id..next_id + width).collect(),
        };
        next_id += children.len();
        frontier.extend(children.iter().map(|&c| (c, depth + 1)));
        b = match kind {
            Kind::Terminal => {
                let payoffs = (0..k).map(|_| random_payoff(&mut rng)).collect();
                b.terminal_payoffs(s, payoffs)
            }
            Kind::Chance(weights) => {
                let total: u64 = weights.iter().sum();
                let branches = weights
                    .iter()
                    .zip(&children)
                    .map(|(&w, &c)| (Rational::new(BigInt::from(w), BigInt::from(total)), c));
                b.chance(s, branches.collect::<Vec<_>>())
            }
            Kind::Decision(mover) => {
                if s != 0 {
                    groups.entry((depth, mover, width)).or_default().push(s);
                }
                b.decision(s, mover, children)
            }
        };
    }
    for ((_, mover, _), members) in groups {
        let mut open: Vec<usize> = Vec::new();
        for s in members {
            if !open.is_empty() && !rng.chance(cfg.merge_rate) {
                if open.len() > 1 {
                    b = b.infoset(mover, std::mem::take(&mut open));
                }
                open.clear();
            }
            open.push(s);
        }
        if open.len() > 1 {
            b = b.infoset(mover, open);
        }
    }
    b.build().expect("generated games are valid")
}

/// An integer or one-decimal payoff in [-20, 20].
fn random_payoff(rng: &mut SplitMix64) -> Decimal {
    let tenths = rng.range_inclusive(0, 400) as i64 - 200;
    if rng.chance(0.5) {
        Decimal::from_int(tenths / 10)
    } else {
        format!("{}{}.{}", if tenths < 0 { "-" } else { "" }, tenths.abs() / 10, tenths.abs() % 10)
            .parse()
            .expect("well-formed decimal")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::{depths, validate_game, EfgNode, PlayerId, StateId};

    fn suite(n: u64) -> impl Iterator<Item = (GeneratorConfig, ExtensiveFormGame)> {
        (0..n).map(|seed| {
            let cfg = GeneratorConfig {
                players: 1 + (seed % 4) as usize,
                seed,
                ..Default::default()
            };
            let g = generate_game(&cfg);
            (cfg, g)
        })
    }

    #[test]
    fn generated_games_respect_the_policy() {
        for (cfg, g) in suite(100) {
            assert!(validate_game(&g).is_valid(), "seed {}", cfg.seed);
            assert!(g.num_states() <= cfg.max_nodes);
            assert_eq!(g.num_players(), cfg.players);
            let d = depths(&g);
            assert!(d.iter().all(|&x| x <= cfg.max_depth));
            assert_eq!(g.node(StateId::ROOT).mover(), Some(PlayerId(1)));
            for p in g.regular_players() {
                assert_eq!(g.infoset_members(p, StateId::ROOT), &[StateId::ROOT]);
                for s in g.states() {
                    let members = g.infoset_members(p, s);
                    if members.len() == 1 {
                        continue;
                    }
                    // Oracle: a merged set shares depth, mover and branching.
                    let node = g.node(s);
                    for &m in members {
                        assert_eq!(d[m.0], d[s.0]);
                        assert_eq!(g.node(m).mover(), Some(p));
                        assert_eq!(g.node(m).num_children(), node.num_children());
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_game() {
        let cfg = GeneratorConfig {
            seed: 42,
            players: 3,
            ..Default::default()
        };
        assert_eq!(generate_game(&cfg), generate_game(&cfg));
        let other = GeneratorConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate_game(&cfg), generate_game(&other));
    }

    #[test]
    fn suite_exercises_chance_and_merged_sets() {
        let mut with_both = 0;
        for (_, g) in suite(50) {
            let chance = g.nodes().iter().any(|n| matches!(n, EfgNode::Chance { .. }));
            let merged = g
                .regular_players()
                .any(|p| g.states().any(|s| g.infoset_members(p, s).len() > 1));
            with_both += usize::from(chance && merged);
        }
        assert!(with_both >= 25, "{with_both}");
    }

    #[test]
    fn tiny_budgets_still_build() {
        for max_nodes in 1..6 {
            let g = generate_game(&GeneratorConfig {
                max_nodes,
                ..Default::default()
            });
            assert!(g.num_states() <= max_nodes);
            assert!(validate_game(&g).is_valid());
        }
    }
}
