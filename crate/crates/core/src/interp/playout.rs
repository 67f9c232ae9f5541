use std::fmt;

use crate::num::Decimal;
use crate::rng::SplitMix64;

use super::ast::{LudiiAst, MoveChoice};
use super::exec::{apply_move, initial_state, legal_moves, ExecError, InterpreterState, MoveResolution};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlayoutError {
    #[error("no legal moves in a non-terminal state (neutral marker at {vertex})")]
    NoMoves { vertex: i64 },
    #[error("external choice required among {options} moves (neutral marker at {vertex})")]
    ExternalChoice { vertex: i64, options: usize },
    #[error("no terminal state reached within {limit} moves")]
    StepLimit { limit: usize },
    #[error(transparent)]
    Exec(#[from] ExecError),
}

/// Picks one of several deterministic moves.
pub trait Policy {
    fn choose(
        &mut self,
        state: &InterpreterState,
        moves: &[&MoveChoice],
        rng: &mut SplitMix64,
    ) -> Result<usize, PlayoutError>;
}

/// Every legal move equally likely, drawn from the playout generator.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn choose(
        &mut self,
        _: &InterpreterState,
        moves: &[&MoveChoice],
        rng: &mut SplitMix64,
    ) -> Result<usize, PlayoutError> {
        Ok(rng.below(moves.len() as u64) as usize)
    }
}

/// Refuses to choose: playouts only succeed where every choice is forced.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForcedOnlyPolicy;

impl Policy for ForcedOnlyPolicy {
    fn choose(
        &mut self,
        state: &InterpreterState,
        moves: &[&MoveChoice],
        _: &mut SplitMix64,
    ) -> Result<usize, PlayoutError> {
        Err(PlayoutError::ExternalChoice {
            vertex: state.neutral_vertex(),
            options: moves.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub before: i64,
    pub select: usize,
    pub after: i64,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "before={} select={} after={}", self.before, self.select, self.after)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Playout {
    pub steps: Vec<Step>,
    pub payoffs: Vec<Decimal>,
    pub final_state: InterpreterState,
}

impl Playout {
    /// One `before=.. select=.. after=..` line per move.
    pub fn dump(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }
}

/// Plays from the initial state to a terminal one. `visit` sees every state
/// reached, including the initial one.
pub fn playout_with(
    ast: &LudiiAst,
    rng: &mut SplitMix64,
    policy: &mut dyn Policy,
    mut visit: impl FnMut(&InterpreterState),
) -> Result<Playout, PlayoutError> {
    let limit = ast.num_vertices;
    let mut state = initial_state(ast)?;
    visit(&state);
    let mut steps = Vec::new();
    loop {
        if let Some(payoffs) = state.terminal() {
            return Ok(Playout {
                steps,
                payoffs: payoffs.to_vec(),
                final_state: state,
            });
        }
        if steps.len() >= limit {
            return Err(PlayoutError::StepLimit { limit });
        }
        let vertex = state.neutral_vertex();
        let options = match legal_moves(ast, &state) {
            MoveResolution::Deterministic(moves) => moves,
            MoveResolution::Chance(branches) if !branches.is_empty() => {
                let weights: Vec<u64> = branches.iter().map(|b| b.0).collect();
                let i = rng.weighted_index(&weights);
                branches.into_iter().nth(i).map(|b| b.1).unwrap_or_default()
            }
            MoveResolution::Chance(_) => Vec::new(),
        };
        let m = match options.len() {
            0 => return Err(PlayoutError::NoMoves { vertex }),
            1 => options[0],
            _ => options[policy.choose(&state, &options, rng)?],
        };
        state = apply_move(ast, &state, m)?;
        visit(&state);
        steps.push(Step {
            before: vertex,
            select: m.select,
            after: state.neutral_vertex(),
        });
    }
}

/// A playout under the uniform policy, seeded from `seed`.
pub fn playout(ast: &LudiiAst, seed: u64) -> Result<Playout, PlayoutError> {
    playout_with(ast, &mut SplitMix64::new(seed), &mut UniformPolicy, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::fixtures::{hidden_coin, r};
    use crate::efg::GameBuilder;
    use crate::interp::parse_lgdl;
    use crate::lgdl::compile;

    fn ast_for(g: &crate::ExtensiveFormGame) -> LudiiAst {
        parse_lgdl(&compile(g, "t").unwrap().text()).unwrap()
    }

    #[test]
    fn single_trajectory_for_every_seed() {
        let g = GameBuilder::new(2)
            .decision(0, 1, [1])
            .decision(1, 2, [2])
            .terminal(2, ["1", "2"])
            .build()
            .unwrap();
        let ast = ast_for(&g);
        for seed in 0..20 {
            let p = playout(&ast, seed).unwrap();
            assert_eq!(p.dump(), "before=0 select=0 after=1\nbefore=1 select=0 after=2\n");
            assert_eq!(p.payoffs, vec![Decimal::from_int(1), Decimal::from_int(2)]);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let ast = ast_for(&hidden_coin());
        for seed in [0, 1, 99, u64::MAX] {
            assert_eq!(playout(&ast, seed).unwrap(), playout(&ast, seed).unwrap());
        }
    }

    #[test]
    fn forced_only_policy_reports_choice_points() {
        let ast = ast_for(&hidden_coin());
        let err = playout_with(&ast, &mut SplitMix64::new(0), &mut ForcedOnlyPolicy, |_| {}).unwrap_err();
        assert!(matches!(err, PlayoutError::ExternalChoice { options: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("external choice required"));

        let chance_only = GameBuilder::new(1)
            .chance(0, [(r(1, 3), 1), (r(2, 3), 2)])
            .terminal(1, ["0"])
            .terminal(2, ["1"])
            .build()
            .unwrap();
        let ast = ast_for(&chance_only);
        assert!(playout_with(&ast, &mut SplitMix64::new(5), &mut ForcedOnlyPolicy, |_| {}).is_ok());
    }

    #[test]
    fn chance_frequencies_match_weights() {
        let g = GameBuilder::new(1)
            .chance(0, [(r(1, 3), 1), (r(2, 3), 2)])
            .terminal(1, ["0"])
            .terminal(2, ["1"])
            .build()
            .unwrap();
        let ast = ast_for(&g);
        let n = 10_000u32;
        let mut rng = SplitMix64::new(2024);
        let mut hits = 0u32;
        for _ in 0..n {
            let p = playout_with(&ast, &mut rng, &mut UniformPolicy, |_| {}).unwrap();
            hits += u32::from(p.final_state.neutral_vertex() == 1);
        }
        let freq = f64::from(hits) / f64::from(n);
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / f64::from(n)).sqrt();
        assert!((freq - 1.0 / 3.0).abs() <= 3.0 * sigma, "{freq}");
    }
}
