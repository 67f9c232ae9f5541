//! Equivalence checking between a game and a lowered description.

pub mod mutate;
pub mod report;
pub mod stats;
pub mod traverse;

pub use mutate::{mutate, Mutation};
pub use report::{
    Choice, Counterexample, Criterion, CriterionResult, EquivalenceReport, Status, Trace, MAX_COUNTEREXAMPLES,
};
pub use stats::{statistical_playout_check, LeafFrequency, StatisticalReport};
pub use traverse::{check_equivalence, check_indistinguishability, replay, verify, verify_text};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::fixtures::{hidden_coin, r};
    use crate::efg::GameBuilder;
    use crate::interp::{parse_lgdl, LudiiAst};
    use crate::lgdl::{compile, render};
    use crate::ExtensiveFormGame;

    /// P1 picks a side, P2 answers without seeing it, and one answer leads
    /// to a {1/4, 3/4} coin.
    fn blind_reply() -> ExtensiveFormGame {
        GameBuilder::new(2)
            .decision(0, 1, [1, 2])
            .decision(1, 2, [3, 4])
            .decision(2, 2, [5, 6])
            .chance(3, [(r(1, 4), 7), (r(3, 4), 8)])
            .terminal(4, ["1", "0"])
            .terminal(5, ["0", "1"])
            .terminal(6, ["2", "2"])
            .terminal(7, ["3", "-3"])
            .terminal(8, ["-1", "1"])
            .infoset(2, [1, 2])
            .build()
            .unwrap()
    }

    fn ast_for(g: &ExtensiveFormGame) -> LudiiAst {
        parse_lgdl(&compile(g, "t").unwrap().text()).unwrap()
    }

    #[test]
    fn compiled_games_pass_every_criterion() {
        for g in [hidden_coin(), blind_reply()] {
            let report = verify(&g, &ast_for(&g));
            assert!(report.all_passed(), "{}", report.render_records());
            assert_eq!(report.states_checked, g.num_states());
            for c in Criterion::ALL {
                assert_eq!(report.status(c), Status::Pass, "{c}");
            }
        }
    }

    #[test]
    fn split_checks_cover_disjoint_criteria() {
        let g = blind_reply();
        let ast = ast_for(&g);
        let eq = check_equivalence(&g, &ast);
        let ind = check_indistinguishability(&g, &ast);
        assert_eq!(eq.status(Criterion::Indistinguishability), Status::Skipped);
        assert_eq!(ind.status(Criterion::Payoffs), Status::Skipped);
        assert_eq!(ind.status(Criterion::Indistinguishability), Status::Pass);
        // Two P2 states share a set; every other group is a singleton.
        assert!(ind.pairs_compared >= 1);
    }

    #[test]
    fn each_mutation_fails_its_criterion() {
        let g = blind_reply();
        let root = compile(&g, "t").unwrap().root;
        for m in Mutation::ALL {
            let mutated = mutate(&root, m).unwrap_or_else(|| panic!("{} not applicable", m.name()));
            let report = verify_text(&g, &render(&mutated));
            assert_eq!(report.status(Criterion::SubsetValidity), Status::Pass, "{}", m.name());
            assert_eq!(report.status(m.target()), Status::Fail, "{}: {}", m.name(), report.render_records());
        }
    }

    #[test]
    fn mutations_without_a_site_are_skipped() {
        let one_player = GameBuilder::new(1)
            .decision(0, 1, [1])
            .terminal(1, ["0"])
            .build()
            .unwrap();
        let root = compile(&one_player, "t").unwrap().root;
        assert!(mutate(&root, Mutation::ChangeNextPlayer).is_none());
        assert!(mutate(&root, Mutation::PerturbWeight).is_none());
        assert!(mutate(&root, Mutation::DeleteMove).is_some());
    }

    #[test]
    fn payoff_counterexample_replays_to_its_state() {
        let g = blind_reply();
        let root = compile(&g, "t").unwrap().root;
        let text = render(&mutate(&root, Mutation::PerturbPayoff).unwrap());
        let ast = parse_lgdl(&text).unwrap();
        let report = check_equivalence(&g, &ast);
        let r = &report.results[&Criterion::Payoffs];
        assert_eq!(r.failures, 1);
        let cx = &r.counterexamples[0];
        // The first terminal clause is state 4, reached by P1 left, P2 right.
        assert_eq!(cx.trace.states.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 4]);
        let end = replay(&ast, &cx.trace.choices).unwrap();
        assert_eq!(end.neutral_vertex(), 4);
    }

    #[test]
    fn stripped_rehiding_names_the_revealed_vertex() {
        let g = blind_reply();
        let root = compile(&g, "t").unwrap().root;
        let text = render(&mutate(&root, Mutation::StripRehiding).unwrap());
        let report = verify_text(&g, &text);
        let r = &report.results[&Criterion::Indistinguishability];
        let cx = &r.counterexamples[0];
        assert!(cx.other.is_some());
        assert!(cx.detail.contains("player 2"), "{}", cx.detail);
        assert!(cx.detail.contains("first differing vertex"), "{}", cx.detail);
        assert!(!cx.depth_mismatch);
    }

    #[test]
    fn unparsable_text_fails_subset_validity_only() {
        let report = verify_text(&hidden_coin(), "(game \"x\"");
        assert_eq!(report.status(Criterion::SubsetValidity), Status::Fail);
        for c in &Criterion::ALL[1..] {
            assert_eq!(report.status(*c), Status::Skipped);
        }
    }

    #[test]
    fn description_of_another_game_fails() {
        let g = blind_reply();
        let other = ast_for(&hidden_coin());
        let report = verify(&g, &other);
        assert!(!report.all_passed());
        assert_eq!(report.status(Criterion::TrajectoryBijection), Status::Fail);
    }

    #[test]
    fn playout_frequencies_match_the_uniform_policy() {
        let g = blind_reply();
        let ast = ast_for(&g);
        let s = statistical_playout_check(&g, &ast, 20_000, 7, 4.0);
        assert!(s.passed(), "{}", s.render_records());
        // Oracle: every decision is a fair coin, state 3 is {1/4, 3/4}.
        let expect = [(4, 0.25), (5, 0.25), (6, 0.25), (7, 0.0625), (8, 0.1875)];
        for (leaf, p) in expect {
            let l = s.leaves.iter().find(|l| l.leaf == leaf).unwrap();
            assert!((l.expected - p).abs() < 1e-12, "{leaf}");
        }
    }

    #[test]
    fn statistics_detect_a_skewed_coin() {
        let g = GameBuilder::new(1)
            .chance(0, [(r(1, 3), 1), (r(2, 3), 2)])
            .terminal(1, ["0"])
            .terminal(2, ["1"])
            .build()
            .unwrap();
        let root = compile(&g, "t").unwrap().root;
        let skewed = parse_lgdl(&render(&mutate(&root, Mutation::PerturbWeight).unwrap())).unwrap();
        let s = statistical_playout_check(&g, &skewed, 10_000, 1, 3.0);
        assert!(!s.passed());
        assert!(s.max_deviation() > 0.1, "{}", s.max_deviation());
    }
}
