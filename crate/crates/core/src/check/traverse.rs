use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::efg::{depths, enumerate_trajectories, EfgNode, ExtensiveFormGame, PlayerId, StateId};
use crate::interp::{
    apply_move, initial_state, is_terminal, legal_moves, observe, parse_lgdl, view_fingerprint, Cell, InterpreterState,
    LudiiAst, MoveChoice, MoveResolution,
};
use crate::num::{format_rational, Rational};

use super::report::{Choice, Counterexample, Criterion, EquivalenceReport, Trace};

/// A game state paired with the interpreter state whose neutral marker sits
/// on its vertex.
struct Pair {
    state: StateId,
    depth: usize,
    parent: Option<usize>,
    choice: Option<Choice>,
    /// 128-bit fingerprint of each player's view, when views are collected.
    views: Vec<u128>,
}

struct Sync<'a> {
    g: &'a ExtensiveFormGame,
    ast: &'a LudiiAst,
    depth_of: Vec<usize>,
    collect_views: bool,
    pairs: Vec<Pair>,
    report: EquivalenceReport,
}

/// Replays interpreter choices from the initial state.
pub fn replay(ast: &LudiiAst, choices: &[Choice]) -> Result<InterpreterState, String> {
    let mut state = initial_state(ast).map_err(|e| e.to_string())?;
    for (step, c) in choices.iter().enumerate() {
        let m = match (legal_moves(ast, &state), c) {
            (MoveResolution::Deterministic(moves), Choice::Move(i)) => moves.get(*i).copied(),
            (MoveResolution::Chance(branches), Choice::Branch(i)) => {
                branches.get(*i).and_then(|b| b.1.first().copied())
            }
            _ => None,
        };
        let m = m.ok_or_else(|| format!("step {step}: choice {c} is not available"))?;
        state = apply_move(ast, &state, m).map_err(|e| e.to_string())?;
    }
    Ok(state)
}

impl<'a> Sync<'a> {
    fn new(g: &'a ExtensiveFormGame, ast: &'a LudiiAst, collect_views: bool) -> Self {
        Sync {
            g,
            ast,
            depth_of: depths(g),
            collect_views,
            pairs: Vec::new(),
            report: EquivalenceReport::default(),
        }
    }

    fn trace(&self, mut idx: usize) -> Trace {
        let mut t = Trace::default();
        loop {
            let p = &self.pairs[idx];
            t.states.push(p.state);
            if let Some(c) = p.choice {
                t.choices.push(c);
            }
            match p.parent {
                Some(parent) => idx = parent,
                None => break,
            }
        }
        t.states.reverse();
        t.choices.reverse();
        t
    }

    /// The trace of `idx` extended by one interpreter choice.
    fn trace_then(&self, idx: usize, choice: Choice) -> Trace {
        let mut t = self.trace(idx);
        t.choices.push(choice);
        t
    }

    fn fail(&mut self, c: Criterion, trace: Trace, detail: String) {
        self.report.fail(
            c,
            Counterexample {
                trace,
                other: None,
                depth_mismatch: false,
                detail,
            },
        );
    }

    fn push(&mut self, state: StateId, depth: usize, parent: Option<usize>, choice: Option<Choice>, st: &InterpreterState) -> usize {
        let views = if self.collect_views {
            self.g.regular_players().map(|p| view_fingerprint(st, p.0)).collect()
        } else {
            Vec::new()
        };
        self.pairs.push(Pair {
            state,
            depth,
            parent,
            choice,
            views,
        });
        self.pairs.len() - 1
    }

    fn run(&mut self) {
        for c in [
            Criterion::EquivalentStates,
            Criterion::Mover,
            Criterion::MoveCount,
            Criterion::ChanceDistribution,
            Criterion::Payoffs,
        ] {
            self.report.checked(c);
        }
        let root_trace = Trace {
            states: vec![StateId::ROOT],
            choices: vec![],
        };
        let s0 = match initial_state(self.ast) {
            Ok(s) => s,
            Err(e) => {
                self.fail(Criterion::EquivalentStates, root_trace, format!("start rules fail: {e}"));
                return;
            }
        };
        if s0.neutral_vertex() != 0 {
            let detail = format!("initial neutral marker at vertex {}, expected 0", s0.neutral_vertex());
            self.fail(Criterion::EquivalentStates, root_trace, detail);
            return;
        }
        let root = self.push(StateId::ROOT, 0, None, None, &s0);
        let mut stack = vec![(root, s0)];
        while let Some((idx, st)) = stack.pop() {
            let children = self.visit(idx, &st);
            // Reverse so that children are visited in declared order.
            stack.extend(children.into_iter().rev());
        }
        self.report.states_checked = self.pairs.len();
    }

    /// Checks one pair and returns the pairs for its children.
    fn visit(&mut self, idx: usize, st: &InterpreterState) -> Vec<(usize, InterpreterState)> {
        let (g, ast) = (self.g, self.ast);
        let s = self.pairs[idx].state;
        let node = g.node(s);
        match (node, is_terminal(ast, st)) {
            (EfgNode::Terminal { payoffs }, Some(found)) => {
                if payoffs.as_slice() != found {
                    let detail = format!("state {}: payoffs {} differ from {}", s.0, show(found), show(payoffs));
                    self.fail(Criterion::Payoffs, self.trace(idx), detail);
                }
                return Vec::new();
            }
            (EfgNode::Terminal { .. }, None) => {
                let detail = format!("state {} is terminal but no end rule matches", s.0);
                self.fail(Criterion::Payoffs, self.trace(idx), detail);
                return Vec::new();
            }
            (_, Some(_)) => {
                let detail = format!("state {} is not terminal but an end rule matches", s.0);
                self.fail(Criterion::Payoffs, self.trace(idx), detail);
                return Vec::new();
            }
            (_, None) => {}
        }
        if let EfgNode::Decision { mover, .. } = node {
            if st.mover() != mover.0 {
                let detail = format!("state {}: mover is player {}, expected player {}", s.0, st.mover(), mover.0);
                self.fail(Criterion::Mover, self.trace(idx), detail);
            }
        }
        let children = node.children();
        let resolution = legal_moves(ast, st);
        let mut out = Vec::new();
        let mut covered = vec![false; children.len()];

        match node {
            EfgNode::Decision { .. } => {
                let moves = match resolution {
                    MoveResolution::Deterministic(moves) => moves,
                    MoveResolution::Chance(_) => {
                        let detail = format!("state {}: expected {} moves, found a chance distribution", s.0, children.len());
                        self.fail(Criterion::MoveCount, self.trace(idx), detail);
                        return out;
                    }
                };
                let counts_match = moves.len() == children.len();
                if !counts_match {
                    let detail = format!("state {}: {} legal moves, expected {}", s.0, moves.len(), children.len());
                    self.fail(Criterion::MoveCount, self.trace(idx), detail);
                }
                for (i, m) in moves.iter().enumerate() {
                    if let Some(next) = self.step(idx, st, m, Choice::Move(i), &children, &mut covered) {
                        out.push(next);
                    }
                }
                if counts_match {
                    for (c, _) in children.iter().zip(&covered).filter(|(_, done)| !**done) {
                        let detail = format!("state {}: no legal move leads to child {}", s.0, c.0);
                        self.fail(Criterion::EquivalentStates, self.trace(idx), detail);
                    }
                }
            }
            EfgNode::Chance { branches } => {
                let options: Vec<(u64, Vec<&MoveChoice>, Choice)> = match resolution {
                    MoveResolution::Deterministic(moves) if moves.len() == 1 => vec![(1, moves, Choice::Move(0))],
                    MoveResolution::Deterministic(moves) => {
                        let detail = format!(
                            "state {}: expected a chance distribution, found {} deterministic moves",
                            s.0,
                            moves.len()
                        );
                        self.fail(Criterion::ChanceDistribution, self.trace(idx), detail);
                        return out;
                    }
                    MoveResolution::Chance(b) => b
                        .into_iter()
                        .enumerate()
                        .map(|(i, (w, m))| (w, m, Choice::Branch(i)))
                        .collect(),
                };
                let total: u128 = options.iter().map(|o| u128::from(o.0)).sum();
                let mut induced = vec![Rational::zero(); children.len()];
                for (w, moves, choice) in &options {
                    if moves.len() != 1 {
                        let detail = format!("state {}: chance {choice} offers {} moves, expected 1", s.0, moves.len());
                        self.fail(Criterion::ChanceDistribution, self.trace_then(idx, *choice), detail);
                        continue;
                    }
                    let before = covered.clone();
                    let next = self.step(idx, st, moves[0], *choice, &children, &mut covered);
                    if let Some(next) = next {
                        out.push(next);
                    }
                    // Credit the weight to whichever child this branch reached.
                    let reached = (0..children.len()).find(|&c| covered[c] && !before[c]).or_else(|| {
                        apply_move(ast, st, moves[0])
                            .ok()
                            .and_then(|n| children.iter().position(|c| n.neutral_vertex() == c.0 as i64))
                    });
                    if let Some(c) = reached {
                        induced[c] += Rational::new(BigInt::from(*w), BigInt::from(total));
                    }
                }
                for (c, b) in branches.iter().enumerate() {
                    if induced[c] != b.probability {
                        let detail = format!(
                            "state {}: child {} has probability {}, expected {}",
                            s.0,
                            b.child.0,
                            format_rational(&induced[c]),
                            format_rational(&b.probability)
                        );
                        self.fail(Criterion::ChanceDistribution, self.trace(idx), detail);
                    }
                }
            }
            EfgNode::Terminal { .. } => unreachable!("terminals return above"),
        }
        out
    }

    /// Applies one move and pairs the result with the child it reaches.
    fn step(
        &mut self,
        idx: usize,
        st: &InterpreterState,
        m: &MoveChoice,
        choice: Choice,
        children: &[StateId],
        covered: &mut [bool],
    ) -> Option<(usize, InterpreterState)> {
        let s = self.pairs[idx].state;
        let depth = self.pairs[idx].depth + 1;
        let next = match apply_move(self.ast, st, m) {
            Ok(n) => n,
            Err(e) => {
                let detail = format!("state {}: {choice} cannot be applied: {e}", s.0);
                self.fail(Criterion::EquivalentStates, self.trace_then(idx, choice), detail);
                return None;
            }
        };
        let v = next.neutral_vertex();
        let Some(c) = children.iter().position(|c| c.0 as i64 == v) else {
            let detail = format!("state {}: {choice} moves the neutral marker to vertex {v}, which is not a child", s.0);
            self.fail(Criterion::EquivalentStates, self.trace_then(idx, choice), detail);
            return None;
        };
        if covered[c] {
            return None;
        }
        covered[c] = true;
        let child = children[c];
        if self.depth_of[child.0] != depth {
            let detail = format!(
                "state {} reached after {depth} moves, but lies at depth {}",
                child.0, self.depth_of[child.0]
            );
            self.fail(Criterion::EquivalentStates, self.trace_then(idx, choice), detail);
        }
        let pair = self.push(child, depth, Some(idx), Some(choice), &next);
        Some((pair, next))
    }

    fn first_difference(&self, p: PlayerId, a: usize, b: usize) -> String {
        let sa = replay(self.ast, &self.trace(a).choices);
        let sb = replay(self.ast, &self.trace(b).choices);
        match (sa, sb) {
            (Ok(sa), Ok(sb)) => {
                let (va, vb) = (observe(&sa, p.0), observe(&sb, p.0));
                match va.cells.iter().zip(&vb.cells).position(|(x, y)| x != y) {
                    Some(v) => format!("first differing vertex {v} ({} vs {})", cell(va.cells[v]), cell(vb.cells[v])),
                    None => "views are equal but their digests differ".to_string(),
                }
            }
            _ => "views could not be replayed".to_string(),
        }
    }

    fn views_equal(&self, p: PlayerId, a: usize, b: usize) -> bool {
        match (replay(self.ast, &self.trace(a).choices), replay(self.ast, &self.trace(b).choices)) {
            (Ok(sa), Ok(sb)) => observe(&sa, p.0) == observe(&sb, p.0),
            _ => true,
        }
    }

    fn indistinguishability(&mut self) {
        self.report.checked(Criterion::Indistinguishability);
        let players: Vec<PlayerId> = self.g.regular_players().collect();
        for (pi, &p) in players.iter().enumerate() {
            let mut by_infoset: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            let mut by_view: HashMap<u128, Vec<usize>> = HashMap::new();
            for (i, pair) in self.pairs.iter().enumerate() {
                by_infoset.entry(self.g.infoset(p, pair.state).0).or_default().push(i);
                by_view.entry(pair.views[pi]).or_default().push(i);
            }
            let mut found: Vec<(usize, usize, String)> = Vec::new();
            // Same information set implies equal views.
            for members in by_infoset.values() {
                let rep = members[0];
                for &m in &members[1..] {
                    self.report.pairs_compared += 1;
                    if self.pairs[m].views[pi] != self.pairs[rep].views[pi] {
                        let diff = self.first_difference(p, rep, m);
                        found.push((rep, m, format!("same information set but different views; {diff}")));
                    }
                }
            }
            // Equal views imply the same information set.
            let mut groups: Vec<&Vec<usize>> = by_view.values().collect();
            groups.sort();
            for members in groups {
                let rep = members[0];
                let rep_set = self.g.infoset(p, self.pairs[rep].state);
                for &m in &members[1..] {
                    self.report.pairs_compared += 1;
                    // Digests only prune; equal digests are confirmed on the views.
                    if self.g.infoset(p, self.pairs[m].state) != rep_set && self.views_equal(p, rep, m) {
                        found.push((rep, m, "different information sets but identical views".to_string()));
                    }
                }
            }
            for (a, b, why) in found {
                let (sa, sb) = (self.pairs[a].state, self.pairs[b].state);
                let cx = Counterexample {
                    trace: self.trace(a),
                    other: Some(self.trace(b)),
                    depth_mismatch: self.pairs[a].depth != self.pairs[b].depth,
                    detail: format!("player {}: states {} and {}: {why}", p.0, sa.0, sb.0),
                };
                self.report.fail(Criterion::Indistinguishability, cx);
            }
        }
    }
}

fn show(payoffs: &[crate::num::Decimal]) -> String {
    let parts: Vec<String> = payoffs.iter().map(|d| d.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn cell(c: Cell) -> String {
    match c {
        Cell::Hidden => "hidden".into(),
        Cell::Empty => "empty".into(),
        Cell::Piece(o) => format!("piece of {o}"),
    }
}

/// Leaves reached by the interpreter alone, with chance probabilities.
fn interpreter_leaves(g: &ExtensiveFormGame, ast: &LudiiAst, report: &mut EquivalenceReport) {
    report.checked(Criterion::TrajectoryBijection);
    let fail = |report: &mut EquivalenceReport, detail: String, trace: Trace| {
        report.fail(
            Criterion::TrajectoryBijection,
            Counterexample {
                trace,
                other: None,
                depth_mismatch: false,
                detail,
            },
        )
    };
    let mut expected: BTreeMap<(i64, Rational), usize> = BTreeMap::new();
    let mut paths: HashMap<i64, Trace> = HashMap::new();
    for t in enumerate_trajectories(g) {
        *expected.entry((t.leaf().0 as i64, t.probability.clone())).or_default() += 1;
        paths.insert(
            t.leaf().0 as i64,
            Trace {
                states: t.states.clone(),
                choices: vec![],
            },
        );
    }
    let mut found: BTreeMap<(i64, Rational), usize> = BTreeMap::new();
    let budget = 4 * g.num_states() + 16;
    let mut visited = 0usize;
    let Ok(s0) = initial_state(ast) else {
        fail(report, "start rules fail".into(), Trace::default());
        return;
    };
    let mut stack: Vec<(InterpreterState, Rational, Vec<Choice>)> = vec![(s0, Rational::from_integer(1.into()), vec![])];
    while let Some((st, prob, choices)) = stack.pop() {
        visited += 1;
        if visited > budget {
            let detail = format!("the description's game tree exceeds {budget} states");
            fail(report, detail, Trace::default());
            return;
        }
        if is_terminal(ast, &st).is_some() {
            *found.entry((st.neutral_vertex(), prob)).or_default() += 1;
            continue;
        }
        let options: Vec<(Rational, &MoveChoice, Choice)> = match legal_moves(ast, &st) {
            MoveResolution::Deterministic(moves) => moves
                .into_iter()
                .enumerate()
                .map(|(i, m)| (prob.clone(), m, Choice::Move(i)))
                .collect(),
            MoveResolution::Chance(branches) => {
                let total: u128 = branches.iter().map(|b| u128::from(b.0)).sum();
                branches
                    .into_iter()
                    .enumerate()
                    .flat_map(|(i, (w, ms))| {
                        let p = &prob * Rational::new(BigInt::from(w), BigInt::from(total));
                        ms.into_iter().map(move |m| (p.clone(), m, Choice::Branch(i)))
                    })
                    .collect()
            }
        };
        let trace = || Trace {
            states: vec![],
            choices: choices.clone(),
        };
        if options.is_empty() {
            let detail = format!("no legal moves and no end rule with the neutral marker at {}", st.neutral_vertex());
            fail(report, detail, trace());
            continue;
        }
        for (p, m, c) in options.into_iter().rev() {
            match apply_move(ast, &st, m) {
                Ok(next) => {
                    let mut path = choices.clone();
                    path.push(c);
                    stack.push((next, p, path));
                }
                Err(e) => {
                    let mut t = trace();
                    t.choices.push(c);
                    fail(report, format!("move cannot be applied: {e}"), t);
                }
            }
        }
    }
    let keys: std::collections::BTreeSet<_> = expected.keys().chain(found.keys()).cloned().collect();
    for key in keys {
        let (e, f) = (expected.get(&key).copied().unwrap_or(0), found.get(&key).copied().unwrap_or(0));
        if e != f {
            let detail = format!(
                "leaf {} with probability {}: {e} trajectories in the game, {f} in the description",
                key.0,
                format_rational(&key.1)
            );
            fail(report, detail, paths.get(&key.0).cloned().unwrap_or_default());
        }
    }
}

/// Criteria 1, 2a to 2e and the trajectory bijection for a lowered description.
pub fn check_equivalence(g: &ExtensiveFormGame, ast: &LudiiAst) -> EquivalenceReport {
    let mut sync = Sync::new(g, ast, false);
    sync.report.checked(Criterion::SubsetValidity);
    sync.run();
    let mut report = sync.report;
    interpreter_leaves(g, ast, &mut report);
    report
}

/// Criterion 3 over every reachable pair of equivalent states.
pub fn check_indistinguishability(g: &ExtensiveFormGame, ast: &LudiiAst) -> EquivalenceReport {
    let mut sync = Sync::new(g, ast, true);
    sync.run();
    sync.indistinguishability();
    let mut report = EquivalenceReport {
        states_checked: sync.report.states_checked,
        pairs_compared: sync.report.pairs_compared,
        ..Default::default()
    };
    report.results.insert(
        Criterion::Indistinguishability,
        sync.report.results.remove(&Criterion::Indistinguishability).unwrap_or_default(),
    );
    report
}

/// Every criterion from a single traversal.
pub fn verify(g: &ExtensiveFormGame, ast: &LudiiAst) -> EquivalenceReport {
    let mut sync = Sync::new(g, ast, true);
    sync.report.checked(Criterion::SubsetValidity);
    sync.run();
    sync.indistinguishability();
    let mut report = sync.report;
    interpreter_leaves(g, ast, &mut report);
    report
}

/// Parses `text` first; a parse failure fails criterion 1 and skips the rest.
pub fn verify_text(g: &ExtensiveFormGame, text: &str) -> EquivalenceReport {
    match parse_lgdl(text) {
        Ok(ast) => verify(g, &ast),
        Err(e) => {
            let mut report = EquivalenceReport::default();
            for d in e.diagnostics() {
                report.fail(
                    Criterion::SubsetValidity,
                    Counterexample {
                        trace: Trace::default(),
                        other: None,
                        depth_mismatch: false,
                        detail: d.to_string(),
                    },
                );
            }
            report
        }
    }
}
