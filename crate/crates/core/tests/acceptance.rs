//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Derived values are recomputed here by small oracles that only use the
//! public game and interpreter APIs, never the checker under test.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use efg2ludii::check::{
    check_equivalence, mutate, statistical_playout_check, verify, verify_text, Criterion, Mutation, Status,
};
use efg2ludii::efg::{generate_game, EfgNode, GameBuilder, GeneratorConfig};
use efg2ludii::format::{parse_efg, serialize_efg};
use efg2ludii::interp::{
    apply_move, initial_state, is_terminal, legal_moves, parse_lgdl, playout_with, LudiiAst, MoveResolution,
    UniformPolicy, NEUTRAL,
};
use efg2ludii::lgdl::{compile, read_term, render, Term, Value};
use efg2ludii::rng::SplitMix64;
use efg2ludii::{ExtensiveFormGame, Rational, StateId};
use num_bigint::BigInt;

const SUITE_SIZE: usize = 200;

/// Suite games each mutation is injected into.
const MUTATION_GAMES: usize = 40;

/// Criteria established by the synchronized traversal and view comparison.
const TRAVERSAL_CRITERIA: [Criterion; 7] = [
    Criterion::SubsetValidity,
    Criterion::EquivalentStates,
    Criterion::Mover,
    Criterion::MoveCount,
    Criterion::ChanceDistribution,
    Criterion::Payoffs,
    Criterion::Indistinguishability,
];

const GOLDEN_END: &str = r#"(end {
  (if (= (where "Marker" Neutral) 88)
    (payoffs {
      (payoff P1 -1)
      (payoff P2 0.5)
      (payoff P3 1)
    })
  )
  (if (= (where "Marker" Neutral) 2077)
    (payoffs {
      (payoff P1 10)
      (payoff P2 12)
      (payoff P3 2020)
    })
  )
})"#;

const TIC_TAC_TOE: &str = r#"(game "Tic-Tac-Toe"
  (players 2)
  (equipment {
    (board (square 3))
    (piece "Disc" P1)
    (piece "Cross" P2)
  })
  (rules
    (play (move Add (to (sites Empty))))
    (end (if (is Line 3) (result Mover win)))
  )
)"#;

struct Entry {
    seed: u64,
    game: ExtensiveFormGame,
}

/// A compiled suite game. Built on demand: keeping 200 descriptions alive
/// at once costs gigabytes.
struct Compiled {
    text: String,
    root: Term,
    ast: LudiiAst,
}

impl Entry {
    fn compile(&self) -> Compiled {
        let desc = compile(&self.game, &format!("Suite{}", self.seed)).expect("suite games compile");
        let text = desc.text();
        let ast = parse_lgdl(&text).expect("compiled text lowers");
        Compiled {
            text,
            root: desc.root,
            ast,
        }
    }
}

fn has_chance(g: &ExtensiveFormGame) -> bool {
    g.nodes().iter().any(|n| matches!(n, EfgNode::Chance { .. }))
}

fn has_merged_set(g: &ExtensiveFormGame) -> bool {
    g.regular_players().any(|p| g.states().any(|s| g.infoset_members(p, s).len() > 1))
}

/// The first 200 seeds whose games have a chance state and a non-singleton
/// information set, cycling through 1 to 4 players.
fn build_suite() -> Vec<Entry> {
    let mut out = Vec::with_capacity(SUITE_SIZE);
    let mut seed = 0u64;
    while out.len() < SUITE_SIZE {
        let cfg = GeneratorConfig {
            players: 1 + out.len() % 4,
            seed,
            ..Default::default()
        };
        seed += 1;
        let game = generate_game(&cfg);
        if !has_chance(&game) || !has_merged_set(&game) {
            continue;
        }
        out.push(Entry { seed: cfg.seed, game });
    }
    out
}

struct Outcome {
    pass: bool,
    note: String,
}

fn outcome(pass: bool, note: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        note: note.into(),
    }
}

fn find<'a>(t: &'a Term, head: &str) -> Vec<&'a Term> {
    let mut out = Vec::new();
    t.walk(|x| {
        if x.head == head {
            out.push(x);
        }
    });
    out
}

fn is_set_hidden(t: &Term) -> bool {
    t.head == "set" && matches!(t.positional().next(), Some(Value::Ident(s)) if s == "Hidden")
}

/// A path from the root to state 87, which branches into terminal 88 and a
/// second path ending in terminal 2077. Movers cycle through three players.
fn branching_path_game() -> ExtensiveFormGame {
    let mut b = GameBuilder::new(3);
    for s in 0..2077usize {
        if s == 88 {
            continue;
        }
        let children: Vec<usize> = if s == 87 { vec![88, 89] } else { vec![s + 1] };
        b = b.decision(s, 1 + (s % 3) as u32, children);
    }
    b.terminal(88, ["-1", "0.5", "1"])
        .terminal(2077, ["10", "12", "2020"])
        .build()
        .expect("path game is valid")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let desc = compile(&branching_path_game(), "Path").expect("compiles");
    let elapsed = start.elapsed();
    let ends = find(&desc.root, "end");
    let golden = read_term(GOLDEN_END).expect("golden parses");
    let clauses = |t: &Term| -> Vec<String> {
        let mut v: Vec<String> = match t.positional().next() {
            Some(Value::Array(items)) => items.iter().filter_map(Value::as_term).map(render).collect(),
            _ => Vec::new(),
        };
        v.sort();
        v
    };
    let same = ends.len() == 1 && clauses(ends[0]) == clauses(&golden);
    let literals: Vec<String> = find(ends[0], "payoff")
        .iter()
        .filter_map(|p| match p.positional().nth(1) {
            Some(Value::Number(d)) => Some(d.to_string()),
            _ => None,
        })
        .collect();
    let exact = literals == ["-1", "0.5", "1", "10", "12", "2020"];
    let text = desc.text();
    let bytes = ["(payoff P1 -1)", "(payoff P2 0.5)", "(payoff P3 2020)"].iter().all(|l| text.contains(l));
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        same && exact && bytes && fast,
        format!("structural={same} literals={literals:?} compile_time={elapsed:.2?}"),
    )
}

fn criterion_2(suite: &[Entry]) -> Outcome {
    let mut checked = [0usize; 5];
    let mut bad = Vec::new();
    for e in suite {
        let k = e.game.num_players();
        let c = e.compile();
        let start = find(&c.root, "start");
        let places = find(start[0], "place").len();
        let hides = find(start[0], "set").into_iter().filter(|t| is_set_hidden(t)).count();
        if places != k + 1 || hides != 1 + k * (k - 1) {
            bad.push(format!("seed {}: {places} places, {hides} hides", e.seed));
        }
        for mv in find(&c.root, "move") {
            let effects = find(mv, "and")
                .first()
                .and_then(|a| match a.positional().next() {
                    Some(Value::Array(items)) => Some(items.len()),
                    _ => None,
                })
                .unwrap_or(0);
            if effects != 2 * k + k * (k - 1) + 3 {
                bad.push(format!("seed {}: move with {effects} effects", e.seed));
            }
        }
        checked[k] += 1;
    }
    let all_k = (1..=4).all(|k| checked[k] > 0);
    let note = format!("games per k={:?} mismatches={}", &checked[1..], bad.len());
    let note = match bad.first() {
        Some(b) => format!("{note} first: {b}"),
        None => note,
    };
    outcome(bad.is_empty() && all_k, note)
}

fn criterion_3(suite: &[Entry]) -> Outcome {
    let start = Instant::now();
    let mut failed = Vec::new();
    let (mut states, mut pairs) = (0, 0);
    for e in suite {
        let r = verify(&e.game, &e.compile().ast);
        states += r.states_checked;
        pairs += r.pairs_compared;
        let exact_tree = r.states_checked == e.game.num_states();
        if !TRAVERSAL_CRITERIA.iter().all(|c| r.status(*c) == Status::Pass) || !exact_tree {
            failed.push(format!("seed {}: {:?}", e.seed, r.failing()));
        }
    }
    let elapsed = start.elapsed();
    let note = format!(
        "games={} failed={} states={states} view_comparisons={pairs} time={elapsed:.2?}{}",
        suite.len(),
        failed.len(),
        failed.first().map(|f| format!(" first: {f}")).unwrap_or_default()
    );
    outcome(failed.is_empty() && elapsed < Duration::from_secs(300), note)
}

type Leaves = BTreeMap<(i64, Rational), usize>;

fn game_leaves(g: &ExtensiveFormGame) -> Leaves {
    let mut out = Leaves::new();
    let mut stack = vec![(StateId(0), Rational::from_integer(1.into()))];
    while let Some((s, p)) = stack.pop() {
        match g.node(s) {
            EfgNode::Terminal { .. } => *out.entry((s.0 as i64, p)).or_default() += 1,
            EfgNode::Decision { children, .. } => stack.extend(children.iter().map(|&c| (c, p.clone()))),
            EfgNode::Chance { branches } => {
                stack.extend(branches.iter().map(|b| (b.child, &p * &b.probability)));
            }
        }
    }
    out
}

fn interpreter_leaves(ast: &LudiiAst, budget: usize) -> Option<Leaves> {
    let mut out = Leaves::new();
    let mut stack = vec![(initial_state(ast).ok()?, Rational::from_integer(1.into()))];
    let mut visited = 0;
    while let Some((st, p)) = stack.pop() {
        visited += 1;
        if visited > budget {
            return None;
        }
        if is_terminal(ast, &st).is_some() {
            *out.entry((st.neutral_vertex(), p)).or_default() += 1;
            continue;
        }
        match legal_moves(ast, &st) {
            MoveResolution::Deterministic(moves) => {
                for m in moves {
                    stack.push((apply_move(ast, &st, m).ok()?, p.clone()));
                }
            }
            MoveResolution::Chance(branches) => {
                let total: u64 = branches.iter().map(|b| b.0).sum();
                for (w, moves) in branches {
                    let q = &p * Rational::new(BigInt::from(w), BigInt::from(total));
                    for m in moves {
                        stack.push((apply_move(ast, &st, m).ok()?, q.clone()));
                    }
                }
            }
        }
    }
    Some(out)
}

fn criterion_4(suite: &[Entry]) -> Outcome {
    let mut failed = Vec::new();
    let mut trajectories = 0;
    for e in suite {
        let expected = game_leaves(&e.game);
        trajectories += expected.values().sum::<usize>();
        let c = e.compile();
        let found = interpreter_leaves(&c.ast, 4 * e.game.num_states());
        let checker = check_equivalence(&e.game, &c.ast).status(Criterion::TrajectoryBijection);
        if found.as_ref() != Some(&expected) || checker != Status::Pass {
            failed.push(e.seed);
        }
    }
    outcome(
        failed.is_empty(),
        format!("games={} trajectories={trajectories} failed_seeds={failed:?}", suite.len()),
    )
}

fn criterion_5(suite: &[Entry]) -> Outcome {
    let mut all = true;
    let mut notes = Vec::new();
    for m in Mutation::ALL {
        let (mut applicable, mut exact, mut missed) = (0, 0, 0);
        for e in &suite[..MUTATION_GAMES] {
            let root = compile(&e.game, "Mutant").expect("suite games compile").root;
            let Some(mutated) = mutate(&root, m) else { continue };
            applicable += 1;
            let r = verify_text(&e.game, &render(&mutated));
            let failing: Vec<Criterion> = TRAVERSAL_CRITERIA.into_iter().filter(|c| r.status(*c) == Status::Fail).collect();
            if failing == [m.target()] {
                exact += 1;
            } else if !failing.contains(&m.target()) {
                missed += 1;
            }
        }
        all &= exact > 0;
        notes.push(format!("{}->{}: {exact}/{applicable} exact, {missed} undetected", m.name(), m.target()));
    }
    outcome(all, notes.join("; "))
}

fn criterion_6(suite: &[Entry]) -> Outcome {
    let mut moves = 0usize;
    let mut states = 0usize;
    let mut violations = 0usize;
    let mut errors = 0usize;
    let mut rng = SplitMix64::new(6);
    // Ten playouts per game per pass, until enough moves have been applied.
    'outer: for _pass in 0..100 {
        for e in suite {
            let c = e.compile();
            for _ in 0..10 {
                let mut first = true;
                let played = playout_with(&c.ast, &mut rng, &mut UniformPolicy, |st| {
                    let markers = (0..st.num_vertices()).filter(|&v| st.piece_at(v) == Some(NEUTRAL)).count();
                    if !first {
                        states += 1;
                        violations += usize::from(markers != 1);
                    }
                    first = false;
                });
                match played {
                    Ok(p) => moves += p.steps.len(),
                    Err(_) => errors += 1,
                }
            }
            if moves >= 10_000 {
                break 'outer;
            }
        }
    }
    outcome(
        moves >= 10_000 && violations == 0 && errors == 0 && states == moves,
        format!("moves={moves} post_move_states={states} violations={violations} playout_errors={errors}"),
    )
}

fn criterion_7() -> Outcome {
    let third = Rational::new(1.into(), 3.into());
    let g = GameBuilder::new(1)
        .chance(0, [(third.clone(), 1), (Rational::from_integer(1.into()) - &third, 2)])
        .terminal(1, ["0"])
        .terminal(2, ["1"])
        .build()
        .expect("valid");
    let ast = parse_lgdl(&compile(&g, "Coin").expect("compiles").text()).expect("lowers");
    let n = 10_000usize;
    let run = || {
        let mut rng = SplitMix64::new(7);
        let mut dump = String::new();
        let mut hits = 0usize;
        for _ in 0..n {
            let p = playout_with(&ast, &mut rng, &mut UniformPolicy, |_| {}).expect("plays");
            hits += usize::from(p.final_state.neutral_vertex() == 1);
            dump += &p.dump();
        }
        (hits, dump)
    };
    let (hits, dump) = run();
    let (hits2, dump2) = run();
    let p = 1.0 / 3.0;
    let freq = hits as f64 / n as f64;
    let tol = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let report = statistical_playout_check(&g, &ast, n, 7, 3.0);
    let reproducible = hits == hits2 && dump == dump2 && report == statistical_playout_check(&g, &ast, n, 7, 3.0);
    outcome(
        (freq - p).abs() <= tol && reproducible && report.passed(),
        format!(
            "freq(leaf 1)={freq:.4} expected={p:.4} tolerance={tol:.4} reproducible={reproducible} checker_max_dev={:.4}",
            report.max_deviation()
        ),
    )
}

fn criterion_8(suite: &[Entry]) -> Outcome {
    let mut efg_bad = Vec::new();
    let mut lgdl_bad = Vec::new();
    for e in suite {
        if parse_efg(&serialize_efg(&e.game)).ok().as_ref() != Some(&e.game) {
            efg_bad.push(e.seed);
        }
        let c = e.compile();
        if parse_lgdl(&render(&c.root)).is_err() || parse_lgdl(&c.text).is_err() {
            lgdl_bad.push(e.seed);
        }
    }
    let rejection = match parse_lgdl(TIC_TAC_TOE) {
        Ok(_) => "accepted".to_string(),
        Err(err) => err
            .diagnostics()
            .into_iter()
            .find(|d| d.message.starts_with("unsupported ludeme"))
            .map(|d| d.to_string())
            .unwrap_or_else(|| format!("rejected without a subset diagnostic: {err}")),
    };
    let rejected = rejection.contains("unsupported ludeme");
    outcome(
        efg_bad.is_empty() && lgdl_bad.is_empty() && rejected,
        format!("efg_failures={efg_bad:?} lgdl_failures={lgdl_bad:?} tic_tac_toe: {rejection}"),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    println!("{} {name}: {} [{elapsed:.1?}]", if o.pass { "PASS" } else { "FAIL" }, o.note);
    o.pass
}

fn main() -> ExitCode {
    let suite = build_suite();
    let results = [
        run("criterion 1 (end-rule golden)", criterion_1),
        run("criterion 2 (construction counts)", || criterion_2(&suite)),
        run("criterion 3 (equivalence suite)", || criterion_3(&suite)),
        run("criterion 4 (trajectory bijection)", || criterion_4(&suite)),
        run("criterion 5 (fault injection)", || criterion_5(&suite)),
        run("criterion 6 (neutral-marker conservation)", || criterion_6(&suite)),
        run("criterion 7 (statistical chance check)", criterion_7),
        run("criterion 8 (round-trips and subset boundary)", || criterion_8(&suite)),
    ];
    if results.iter().all(|&p| p) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
