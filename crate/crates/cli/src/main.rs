//! `efg2ludii`: compile, verify, simulate, inspect and generate games.
//!
//! Exit status: 0 success, 1 verification failure, 2 input or parse error,
//! 3 internal invariant violation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efg2ludii::check::{statistical_playout_check, verify, verify_text};
use efg2ludii::efg::{depths, enumerate_trajectories, generate_game, validate_game, EfgNode, GeneratorConfig};
use efg2ludii::format::{parse_efg, serialize_efg};
use efg2ludii::interp::{parse_lgdl, playout_with, LudiiAst, UniformPolicy};
use efg2ludii::lgdl::{compile, prepare};
use efg2ludii::num::Decimal;
use efg2ludii::rng::SplitMix64;
use efg2ludii::ExtensiveFormGame;

#[derive(Debug, Parser)]
#[command(name = "efg2ludii", version, about = "Compile extensive-form games into Ludii game descriptions")]
struct Cli {
    /// Seed for every random choice; falls back to EFG2LUDII_SEED, then 0.
    #[arg(long, global = true, env = "EFG2LUDII_SEED", default_value_t = 0)]
    seed: u64,
    /// Print only results, no notes.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile an .efg-tree game into a .lud description.
    Compile {
        #[command(flatten)]
        input: Input,
        /// Output file; standard output if omitted.
        #[arg(long = "out", value_name = "PATH")]
        out: Option<PathBuf>,
        /// Game name; defaults to the input file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Check a description against its game on every criterion.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Description to check; the game is compiled in memory if omitted.
        #[arg(long, value_name = "PATH")]
        lud: Option<PathBuf>,
        /// Also run this many playouts and compare leaf frequencies.
        #[arg(long, default_value_t = 0)]
        n: usize,
        /// Allowed deviation of leaf frequencies, in standard deviations.
        #[arg(long, default_value_t = 3.0, value_parser = positive)]
        tolerance: f64,
    },
    /// Run seeded playouts and summarize payoffs.
    Simulate {
        #[command(flatten)]
        input: Input,
        /// Play this description instead of compiling the game.
        #[arg(long, value_name = "PATH")]
        lud: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Print statistics about a game.
    Info {
        #[command(flatten)]
        input: Input,
    },
    /// Write a random valid .efg-tree game.
    Gen {
        #[arg(long = "out", value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        players: usize,
        #[arg(long, default_value_t = 400)]
        max_nodes: usize,
        #[arg(long, default_value_t = 4)]
        branching: usize,
        #[arg(long, default_value_t = 0.3, value_parser = unit)]
        chance_rate: f64,
        #[arg(long, default_value_t = 0.5, value_parser = unit)]
        merge_rate: f64,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
    },
}

#[derive(Debug, Args)]
struct Input {
    /// Game file in .efg-tree format.
    #[arg(long = "in", value_name = "PATH", required_unless_present = "path")]
    input: Option<PathBuf>,
    #[arg(value_name = "INPUT", conflicts_with = "input")]
    path: Option<PathBuf>,
}

impl Input {
    fn path(&self) -> &Path {
        self.input.as_deref().or(self.path.as_deref()).expect("clap requires one")
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn unit(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        _ => Err(format!("`{s}` is not in [0, 1]")),
    }
}

/// A failed command and its exit status.
#[derive(Debug)]
enum Failure {
    Verification,
    Input(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Input(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    seed: u64,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Internal(format!("writing output: {e}"))),
    }
}

/// Reads a game and applies the transforms compilation needs.
fn load_game(ctx: &Ctx, path: &Path) -> Result<ExtensiveFormGame, Failure> {
    let g = parse_efg(&read(path)?).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))?;
    for w in validate_game(&g).warnings {
        ctx.note(format!("warning: {w}"));
    }
    let (g, notes) = prepare(&g);
    for n in notes {
        ctx.note(format!("applied {n}"));
    }
    Ok(g)
}

fn game_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn compile_text(g: &ExtensiveFormGame, name: &str) -> Result<String, Failure> {
    compile(g, name).map(|d| d.text()).map_err(|e| Failure::Input(e.to_string()))
}

/// The description to run: `--lud` if given, else the compiled game.
fn load_ast(g: &ExtensiveFormGame, game_path: &Path, lud: Option<&Path>) -> Result<LudiiAst, Failure> {
    match lud {
        Some(p) => parse_lgdl(&read(p)?).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => parse_lgdl(&compile_text(g, &game_name(game_path))?)
            .map_err(|e| Failure::Internal(format!("compiled description does not lower: {e}"))),
    }
}

fn run(cli: Cli) -> Outcome {
    let ctx = Ctx {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Compile { input, out, name } => {
            let g = load_game(&ctx, input.path())?;
            let name = name.unwrap_or_else(|| game_name(input.path()));
            write_out(out.as_deref(), &compile_text(&g, &name)?)
        }
        Command::Verify {
            input,
            lud,
            n,
            tolerance,
        } => {
            let g = load_game(&ctx, input.path())?;
            let report = match &lud {
                Some(p) => verify_text(&g, &read(p)?),
                None => {
                    let ast = load_ast(&g, input.path(), None)?;
                    verify(&g, &ast)
                }
            };
            print!("{}", report.render_records());
            ctx.note(report.summary());
            let mut ok = report.all_passed();
            if n > 0 && ok {
                let ast = load_ast(&g, input.path(), lud.as_deref())?;
                let stats = statistical_playout_check(&g, &ast, n, ctx.seed, tolerance);
                print!("{}", stats.render_records());
                ok &= stats.passed();
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Simulate { input, lud, n } => {
            let g = load_game(&ctx, input.path())?;
            let ast = load_ast(&g, input.path(), lud.as_deref())?;
            simulate(&ctx, &ast, n)
        }
        Command::Info { input } => {
            let g = parse_efg(&read(input.path())?)
                .map_err(|e| Failure::Input(format!("{}:{e}", input.path().display())))?;
            print!("{}", info(&g));
            Ok(())
        }
        Command::Gen {
            out,
            players,
            max_nodes,
            branching,
            chance_rate,
            merge_rate,
            max_depth,
        } => {
            if !(1..=efg2ludii::efg::MAX_PLAYERS).contains(&players) || max_nodes == 0 || branching == 0 {
                return Err(Failure::Input("players, max nodes and branching must be positive".into()));
            }
            let cfg = GeneratorConfig {
                players,
                max_nodes,
                branching,
                chance_rate,
                merge_rate,
                max_depth,
                seed: ctx.seed,
            };
            let g = generate_game(&cfg);
            if !validate_game(&g).is_valid() {
                return Err(Failure::Internal("generated game failed validation".into()));
            }
            write_out(out.as_deref(), &serialize_efg(&g))
        }
    }
}

fn simulate(ctx: &Ctx, ast: &LudiiAst, n: usize) -> Outcome {
    let mut rng = SplitMix64::new(ctx.seed);
    let k = ast.players;
    let mut totals = vec![Decimal::zero().to_rational(); k];
    let mut out = String::new();
    let mut leaves: BTreeMap<i64, usize> = BTreeMap::new();
    for i in 0..n {
        let mut path = vec![0i64];
        let p = playout_with(ast, &mut rng, &mut UniformPolicy, |_| {})
            .map_err(|e| Failure::Internal(format!("playout {i}: {e}")))?;
        path.extend(p.steps.iter().map(|s| s.after));
        let path: Vec<String> = path.iter().map(i64::to_string).collect();
        let payoffs: Vec<String> = p.payoffs.iter().map(Decimal::to_string).collect();
        out += &format!("playout={i} path={} payoffs={}\n", path.join(","), payoffs.join(","));
        *leaves.entry(p.final_state.neutral_vertex()).or_default() += 1;
        for (t, u) in totals.iter_mut().zip(&p.payoffs) {
            *t += u.to_rational();
        }
    }
    for (p, t) in totals.iter().enumerate() {
        let mean = if n == 0 { 0.0 } else { efg2ludii::num::rational_to_f64(t) / n as f64 };
        out += &format!("player={} mean_payoff={mean:.6}\n", p + 1);
    }
    for (leaf, c) in leaves {
        out += &format!("leaf={leaf} count={c}\n");
    }
    write_out(None, &out)
}

fn info(g: &ExtensiveFormGame) -> String {
    let d = depths(g);
    let count = |f: fn(&EfgNode) -> bool| g.nodes().iter().filter(|n| f(n)).count();
    let mut out = format!(
        "states={}\nplayers={}\ndepth={}\ndecision_states={}\nchance_states={}\nterminal_states={}\ntrajectories={}\n",
        g.num_states(),
        g.num_players(),
        d.iter().max().copied().unwrap_or(0),
        count(|n| matches!(n, EfgNode::Decision { .. })),
        count(EfgNode::is_chance),
        count(EfgNode::is_terminal),
        enumerate_trajectories(g).len(),
    );
    for (p, part) in g.partition().iter() {
        let sizes: Vec<usize> = part.sets().iter().map(Vec::len).collect();
        out += &format!(
            "player={} infosets={} non_singleton={} largest={}\n",
            p.0,
            sizes.len(),
            sizes.iter().filter(|&&s| s > 1).count(),
            sizes.iter().max().copied().unwrap_or(0)
        );
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verification => {}
                Failure::Input(msg) => eprintln!("error: {msg}"),
                Failure::Internal(msg) => eprintln!("internal error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
