//! Lowering of a ludeme tree into the executable subset.
//!
//! Lowering never stops at the first problem: every diagnostic found in one
//! pass is reported, each with the position of the offending ludeme.

use std::collections::HashMap;
use std::fmt;

use crate::efg::MAX_PLAYERS;
use crate::lgdl::{read_term, ReadError, Span, Term, Value};
use crate::num::Decimal;

/// Ludemes the subset knows about. Anything else is reported as unsupported.
const KNOWN: &[&str] = &[
    "game", "players", "equipment", "piece", "board", "graph", "regions", "rules", "start", "place",
    "set", "play", "if", "=", "where", "or", "random", "move", "from", "to", "then", "and", "fromTo",
    "remove", "add", "sites", "end", "payoffs", "payoff", "player",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LgdlError {
    #[error("{0}")]
    Read(#[from] ReadError),
    #[error("{}", join(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl LgdlError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            LgdlError::Read(e) => vec![Diagnostic {
                span: e.span,
                message: e.message.clone(),
            }],
            LgdlError::Invalid(d) => d.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegionId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observers {
    /// Every regular player.
    All,
    Player(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Effect {
    FromTo { from: usize, to: usize },
    RemoveAllOf(u32),
    AddToRegion { player: u32, region: RegionId },
    SetHidden { region: RegionId, to: Observers },
    SetNextPlayer(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StartEffect {
    /// Owner 0 is the neutral marker.
    Place { owner: u32, vertex: usize },
    SetHidden { region: RegionId, to: Observers },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MoveChoice {
    pub select: usize,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Or(Vec<MoveChoice>),
    Random(Vec<(u64, MoveChoice)>),
}

/// `(if (= (where "Marker" Neutral) vertex) generator ...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayClause {
    pub vertex: i64,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndClause {
    pub vertex: i64,
    /// Indexed by player minus one.
    pub payoffs: Vec<Decimal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub name: String,
    pub sites: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LudiiAst {
    pub term: Term,
    pub name: String,
    pub players: usize,
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub regions: Vec<Region>,
    region_index: HashMap<String, RegionId>,
    pub start: Vec<StartEffect>,
    /// The if-chain in source order; the fallback is the final else.
    pub clauses: Vec<PlayClause>,
    pub fallback: Generator,
    first_clause: HashMap<i64, usize>,
    pub end: Vec<EndClause>,
    first_end: HashMap<i64, usize>,
}

impl LudiiAst {
    pub fn region(&self, id: RegionId) -> &Region {
        &self.regions[id.0]
    }

    pub fn region_id(&self, name: &str) -> Option<RegionId> {
        self.region_index.get(name).copied()
    }

    /// Generator of the first clause testing `vertex`, else the fallback.
    pub fn generator_at(&self, vertex: i64) -> &Generator {
        match self.first_clause.get(&vertex) {
            Some(&i) => &self.clauses[i].generator,
            None => &self.fallback,
        }
    }

    /// Payoffs of the first end clause testing `vertex`.
    pub fn end_at(&self, vertex: i64) -> Option<&EndClause> {
        self.first_end.get(&vertex).map(|&i| &self.end[i])
    }
}

/// Reads and lowers description text.
pub fn parse_lgdl(text: &str) -> Result<LudiiAst, LgdlError> {
    let term = read_term(text)?;
    lower(term)
}

/// Lowers an already-read ludeme tree.
pub fn lower(term: Term) -> Result<LudiiAst, LgdlError> {
    let mut lw = Lowerer::default();
    let parts = lw.game(&term);
    match parts {
        Some(parts) if lw.diags.is_empty() => Ok(lw.finish(term, parts)),
        _ => {
            if lw.diags.is_empty() {
                lw.error(term.span, "malformed game description");
            }
            Err(LgdlError::Invalid(lw.diags))
        }
    }
}

struct Parts {
    name: String,
    players: usize,
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    start: Vec<StartEffect>,
    clauses: Vec<PlayClause>,
    fallback: Generator,
    end: Vec<EndClause>,
}

#[derive(Default)]
struct Lowerer {
    diags: Vec<Diagnostic>,
    players: usize,
    num_vertices: usize,
    neutral_piece: bool,
    each_piece: bool,
    regions: Vec<Region>,
    region_index: HashMap<String, RegionId>,
}

impl Lowerer {
    fn error(&mut self, span: Span, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            span,
            message: message.into(),
        });
    }

    fn finish(self, term: Term, p: Parts) -> LudiiAst {
        let mut first_clause = HashMap::new();
        for (i, c) in p.clauses.iter().enumerate() {
            first_clause.entry(c.vertex).or_insert(i);
        }
        let mut first_end = HashMap::new();
        for (i, c) in p.end.iter().enumerate() {
            first_end.entry(c.vertex).or_insert(i);
        }
        LudiiAst {
            term,
            name: p.name,
            players: p.players,
            num_vertices: p.num_vertices,
            edges: p.edges,
            regions: self.regions,
            region_index: self.region_index,
            start: p.start,
            clauses: p.clauses,
            fallback: p.fallback,
            first_clause,
            end: p.end,
            first_end,
        }
    }

    /// Checks the head, reporting unknown ludemes as unsupported.
    fn head(&mut self, t: &Term, expected: &str) -> bool {
        if t.head == expected {
            return true;
        }
        if KNOWN.contains(&t.head.as_str()) {
            self.error(t.span, format!("`{}` is not allowed here, expected `{expected}`", t.head));
        } else {
            self.error(t.span, format!("unsupported ludeme: {}", t.head));
        }
        false
    }

    fn term<'a>(&mut self, v: Option<&'a Value>, at: Span, what: &str) -> Option<&'a Term> {
        match v {
            Some(Value::Term(t)) => Some(t),
            Some(_) => {
                self.error(at, format!("expected a ludeme for {what}"));
                None
            }
            None => {
                self.error(at, format!("missing {what}"));
                None
            }
        }
    }

    fn array<'a>(&mut self, v: Option<&'a Value>, at: Span, what: &str) -> Option<&'a [Value]> {
        match v {
            Some(Value::Array(items)) => Some(items),
            _ => {
                self.error(at, format!("expected an array `{{...}}` for {what}"));
                None
            }
        }
    }

    /// Exact arity: `positional` unnamed arguments and only the listed names.
    fn arity(&mut self, t: &Term, positional: usize, names: &[&str]) -> bool {
        let mut ok = true;
        let n = t.positional().count();
        if n != positional {
            self.error(
                t.span,
                format!("`{}` takes {positional} positional argument(s), found {n}", t.head),
            );
            ok = false;
        }
        for a in &t.args {
            if let Some(name) = &a.name {
                if !names.contains(&name.as_str()) {
                    self.error(t.span, format!("`{}` has no argument `{name}:`", t.head));
                    ok = false;
                }
            }
        }
        for name in names {
            if t.get_named(name).is_none() {
                self.error(t.span, format!("`{}` requires argument `{name}:`", t.head));
                ok = false;
            }
        }
        ok
    }

    fn integer(&mut self, v: Option<&Value>, at: Span, what: &str) -> Option<i64> {
        match v {
            Some(Value::Number(d)) => match d.to_bigint().and_then(|b| i64::try_from(b).ok()) {
                Some(i) => Some(i),
                None => {
                    self.error(at, format!("malformed literal for {what}: expected an integer, found {d}"));
                    None
                }
            },
            _ => {
                self.error(at, format!("expected an integer for {what}"));
                None
            }
        }
    }

    fn natural(&mut self, v: Option<&Value>, at: Span, what: &str) -> Option<usize> {
        let i = self.integer(v, at, what)?;
        match usize::try_from(i) {
            Ok(u) => Some(u),
            Err(_) => {
                self.error(at, format!("{what} must not be negative, found {i}"));
                None
            }
        }
    }

    fn vertex(&mut self, v: Option<&Value>, at: Span, what: &str) -> Option<usize> {
        let u = self.natural(v, at, what)?;
        if u >= self.num_vertices {
            self.error(at, format!("{what} {u} is outside the board (0..{})", self.num_vertices));
            return None;
        }
        Some(u)
    }

    fn string<'a>(&mut self, v: Option<&'a Value>, at: Span, what: &str) -> Option<&'a str> {
        match v {
            Some(Value::Str(s)) => Some(s),
            _ => {
                self.error(at, format!("expected a string for {what}"));
                None
            }
        }
    }

    fn regular_player(&mut self, p: i64, at: Span) -> Option<u32> {
        if p >= 1 && p as usize <= self.players {
            Some(p as u32)
        } else {
            self.error(at, format!("player {p} is out of range 1..={}", self.players));
            None
        }
    }

    /// `(player q)`.
    fn player_term(&mut self, v: Option<&Value>, at: Span) -> Option<u32> {
        let t = self.term(v, at, "a player")?;
        if !self.head(t, "player") || !self.arity(t, 1, &[]) {
            return None;
        }
        let p = self.integer(t.positional().next(), t.span, "a player")?;
        self.regular_player(p, t.span)
    }

    /// `P<q>`.
    fn player_ident(&mut self, v: Option<&Value>, at: Span) -> Option<u32> {
        let parsed = match v {
            Some(Value::Ident(s)) => s.strip_prefix('P').and_then(|d| d.parse::<i64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => self.regular_player(p, at),
            None => {
                self.error(at, "expected a player name such as `P1`");
                None
            }
        }
    }

    /// `(sites "Region")`.
    fn region_ref(&mut self, v: Option<&Value>, at: Span) -> Option<RegionId> {
        let t = self.term(v, at, "a region")?;
        if !self.head(t, "sites") || !self.arity(t, 1, &[]) {
            return None;
        }
        let name = self.string(t.positional().next(), t.span, "a region name")?;
        match self.region_index.get(name) {
            Some(&id) => Some(id),
            None => {
                self.error(t.span, format!("undeclared region \"{name}\""));
                None
            }
        }
    }

    /// Finds each expected section by head, reporting missing, repeated,
    /// misplaced and unknown ones.
    fn sections<'a>(&mut self, parent: &'a Term, skip: usize, order: &[&str]) -> Vec<Option<&'a Term>> {
        let mut found: Vec<Option<&'a Term>> = vec![None; order.len()];
        let mut last = None;
        for v in parent.positional().skip(skip) {
            let Value::Term(t) = v else {
                self.error(parent.span, format!("expected a section ludeme inside `{}`", parent.head));
                continue;
            };
            let Some(i) = order.iter().position(|h| *h == t.head) else {
                if KNOWN.contains(&t.head.as_str()) {
                    self.error(t.span, format!("`{}` is not allowed inside `{}`", t.head, parent.head));
                } else {
                    self.error(t.span, format!("unsupported ludeme: {}", t.head));
                }
                continue;
            };
            if found[i].is_some() {
                self.error(t.span, format!("`{}` appears more than once", t.head));
                continue;
            }
            if last.is_some_and(|l| l > i) {
                self.error(t.span, format!("`{}` is out of order; expected {}", t.head, order.join(", ")));
            }
            last = Some(i);
            found[i] = Some(t);
        }
        for (i, head) in order.iter().enumerate() {
            if found[i].is_none() {
                self.error(parent.span, format!("missing `{head}` section"));
            }
        }
        found
    }

    fn game(&mut self, t: &Term) -> Option<Parts> {
        if !self.head(t, "game") {
            return None;
        }
        let args: Vec<&Value> = t.positional().collect();
        if t.args.iter().any(|a| a.name.is_some()) {
            self.error(t.span, "`game` takes no named arguments");
        }
        let name = self.string(args.first().copied(), t.span, "the game name").map(str::to_string);
        let sections = self.sections(t, 1, &["players", "equipment", "rules"]);
        let players = sections[0].and_then(|s| {
            self.arity(s, 1, &[]);
            let k = self.natural(s.positional().next(), s.span, "the player count")?;
            if k == 0 || k > MAX_PLAYERS {
                self.error(s.span, format!("player count must be in 1..={MAX_PLAYERS}, found {k}"));
                return None;
            }
            Some(k)
        });
        // Keep lowering with a placeholder so later sections still get checked.
        self.players = players.unwrap_or(MAX_PLAYERS);
        let board = sections[1].and_then(|s| self.equipment(s));
        let rules = sections[2].and_then(|s| self.rules(s));
        let (num_vertices, edges) = board?;
        let (start, clauses, fallback, end) = rules?;
        Some(Parts {
            name: name?,
            players: players?,
            num_vertices,
            edges,
            start,
            clauses,
            fallback,
            end,
        })
    }

    fn equipment(&mut self, t: &Term) -> Option<(usize, Vec<(usize, usize)>)> {
        self.arity(t, 1, &[]);
        let items = self.array(t.positional().next(), t.span, "the equipment")?;
        let mut board = None;
        // The board fixes the vertex count that regions are checked against.
        for item in items {
            if let Value::Term(b) = item {
                if b.head == "board" {
                    if board.is_some() {
                        self.error(b.span, "more than one board");
                    } else {
                        board = self.board(b);
                    }
                }
            }
        }
        if board.is_none() && !items.iter().any(|v| matches!(v, Value::Term(b) if b.head == "board")) {
            self.error(t.span, "missing board");
        }
        for item in items {
            let Some(it) = self.term(Some(item), t.span, "an equipment item") else {
                continue;
            };
            match it.head.as_str() {
                "board" => {}
                "piece" => self.piece(it),
                "regions" => {
                    if board.is_some() {
                        self.region_decl(it)
                    }
                }
                _ => {
                    self.head(it, "piece");
                }
            }
        }
        board
    }

    fn board(&mut self, t: &Term) -> Option<(usize, Vec<(usize, usize)>)> {
        let g = self.term(t.positional().next(), t.span, "the board graph");
        let shape_ok = self.arity(t, 1, &["use"]);
        if shape_ok && t.get_named("use") != Some(&Value::ident("Vertex")) {
            self.error(t.span, "board must be played on vertices (`use:Vertex`)");
        }
        let g = g?;
        if !self.head(g, "graph") || !self.arity(g, 0, &["vertices", "edges"]) || !shape_ok {
            return None;
        }
        let vertices = self.array(g.get_named("vertices"), g.span, "graph vertices")?;
        for v in vertices {
            let ok = matches!(v, Value::Array(c) if c.len() == 2 && c.iter().all(|x| matches!(x, Value::Number(_))));
            if !ok {
                self.error(g.span, "each graph vertex must be a coordinate pair `{x y}`");
                break;
            }
        }
        self.num_vertices = vertices.len();
        let mut edges = Vec::new();
        for e in self.array(g.get_named("edges"), g.span, "graph edges")? {
            match e {
                Value::Array(ends) if ends.len() == 2 => {
                    let a = self.vertex(ends.first(), g.span, "edge endpoint");
                    let b = self.vertex(ends.get(1), g.span, "edge endpoint");
                    if let (Some(a), Some(b)) = (a, b) {
                        edges.push((a, b));
                    }
                }
                _ => self.error(g.span, "each graph edge must be a vertex pair `{a b}`"),
            }
        }
        Some((vertices.len(), edges))
    }

    fn piece(&mut self, t: &Term) {
        if !self.arity(t, 2, &[]) {
            return;
        }
        let mut pos = t.positional();
        if pos.next() != Some(&Value::str("Marker")) {
            self.error(t.span, "only the piece \"Marker\" is supported");
            return;
        }
        match pos.next() {
            Some(Value::Ident(o)) if o == "Neutral" => self.neutral_piece = true,
            Some(Value::Ident(o)) if o == "Each" => self.each_piece = true,
            _ => self.error(t.span, "piece owner must be `Neutral` or `Each`"),
        }
    }

    fn region_decl(&mut self, t: &Term) {
        if !self.arity(t, 2, &[]) {
            return;
        }
        let mut pos = t.positional();
        let Some(name) = self.string(pos.next(), t.span, "a region name") else {
            return;
        };
        let name = name.to_string();
        let Some(items) = self.array(pos.next(), t.span, "region sites") else {
            return;
        };
        let mut sites = Vec::with_capacity(items.len());
        for v in items {
            if let Some(s) = self.vertex(Some(v), t.span, "region site") {
                sites.push(s);
            }
        }
        if self.region_index.contains_key(&name) {
            self.error(t.span, format!("region \"{name}\" is declared twice"));
            return;
        }
        self.region_index.insert(name.clone(), RegionId(self.regions.len()));
        self.regions.push(Region { name, sites });
    }

    #[allow(clippy::type_complexity)]
    fn rules(&mut self, t: &Term) -> Option<(Vec<StartEffect>, Vec<PlayClause>, Generator, Vec<EndClause>)> {
        if t.args.iter().any(|a| a.name.is_some()) {
            self.error(t.span, "`rules` takes no named arguments");
        }
        let sections = self.sections(t, 0, &["start", "play", "end"]);
        let start = sections[0].and_then(|s| self.start(s));
        let play = sections[1].and_then(|s| self.play(s));
        let end = sections[2].and_then(|s| self.end(s));
        let (clauses, fallback) = play?;
        Some((start?, clauses, fallback, end?))
    }

    fn start(&mut self, t: &Term) -> Option<Vec<StartEffect>> {
        self.arity(t, 1, &[]);
        let items = self.array(t.positional().next(), t.span, "start rules")?;
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            let Some(s) = self.term(Some(item), t.span, "a start rule") else {
                continue;
            };
            match s.head.as_str() {
                "place" => {
                    if !self.arity(s, 2, &[]) {
                        continue;
                    }
                    let mut pos = s.positional();
                    let owner = self.string(pos.next(), s.span, "a piece name").and_then(|n| {
                        let o = n.strip_prefix("Marker").and_then(|d| d.parse::<u32>().ok());
                        let o = o.filter(|&o| o as usize <= self.players);
                        if o.is_none() {
                            self.error(s.span, format!("unknown piece \"{n}\""));
                        }
                        o
                    });
                    let vertex = self.vertex(pos.next(), s.span, "placement vertex");
                    if let (Some(owner), Some(vertex)) = (owner, vertex) {
                        if owner == 0 && !self.neutral_piece {
                            self.error(s.span, "piece \"Marker0\" needs `(piece \"Marker\" Neutral)`");
                        } else if owner > 0 && !self.each_piece {
                            self.error(s.span, format!("piece \"Marker{owner}\" needs `(piece \"Marker\" Each)`"));
                        } else {
                            out.push(StartEffect::Place { owner, vertex });
                        }
                    }
                }
                "set" => {
                    if let Some((region, to)) = self.set_hidden(s) {
                        out.push(StartEffect::SetHidden { region, to });
                    }
                }
                _ => {
                    self.head(s, "place");
                }
            }
        }
        Some(out)
    }

    fn set_hidden(&mut self, t: &Term) -> Option<(RegionId, Observers)> {
        if !self.arity(t, 2, &["to"]) {
            return None;
        }
        let mut pos = t.positional();
        if pos.next() != Some(&Value::ident("Hidden")) {
            self.error(t.span, "expected `(set Hidden ...)`");
            return None;
        }
        let region = self.region_ref(pos.next(), t.span);
        let to = match t.get_named("to") {
            Some(Value::Ident(a)) if a == "All" => Some(Observers::All),
            other => self.player_term(other, t.span).map(Observers::Player),
        };
        Some((region?, to?))
    }

    fn condition(&mut self, v: Option<&Value>, at: Span) -> Option<i64> {
        let c = self.term(v, at, "a condition")?;
        if !self.head(c, "=") || !self.arity(c, 2, &[]) {
            return None;
        }
        let mut pos = c.positional();
        let w = self.term(pos.next(), c.span, "a `where` query")?;
        if self.head(w, "where") && self.arity(w, 2, &[]) {
            let mut wp = w.positional();
            if wp.next() != Some(&Value::str("Marker")) || wp.next() != Some(&Value::ident("Neutral")) {
                self.error(w.span, "only `(where \"Marker\" Neutral)` is supported");
            }
        }
        self.integer(pos.next(), c.span, "the tested vertex")
    }

    fn play(&mut self, t: &Term) -> Option<(Vec<PlayClause>, Generator)> {
        self.arity(t, 1, &[]);
        let mut cur = self.term(t.positional().next(), t.span, "the play rules")?;
        let mut clauses = Vec::new();
        let mut ok = true;
        // The chain is right-nested and may be very long; walk it in a loop.
        while cur.head == "if" {
            if !self.arity(cur, 3, &[]) {
                return None;
            }
            let mut pos = cur.positional();
            let vertex = self.condition(pos.next(), cur.span);
            let generator = self.generator(pos.next(), cur.span);
            match (vertex, generator) {
                (Some(vertex), Some(generator)) => clauses.push(PlayClause { vertex, generator }),
                _ => ok = false,
            }
            cur = self.term(pos.next(), cur.span, "the else branch")?;
        }
        let fallback = self.generator(Some(&Value::Term(cur.clone())), cur.span);
        if ok {
            Some((clauses, fallback?))
        } else {
            None
        }
    }

    fn generator(&mut self, v: Option<&Value>, at: Span) -> Option<Generator> {
        let g = self.term(v, at, "a move generator")?;
        match g.head.as_str() {
            "move" => self.move_choice(v?, at).map(|m| Generator::Or(vec![m])),
            "or" => {
                self.arity(g, 1, &[]);
                let items = self.array(g.positional().next(), g.span, "`or` alternatives")?;
                let moves: Vec<Option<MoveChoice>> = items.iter().map(|m| self.move_choice(m, g.span)).collect();
                moves.into_iter().collect::<Option<Vec<_>>>().map(Generator::Or)
            }
            "random" => {
                if !self.arity(g, 2, &[]) {
                    return None;
                }
                let mut pos = g.positional();
                let weights = self.array(pos.next(), g.span, "`random` weights")?;
                let items = self.array(pos.next(), g.span, "`random` alternatives")?;
                if weights.len() != items.len() || weights.is_empty() {
                    self.error(
                        g.span,
                        format!(
                            "`random` needs one positive weight per alternative, found {} weight(s) and {} alternative(s)",
                            weights.len(),
                            items.len()
                        ),
                    );
                    return None;
                }
                let mut out = Vec::with_capacity(items.len());
                let mut ok = true;
                for (w, m) in weights.iter().zip(items) {
                    let w = match w {
                        Value::Number(d) => d.to_u64().filter(|&w| w > 0),
                        _ => None,
                    };
                    let m = self.move_choice(m, g.span);
                    match (w, m) {
                        (Some(w), Some(m)) => out.push((w, m)),
                        (None, _) => {
                            self.error(g.span, "`random` weights must be positive integers");
                            ok = false;
                        }
                        _ => ok = false,
                    }
                }
                ok.then_some(Generator::Random(out))
            }
            _ => {
                self.head(g, "or");
                None
            }
        }
    }

    fn move_choice(&mut self, v: &Value, at: Span) -> Option<MoveChoice> {
        let m = self.term(Some(v), at, "a move")?;
        if !self.head(m, "move") {
            return None;
        }
        match m.positional().next() {
            Some(Value::Ident(kind)) if kind == "Select" => {}
            Some(Value::Ident(kind)) => {
                self.error(m.span, format!("unsupported ludeme: {kind}"));
                return None;
            }
            _ => {
                self.error(m.span, "expected a move type after `move`");
                return None;
            }
        }
        if !self.arity(m, 3, &[]) {
            return None;
        }
        let mut pos = m.positional().skip(1);
        let from = self.term(pos.next(), m.span, "the selected vertex")?;
        let select = if self.head(from, "from") && self.arity(from, 1, &[]) {
            self.vertex(from.positional().next(), from.span, "selected vertex")
        } else {
            None
        };
        let then = self.term(pos.next(), m.span, "the move consequences")?;
        if !self.head(then, "then") || !self.arity(then, 1, &[]) {
            return None;
        }
        let body = self.term(then.positional().next(), then.span, "the move consequences")?;
        let effects: Vec<Option<Effect>> = if body.head == "and" {
            self.arity(body, 1, &[]);
            let items = self.array(body.positional().next(), body.span, "`and` effects")?;
            items.iter().map(|e| self.effect(e, body.span)).collect()
        } else {
            vec![self.effect(&Value::Term(body.clone()), then.span)]
        };
        let effects = effects.into_iter().collect::<Option<Vec<_>>>()?;
        Some(MoveChoice { select: select?, effects })
    }

    fn effect(&mut self, v: &Value, at: Span) -> Option<Effect> {
        let e = self.term(Some(v), at, "an effect")?;
        match e.head.as_str() {
            "fromTo" => {
                if !self.arity(e, 2, &[]) {
                    return None;
                }
                let mut pos = e.positional();
                let mut end = |lw: &mut Self, head: &str| {
                    let t = lw.term(pos.next(), e.span, head)?;
                    if !lw.head(t, head) || !lw.arity(t, 1, &[]) {
                        return None;
                    }
                    lw.vertex(t.positional().next(), t.span, "vertex")
                };
                let from = end(self, "from");
                let to = end(self, "to");
                Some(Effect::FromTo { from: from?, to: to? })
            }
            "remove" => {
                if !self.arity(e, 1, &[]) {
                    return None;
                }
                let s = self.term(e.positional().next(), e.span, "the removed sites")?;
                if !self.head(s, "sites") || !self.arity(s, 1, &["by"]) {
                    return None;
                }
                if s.positional().next() != Some(&Value::ident("Occupied")) {
                    self.error(s.span, "expected `(sites Occupied by:P...)`");
                    return None;
                }
                let p = self.player_ident(s.get_named("by"), s.span)?;
                if !self.each_piece {
                    self.error(s.span, "player pieces need `(piece \"Marker\" Each)`");
                }
                Some(Effect::RemoveAllOf(p))
            }
            "add" => {
                if !self.arity(e, 2, &[]) {
                    return None;
                }
                let mut pos = e.positional();
                let piece = self.term(pos.next(), e.span, "the added piece")?;
                let player = if self.head(piece, "piece") && self.arity(piece, 1, &[]) {
                    self.integer(piece.positional().next(), piece.span, "a piece index")
                        .and_then(|p| self.regular_player(p, piece.span))
                } else {
                    None
                };
                let to = self.term(pos.next(), e.span, "the target sites")?;
                let region = if self.head(to, "to") && self.arity(to, 1, &[]) {
                    self.region_ref(to.positional().next(), to.span)
                } else {
                    None
                };
                if !self.each_piece {
                    self.error(e.span, "player pieces need `(piece \"Marker\" Each)`");
                }
                Some(Effect::AddToRegion { player: player?, region: region? })
            }
            "set" => match e.positional().next() {
                Some(Value::Ident(k)) if k == "NextPlayer" => {
                    if !self.arity(e, 2, &[]) {
                        return None;
                    }
                    self.player_term(e.positional().nth(1), e.span).map(Effect::SetNextPlayer)
                }
                _ => self.set_hidden(e).map(|(region, to)| Effect::SetHidden { region, to }),
            },
            _ => {
                self.head(e, "fromTo");
                None
            }
        }
    }

    fn end(&mut self, t: &Term) -> Option<Vec<EndClause>> {
        self.arity(t, 1, &[]);
        let arg = t.positional().next();
        let mut ok = true;
        let items: &[Value] = match arg {
            Some(Value::Array(items)) => items,
            // Still lower a lone clause so that problems inside it are reported.
            Some(single @ Value::Term(_)) => {
                self.array(arg, t.span, "end rules");
                ok = false;
                std::slice::from_ref(single)
            }
            _ => self.array(arg, t.span, "end rules")?,
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            let Some(c) = self.term(Some(item), t.span, "an end rule") else {
                ok = false;
                continue;
            };
            if !self.head(c, "if") || !self.arity(c, 2, &[]) {
                ok = false;
                continue;
            }
            let mut pos = c.positional();
            let vertex = self.condition(pos.next(), c.span);
            let payoffs = self.payoffs(pos.next(), c.span);
            match (vertex, payoffs) {
                (Some(vertex), Some(payoffs)) => out.push(EndClause { vertex, payoffs }),
                _ => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn payoffs(&mut self, v: Option<&Value>, at: Span) -> Option<Vec<Decimal>> {
        let p = self.term(v, at, "a payoff vector")?;
        if !self.head(p, "payoffs") || !self.arity(p, 1, &[]) {
            return None;
        }
        let items = self.array(p.positional().next(), p.span, "payoffs")?;
        let mut values: Vec<Option<Decimal>> = vec![None; self.players.min(MAX_PLAYERS)];
        for item in items {
            let Some(po) = self.term(Some(item), p.span, "a payoff") else {
                continue;
            };
            if !self.head(po, "payoff") || !self.arity(po, 2, &[]) {
                continue;
            }
            let mut pos = po.positional();
            let who = self.player_ident(pos.next(), po.span);
            let value = match pos.next() {
                Some(Value::Number(d)) => Some(d.clone()),
                _ => {
                    self.error(po.span, "expected a decimal payoff");
                    None
                }
            };
            if let (Some(who), Some(value)) = (who, value) {
                let slot = &mut values[who as usize - 1];
                if slot.is_some() {
                    self.error(po.span, format!("payoff for P{who} given twice"));
                }
                *slot = Some(value);
            }
        }
        if let Some(missing) = values.iter().position(Option::is_none) {
            self.error(p.span, format!("no payoff for P{}", missing + 1));
        }
        values.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::fixtures::hidden_coin;
    use crate::lgdl::compile;

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

    #[test]
    fn compiled_description_lowers() {
        let d = compile(&hidden_coin(), "coin").unwrap();
        let ast = parse_lgdl(&d.text()).unwrap();
        assert_eq!(ast.players, 2);
        assert_eq!(ast.num_vertices, 21);
        assert_eq!(ast.edges.len(), 18);
        assert_eq!(ast.regions.len(), 3 + 7 * 2);
        assert_eq!(ast.start.len(), 3 + 3);
        assert_eq!(ast.clauses.len(), 3);
        assert_eq!(ast.fallback, Generator::Or(vec![]));
        assert_eq!(ast.end.len(), 4);
        match ast.generator_at(0) {
            Generator::Random(branches) => {
                assert_eq!(branches.iter().map(|b| b.0).collect::<Vec<_>>(), [1, 2]);
                assert_eq!(branches[1].1.effects.len(), 9);
            }
            g => panic!("{g:?}"),
        }
        assert_eq!(ast.end_at(6).unwrap().payoffs, vec!["0.5".parse().unwrap(), "-0.5".parse().unwrap()]);
        assert!(ast.end_at(1).is_none());
    }

    #[test]
    fn tic_tac_toe_is_outside_the_subset() {
        let err = parse_lgdl(TIC_TAC_TOE).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("unsupported ludeme: Add"), "{text}");
        assert!(text.contains("unsupported ludeme: square"), "{text}");
        assert!(text.contains("missing `start` section"), "{text}");
        assert!(text.contains("unsupported ludeme: is"), "{text}");
        let add = err
            .diagnostics()
            .into_iter()
            .find(|d| d.message == "unsupported ludeme: Add")
            .unwrap();
        assert_eq!((add.span.line, add.span.column), (9, 11));
    }

    #[test]
    fn empty_text_fails_at_offset_zero() {
        let err = parse_lgdl("").unwrap_err();
        assert_eq!(err.diagnostics()[0].span.offset, 0);
    }

    #[test]
    fn undeclared_region_and_out_of_range_vertex() {
        let d = compile(&hidden_coin(), "coin").unwrap();
        let text = d
            .text()
            .replace("(sites \"InformationSet_5_1\")))", "(sites \"Nowhere\")))")
            .replace("(fromTo (from 1) (to 4))", "(fromTo (from 1) (to 400))");
        let err = parse_lgdl(&text).unwrap_err().to_string();
        assert!(err.contains("undeclared region \"Nowhere\""), "{err}");
        assert!(err.contains("vertex 400 is outside the board (0..21)"), "{err}");
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let d = compile(&hidden_coin(), "coin").unwrap();
        let text = d.text().replacen("(payoff P1 1)", "(payoff P1 1 2)", 1);
        let err = parse_lgdl(&text).unwrap_err().to_string();
        assert!(err.contains("`payoff` takes 2 positional argument(s), found 3"), "{err}");
    }
}
