//! The `.efg-tree` text format.
//!
//! ```text
//! ; matching pennies against a coin flip
//! (efg 1 (players 2))
//! (chance 0 (1/3 -> 1) (2/3 -> 2))
//! (decision 1 (mover 1) (children 3 4))
//! (terminal 3 (payoffs 1 -0.5))
//! (infoset 1 (1 2))
//! ```
//!
//! One declaration per node, an optional list of information sets per
//! player (unlisted states are singletons) and a header naming the format
//! version and player count. `;` starts a comment running to the end of the
//! line. The grammar is given in `docs/efg-tree.md`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_traits::{One, Zero};

use crate::efg::{BuildError, EfgNode, ExtensiveFormGame, GameBuilder, MAX_PLAYERS, MAX_STATES};
use crate::num::{format_rational, parse_rational, Decimal, Rational};

pub const FORMAT_VERSION: &str = "1";
pub const FILE_EXTENSION: &str = "efg-tree";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErrorKind {
    #[error("unexpected character `{0}`")]
    Lexical(char),
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(&'static str),
    #[error("expected {expected}, found `{found}`")]
    Unexpected { expected: &'static str, found: String },
    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),
    #[error("unsupported format version `{0}`")]
    Version(String),
    #[error("player count {0} outside 1..={MAX_PLAYERS}")]
    PlayerCount(u64),
    #[error("more than {MAX_STATES} states")]
    TooManyStates,
    #[error("state {0} declared more than once")]
    DuplicateState(usize),
    #[error("reference to undeclared state {0}")]
    UndeclaredState(usize),
    #[error("state {state}: chance distribution {reason}")]
    ChanceDistribution { state: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{position}: {kind}")]
pub struct ParseError {
    pub position: Position,
    pub kind: ErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Atom(String),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Position,
}

fn is_atom_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '/' | '-' | '>' | '+')
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            pos: Position { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Position, Token)>, ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let start = self.pos;
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                ';' => {
                    while self.chars.peek().is_some_and(|&c| c != '\n') {
                        self.bump();
                    }
                }
                '(' => {
                    self.bump();
                    out.push((start, Token::Open));
                }
                ')' => {
                    self.bump();
                    out.push((start, Token::Close));
                }
                c if is_atom_char(c) => {
                    let mut atom = String::new();
                    while let Some(&c) = self.chars.peek().filter(|&&c| is_atom_char(c)) {
                        atom.push(c);
                        self.bump();
                    }
                    out.push((start, Token::Atom(atom)));
                }
                other => {
                    return Err(ParseError {
                        position: start,
                        kind: ErrorKind::Lexical(other),
                    })
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    tokens: Vec<(Position, Token)>,
    next: usize,
    end: Position,
}

impl Parser {
    fn error<T>(&self, position: Position, kind: ErrorKind) -> Result<T, ParseError> {
        Err(ParseError { position, kind })
    }

    fn peek(&self) -> Option<&(Position, Token)> {
        self.tokens.get(self.next)
    }

    fn advance(&mut self, expected: &'static str) -> Result<(Position, Token), ParseError> {
        match self.tokens.get(self.next) {
            Some(tok) => {
                self.next += 1;
                Ok(tok.clone())
            }
            None => self.error(self.end, ErrorKind::UnexpectedEof(expected)),
        }
    }

    fn open(&mut self) -> Result<Position, ParseError> {
        match self.advance("`(`")? {
            (p, Token::Open) => Ok(p),
            (p, tok) => self.error(p, unexpected("`(`", &tok)),
        }
    }

    fn close(&mut self) -> Result<(), ParseError> {
        match self.advance("`)`")? {
            (_, Token::Close) => Ok(()),
            (p, tok) => self.error(p, unexpected("`)`", &tok)),
        }
    }

    fn atom(&mut self, expected: &'static str) -> Result<(Position, String), ParseError> {
        match self.advance(expected)? {
            (p, Token::Atom(a)) => Ok((p, a)),
            (p, tok) => self.error(p, unexpected(expected, &tok)),
        }
    }

    fn keyword(&mut self, word: &'static str) -> Result<(), ParseError> {
        let (p, a) = self.atom(word)?;
        if a == word {
            Ok(())
        } else {
            self.error(
                p,
                ErrorKind::Unexpected {
                    expected: word,
                    found: a,
                },
            )
        }
    }

    fn integer(&mut self, expected: &'static str) -> Result<(Position, u64), ParseError> {
        let (p, a) = self.atom(expected)?;
        match a.parse::<u64>() {
            Ok(v) if a.bytes().all(|b| b.is_ascii_digit()) => Ok((p, v)),
            _ => self.error(p, ErrorKind::Unexpected { expected, found: a }),
        }
    }

    fn state_id(&mut self) -> Result<(Position, usize), ParseError> {
        let (p, v) = self.integer("a state id")?;
        match usize::try_from(v) {
            Ok(id) if id < MAX_STATES => Ok((p, id)),
            _ => self.error(p, ErrorKind::TooManyStates),
        }
    }

    fn at_close(&self) -> bool {
        matches!(self.peek(), Some((_, Token::Close)))
    }
}

fn unexpected(expected: &'static str, tok: &Token) -> ErrorKind {
    let found = match tok {
        Token::Open => "(".to_string(),
        Token::Close => ")".to_string(),
        Token::Atom(a) => a.clone(),
    };
    ErrorKind::Unexpected { expected, found }
}

/// Parses an `.efg-tree` document into a validated game.
pub fn parse_efg(text: &str) -> Result<ExtensiveFormGame, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let end = text.lines().enumerate().last().map_or(
        Position { line: 1, column: 1 },
        |(i, l)| Position {
            line: i + 1,
            column: l.chars().count() + 1,
        },
    );
    let mut p = Parser {
        tokens,
        next: 0,
        end,
    };

    p.open()?;
    p.keyword("efg")?;
    let (vpos, version) = p.atom("a format version")?;
    if version != FORMAT_VERSION {
        return p.error(vpos, ErrorKind::Version(version));
    }
    p.open()?;
    p.keyword("players")?;
    let (kpos, k) = p.integer("a player count")?;
    if k == 0 || k > MAX_PLAYERS as u64 {
        return p.error(kpos, ErrorKind::PlayerCount(k));
    }
    let k = k as usize;
    p.close()?;
    p.close()?;

    let mut builder = GameBuilder::new(k);
    let mut declared: HashMap<usize, Position> = HashMap::new();
    let mut references: Vec<(Position, usize)> = Vec::new();
    while p.peek().is_some() {
        let decl_pos = p.open()?;
        let (kw_pos, kw) = p.atom("a declaration keyword")?;
        match kw.as_str() {
            "decision" | "chance" | "terminal" => {
                let (id_pos, id) = p.state_id()?;
                if declared.insert(id, id_pos).is_some() {
                    return p.error(id_pos, ErrorKind::DuplicateState(id));
                }
                if declared.len() > MAX_STATES {
                    return p.error(id_pos, ErrorKind::TooManyStates);
                }
                builder = match kw.as_str() {
                    "decision" => {
                        p.open()?;
                        p.keyword("mover")?;
                        let (mpos, mover) = p.integer("a mover")?;
                        if mover == 0 || mover > k as u64 {
                            return p.error(
                                mpos,
                                ErrorKind::Invalid(format!(
                                    "state {id}: mover {mover} is not a player in 1..={k}"
                                )),
                            );
                        }
                        p.close()?;
                        p.open()?;
                        p.keyword("children")?;
                        let mut children = Vec::new();
                        while !p.at_close() {
                            let (cpos, c) = p.state_id()?;
                            references.push((cpos, c));
                            children.push(c);
                        }
                        p.close()?;
                        builder.decision(id, mover as u32, children)
                    }
                    "chance" => {
                        let mut branches = Vec::new();
                        let mut sum = Rational::zero();
                        while !p.at_close() {
                            let bpos = p.open()?;
                            let (rpos, r) = p.atom("a probability")?;
                            let prob = parse_rational(&r).map_err(|e| ParseError {
                                position: rpos,
                                kind: ErrorKind::ChanceDistribution {
                                    state: id,
                                    reason: e.to_string(),
                                },
                            })?;
                            if prob <= Rational::zero() {
                                return p.error(
                                    rpos,
                                    ErrorKind::ChanceDistribution {
                                        state: id,
                                        reason: format!(
                                            "has non-positive probability {}",
                                            format_rational(&prob)
                                        ),
                                    },
                                );
                            }
                            p.keyword("->").map_err(|e| ParseError {
                                position: e.position,
                                kind: ErrorKind::ChanceDistribution {
                                    state: id,
                                    reason: format!("branch at {bpos} is missing `->`"),
                                },
                            })?;
                            let (cpos, c) = p.state_id()?;
                            references.push((cpos, c));
                            p.close()?;
                            sum += &prob;
                            branches.push((prob, c));
                        }
                        if branches.is_empty() {
                            return p.error(
                                decl_pos,
                                ErrorKind::ChanceDistribution {
                                    state: id,
                                    reason: "has no branches".into(),
                                },
                            );
                        }
                        if !sum.is_one() {
                            return p.error(
                                decl_pos,
                                ErrorKind::ChanceDistribution {
                                    state: id,
                                    reason: format!("sums to {} ≠ 1", format_rational(&sum)),
                                },
                            );
                        }
                        builder.chance(id, branches)
                    }
                    _ => {
                        p.open()?;
                        p.keyword("payoffs")?;
                        let mut payoffs = Vec::new();
                        while !p.at_close() {
                            let (dpos, d) = p.atom("a payoff")?;
                            let value: Decimal = d.parse().map_err(|e: crate::num::NumError| {
                                ParseError {
                                    position: dpos,
                                    kind: ErrorKind::Invalid(e.to_string()),
                                }
                            })?;
                            payoffs.push(value);
                        }
                        p.close()?;
                        if payoffs.len() != k {
                            return p.error(
                                decl_pos,
                                ErrorKind::Invalid(format!(
                                    "state {id}: expected {k} payoffs, found {}",
                                    payoffs.len()
                                )),
                            );
                        }
                        builder.terminal_payoffs(id, payoffs)
                    }
                };
            }
            "infoset" => {
                let (ppos, player) = p.integer("a player")?;
                if player == 0 || player > k as u64 {
                    return p.error(
                        ppos,
                        ErrorKind::Invalid(format!("infoset player {player} is not in 1..={k}")),
                    );
                }
                p.open()?;
                let mut members = Vec::new();
                while !p.at_close() {
                    let (mpos, m) = p.state_id()?;
                    references.push((mpos, m));
                    members.push(m);
                }
                p.close()?;
                builder = builder.infoset(player as u32, members);
            }
            _ => return p.error(kw_pos, ErrorKind::UnknownKeyword(kw)),
        }
        p.close()?;
    }

    if let Some((pos, id)) = references.iter().find(|(_, id)| !declared.contains_key(id)) {
        return p.error(*pos, ErrorKind::UndeclaredState(*id));
    }
    // Whole-game violations have no single location.
    builder.build().map_err(|e: BuildError| ParseError {
        position: Position { line: 1, column: 1 },
        kind: ErrorKind::Invalid(e.to_string()),
    })
}

/// Canonical text of a game: header, states in id order, then the
/// non-singleton information sets of each player ordered by smallest member.
pub fn serialize_efg(game: &ExtensiveFormGame) -> String {
    let mut out = String::new();
    writeln!(out, "(efg {FORMAT_VERSION} (players {}))", game.num_players()).unwrap();
    for s in game.states() {
        match game.node(s) {
            EfgNode::Decision { mover, children } => {
                write!(out, "(decision {s} (mover {}) (children", mover.0).unwrap();
                for c in children {
                    write!(out, " {c}").unwrap();
                }
                out.push_str("))\n");
            }
            EfgNode::Chance { branches } => {
                write!(out, "(chance {s}").unwrap();
                for b in branches {
                    write!(out, " ({} -> {})", format_rational(&b.probability), b.child).unwrap();
                }
                out.push_str(")\n");
            }
            EfgNode::Terminal { payoffs } => {
                write!(out, "(terminal {s} (payoffs").unwrap();
                for u in payoffs {
                    write!(out, " {u}").unwrap();
                }
                out.push_str("))\n");
            }
        }
    }
    for (player, part) in game.partition().iter() {
        for set in part.sets().iter().filter(|set| set.len() > 1) {
            write!(out, "(infoset {} (", player.0).unwrap();
            let members: Vec<String> = set.iter().map(ToString::to_string).collect();
            out.push_str(&members.join(" "));
            out.push_str("))\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::fixtures::{hidden_coin, r};
    use crate::efg::{ChanceBranch, PlayerId, StateId};

    #[test]
    fn minimal_document() {
        let g = parse_efg("(efg 1 (players 1))\n(terminal 0 (payoffs 0))").unwrap();
        assert_eq!(g.num_states(), 1);
        assert_eq!(g.num_players(), 1);
        assert_eq!(serialize_efg(&g), "(efg 1 (players 1))\n(terminal 0 (payoffs 0))\n");
    }

    #[test]
    fn chance_root_transcribes_exact_rationals() {
        let g = parse_efg(
            "(efg 1 (players 1))
             (chance 0 (1/3 -> 1) (2/3 -> 2))
             (terminal 1 (payoffs 0))
             (terminal 2 (payoffs 1))",
        )
        .unwrap();
        assert_eq!(
            g.node(StateId(0)),
            &EfgNode::Chance {
                branches: vec![
                    ChanceBranch { probability: r(1, 3), child: StateId(1) },
                    ChanceBranch { probability: r(2, 3), child: StateId(2) },
                ]
            }
        );
    }

    #[test]
    fn missing_infosets_default_to_singletons() {
        let g = parse_efg(
            "(efg 1 (players 2))
             (decision 0 (mover 1) (children 1 2))
             (terminal 1 (payoffs 0 0))
             (terminal 2 (payoffs 0 0))",
        )
        .unwrap();
        for (_, part) in g.partition().iter() {
            assert_eq!(part.num_sets(), 3);
        }
    }

    #[test]
    fn comments_integers_and_whitespace() {
        let g = parse_efg(
            "; header\n(efg 1 (players 1)) ; trailing\n(chance 0 (1 -> 1))\n(terminal 1 (payoffs -2.50))",
        )
        .unwrap();
        assert_eq!(g.node(StateId(1)).payoffs().unwrap()[0].to_string(), "-2.5");
    }

    fn err(text: &str) -> ParseError {
        parse_efg(text).unwrap_err()
    }

    #[test]
    fn error_kinds_and_positions() {
        let e = err("(efg 1 (players 1))\n(terminal 0 (payoffs 0)) #");
        assert_eq!(e.kind, ErrorKind::Lexical('#'));
        assert_eq!(e.position, Position { line: 2, column: 26 });

        let e = err("(efg 1 (players 1))\n(leaf 0 (payoffs 0))");
        assert_eq!(e.kind, ErrorKind::UnknownKeyword("leaf".into()));
        assert_eq!(e.position, Position { line: 2, column: 2 });

        let e = err("(efg 1 (players 1))\n(terminal 0 (payoffs 0))\n(terminal 0 (payoffs 1))");
        assert_eq!(e.kind, ErrorKind::DuplicateState(0));
        assert_eq!(e.position.line, 3);

        let e = err("(efg 1 (players 1))\n(decision 0 (mover 1) (children 1 7))\n(terminal 1 (payoffs 0))");
        assert_eq!(e.kind, ErrorKind::UndeclaredState(7));
        assert_eq!(e.position, Position { line: 2, column: 35 });

        let e = err("(efg 2 (players 1))");
        assert_eq!(e.kind, ErrorKind::Version("2".into()));

        let e = err("(efg 1 (players 101))");
        assert_eq!(e.kind, ErrorKind::PlayerCount(101));

        let e = err("");
        assert!(matches!(e.kind, ErrorKind::UnexpectedEof(_)));
    }

    #[test]
    fn bad_distributions_name_the_state() {
        let e = err(
            "(efg 1 (players 1))
             (chance 0 (1/2 -> 1) (1/3 -> 2))
             (terminal 1 (payoffs 0))
             (terminal 2 (payoffs 0))",
        );
        assert_eq!(
            e.kind,
            ErrorKind::ChanceDistribution { state: 0, reason: "sums to 5/6 ≠ 1".into() }
        );
        assert_eq!(e.to_string(), "2:14: state 0: chance distribution sums to 5/6 ≠ 1");

        let e = err("(efg 1 (players 1)) (chance 0 (0 -> 1) (1 -> 2)) (terminal 1 (payoffs 0)) (terminal 2 (payoffs 0))");
        assert!(matches!(e.kind, ErrorKind::ChanceDistribution { state: 0, .. }));
        let e = err("(efg 1 (players 1)) (chance 0 (1/0 -> 1)) (terminal 1 (payoffs 0))");
        assert!(matches!(e.kind, ErrorKind::ChanceDistribution { state: 0, .. }));
        let e = err("(efg 1 (players 1)) (chance 0 (1 1)) (terminal 1 (payoffs 0))");
        assert!(matches!(e.kind, ErrorKind::ChanceDistribution { state: 0, .. }));
    }

    #[test]
    fn structural_violations_are_errors() {
        let e = err(
            "(efg 1 (players 1))
             (decision 0 (mover 1) (children 1 1))
             (terminal 1 (payoffs 0))",
        );
        assert!(e.to_string().contains("not a tree"), "{e}");
        let e = err("(efg 1 (players 1)) (terminal 0 (payoffs 0)) (terminal 2 (payoffs 0))");
        assert!(e.to_string().contains("contiguous"), "{e}");
    }

    #[test]
    fn canonical_serialization() {
        let text = serialize_efg(&hidden_coin());
        assert_eq!(
            text,
            "(efg 1 (players 2))
(chance 0 (1/3 -> 1) (2/3 -> 2))
(decision 1 (mover 1) (children 3 4))
(decision 2 (mover 1) (children 5 6))
(terminal 3 (payoffs 1 -1))
(terminal 4 (payoffs 0 0))
(terminal 5 (payoffs -1 1))
(terminal 6 (payoffs 0.5 -0.5))
(infoset 1 (1 2))
(infoset 1 (3 5))
"
        );
        assert_eq!(parse_efg(&text).unwrap(), hidden_coin());
        // Declaration order and infoset order do not affect the canonical form.
        let shuffled = parse_efg(
            "(efg 1 (players 2))
             (infoset 1 (5 3))
             (terminal 6 (payoffs 0.50 -0.5))
             (decision 2 (mover 1) (children 5 6))
             (chance 0 (2/6 -> 1) (4/6 -> 2))
             (terminal 3 (payoffs 1 -1)) (terminal 4 (payoffs 0 0)) (terminal 5 (payoffs -1 1))
             (decision 1 (mover 1) (children 3 4))
             (infoset 1 (2 1))",
        )
        .unwrap();
        assert_eq!(serialize_efg(&shuffled), text);
        assert_eq!(shuffled.infoset(PlayerId(1), StateId(1)), shuffled.infoset(PlayerId(1), StateId(2)));
    }
}
