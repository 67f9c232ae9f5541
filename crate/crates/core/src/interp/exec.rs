use crate::num::Decimal;

use super::ast::{Effect, Generator, LudiiAst, MoveChoice, Observers, RegionId, StartEffect};

/// Owner 0 is the neutral marker.
pub const NEUTRAL: u32 = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("cannot place a piece on occupied vertex {vertex}")]
    PlaceOccupied { vertex: usize },
    #[error("cannot move from empty vertex {vertex}")]
    FromEmpty { vertex: usize },
    #[error("cannot move onto occupied vertex {vertex}")]
    ToOccupied { vertex: usize },
    #[error("cannot add a piece to occupied vertex {vertex}")]
    AddOccupied { vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterpreterState {
    /// Owner of the piece on each vertex.
    placement: Vec<Option<u32>>,
    /// `hidden[v * k + (p - 1)]`: vertex `v` is hidden from player `p`.
    hidden: Vec<bool>,
    players: usize,
    mover: u32,
    terminal: Option<Vec<Decimal>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Hidden,
    Empty,
    Piece(u32),
}

/// What one player sees: one cell per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationView {
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MoveResolution<'a> {
    Deterministic(Vec<&'a MoveChoice>),
    /// One `(weight, moves)` entry per chance branch.
    Chance(Vec<(u64, Vec<&'a MoveChoice>)>),
}

impl MoveResolution<'_> {
    pub fn is_empty(&self) -> bool {
        match self {
            MoveResolution::Deterministic(m) => m.is_empty(),
            MoveResolution::Chance(b) => b.is_empty(),
        }
    }
}

impl InterpreterState {
    pub fn mover(&self) -> u32 {
        self.mover
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn num_vertices(&self) -> usize {
        self.placement.len()
    }

    pub fn piece_at(&self, v: usize) -> Option<u32> {
        self.placement[v]
    }

    pub fn is_hidden(&self, v: usize, observer: u32) -> bool {
        self.hidden[v * self.players + observer as usize - 1]
    }

    /// Payoffs recorded when the state was produced, if an end rule matched.
    pub fn terminal(&self) -> Option<&[Decimal]> {
        self.terminal.as_deref()
    }

    /// Vertex of the neutral marker; −1 if there is none.
    pub fn neutral_vertex(&self) -> i64 {
        self.placement
            .iter()
            .position(|o| *o == Some(NEUTRAL))
            .map_or(-1, |v| v as i64)
    }

    pub fn count_owned_by(&self, owner: u32) -> usize {
        self.placement.iter().filter(|o| **o == Some(owner)).count()
    }

    pub fn vertices_owned_by(&self, owner: u32) -> Vec<usize> {
        (0..self.placement.len())
            .filter(|&v| self.placement[v] == Some(owner))
            .collect()
    }

    pub fn hidden_mask(&self) -> &[bool] {
        &self.hidden
    }

    fn set_hidden(&mut self, ast: &LudiiAst, region: RegionId, to: Observers) {
        let k = self.players;
        for &v in &ast.region(region).sites {
            match to {
                Observers::All => self.hidden[v * k..(v + 1) * k].fill(true),
                Observers::Player(p) => self.hidden[v * k + p as usize - 1] = true,
            }
        }
    }

    /// Changing a vertex's content reveals it to everyone.
    fn put(&mut self, v: usize, owner: Option<u32>) {
        if self.placement[v] != owner {
            self.placement[v] = owner;
            let k = self.players;
            self.hidden[v * k..(v + 1) * k].fill(false);
        }
    }
}

pub fn initial_state(ast: &LudiiAst) -> Result<InterpreterState, ExecError> {
    let mut s = InterpreterState {
        placement: vec![None; ast.num_vertices],
        hidden: vec![false; ast.num_vertices * ast.players],
        players: ast.players,
        mover: 1,
        terminal: None,
    };
    for effect in &ast.start {
        match *effect {
            StartEffect::Place { owner, vertex } => {
                if s.placement[vertex].is_some() {
                    return Err(ExecError::PlaceOccupied { vertex });
                }
                s.placement[vertex] = Some(owner);
            }
            StartEffect::SetHidden { region, to } => s.set_hidden(ast, region, to),
        }
    }
    s.terminal = is_terminal(ast, &s).map(<[Decimal]>::to_vec);
    Ok(s)
}

/// Moves offered by the first play clause matching the neutral marker.
pub fn legal_moves<'a>(ast: &'a LudiiAst, state: &InterpreterState) -> MoveResolution<'a> {
    match ast.generator_at(state.neutral_vertex()) {
        Generator::Or(moves) => MoveResolution::Deterministic(moves.iter().collect()),
        Generator::Random(branches) => {
            MoveResolution::Chance(branches.iter().map(|(w, m)| (*w, vec![m])).collect())
        }
    }
}

pub fn apply_move(
    ast: &LudiiAst,
    state: &InterpreterState,
    m: &MoveChoice,
) -> Result<InterpreterState, ExecError> {
    let mut s = state.clone();
    let mut next = None;
    for effect in &m.effects {
        match *effect {
            Effect::FromTo { from, to } => {
                let Some(owner) = s.placement[from] else {
                    return Err(ExecError::FromEmpty { vertex: from });
                };
                if from != to {
                    if s.placement[to].is_some() {
                        return Err(ExecError::ToOccupied { vertex: to });
                    }
                    s.put(from, None);
                    s.put(to, Some(owner));
                }
            }
            Effect::RemoveAllOf(p) => {
                for v in 0..s.placement.len() {
                    if s.placement[v] == Some(p) {
                        s.put(v, None);
                    }
                }
            }
            Effect::AddToRegion { player, region } => {
                for &v in &ast.region(region).sites {
                    if s.placement[v].is_some() {
                        return Err(ExecError::AddOccupied { vertex: v });
                    }
                    s.put(v, Some(player));
                }
            }
            Effect::SetHidden { region, to } => s.set_hidden(ast, region, to),
            Effect::SetNextPlayer(p) => next = Some(p),
        }
    }
    s.mover = next.unwrap_or(if s.mover as usize >= s.players { 1 } else { s.mover + 1 });
    s.terminal = is_terminal(ast, &s).map(<[Decimal]>::to_vec);
    Ok(s)
}

/// Payoffs of the first end rule matching the neutral marker.
pub fn is_terminal<'a>(ast: &'a LudiiAst, state: &InterpreterState) -> Option<&'a [Decimal]> {
    ast.end_at(state.neutral_vertex()).map(|c| c.payoffs.as_slice())
}

/// The board as seen by regular player `p`.
pub fn observe(state: &InterpreterState, p: u32) -> ObservationView {
    let cells = (0..state.placement.len())
        .map(|v| {
            if state.is_hidden(v, p) {
                Cell::Hidden
            } else {
                match state.placement[v] {
                    None => Cell::Empty,
                    Some(o) => Cell::Piece(o),
                }
            }
        })
        .collect();
    ObservationView { cells }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 128-bit digest of `observe(state, p)` computed without building the view.
/// Equal views give equal digests; unequal views collide with negligible
/// probability.
pub fn view_fingerprint(state: &InterpreterState, p: u32) -> u128 {
    let (mut lo, mut hi) = (0x243f_6a88_85a3_08d3u64, 0x1319_8a2e_0370_7344u64);
    for v in 0..state.placement.len() {
        let code: u64 = if state.is_hidden(v, p) {
            0
        } else {
            match state.placement[v] {
                None => 1,
                Some(o) => 2 + u64::from(o),
            }
        };
        let x = ((v as u64) << 32) | code;
        lo = (lo ^ mix64(x)).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(29);
        hi = (hi ^ mix64(x ^ 0xa409_3822_299f_31d0)).wrapping_mul(0xc2b2_ae3d_27d4_eb4f).rotate_left(31);
    }
    (u128::from(hi) << 64) | u128::from(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efg::fixtures::hidden_coin;
    use crate::efg::{EfgNode, GameBuilder, StateId};
    use crate::interp::parse_lgdl;
    use crate::lgdl::compile;

    fn ast_for(g: &crate::ExtensiveFormGame) -> LudiiAst {
        parse_lgdl(&compile(g, "t").unwrap().text()).unwrap()
    }

    fn four_state_game() -> crate::ExtensiveFormGame {
        GameBuilder::new(2)
            .decision(0, 1, [1, 2])
            .decision(1, 2, [3])
            .terminal(2, ["1", "0"])
            .terminal(3, ["0", "1"])
            .build()
            .unwrap()
    }

    #[test]
    fn initial_state_places_and_hides() {
        let ast = ast_for(&four_state_game());
        let s = initial_state(&ast).unwrap();
        assert_eq!(s.vertices_owned_by(0), vec![0]);
        assert_eq!(s.vertices_owned_by(1), vec![4]);
        assert_eq!(s.vertices_owned_by(2), vec![8]);
        assert_eq!(s.mover(), 1);
        for v in 0..12 {
            let expect = |p: u32| match v / 4 {
                0 => true,
                owner => owner != p as usize,
            };
            assert_eq!(s.is_hidden(v, 1), expect(1), "vertex {v}");
            assert_eq!(s.is_hidden(v, 2), expect(2), "vertex {v}");
        }
        let view = observe(&s, 1);
        assert_eq!(view.cells[4], Cell::Piece(1));
        assert_eq!(view.cells[5], Cell::Empty);
        assert!(view.cells[..4].iter().chain(&view.cells[8..]).all(|c| *c == Cell::Hidden));
    }

    #[test]
    fn single_player_game_hides_only_nature_copy() {
        let g = GameBuilder::new(1).decision(0, 1, [1]).terminal(1, ["3"]).build().unwrap();
        let ast = ast_for(&g);
        let s = initial_state(&ast).unwrap();
        assert!((0..2).all(|v| s.is_hidden(v, 1)));
        assert!((2..4).all(|v| !s.is_hidden(v, 1)));
    }

    #[test]
    fn moves_follow_the_tree_and_restore_masks() {
        let g = hidden_coin();
        let ast = ast_for(&g);
        let s0 = initial_state(&ast).unwrap();
        let MoveResolution::Chance(branches) = legal_moves(&ast, &s0) else {
            panic!("root is a chance state");
        };
        assert_eq!(branches.iter().map(|b| b.0).collect::<Vec<_>>(), [1, 2]);
        let s2 = apply_move(&ast, &s0, branches[1].1[0]).unwrap();
        assert_eq!(s2.neutral_vertex(), 2);
        assert_eq!(s2.hidden_mask(), s0.hidden_mask());
        // Player 1's markers cover InformationSet_2_1 = {1, 2} in copy 1.
        assert_eq!(s2.vertices_owned_by(1), vec![7 + 1, 7 + 2]);
        assert_eq!(s2.vertices_owned_by(2), vec![14 + 2]);
        assert_eq!(s2.count_owned_by(NEUTRAL), 1);

        let MoveResolution::Deterministic(moves) = legal_moves(&ast, &s2) else {
            panic!();
        };
        assert_eq!(moves.iter().map(|m| m.select).collect::<Vec<_>>(), [0, 1]);
        let leaf = apply_move(&ast, &s2, moves[1]).unwrap();
        assert_eq!(leaf.neutral_vertex(), 6);
        let EfgNode::Terminal { payoffs } = g.node(StateId(6)) else { panic!() };
        assert_eq!(leaf.terminal(), Some(&payoffs[..]));
        assert_eq!(is_terminal(&ast, &leaf), Some(&payoffs[..]));
        assert_eq!(is_terminal(&ast, &s2), None);
    }

    #[test]
    fn apply_move_leaves_input_untouched() {
        let ast = ast_for(&hidden_coin());
        let s0 = initial_state(&ast).unwrap();
        let before = s0.clone();
        let MoveResolution::Chance(b) = legal_moves(&ast, &s0) else { panic!() };
        let a = apply_move(&ast, &s0, b[0].1[0]).unwrap();
        let again = apply_move(&ast, &s0, b[0].1[0]).unwrap();
        assert_eq!(s0, before);
        assert_eq!(a, again);
    }

    #[test]
    fn default_mover_update_increments_and_wraps() {
        let g = GameBuilder::new(3)
            .decision(0, 1, [1])
            .terminal(1, ["0", "0", "0"])
            .build()
            .unwrap();
        let ast = ast_for(&g);
        let mut s = initial_state(&ast).unwrap();
        let bare = MoveChoice {
            select: 0,
            effects: vec![],
        };
        s.mover = 2;
        assert_eq!(apply_move(&ast, &s, &bare).unwrap().mover(), 3);
        s.mover = 3;
        assert_eq!(apply_move(&ast, &s, &bare).unwrap().mover(), 1);
    }

    #[test]
    fn removal_reveals_until_rehidden() {
        let ast = ast_for(&four_state_game());
        let s0 = initial_state(&ast).unwrap();
        let MoveResolution::Deterministic(moves) = legal_moves(&ast, &s0) else { panic!() };
        let mut stripped = moves[0].clone();
        stripped.effects.retain(|e| !matches!(e, Effect::SetHidden { .. }));
        let s = apply_move(&ast, &s0, &stripped).unwrap();
        // The neutral marker moved 0 → 1, so both vertices are now visible.
        assert!(!s.is_hidden(0, 1) && !s.is_hidden(1, 2));
        assert!(s.is_hidden(2, 1));
        assert_eq!(observe(&s, 2).cells[1], Cell::Piece(0));
    }

    #[test]
    fn effect_preconditions_are_enforced() {
        let ast = ast_for(&four_state_game());
        let s0 = initial_state(&ast).unwrap();
        let bad = MoveChoice {
            select: 0,
            effects: vec![Effect::FromTo { from: 3, to: 2 }],
        };
        assert_eq!(apply_move(&ast, &s0, &bad), Err(ExecError::FromEmpty { vertex: 3 }));
        let bad = MoveChoice {
            select: 0,
            effects: vec![Effect::FromTo { from: 0, to: 4 }],
        };
        assert_eq!(apply_move(&ast, &s0, &bad), Err(ExecError::ToOccupied { vertex: 4 }));
    }

    #[test]
    fn fingerprints_agree_with_view_equality() {
        let ast = ast_for(&hidden_coin());
        let mut states = vec![initial_state(&ast).unwrap()];
        let mut i = 0;
        while i < states.len() {
            let moves: Vec<&MoveChoice> = match legal_moves(&ast, &states[i]) {
                MoveResolution::Deterministic(m) => m,
                MoveResolution::Chance(b) => b.into_iter().flat_map(|x| x.1).collect(),
            };
            let next: Vec<InterpreterState> = moves.iter().map(|m| apply_move(&ast, &states[i], m).unwrap()).collect();
            states.extend(next);
            i += 1;
        }
        assert_eq!(states.len(), 7);
        let mut distinct = 0;
        for p in 1..=2 {
            for a in &states {
                for b in &states {
                    let same_view = observe(a, p) == observe(b, p);
                    assert_eq!(same_view, view_fingerprint(a, p) == view_fingerprint(b, p));
                    distinct += usize::from(!same_view);
                }
            }
        }
        assert!(distinct > 0);
    }
}
