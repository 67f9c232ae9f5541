//! Executes descriptions in the subset produced by the compiler.

pub mod ast;
pub mod exec;
pub mod playout;

pub use ast::{
    lower, parse_lgdl, Diagnostic, Effect, EndClause, Generator, LgdlError, LudiiAst, MoveChoice,
    Observers, PlayClause, Region, RegionId, StartEffect,
};
pub use exec::{
    apply_move, initial_state, is_terminal, legal_moves, observe, view_fingerprint, Cell, ExecError,
    InterpreterState, MoveResolution, ObservationView, NEUTRAL,
};
pub use playout::{
    playout, playout_with, ForcedOnlyPolicy, Playout, PlayoutError, Policy, Step, UniformPolicy,
};
