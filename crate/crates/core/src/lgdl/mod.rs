//! Ludeme terms, their textual form, and the compiler from games to descriptions.

pub mod emit;
pub mod reader;
pub mod term;

pub use emit::{
    compile, emit_end_rules, emit_equipment, emit_move_rule, emit_play_rules, emit_start_rules,
    prepare, probabilities_to_weights, vertex_index, CompileError, LudiiDescription, VertexIndex,
};
pub use reader::{read_term, ReadError};
pub use term::{render, Arg, Span, Term, Value};
