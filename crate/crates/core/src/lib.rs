//! Compile finite extensive-form games into Ludii game descriptions.
//!
//! The pipeline has four parts:
//!
//! * [`efg`] models games as trees with chance states, payoffs and
//!   information partitions, and [`format`] reads and writes them as
//!   `.efg-tree` text.
//! * [`lgdl`] compiles a game into a `.lud` description that embeds one copy
//!   of the game tree per player plus one for the true state.
//! * [`interp`] parses and executes that description subset.
//! * [`check`] replays both side by side and reports, criterion by
//!   criterion, whether the description is equivalent to the source game.

pub mod check;
pub mod efg;
pub mod format;
pub mod interp;
pub mod lgdl;
pub mod num;
pub mod rng;

pub use efg::{ExtensiveFormGame, PlayerId, StateId};
pub use num::{Decimal, Rational};
