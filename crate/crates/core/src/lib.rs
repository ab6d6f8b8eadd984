//! A lazy clause generation solver for resource-constrained project
//! scheduling with generalized precedences.

pub mod engine;
pub mod io;
pub mod lits;
pub mod model;
pub mod props;
pub mod search;
pub mod tempo;

pub use model::{check_schedule, validate, Instance, Precedence, Schedule};
pub use search::{solve, SolveConfig, SolveOutcome, Status, Strategy};
