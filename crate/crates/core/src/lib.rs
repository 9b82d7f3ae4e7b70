//! Refinement type checking with Horn-constraint inference.

pub mod logic;
pub mod smt;
pub mod syntax;
pub mod types;
pub mod horn;
pub mod check;
pub mod cli;
