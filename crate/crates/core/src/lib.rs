//! Instruction sequences of program algebra: parsing, canonical forms,
//! thread extraction and the equivalences between them.

pub mod canon;
pub mod cli;
pub mod equivalence;
pub mod extract;
pub mod register;
pub mod seq;
pub mod syntax;
pub mod thread;
pub mod verify;
