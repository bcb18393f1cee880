//! jMT: a litmus-test checker for multi-execution Java memory models.
//!
//! The library decides whether the assertion of a small concurrent Java-like
//! program is allowed by a memory model given as a `.cat` file, under a
//! multi-execution causality semantics layered on top of the single-execution
//! model. It can also compile litmus tests to x86 for comparison against a
//! hardware-model checker, and emit jcstress harnesses.

pub mod behavior;
pub mod builder;
pub mod cat;
pub mod causality;
pub mod cli;
pub mod exec;
pub mod expr;
pub mod jcstress;
pub mod litmus;
pub mod rel;
pub mod smt;
pub mod x86;
