//! Synthesis of recursive transformations over algebraic data types from
//! reusable templates.
//!
//! The pipeline parses a program with polymorphic synthesis constructs
//! ([`surface`]), expands them by type-directed rules into a finite control
//! space ([`expander`]), optionally installs the inductive decomposition
//! rewrite ([`indecomp`]), and searches for a control assignment with CEGIS
//! against bounded exhaustive verification ([`cegis`]).

pub mod cegis;
pub mod cli;
pub mod error;
pub mod evaluator;
pub mod expander;
pub mod indecomp;
pub mod surface;
pub mod typesys;

pub use error::{Error, Result};
