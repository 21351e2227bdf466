//! Kernel-language front end: parsing, resolution, the template prelude and
//! printing.

mod ast;
mod lexer;
mod parser;
mod printer;
mod resolve;

pub use ast::*;
pub use printer::{pretty_print_program, print_annotated, print_expr, print_expr_annotated};
pub use resolve::MAP_BUILTIN;

use log::warn;

use crate::error::{Error, Result};

/// Source of the bundled template library.
pub const PRELUDE: &str = include_str!("../../../../lib/prelude.synrec");

/// Parses and resolves a program.
pub fn parse_program(text: &str) -> Result<Program> {
    resolve::resolve(parser::parse_unresolved(text)?)
}

/// Parses without resolving; used to merge a library before resolution.
pub fn parse_unresolved(text: &str) -> Result<Program> {
    parser::parse_unresolved(text)
}

/// Diagnostics produced while merging a library.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LibraryReport {
    pub shadowed: Vec<String>,
}

/// Merges library declarations into `program`. User functions shadow library
/// functions of the same name; an ADT declared in both must be identical.
pub fn load_library(program: Program, library_text: &str) -> Result<(Program, LibraryReport)> {
    let lib = parse_unresolved(library_text)?;
    merge(program, lib)
}

/// Parses user text and the library together, resolving the merged result.
pub fn parse_with_library(text: &str, library_text: &str) -> Result<(Program, LibraryReport)> {
    let user = parse_unresolved(text)?;
    let lib = parse_unresolved(library_text)?;
    let (merged, report) = merge(user, lib)?;
    Ok((resolve::resolve(merged)?, report))
}

fn merge(mut program: Program, lib: Program) -> Result<(Program, LibraryReport)> {
    let mut report = LibraryReport::default();
    let mut adts = Vec::new();
    for adt in lib.adts {
        match program.adt(&adt.name) {
            Some(mine) if *mine == adt => {}
            Some(mine) => {
                return Err(Error::Resolve {
                    span: mine.span,
                    msg: format!("adt `{}` conflicts with the library declaration", adt.name),
                })
            }
            None => adts.push(adt),
        }
    }
    let mut functions = Vec::new();
    for f in lib.functions {
        if program.function(&f.name).is_some() {
            warn!("user definition of `{}` shadows the library version", f.name);
            report.shadowed.push(f.name);
        } else {
            functions.push(f);
        }
    }
    adts.append(&mut program.adts);
    functions.append(&mut program.functions);
    program.adts = adts;
    program.functions = functions;
    Ok((resolve::resolve(program)?, report))
}
