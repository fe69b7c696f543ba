//! The embedded prelude: base theories for the hard- and soft-typed
//! disciplines, the type-erasure morphism, and the typing relation over it.

use crate::error::Result;
use crate::parser;
use crate::theory::Diagram;

/// Source text of the built-in prelude.
pub const PRELUDE_SRC: &str = include_str!("prelude.lf");

/// File name used in diagnostics for the embedded prelude.
pub const PRELUDE_FILE: &str = "<prelude>";

/// The hard-typed base theory.
pub const HARD_BASE: &str = "HTyped";
/// The soft-typed base theory.
pub const SOFT_BASE: &str = "STyped";
/// The type-erasure morphism from [`HARD_BASE`] to [`SOFT_BASE`].
pub const ERASURE: &str = "TE";
/// The typing logical relation over [`ERASURE`].
pub const TYPING_RELATION: &str = "TP";

/// Parse the embedded prelude into a fresh diagram.
pub fn prelude_diagram() -> Result<Diagram> {
    let mut d = Diagram::new();
    load_prelude_into(&mut d)?;
    Ok(d)
}

/// Parse the embedded prelude into an existing diagram.
pub fn load_prelude_into(diagram: &mut Diagram) -> Result<()> {
    parser::parse_file_into(diagram, PRELUDE_FILE, PRELUDE_SRC)
}
