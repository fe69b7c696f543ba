//! A minimal logical framework with theories, includes, theory morphisms and
//! partial logical relations, plus the transformations built on them:
//! pushout along a morphism, witness ("star") extension along a logical
//! relation, removal of unused argument positions, and the combined
//! softening pipeline that turns intrinsically typed encodings into
//! extrinsically typed ones.

pub mod diff;
pub mod error;
pub mod kernel;
pub mod logrel;
pub mod morphism;
pub mod paramdrop;
pub mod parser;
pub mod prelude;
pub mod printer;
pub mod soften;
pub mod syntax;
pub mod theory;

pub use error::{Error, Result};
