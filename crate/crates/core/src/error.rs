//! Error type shared across the crate. Every diagnostic that originates in a
//! source file carries a location; programmatically built objects report the
//! theory/declaration they belong to instead.

use thiserror::Error;

use crate::syntax::QName;

/// Source location for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loc {
    pub file: String,
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Loc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.col)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{loc}: parse error: {msg}")]
    Parse { loc: Loc, msg: String },

    #[error("unknown theory `{0}`")]
    UnknownTheory(String),

    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),

    #[error("unknown logical relation `{0}`")]
    UnknownLogrel(String),

    #[error("unknown constant `{0}`")]
    UnknownConstant(QName),

    #[error("{context}: name `{name}` clashes (declared in both `{first}` and `{second}`)")]
    NameClash { context: String, name: String, first: String, second: String },

    #[error("duplicate top-level name `{0}`")]
    DuplicateTopLevel(String),

    #[error("{context}: unbound variable index {index}")]
    UnboundVariable { context: String, index: usize },

    #[error("{context}: type mismatch: expected `{expected}`, found `{found}`")]
    TypeMismatch { context: String, expected: String, found: String },

    #[error("{context}: expected a function type, found `{found}`")]
    NotAFunction { context: String, found: String },

    #[error("{context}: the kind sort is not allowed here")]
    KindMisuse { context: String },

    #[error("{context}: binder type `{found}` does not classify to the sort `type`")]
    BinderNotAType { context: String, found: String },

    #[error("{context}: `{found}` is not a valid classifier (neither `type` nor a kind)")]
    NotAClassifier { context: String, found: String },

    #[error("normalization fuel exhausted after {0} steps")]
    FuelExhausted(u64),

    #[error("morphism `{morphism}`: assignment for `{constant}` which is not a domain constant")]
    AssignmentOutsideDomain { morphism: String, constant: QName },

    #[error("morphism `{morphism}` is not total: no assignment for `{constant}`")]
    NotTotal { morphism: String, constant: QName },

    #[error("morphism `{morphism}`: translation undefined on `{constant}`")]
    MorphismUndefined { morphism: String, constant: QName },

    #[error(
        "logical relation `{relation}`: term-totality violation at `{constant}` \
         (its type has a defined relation but the constant has no case)"
    )]
    TermTotalityViolation { relation: String, constant: QName },

    #[error(
        "logical relation `{relation}`: case for `{constant}` but the relation \
         is undefined on its type"
    )]
    CaseWithoutType { relation: String, constant: QName },

    #[error("theory `{theory}` does not (transitively) include `{expected}`")]
    MissingInclude { theory: String, expected: String },

    #[error("{context}: removal of argument positions is unsound: {msg}")]
    UnsoundRemoval { context: String, msg: String },

    #[error("{context}: defined constant `{constant}` has a translated type but its definiens does not translate")]
    DefiniensUntranslatable { context: String, constant: QName },

    #[error("name `{0}` already exists; generated names must be fresh")]
    GeneratedNameClash(String),

    #[error("annotation `#keep {index}` on `{constant}` is out of range (arity {arity})")]
    KeepOutOfRange { constant: QName, index: usize, arity: usize },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn parse(file: &str, line: usize, col: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            loc: Loc { file: file.to_string(), line, col },
            msg: msg.into(),
        }
    }
}
