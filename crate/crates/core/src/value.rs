//! Values carried by operation payloads, object states and operation-local
//! registers.

use std::fmt;

use serde::{Deserialize, Serialize};

/// An argument or return value.
///
/// Serialized untagged: `null`, a JSON integer, or a JSON string. The string
/// `"?"` is reserved for the return of an operation closed at the horizon
/// (see [`crate::history::complete_history`]); checkers accept any value for it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum Value {
    #[default]
    Nil,
    Int(i64),
    Sym(String),
}

impl Value {
    pub const OK: &'static str = "ok";
    pub const EMPTY: &'static str = "empty";
    pub const UNKNOWN: &'static str = "?";

    pub fn ok() -> Self {
        Value::Sym(Self::OK.into())
    }

    pub fn empty() -> Self {
        Value::Sym(Self::EMPTY.into())
    }

    pub fn unknown() -> Self {
        Value::Sym(Self::UNKNOWN.into())
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Value::Sym(s) if s == Self::UNKNOWN)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Integer view used by programs: `Nil` reads as 0.
    pub fn int_or_zero(&self) -> i64 {
        self.as_int().unwrap_or(0)
    }

    /// Whether a recorded return `self` admits the produced value `actual`.
    pub fn admits(&self, actual: &Value) -> bool {
        self.is_unknown() || self == actual
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => f.write_str("-"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

/// Object state as a vector of integers: one slot per shared variable for
/// program objects, the element list for queues.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct State(pub Vec<i64>);

impl State {
    pub fn single(v: i64) -> Self {
        State(vec![v])
    }
}

/// Per-operation scratch registers carried between the effect steps of one
/// operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Locals(pub Vec<Value>);
