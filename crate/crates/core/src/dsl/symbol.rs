use std::fmt;
use std::sync::Arc;

use super::stdlib::{stdlib, Builtin};
use super::types::Type;

/// Names bound by `lambda1`/`lambda2` inside their body, innermost lambda first.
pub const LAMBDA_PARAMS: [&str; 2] = ["arg1", "arg2"];

/// Integer sentinels rendered as `inf` / `-inf`.
pub const INF: i64 = i64::MAX;
pub const NEG_INF: i64 = i64::MIN;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Int(i64),
    Str(Arc<str>),
    Bool(bool),
}

impl Constant {
    pub fn ty(&self) -> Type {
        match self {
            Constant::Int(_) => Type::Int,
            Constant::Str(_) => Type::Str,
            Constant::Bool(_) => Type::Bool,
        }
    }

    /// The constants always available to search, independent of the task.
    pub fn base_pool() -> Vec<Constant> {
        vec![
            Constant::Int(0),
            Constant::Int(1),
            Constant::Int(2),
            Constant::Bool(true),
            Constant::Bool(false),
            Constant::Int(INF),
            Constant::Int(NEG_INF),
        ]
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(INF) => f.write_str("inf"),
            Constant::Int(NEG_INF) => f.write_str("-inf"),
            Constant::Int(n) => write!(f, "{n}"),
            Constant::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Constant::Bool(true) => f.write_str("True"),
            Constant::Bool(false) => f.write_str("False"),
        }
    }
}

/// What a filled tree node holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Const(Constant),
    /// A task argument or, inside a lambda body, one of [`LAMBDA_PARAMS`].
    Arg(Arc<str>),
    /// Application of a library function; children are its arguments.
    Call(Builtin),
    /// A library function used as a value.
    Ref(Builtin),
    /// Anonymous function of the given arity whose single child is its body.
    Lambda(u8),
}

impl Symbol {
    pub fn arg(name: &str) -> Symbol {
        Symbol::Arg(Arc::from(name))
    }

    pub fn int(n: i64) -> Symbol {
        Symbol::Const(Constant::Int(n))
    }

    /// Number of children a filled node with this symbol has.
    pub fn arity(&self) -> usize {
        match self {
            Symbol::Call(b) => stdlib().signature(*b).arity(),
            Symbol::Lambda(_) => 1,
            Symbol::Const(_) | Symbol::Arg(_) | Symbol::Ref(_) => 0,
        }
    }

    /// Head token as it appears in the concrete syntax; also the model-side
    /// vocabulary token for this symbol.
    pub fn token(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Const(c) => write!(f, "{c}"),
            Symbol::Arg(name) => f.write_str(name),
            Symbol::Call(b) | Symbol::Ref(b) => f.write_str(b.name()),
            Symbol::Lambda(n) => write!(f, "lambda{n}"),
        }
    }
}
