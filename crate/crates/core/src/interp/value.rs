use std::fmt;
use std::sync::Arc;

use serde_json::Value as Json;

use crate::dsl::{Builtin, Constant, Type, INF, NEG_INF};

use super::Expr;

/// A runtime value.
#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Str(Arc<str>),
    Bool(bool),
    Array(Arc<Vec<Value>>),
    Closure(Arc<Closure>),
}

/// A function value: captured values plus code.
#[derive(Debug)]
pub enum Closure {
    Builtin(Builtin),
    /// `partial0 bound func`: calling it with `y` calls `func(bound, y)`.
    Partial { bound: Value, func: Value },
    Lambda { arity: u8, body: Arc<Expr> },
}

impl Value {
    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Arc::new(items))
    }

    pub fn ints(items: &[i64]) -> Value {
        Value::array(items.iter().map(|&n| Value::Int(n)).collect())
    }

    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn is_closure(&self) -> bool {
        matches!(self, Value::Closure(_))
    }

    /// Whether this value inhabits `ty` (closures never do: they are not data).
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Int(_), Type::Int) | (Value::Str(_), Type::Str) | (Value::Bool(_), Type::Bool) => true,
            (Value::Array(items), Type::Array(e)) => items.iter().all(|v| v.has_type(e)),
            _ => false,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(n) => Json::from(*n),
            Value::Str(s) => Json::from(&**s),
            Value::Bool(b) => Json::from(*b),
            Value::Array(items) => Json::Array(items.iter().map(Value::to_json).collect()),
            Value::Closure(_) => Json::Null,
        }
    }

    pub fn from_json(json: &Json, ty: &Type) -> Result<Value, ValueError> {
        let bad = || ValueError { expected: ty.clone(), found: json.to_string() };
        match ty {
            Type::Int => json.as_i64().map(Value::Int).ok_or_else(bad),
            Type::Str => json.as_str().map(Value::str).ok_or_else(bad),
            Type::Bool => json.as_bool().map(Value::Bool).ok_or_else(bad),
            Type::Array(e) => {
                let items = json.as_array().ok_or_else(bad)?;
                Ok(Value::array(items.iter().map(|j| Value::from_json(j, e)).collect::<Result<_, _>>()?))
            }
            Type::Func(..) | Type::Var(_) => Err(bad()),
        }
    }

    pub(crate) fn from_constant(c: &Constant) -> Value {
        match c {
            Constant::Int(n) => Value::Int(*n),
            Constant::Str(s) => Value::Str(Arc::clone(s)),
            Constant::Bool(b) => Value::Bool(*b),
        }
    }
}

/// Best-effort type of a JSON data value; `None` for nulls, objects,
/// non-integer numbers, and arrays whose element type cannot be determined.
pub fn infer_json_type(json: &Json) -> Option<Type> {
    match json {
        Json::Bool(_) => Some(Type::Bool),
        Json::Number(n) if n.is_i64() => Some(Type::Int),
        Json::String(_) => Some(Type::Str),
        Json::Array(items) => {
            let mut elem = None;
            for item in items {
                let t = infer_json_type(item)?;
                match &elem {
                    None => elem = Some(t),
                    Some(e) if *e == t => {}
                    Some(_) => return None,
                }
            }
            elem.map(Type::array)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected a value of type {expected}, found {found}")]
pub struct ValueError {
    pub expected: Type,
    pub found: String,
}

/// Deep structural equality on data; closures are never equal to anything.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(INF) => f.write_str("inf"),
            Value::Int(NEG_INF) => f.write_str("-inf"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{:?}", &**s),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Closure(_) => f.write_str("<closure>"),
        }
    }
}
