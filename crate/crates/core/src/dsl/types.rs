//! DSL types and the unifier used while trees are partially built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Semantic type of a DSL value or function.
///
/// `Var` never appears in a finished program: it stands for a type that a
/// polymorphic library function has not yet committed to while holes below
/// it are still empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Str,
    Bool,
    Array(Box<Type>),
    Func(Vec<Type>, Box<Type>),
    Var(u32),
}

impl Type {
    pub fn array(elem: Type) -> Type {
        Type::Array(Box::new(elem))
    }

    pub fn func(params: Vec<Type>, ret: Type) -> Type {
        Type::Func(params, Box::new(ret))
    }

    pub fn is_func(&self) -> bool {
        matches!(self, Type::Func(..))
    }

    /// True when no `Func` occurs anywhere inside the type.
    pub fn is_data(&self) -> bool {
        match self {
            Type::Int | Type::Str | Type::Bool | Type::Var(_) => true,
            Type::Array(e) => e.is_data(),
            Type::Func(..) => false,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Type::Var(_) => false,
            Type::Int | Type::Str | Type::Bool => true,
            Type::Array(e) => e.is_ground(),
            Type::Func(ps, r) => ps.iter().all(Type::is_ground) && r.is_ground(),
        }
    }

    fn occurs(&self, v: u32) -> bool {
        match self {
            Type::Var(w) => *w == v,
            Type::Int | Type::Str | Type::Bool => false,
            Type::Array(e) => e.occurs(v),
            Type::Func(ps, r) => ps.iter().any(|p| p.occurs(v)) || r.occurs(v),
        }
    }

    /// Cheap necessary condition for unification: variables match any
    /// non-function type, without consulting bindings.
    pub(crate) fn may_unify(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Var(_), t) | (t, Type::Var(_)) => !t.is_func(),
            (Type::Array(a), Type::Array(b)) => a.may_unify(b),
            (Type::Func(pa, ra), Type::Func(pb, rb)) => {
                pa.len() == pb.len() && pa.iter().zip(pb).all(|(x, y)| x.may_unify(y)) && ra.may_unify(rb)
            }
            (a, b) => std::mem::discriminant(a) == std::mem::discriminant(b) && !matches!(a, Type::Array(_) | Type::Func(..)),
        }
    }

    pub(crate) fn map_vars(&self, f: &impl Fn(u32) -> Type) -> Type {
        match self {
            Type::Var(v) => f(*v),
            Type::Int => Type::Int,
            Type::Str => Type::Str,
            Type::Bool => Type::Bool,
            Type::Array(e) => Type::array(e.map_vars(f)),
            Type::Func(ps, r) => Type::func(ps.iter().map(|p| p.map_vars(f)).collect(), r.map_vars(f)),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Str => f.write_str("string"),
            Type::Bool => f.write_str("bool"),
            Type::Array(e) => {
                if e.is_func() {
                    write!(f, "({e})[]")
                } else {
                    write!(f, "{e}[]")
                }
            }
            Type::Func(ps, r) => {
                f.write_str("(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")->{r}")
            }
            Type::Var(v) => write!(f, "t{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unrecognized type `{0}` (expected int, string, bool or an array of those, e.g. int[])")]
pub struct TypeSyntaxError(pub String);

/// Parses the data-type notation used in dataset files: `int`, `string`,
/// `bool`, with any number of `[]` suffixes.
impl FromStr for Type {
    type Err = TypeSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let mut base = trimmed;
        let mut depth = 0;
        while let Some(rest) = base.strip_suffix("[]") {
            base = rest;
            depth += 1;
        }
        let mut ty = match base {
            "int" => Type::Int,
            "string" | "str" => Type::Str,
            "bool" => Type::Bool,
            _ => return Err(TypeSyntaxError(s.to_string())),
        };
        for _ in 0..depth {
            ty = Type::array(ty);
        }
        Ok(ty)
    }
}

impl Serialize for Type {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Type {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Constraint carried by an unbound type variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Any non-function type.
    Data,
    /// `int` or `string` (types with a total order).
    Ord,
}

impl VarKind {
    fn admits(self, t: &Type) -> bool {
        match self {
            VarKind::Data => t.is_data(),
            VarKind::Ord => matches!(t, Type::Int | Type::Str),
        }
    }

    fn meet(self, other: VarKind) -> VarKind {
        if self == VarKind::Ord || other == VarKind::Ord {
            VarKind::Ord
        } else {
            VarKind::Data
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Slot {
    Free(VarKind),
    Bound(Type),
}

/// Bindings for the type variables of one partial program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    slots: Vec<Slot>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, kind: VarKind) -> Type {
        self.slots.push(Slot::Free(kind));
        Type::Var((self.slots.len() - 1) as u32)
    }

    pub fn var_count(&self) -> usize {
        self.slots.len()
    }

    /// Kind of `v` if it is still unbound.
    pub fn free_kind(&self, v: u32) -> Option<VarKind> {
        match self.slots.get(v as usize)? {
            Slot::Free(k) => Some(*k),
            Slot::Bound(_) => None,
        }
    }

    fn kind_of(&self, v: u32) -> VarKind {
        match &self.slots[v as usize] {
            Slot::Free(k) => *k,
            Slot::Bound(_) => unreachable!("kind_of on bound variable"),
        }
    }

    /// Follows variable bindings at the top level only.
    fn shallow(&self, t: &Type) -> Type {
        let mut cur = t.clone();
        while let Type::Var(v) = cur {
            match &self.slots[v as usize] {
                Slot::Bound(b) => cur = b.clone(),
                Slot::Free(_) => break,
            }
        }
        cur
    }

    /// Applies all bindings recursively.
    pub fn resolve(&self, t: &Type) -> Type {
        match self.shallow(t) {
            Type::Array(e) => Type::array(self.resolve(&e)),
            Type::Func(ps, r) => Type::func(ps.iter().map(|p| self.resolve(p)).collect(), self.resolve(&r)),
            other => other,
        }
    }

    /// Unifies two types, extending the bindings. On failure the substitution
    /// may hold partial bindings, so callers unify against a scratch copy.
    pub fn unify(&mut self, a: &Type, b: &Type) -> bool {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => true,
            (Type::Var(x), Type::Var(y)) => {
                let kind = self.kind_of(*x).meet(self.kind_of(*y));
                self.slots[*y as usize] = Slot::Free(kind);
                self.slots[*x as usize] = Slot::Bound(b.clone());
                true
            }
            (Type::Var(x), t) | (t, Type::Var(x)) => self.bind(*x, t),
            (Type::Int, Type::Int) | (Type::Str, Type::Str) | (Type::Bool, Type::Bool) => true,
            (Type::Array(ea), Type::Array(eb)) => self.unify(ea, eb),
            (Type::Func(pa, ra), Type::Func(pb, rb)) => {
                pa.len() == pb.len() && pa.iter().zip(pb).all(|(x, y)| self.unify(x, y)) && self.unify(ra, rb)
            }
            _ => false,
        }
    }

    fn bind(&mut self, v: u32, t: &Type) -> bool {
        let resolved = self.resolve(t);
        if resolved.occurs(v) {
            return false;
        }
        if !self.kind_of(v).admits(&resolved) {
            return false;
        }
        self.slots[v as usize] = Slot::Bound(resolved);
        true
    }
}
