//! The standard library: every callable function with its signature.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use super::types::{Subst, Type, VarKind};

macro_rules! builtins {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// A standard-library function. Declaration order is the library order
        /// used when enumerating candidates.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Builtin { $($variant),* }

        impl Builtin {
            pub const ALL: &'static [Builtin] = &[$(Builtin::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Builtin::$variant => $name),* }
            }
        }
    };
}

builtins! {
    Reduce => "reduce",
    Filter => "filter",
    Map => "map",
    Head => "head",
    Tail => "tail",
    Len => "len",
    Sort => "sort",
    Reverse => "reverse",
    Contains => "contains",
    Range => "range",
    Add => "+",
    Sub => "-",
    Mul => "*",
    Div => "/",
    Mod => "%",
    Lt => "<",
    Gt => ">",
    Le => "<=",
    Ge => ">=",
    Eq => "==",
    Min => "min",
    Max => "max",
    IsOdd => "is_odd",
    IsEven => "is_even",
    IsPrime => "is_prime",
    IsPositive => "is_positive",
    IsNegative => "is_negative",
    Partial0 => "partial0",
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A (possibly polymorphic) function signature. Type variables are numbered
/// locally from zero; `vars[i]` is the kind of `Type::Var(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub params: Vec<Type>,
    pub ret: Type,
    pub vars: Vec<VarKind>,
}

impl Signature {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// True when neither parameters nor result involve functions, i.e. the
    /// function can be passed by reference to a higher-order function.
    pub fn is_first_order(&self) -> bool {
        self.params.iter().all(Type::is_data) && self.ret.is_data()
    }

    /// Renames the local variables to fresh ones in `subst`.
    pub fn instantiate(&self, subst: &mut Subst) -> (Vec<Type>, Type) {
        let fresh: Vec<Type> = self.vars.iter().map(|k| subst.fresh(*k)).collect();
        let rename = |v: u32| fresh[v as usize].clone();
        (self.params.iter().map(|p| p.map_vars(&rename)).collect(), self.ret.map_vars(&rename))
    }
}

/// Map from function name to signature for the whole library.
#[derive(Debug)]
pub struct SignatureTable {
    sigs: Vec<Signature>,
    by_name: HashMap<&'static str, Builtin>,
}

impl SignatureTable {
    pub fn signature(&self, f: Builtin) -> &Signature {
        &self.sigs[f as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<Builtin> {
        self.by_name.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Builtin, &Signature)> {
        Builtin::ALL.iter().map(|&b| (b, self.signature(b)))
    }

    pub fn len(&self) -> usize {
        self.sigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigs.is_empty()
    }
}

fn build() -> SignatureTable {
    use Type::*;
    let t = || Var(0);
    let u = || Var(1);
    let r = || Var(2);
    let arr = Type::array;
    let func = Type::func;
    let data1 = vec![VarKind::Data];
    let ints = |n: usize, ret: Type| Signature { params: vec![Int; n], ret, vars: vec![] };

    let sig = |b: Builtin| -> Signature {
        match b {
            Builtin::Reduce => Signature {
                params: vec![arr(t()), t(), func(vec![t(), t()], t())],
                ret: t(),
                vars: data1.clone(),
            },
            Builtin::Filter => Signature {
                params: vec![arr(t()), func(vec![t()], Bool)],
                ret: arr(t()),
                vars: data1.clone(),
            },
            Builtin::Map => Signature {
                params: vec![arr(t()), func(vec![t()], u())],
                ret: arr(u()),
                vars: vec![VarKind::Data, VarKind::Data],
            },
            Builtin::Head => Signature { params: vec![arr(t())], ret: t(), vars: data1.clone() },
            Builtin::Tail | Builtin::Reverse => {
                Signature { params: vec![arr(t())], ret: arr(t()), vars: data1.clone() }
            }
            Builtin::Len => Signature { params: vec![arr(t())], ret: Int, vars: data1.clone() },
            Builtin::Sort => Signature { params: vec![arr(t())], ret: arr(t()), vars: vec![VarKind::Ord] },
            Builtin::Contains => Signature { params: vec![arr(t()), t()], ret: Bool, vars: data1.clone() },
            Builtin::Range => Signature { params: vec![Int, Int], ret: arr(Int), vars: vec![] },
            Builtin::Add | Builtin::Sub | Builtin::Mul | Builtin::Div | Builtin::Mod => ints(2, Int),
            Builtin::Lt | Builtin::Gt | Builtin::Le | Builtin::Ge => ints(2, Bool),
            Builtin::Eq => Signature { params: vec![t(), t()], ret: Bool, vars: data1.clone() },
            Builtin::Min | Builtin::Max => ints(2, Int),
            Builtin::IsOdd | Builtin::IsEven | Builtin::IsPrime | Builtin::IsPositive | Builtin::IsNegative => {
                ints(1, Bool)
            }
            Builtin::Partial0 => Signature {
                params: vec![t(), func(vec![t(), u()], r())],
                ret: func(vec![u()], r()),
                vars: vec![VarKind::Data; 3],
            },
        }
    };

    let sigs = Builtin::ALL.iter().map(|&b| sig(b)).collect();
    let by_name = Builtin::ALL.iter().map(|&b| (b.name(), b)).collect();
    SignatureTable { sigs, by_name }
}

static TABLE: LazyLock<SignatureTable> = LazyLock::new(build);

/// The standard library shared by parser, search and interpreter.
pub fn stdlib() -> &'static SignatureTable {
    &TABLE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_resolvable() {
        let lib = stdlib();
        assert_eq!(lib.len(), Builtin::ALL.len());
        for &b in Builtin::ALL {
            assert_eq!(lib.lookup(b.name()), Some(b));
        }
        assert_eq!(lib.lookup("lambda1"), None);
    }

    #[test]
    fn signatures_never_nest_functions_in_arrays() {
        fn check(t: &Type) {
            match t {
                Type::Array(e) => {
                    assert!(e.is_data(), "array of functions: {t}");
                    check(e)
                }
                Type::Func(ps, r) => {
                    ps.iter().for_each(check);
                    check(r)
                }
                _ => {}
            }
        }
        for (_, sig) in stdlib().iter() {
            sig.params.iter().for_each(check);
            check(&sig.ret);
        }
    }

    #[test]
    fn instantiation_uses_fresh_variables() {
        let mut s = Subst::new();
        let sig = stdlib().signature(Builtin::Map);
        let (p1, _) = sig.instantiate(&mut s);
        let (p2, _) = sig.instantiate(&mut s);
        assert_ne!(p1, p2);
        assert_eq!(s.var_count(), 4);
    }

    #[test]
    fn reduce_is_ternary() {
        assert_eq!(stdlib().signature(Builtin::Reduce).arity(), 3);
    }
}
