//! Whether a hole can still be filled within a depth budget.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::stdlib::stdlib;
use super::symbol::Constant;
use super::tree::ArgDecl;
use super::types::{Subst, Type, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    ty: Type,
    params: Vec<Type>,
    kinds: Vec<VarKind>,
    calls_only: bool,
    budget: u8,
}

/// Memoized check that a closed term of some type exists with at most a
/// given number of levels, over the leaves of one task (its arguments and
/// constant pool). Holes that share a type variable are judged
/// independently, so the check may accept but never wrongly rejects.
type Memo = Rc<RefCell<HashMap<Key, bool>>>;

thread_local! {
    static SHARED: RefCell<HashMap<Vec<Type>, Memo>> = RefCell::new(HashMap::new());
}

/// Memo tables are shared by all checkers on a thread with the same leaves.
#[derive(Debug, Clone)]
pub struct Inhabitation {
    leaves: Vec<Type>,
    memo: Memo,
}

impl Inhabitation {
    pub fn new(args: &[ArgDecl], pool: &[Constant]) -> Self {
        let mut leaves: Vec<Type> = Vec::new();
        for t in args.iter().map(|a| a.ty.clone()).chain(pool.iter().map(Constant::ty)) {
            if !leaves.contains(&t) {
                leaves.push(t);
            }
        }
        let memo = SHARED.with(|m| Rc::clone(m.borrow_mut().entry(leaves.clone()).or_default()));
        Inhabitation { leaves, memo }
    }

    /// Whether a hole of type `ty` (resolved through `s`) can be filled
    /// within `budget` levels, with lambda parameters of types `params` in
    /// scope. `calls_only` holes must be filled by a library call.
    pub fn fits(&mut self, s: &Subst, ty: &Type, params: &[Type], calls_only: bool, budget: usize) -> bool {
        if budget == 0 {
            return false;
        }
        let (key, local) = canonical(s, ty, params, calls_only, budget.min(u8::MAX as usize) as u8);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let v = self.compute(&local, &key);
        self.memo.borrow_mut().insert(key, v);
        v
    }

    pub fn memo_len(&self) -> usize {
        self.memo.borrow().len()
    }

    fn compute(&mut self, local: &Subst, k: &Key) -> bool {
        let below = k.budget as usize - 1;
        if !k.calls_only {
            if let Type::Func(ps, r) = &k.ty {
                for (_, sig) in stdlib().iter().filter(|(_, sig)| sig.is_first_order()) {
                    let mut sc = local.clone();
                    let (p, ret) = sig.instantiate(&mut sc);
                    if sc.unify(&k.ty, &Type::func(p, ret)) {
                        return true;
                    }
                }
                if (1..=2).contains(&ps.len()) && self.fits(local, r, ps, true, below) {
                    return true;
                }
            } else if self.leaves.iter().chain(&k.params).any(|leaf| local.clone().unify(&k.ty, leaf)) {
                return true;
            }
        }
        for (_, sig) in stdlib().iter() {
            let mut sc = local.clone();
            let (ps, ret) = sig.instantiate(&mut sc);
            if !sc.unify(&k.ty, &ret) {
                continue;
            }
            let scope: Vec<Type> = k.params.iter().map(|p| sc.resolve(p)).collect();
            if ps.iter().all(|p| self.fits(&sc, p, &scope, false, below)) {
                return true;
            }
        }
        false
    }
}

/// Resolves `ty` and `params` and renumbers their free variables from zero
/// in order of appearance.
fn canonical(s: &Subst, ty: &Type, params: &[Type], calls_only: bool, budget: u8) -> (Key, Subst) {
    fn rename(t: &Type, seen: &mut Vec<u32>) -> Type {
        match t {
            Type::Var(v) => {
                let i = seen.iter().position(|w| w == v).unwrap_or_else(|| {
                    seen.push(*v);
                    seen.len() - 1
                });
                Type::Var(i as u32)
            }
            Type::Int | Type::Str | Type::Bool => t.clone(),
            Type::Array(e) => Type::array(rename(e, seen)),
            Type::Func(ps, r) => Type::func(ps.iter().map(|p| rename(p, seen)).collect(), rename(r, seen)),
        }
    }
    let mut seen = Vec::new();
    let ty = rename(&s.resolve(ty), &mut seen);
    let params = params.iter().map(|p| rename(&s.resolve(p), &mut seen)).collect();
    let kinds: Vec<VarKind> = seen.iter().map(|v| s.free_kind(*v).unwrap_or(VarKind::Data)).collect();
    let mut local = Subst::new();
    for k in &kinds {
        local.fresh(*k);
    }
    (Key { ty, params, kinds, calls_only, budget }, local)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inh(args: &[(&str, Type)]) -> Inhabitation {
        let args: Vec<ArgDecl> = args.iter().map(|(n, t)| ArgDecl::new(n, t.clone())).collect();
        Inhabitation::new(&args, &Constant::base_pool())
    }

    #[test]
    fn leaves_fit_in_one_level() {
        let mut i = inh(&[("a", Type::array(Type::Int))]);
        let s = Subst::new();
        assert!(i.fits(&s, &Type::Int, &[], false, 1));
        assert!(i.fits(&s, &Type::array(Type::Int), &[], false, 1));
        assert!(!i.fits(&s, &Type::array(Type::Int), &[], false, 0));
        assert!(!i.fits(&s, &Type::Str, &[], false, 1));
        assert!(!i.fits(&s, &Type::array(Type::Int), &[], true, 1));
    }

    #[test]
    fn nested_arrays_need_depth() {
        let mut i = inh(&[("a", Type::array(Type::Int))]);
        let s = Subst::new();
        let t3 = Type::array(Type::array(Type::array(Type::Int)));
        assert!(!i.fits(&s, &t3, &[], false, 1));
        assert!(i.fits(&s, &t3, &[], false, 6));
    }

    #[test]
    fn functions_fit_by_reference_or_lambda() {
        let mut i = inh(&[("n", Type::Int)]);
        let s = Subst::new();
        assert!(i.fits(&s, &Type::func(vec![Type::Int, Type::Int], Type::Int), &[], false, 1));
        let to_arr = Type::func(vec![Type::Int], Type::array(Type::Int));
        assert!(!i.fits(&s, &to_arr, &[], false, 1));
        // (partial0 0 range)
        assert!(i.fits(&s, &to_arr, &[], false, 2));
    }
}
