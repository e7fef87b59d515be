//! Persistent program trees with typed holes.
//!
//! A [`Tree`] is a pointer to an immutable root plus the type-variable
//! bindings of the partial program. Filling a hole copies only the filled
//! node and its ancestors; every other subtree is shared with the input tree.
//! Holes live inline in their parent's child list and are not separate
//! allocations, so filling a hole at depth `d` allocates exactly `d + 1`
//! node records.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::inhabit::Inhabitation;
use super::stdlib::{stdlib, Builtin};
use super::symbol::{Symbol, LAMBDA_PARAMS};
use super::types::{Subst, Type, VarKind};

thread_local! {
    static NODE_ALLOCS: Cell<u64> = const { Cell::new(0) };
}

/// Number of filled-node records allocated on the current thread so far.
pub fn allocated_nodes() -> u64 {
    NODE_ALLOCS.with(Cell::get)
}

/// A named, typed program argument.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgDecl {
    pub name: Arc<str>,
    #[serde(rename = "type")]
    pub ty: Type,
}

impl ArgDecl {
    pub fn new(name: &str, ty: Type) -> Self {
        ArgDecl { name: Arc::from(name), ty }
    }
}

/// An empty node: the type its eventual symbol must produce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hole {
    pub ty: Type,
    /// Set for lambda bodies, which must be function calls.
    pub calls_only: bool,
}

#[derive(Debug)]
pub struct Filled<A> {
    pub symbol: Symbol,
    /// Type of the value this node produces; may mention variables that are
    /// resolved through the owning tree's bindings.
    pub ty: Type,
    pub children: Vec<Node<A>>,
    /// Caller-owned per-node payload (search stores guidance state here).
    pub ann: A,
}

impl<A> Filled<A> {
    fn alloc(symbol: Symbol, ty: Type, children: Vec<Node<A>>, ann: A) -> Arc<Self> {
        NODE_ALLOCS.with(|c| c.set(c.get() + 1));
        Arc::new(Filled { symbol, ty, children, ann })
    }
}

#[derive(Debug)]
pub enum Node<A = ()> {
    Hole(Hole),
    Filled(Arc<Filled<A>>),
}

impl<A> Clone for Node<A> {
    fn clone(&self) -> Self {
        match self {
            Node::Hole(h) => Node::Hole(h.clone()),
            Node::Filled(f) => Node::Filled(Arc::clone(f)),
        }
    }
}

impl<A> Node<A> {
    pub fn as_filled(&self) -> Option<&Arc<Filled<A>>> {
        match self {
            Node::Filled(f) => Some(f),
            Node::Hole(_) => None,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Hole(_) => 1,
            Node::Filled(f) => 1 + f.children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn size(&self) -> usize {
        match self {
            Node::Hole(_) => 1,
            Node::Filled(f) => 1 + f.children.iter().map(Node::size).sum::<usize>(),
        }
    }

    fn same_shape<B>(&self, other: &Node<B>) -> bool {
        match (self, other) {
            (Node::Hole(_), Node::Hole(_)) => true,
            (Node::Filled(a), Node::Filled(b)) => {
                a.symbol == b.symbol
                    && a.children.len() == b.children.len()
                    && a.children.iter().zip(&b.children).all(|(x, y)| x.same_shape(y))
            }
            _ => false,
        }
    }

    fn strip(&self) -> Node<()> {
        match self {
            Node::Hole(h) => Node::Hole(h.clone()),
            Node::Filled(f) => Node::Filled(Arc::new(Filled {
                symbol: f.symbol.clone(),
                ty: f.ty.clone(),
                children: f.children.iter().map(Node::strip).collect(),
                ann: (),
            })),
        }
    }
}

/// Child-index path from the root to a node.
pub type HolePath = Vec<u8>;

/// A filled neighbour of a hole, with its payload.
#[derive(Clone, Debug)]
pub struct Link<A> {
    pub symbol: Symbol,
    pub ann: A,
}

/// Everything needed to fill the first empty node of a tree.
#[derive(Clone, Debug)]
pub struct HoleSite<A> {
    pub path: HolePath,
    /// Required type with all current bindings applied.
    pub ty: Type,
    pub calls_only: bool,
    /// Parameter types of the innermost enclosing lambda, if any.
    pub lambda_params: Vec<Type>,
    pub parent: Option<Link<A>>,
    /// The immediately preceding sibling (always filled, by pre-order).
    pub sibling: Option<Link<A>>,
    pub child_index: usize,
}

impl<A> HoleSite<A> {
    pub fn depth(&self) -> usize {
        self.path.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("type mismatch: expected {expected}, found {actual}")]
    Mismatch { expected: Type, actual: Type },
    #[error("unknown argument `{0}`")]
    UnknownArgument(String),
    #[error("lambda body must be a function call, found `{0}`")]
    CallRequired(String),
    #[error("`{0}` is higher-order and cannot be passed as a value")]
    NotFirstOrder(Builtin),
    #[error("lambda{0} is not supported (arity must be 1 or 2)")]
    LambdaArity(u8),
    #[error("no hole at path {0:?}")]
    NotAHole(HolePath),
}

/// A program: argument list plus a (possibly partial) expression tree.
#[derive(Debug)]
pub struct Tree<A = ()> {
    args: Arc<[ArgDecl]>,
    root: Node<A>,
    types: Arc<Subst>,
    holes: usize,
}

impl<A> Clone for Tree<A> {
    fn clone(&self) -> Self {
        Tree {
            args: Arc::clone(&self.args),
            root: self.root.clone(),
            types: Arc::clone(&self.types),
            holes: self.holes,
        }
    }
}

impl<A> Tree<A> {
    /// The empty tree: a single root hole. With `ret = None` the root type is
    /// left open and fixed by whatever fills it.
    pub fn empty(args: impl Into<Arc<[ArgDecl]>>, ret: Option<Type>) -> Self {
        let mut types = Subst::new();
        let ty = ret.unwrap_or_else(|| types.fresh(VarKind::Data));
        Tree {
            args: args.into(),
            root: Node::Hole(Hole { ty, calls_only: false }),
            types: Arc::new(types),
            holes: 1,
        }
    }

    pub fn args(&self) -> &[ArgDecl] {
        &self.args
    }

    pub fn shared_args(&self) -> Arc<[ArgDecl]> {
        Arc::clone(&self.args)
    }

    pub fn root(&self) -> &Node<A> {
        &self.root
    }

    pub fn hole_count(&self) -> usize {
        self.holes
    }

    pub fn is_complete(&self) -> bool {
        self.holes == 0
    }

    /// Applies the tree's type bindings.
    pub fn resolve(&self, ty: &Type) -> Type {
        self.types.resolve(ty)
    }

    /// Type of the whole program.
    pub fn result_type(&self) -> Type {
        match &self.root {
            Node::Hole(h) => self.resolve(&h.ty),
            Node::Filled(f) => self.resolve(&f.ty),
        }
    }

    /// Number of nodes on the longest root-to-leaf path (a single leaf has depth 1).
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Total node count, holes included.
    pub fn size(&self) -> usize {
        self.root.size()
    }

    /// Structural equality of symbols and shape, ignoring payloads.
    pub fn same_program<B>(&self, other: &Tree<B>) -> bool {
        self.root.same_shape(&other.root)
    }

    pub fn strip(&self) -> Tree<()> {
        Tree {
            args: Arc::clone(&self.args),
            root: self.root.strip(),
            types: Arc::clone(&self.types),
            holes: self.holes,
        }
    }

    /// Symbols of all filled nodes in pre-order.
    pub fn symbols(&self) -> Vec<&Symbol> {
        fn walk<'a, A>(n: &'a Node<A>, out: &mut Vec<&'a Symbol>) {
            if let Node::Filled(f) = n {
                out.push(&f.symbol);
                f.children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    fn lambda_params(&self, lambda: Option<&Filled<A>>) -> Vec<Type> {
        match lambda.map(|l| self.resolve(&l.ty)) {
            Some(Type::Func(ps, _)) => ps,
            _ => Vec::new(),
        }
    }

    /// Type of `symbol` placed where `expected` is required, with the child
    /// holes it opens. Works on a scratch copy of the bindings.
    fn type_symbol(
        &self,
        symbol: &Symbol,
        hole: &Hole,
        lambda_params: &[Type],
    ) -> Result<(Subst, Type, Vec<Hole>), TypeError> {
        let mut s = (*self.types).clone();
        if hole.calls_only && !matches!(symbol, Symbol::Call(_)) {
            return Err(TypeError::CallRequired(symbol.to_string()));
        }
        let (ty, children) = match symbol {
            Symbol::Const(c) => (c.ty(), Vec::new()),
            Symbol::Arg(name) => {
                let param = LAMBDA_PARAMS.iter().position(|p| **p == **name);
                let ty = match param {
                    Some(i) if i < lambda_params.len() => lambda_params[i].clone(),
                    Some(_) => return Err(TypeError::UnknownArgument(name.to_string())),
                    None => match self.args.iter().find(|a| a.name == *name) {
                        Some(a) => a.ty.clone(),
                        None => return Err(TypeError::UnknownArgument(name.to_string())),
                    },
                };
                (ty, Vec::new())
            }
            Symbol::Call(b) => {
                let (params, ret) = stdlib().signature(*b).instantiate(&mut s);
                let holes = params.into_iter().map(|ty| Hole { ty, calls_only: false }).collect();
                (ret, holes)
            }
            Symbol::Ref(b) => {
                let sig = stdlib().signature(*b);
                if !sig.is_first_order() {
                    return Err(TypeError::NotFirstOrder(*b));
                }
                let (params, ret) = sig.instantiate(&mut s);
                (Type::func(params, ret), Vec::new())
            }
            Symbol::Lambda(n) => {
                if !(1..=2).contains(n) {
                    return Err(TypeError::LambdaArity(*n));
                }
                match s.resolve(&hole.ty) {
                    Type::Func(ps, r) if ps.len() == *n as usize => {
                        let body = Hole { ty: (*r).clone(), calls_only: true };
                        (Type::Func(ps, r), vec![body])
                    }
                    _ => {
                        let shape = Type::func((0..*n as u32).map(Type::Var).collect(), Type::Var(*n as u32));
                        return Err(TypeError::Mismatch { expected: self.resolve(&hole.ty), actual: shape });
                    }
                }
            }
        };
        let actual = s.resolve(&ty);
        if !s.unify(&hole.ty, &ty) {
            return Err(TypeError::Mismatch { expected: self.resolve(&hole.ty), actual });
        }
        Ok((s, ty, children))
    }

    /// Whether `symbol` may fill `site` without a type error.
    pub fn accepts(&self, site: &HoleSite<A>, symbol: &Symbol) -> bool {
        let hole = Hole { ty: site.ty.clone(), calls_only: site.calls_only };
        self.type_symbol(symbol, &hole, &site.lambda_params).is_ok()
    }
}

impl<A: Clone> Tree<A> {
    /// First hole in pre-order (node before children, children left to
    /// right), or `None` for a complete tree.
    pub fn first_empty_node(&self) -> Option<HoleSite<A>> {
        if self.holes == 0 {
            return None;
        }
        match &self.root {
            Node::Hole(h) => Some(HoleSite {
                path: Vec::new(),
                ty: self.resolve(&h.ty),
                calls_only: h.calls_only,
                lambda_params: Vec::new(),
                parent: None,
                sibling: None,
                child_index: 0,
            }),
            Node::Filled(f) => {
                let mut path = Vec::new();
                self.find_hole(f, None, &mut path)
            }
        }
    }

    fn find_hole(&self, node: &Filled<A>, lambda: Option<&Filled<A>>, path: &mut HolePath) -> Option<HoleSite<A>> {
        let scope = if matches!(node.symbol, Symbol::Lambda(_)) { Some(node) } else { lambda };
        for (i, child) in node.children.iter().enumerate() {
            path.push(i as u8);
            match child {
                Node::Hole(h) => {
                    let sibling = (i > 0).then(|| {
                        let prev = node.children[i - 1].as_filled().expect("pre-order: earlier siblings are complete");
                        Link { symbol: prev.symbol.clone(), ann: prev.ann.clone() }
                    });
                    return Some(HoleSite {
                        path: path.clone(),
                        ty: self.resolve(&h.ty),
                        calls_only: h.calls_only,
                        lambda_params: self.lambda_params(scope),
                        parent: Some(Link { symbol: node.symbol.clone(), ann: node.ann.clone() }),
                        sibling,
                        child_index: i,
                    });
                }
                Node::Filled(f) => {
                    if let Some(site) = self.find_hole(f, scope, path) {
                        return Some(site);
                    }
                }
            }
            path.pop();
        }
        None
    }

    /// Returns a new tree with the hole at `path` filled by `symbol` and one
    /// fresh typed hole per parameter of `symbol`. `self` is unchanged.
    pub fn substitute(&self, path: &[u8], symbol: Symbol, ann: A) -> Result<Tree<A>, TypeError> {
        let mut spine: Vec<&Arc<Filled<A>>> = Vec::with_capacity(path.len());
        let mut lambda: Option<&Filled<A>> = None;
        let mut cur = &self.root;
        for &i in path {
            let f = match cur {
                Node::Filled(f) if (i as usize) < f.children.len() => f,
                _ => return Err(TypeError::NotAHole(path.to_vec())),
            };
            if matches!(f.symbol, Symbol::Lambda(_)) {
                lambda = Some(f);
            }
            spine.push(f);
            cur = &f.children[i as usize];
        }
        let hole = match cur {
            Node::Hole(h) => h,
            Node::Filled(_) => return Err(TypeError::NotAHole(path.to_vec())),
        };
        let params = self.lambda_params(lambda);
        let (types, ty, child_holes) = self.type_symbol(&symbol, hole, &params)?;
        let opened = child_holes.len();
        let children = child_holes.into_iter().map(Node::Hole).collect();
        let mut node = Node::Filled(Filled::alloc(symbol, ty, children, ann));
        for (f, &i) in spine.iter().zip(path).rev() {
            let mut children = f.children.clone();
            children[i as usize] = node;
            node = Node::Filled(Filled::alloc(f.symbol.clone(), f.ty.clone(), children, f.ann.clone()));
        }
        Ok(Tree { args: Arc::clone(&self.args), root: node, types: Arc::new(types), holes: self.holes - 1 + opened })
    }

    /// [`Tree::candidates`] restricted to symbols whose child holes can all
    /// still be filled without the program exceeding `max_depth` levels.
    pub fn candidates_within(
        &self,
        site: &HoleSite<A>,
        pool: &[super::symbol::Constant],
        max_depth: usize,
        inh: &mut Inhabitation,
    ) -> Vec<Symbol> {
        let level = site.depth() + 1;
        if level > max_depth {
            return Vec::new();
        }
        self.typed_candidates(site, pool)
            .into_iter()
            .filter(|(sym, (s, ty, kids))| {
                if kids.is_empty() {
                    return true;
                }
                let scope: Vec<Type> = match (sym, s.resolve(ty)) {
                    (Symbol::Lambda(_), Type::Func(ps, _)) => ps,
                    _ => site.lambda_params.iter().map(|p| s.resolve(p)).collect(),
                };
                kids.iter().all(|h| inh.fits(s, &h.ty, &scope, h.calls_only, max_depth - level))
            })
            .map(|(sym, _)| sym)
            .collect()
    }

    /// Type-valid symbols for `site`, in library order, then lambdas, then
    /// arguments (lambda parameters before task arguments), then constants.
    pub fn candidates(&self, site: &HoleSite<A>, pool: &[super::symbol::Constant]) -> Vec<Symbol> {
        self.typed_candidates(site, pool).into_iter().map(|(sym, _)| sym).collect()
    }

    fn typed_candidates(
        &self,
        site: &HoleSite<A>,
        pool: &[super::symbol::Constant],
    ) -> Vec<(Symbol, (Subst, Type, Vec<Hole>))> {
        let hole = Hole { ty: site.ty.clone(), calls_only: site.calls_only };
        let mut out = Vec::new();
        let mut try_push = |s: Symbol, shape: Option<&Type>| {
            if shape.is_some_and(|t| !site.ty.may_unify(t)) {
                return;
            }
            if let Ok(typed) = self.type_symbol(&s, &hole, &site.lambda_params) {
                out.push((s, typed));
            }
        };
        let table = stdlib();
        for &b in Builtin::ALL {
            try_push(Symbol::Call(b), Some(&table.signature(b).ret));
        }
        if site.calls_only {
            return out;
        }
        if site.ty.is_func() {
            for &b in Builtin::ALL {
                let sig = table.signature(b);
                if sig.is_first_order() {
                    try_push(Symbol::Ref(b), Some(&Type::func(sig.params.clone(), sig.ret.clone())));
                }
            }
            for n in 1..=2u8 {
                try_push(Symbol::Lambda(n), None);
            }
            return out;
        }
        for (i, p) in LAMBDA_PARAMS.iter().enumerate().take(site.lambda_params.len()) {
            try_push(Symbol::arg(p), Some(&site.lambda_params[i]));
        }
        for a in self.args.iter() {
            try_push(Symbol::Arg(Arc::clone(&a.name)), Some(&a.ty));
        }
        for c in pool {
            try_push(Symbol::Const(c.clone()), Some(&c.ty()));
        }
        out
    }
}

impl<A> fmt::Display for Tree<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go<A>(t: &Tree<A>, n: &Node<A>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                Node::Hole(h) => write!(f, "?:{}", t.resolve(&h.ty)),
                Node::Filled(node) if node.children.is_empty() => write!(f, "{}", node.symbol),
                Node::Filled(node) => {
                    write!(f, "({}", node.symbol)?;
                    for c in &node.children {
                        f.write_str(" ")?;
                        go(t, c, f)?;
                    }
                    f.write_str(")")
                }
            }
        }
        go(self, &self.root, f)
    }
}

impl<A, B> PartialEq<Tree<B>> for Tree<A> {
    fn eq(&self, other: &Tree<B>) -> bool {
        self.args == other.args && self.same_program(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::symbol::{Constant, INF};

    fn arr_a() -> Vec<ArgDecl> {
        vec![ArgDecl::new("a", Type::array(Type::Int))]
    }

    fn fill(t: &Tree, sym: Symbol) -> Tree {
        let site = t.first_empty_node().expect("hole");
        t.substitute(&site.path, sym, ()).unwrap()
    }

    #[test]
    fn empty_tree_root_site() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let site = t.first_empty_node().unwrap();
        assert!(site.path.is_empty());
        assert_eq!(site.ty, Type::Int);
        assert!(site.parent.is_none());
        assert_eq!(t.to_string(), "?:int");
    }

    #[test]
    fn reduce_opens_three_typed_holes() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::Call(Builtin::Reduce));
        assert_eq!(t.hole_count(), 3);
        assert_eq!(t.to_string(), "(reduce ?:int[] ?:int ?:(int,int)->int)");
        let site = t.first_empty_node().unwrap();
        assert_eq!(site.path, vec![0]);
    }

    #[test]
    fn first_hole_skips_filled_prefix() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::Call(Builtin::Reduce));
        let t = t.substitute(&[1], Symbol::int(0), ()).unwrap();
        // reduce[Hole, 0, Hole]: first hole is the first child
        let site = t.first_empty_node().unwrap();
        assert_eq!(site.path, vec![0]);
        assert_eq!(site.child_index, 0);
        assert_eq!(t.to_string(), "(reduce ?:int[] 0 ?:(int,int)->int)");
    }

    #[test]
    fn hole_rendering_in_context() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::Call(Builtin::Reduce));
        let t = fill(&t, Symbol::arg("a"));
        let t = t.substitute(&[2], Symbol::Ref(Builtin::Add), ()).unwrap();
        assert_eq!(t.to_string(), "(reduce a ?:int +)");
    }

    #[test]
    fn substitution_is_persistent() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::Call(Builtin::Reduce));
        let before = t.to_string();
        let u = fill(&t, Symbol::arg("a"));
        let v = fill(&t, Symbol::Call(Builtin::Sort));
        assert_eq!(t.to_string(), before);
        assert_eq!(u.to_string(), "(reduce a ?:int ?:(int,int)->int)");
        assert_eq!(v.to_string(), "(reduce (sort ?:int[]) ?:int ?:(int,int)->int)");
    }

    #[test]
    fn path_copy_allocates_depth_plus_one() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::Call(Builtin::Reduce));
        let t = fill(&t, Symbol::Call(Builtin::Filter));
        let site = t.first_empty_node().unwrap();
        assert_eq!(site.depth(), 2);
        let before = allocated_nodes();
        let _ = t.substitute(&site.path, Symbol::arg("a"), ()).unwrap();
        assert_eq!(allocated_nodes() - before, 3);
    }

    #[test]
    fn type_mismatch_reports_both_types() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let err = t.substitute(&[], Symbol::arg("a"), ()).unwrap_err();
        assert_eq!(err, TypeError::Mismatch { expected: Type::Int, actual: Type::array(Type::Int) });
    }

    #[test]
    fn substitute_rejects_filled_locator() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Int));
        let t = fill(&t, Symbol::int(1));
        assert!(matches!(t.substitute(&[], Symbol::int(2), ()), Err(TypeError::NotAHole(_))));
    }

    #[test]
    fn bool_hole_candidates() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Bool));
        let site = t.first_empty_node().unwrap();
        let cands = t.candidates(&site, &Constant::base_pool());
        let consts: Vec<_> = cands.iter().filter(|s| matches!(s, Symbol::Const(_))).collect();
        assert_eq!(consts.len(), 2);
        let calls: Vec<_> = cands.iter().filter_map(|s| if let Symbol::Call(b) = s { Some(*b) } else { None }).collect();
        // every library function whose result can be a bool
        let expected: Vec<Builtin> = Builtin::ALL
            .iter()
            .copied()
            .filter(|b| {
                let mut s = Subst::new();
                let (_, ret) = stdlib().signature(*b).instantiate(&mut s);
                s.unify(&ret, &Type::Bool)
            })
            .collect();
        assert_eq!(calls, expected);
        assert!(calls.contains(&Builtin::Reduce) && calls.contains(&Builtin::Head) && calls.contains(&Builtin::Lt));
        assert!(!cands.contains(&Symbol::arg("a")));
    }

    #[test]
    fn func_hole_candidates() {
        let args = arr_a();
        let t: Tree = Tree::empty(args, Some(Type::array(Type::Int)));
        let t = fill(&t, Symbol::Call(Builtin::Filter));
        let t = fill(&t, Symbol::arg("a"));
        let site = t.first_empty_node().unwrap();
        assert_eq!(site.ty, Type::func(vec![Type::Int], Type::Bool));
        let cands = t.candidates(&site, &Constant::base_pool());
        assert!(cands.contains(&Symbol::Ref(Builtin::IsOdd)));
        assert!(cands.contains(&Symbol::Lambda(1)));
        assert!(cands.contains(&Symbol::Call(Builtin::Partial0)));
        assert!(!cands.iter().any(|s| matches!(s, Symbol::Const(_))));
        assert!(!cands.contains(&Symbol::Lambda(2)));
    }

    #[test]
    fn lambda_body_scope_and_call_restriction() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::array(Type::Int)));
        let t = fill(&t, Symbol::Call(Builtin::Map));
        let t = fill(&t, Symbol::arg("a"));
        let t = fill(&t, Symbol::Lambda(1));
        let site = t.first_empty_node().unwrap();
        assert!(site.calls_only);
        assert_eq!(site.lambda_params, vec![Type::Int]);
        let cands = t.candidates(&site, &Constant::base_pool());
        assert!(cands.iter().all(|s| matches!(s, Symbol::Call(_))));
        let t = fill(&t, Symbol::Call(Builtin::Mul));
        let site = t.first_empty_node().unwrap();
        let cands = t.candidates(&site, &Constant::base_pool());
        assert!(cands.contains(&Symbol::arg("arg1")));
        assert!(!cands.contains(&Symbol::arg("arg2")));
        let t = fill(&t, Symbol::arg("arg1"));
        let t = fill(&t, Symbol::arg("arg1"));
        assert!(t.is_complete());
        assert_eq!(t.to_string(), "(map a (lambda1 (* arg1 arg1)))");
        assert_eq!(t.result_type(), Type::array(Type::Int));
    }

    #[test]
    fn polymorphic_variables_resolve_left_to_right() {
        let t: Tree = Tree::empty(arr_a(), Some(Type::Bool));
        let t = fill(&t, Symbol::Call(Builtin::Contains));
        let t = fill(&t, Symbol::arg("a"));
        let site = t.first_empty_node().unwrap();
        assert_eq!(site.ty, Type::Int);
        let t = fill(&t, Symbol::int(INF));
        assert!(t.is_complete());
    }

    #[test]
    fn sort_rejects_bool_arrays() {
        let args = vec![ArgDecl::new("p", Type::array(Type::Bool))];
        let t: Tree = Tree::empty(args, Some(Type::array(Type::Bool)));
        let site = t.first_empty_node().unwrap();
        assert!(!t.candidates(&site, &[]).contains(&Symbol::Call(Builtin::Sort)));
    }
}
