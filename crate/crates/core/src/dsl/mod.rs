//! The typed list-processing DSL: types, library, persistent program trees,
//! concrete syntax and type-directed candidate enumeration.

mod parse;
pub mod sample;
mod inhabit;
mod stdlib;
mod symbol;
mod tree;
mod types;

pub use inhabit::Inhabitation;
pub use parse::{parse_arg_list, parse_program, parse_typed, render_program, ParseError};
pub use stdlib::{stdlib, Builtin, Signature, SignatureTable};
pub use symbol::{Constant, Symbol, INF, LAMBDA_PARAMS, NEG_INF};
pub use tree::{allocated_nodes, ArgDecl, Filled, Hole, HolePath, HoleSite, Link, Node, Tree, TypeError};
pub use types::{Subst, Type, TypeSyntaxError, VarKind};

/// Every symbol that can fill a hole of type `hole_type` in a program over
/// `args`, given the constants in `pool`. The hole is taken to be a root hole
/// (no lambda parameters in scope).
pub fn symbol_candidates(hole_type: &Type, args: &[ArgDecl], pool: &[Constant]) -> Vec<Symbol> {
    let tree: Tree = Tree::empty(args.to_vec(), Some(hole_type.clone()));
    let site = tree.first_empty_node().expect("empty tree has a hole");
    tree.candidates(&site, pool)
}

/// Pre-order position of the first hole in `tree`.
pub fn first_empty_node<A: Clone>(tree: &Tree<A>) -> Option<HolePath> {
    tree.first_empty_node().map(|s| s.path)
}
