//! Random well-typed programs, built by the same first-hole substitution the
//! search uses. Used by property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::symbol::Constant;
use super::tree::{ArgDecl, Tree};
use super::types::Type;

/// Constants used when sampling: the search base pool plus a few small ints.
pub fn sampling_pool() -> Vec<Constant> {
    let mut pool = Constant::base_pool();
    pool.extend([3, 5, -4].map(Constant::Int));
    pool
}

/// Samples a complete program of type `ret` over `args`.
///
/// Below `max_depth` symbols are drawn uniformly from the type-valid
/// candidates; at the depth limit leaves are preferred. Returns `None` when
/// the tree grows past `max_nodes` or a hole has no candidates.
pub fn random_program<R: Rng + ?Sized>(
    rng: &mut R,
    args: &[ArgDecl],
    ret: Option<Type>,
    max_depth: usize,
    max_nodes: usize,
) -> Option<Tree> {
    let pool = sampling_pool();
    let mut tree: Tree = Tree::empty(args.to_vec(), ret);
    let mut filled = 0;
    while let Some(site) = tree.first_empty_node() {
        let cands = tree.candidates(&site, &pool);
        let leaves: Vec<_> = cands.iter().filter(|s| s.arity() == 0).collect();
        let at_limit = site.depth() + 1 >= max_depth;
        let pick = if !leaves.is_empty() && (at_limit || rng.gen_bool(0.35)) {
            (*leaves.choose(rng)?).clone()
        } else {
            cands.choose(rng)?.clone()
        };
        tree = tree.substitute(&site.path, pick, ()).ok()?;
        filled += 1;
        if filled > max_nodes || site.depth() > max_depth + 4 {
            return None;
        }
    }
    Some(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_complete_and_typed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let args = [ArgDecl::new("a", Type::array(Type::Int))];
        let mut got = 0;
        for _ in 0..200 {
            if let Some(t) = random_program(&mut rng, &args, Some(Type::Int), 5, 40) {
                assert!(t.is_complete());
                assert_eq!(t.result_type(), Type::Int);
                got += 1;
            }
        }
        assert!(got > 100, "only {got} samples succeeded");
    }
}
