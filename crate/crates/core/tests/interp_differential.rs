//! The interpreter against a naive tree-walking reference written separately,
//! on random well-typed programs and random inputs.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treebeam::dsl::{sample::random_program, ArgDecl, Type};
use treebeam::interp::{EvalError, Program};

use common::{differential, random_input};

#[test]
fn interpreter_agrees_with_reference_on_10000_programs() {
    let t = differential(10_000, 2024);
    assert!(t.mismatches.is_empty(), "{:#?}", t.mismatches);
    assert!(t.skipped < 500, "{} skipped", t.skipped);
    assert!(t.errors > 100 && t.fuel_outs > 20, "error paths barely exercised: {} errors, {} fuel", t.errors, t.fuel_outs);
}

#[test]
fn more_fuel_never_changes_a_successful_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let args = vec![ArgDecl::new("a", Type::array(Type::Int))];
    let mut successes = 0;
    for _ in 0..2000 {
        let Some(tree) = random_program(&mut rng, &args, Some(Type::Int), 6, 60) else { continue };
        let p = Program::lower(&tree).unwrap();
        let inputs = vec![random_input(&mut rng, &args[0].ty)];
        let (r, used) = p.run(&inputs, 100_000);
        let Ok(v) = r else { continue };
        successes += 1;
        assert_eq!(p.eval(&inputs, used), Ok(v.clone()));
        assert_eq!(p.eval(&inputs, used + rng.gen_range(1..1000)), Ok(v.clone()));
        assert_eq!(p.eval(&inputs, used), p.eval(&inputs, used), "determinism");
        if used > 1 {
            assert_eq!(p.eval(&inputs, used - 1), Err(EvalError::FuelExhausted));
        }
    }
    assert!(successes > 500);
}
