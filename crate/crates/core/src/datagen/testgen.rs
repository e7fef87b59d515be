use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{ArgDecl, Symbol, Tree, Type};
use crate::interp::{Program, TestCase, Value, DEFAULT_FUEL};

pub const TESTS_PER_TASK: usize = 10;
const MAX_ATTEMPTS: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("could not generate {TESTS_PER_TASK} valid tests for {program}")]
    GenerationFailed { program: String },
}

/// Bounds for random inputs.
#[derive(Debug, Clone)]
pub struct InputSpace {
    pub array_len: (usize, usize),
    pub int_range: (i64, i64),
    pub scalar_range: (i64, i64),
    pub str_len: (usize, usize),
}

impl Default for InputSpace {
    fn default() -> Self {
        InputSpace { array_len: (3, 10), int_range: (-20, 20), scalar_range: (0, 12), str_len: (1, 8) }
    }
}

impl InputSpace {
    /// One input per argument. Later integer arrays share about half their
    /// elements with the first one, and literals of the program are mixed in,
    /// so membership and equality tests are not trivially false.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, args: &[ArgDecl], literals: &[i64]) -> Vec<Value> {
        let mut first_ints: Option<Vec<i64>> = None;
        args.iter()
            .map(|a| match &a.ty {
                Type::Int => Value::Int(rng.gen_range(self.scalar_range.0..=self.scalar_range.1)),
                Type::Array(e) if **e == Type::Int => {
                    let n = rng.gen_range(self.array_len.0..=self.array_len.1);
                    let xs: Vec<i64> = (0..n)
                        .map(|_| match &first_ints {
                            Some(prev) if !prev.is_empty() && rng.gen_bool(0.5) => *prev.choose(rng).unwrap(),
                            _ if !literals.is_empty() && rng.gen_bool(0.1) => *literals.choose(rng).unwrap(),
                            _ => rng.gen_range(self.int_range.0..=self.int_range.1),
                        })
                        .collect();
                    first_ints.get_or_insert_with(|| xs.clone());
                    Value::ints(&xs)
                }
                Type::Array(e) if **e == Type::Str => {
                    let n = rng.gen_range(self.array_len.0..=self.array_len.1);
                    Value::array((0..n).map(|_| Value::str(&self.word(rng))).collect())
                }
                other => panic!("no input generator for {other}"),
            })
            .collect()
    }

    fn word<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let n = rng.gen_range(self.str_len.0..=self.str_len.1);
        (0..n).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
    }
}

/// Ten tests on which `program` runs without error, with at least two
/// distinct outputs.
pub fn generate_tests(program: &Tree, args: &[ArgDecl], seed: u64) -> Result<Vec<TestCase>, GenError> {
    generate_tests_in(program, args, seed, &InputSpace::default())
}

pub fn generate_tests_in(
    program: &Tree,
    args: &[ArgDecl],
    seed: u64,
    space: &InputSpace,
) -> Result<Vec<TestCase>, GenError> {
    let failed = || GenError::GenerationFailed { program: program.to_string() };
    let compiled = Program::lower(program).map_err(|_| failed())?;
    let literals: Vec<i64> = program
        .symbols()
        .into_iter()
        .filter_map(|s| match s {
            Symbol::Const(crate::dsl::Constant::Int(n)) if n.unsigned_abs() < 1000 => Some(*n),
            _ => None,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests: Vec<TestCase> = Vec::with_capacity(TESTS_PER_TASK);
    for _ in 0..MAX_ATTEMPTS {
        let inputs = space.sample(&mut rng, args, &literals);
        let Ok(output) = compiled.eval(&inputs, DEFAULT_FUEL) else { continue };
        let all_same = tests.iter().all(|t| t.output == output);
        // keep the last slot for an output different from the rest
        if tests.len() == TESTS_PER_TASK - 1 && all_same {
            continue;
        }
        tests.push(TestCase { inputs, output });
        if tests.len() == TESTS_PER_TASK {
            return Ok(tests);
        }
    }
    Err(failed())
}
