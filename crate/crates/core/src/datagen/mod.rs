//! Synthetic dataset of (description, program, tests) tasks built by
//! composing parameterized templates.

mod io;
mod split;
mod stats;
mod template;
mod testgen;
mod tokenize;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{parse_typed, render_program, ArgDecl, Constant, Tree, Type};
use crate::exec::Exec;
use crate::interp::TestCase;

pub use io::{read_dataset, read_tasks, task_from_json, task_to_json, write_dataset, write_tasks, DatasetError};
pub use split::{split_dataset, DatasetSplit, SplitError, RATIO_TOLERANCE};
pub use stats::{dataset_stats, SplitStats};
pub use template::{
    compose, instantiate_random, instantiate_template, template, templates, Fragment, Joint, Slot, SlotValue,
    TaskTemplate, TemplateError,
};
pub use testgen::{generate_tests, generate_tests_in, GenError, InputSpace, TESTS_PER_TASK};
pub use tokenize::{int_literals, tokenize};

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub text: Vec<String>,
    pub args: Arc<[ArgDecl]>,
    pub program: Tree,
    pub tests: Vec<TestCase>,
    pub surface_form: String,
}

impl Task {
    pub fn new(text: Vec<String>, args: Vec<ArgDecl>, program: Tree, tests: Vec<TestCase>) -> Task {
        let surface_form = render_program(&program);
        Task { text, args: args.into(), program, tests, surface_form }
    }

    pub fn depth(&self) -> usize {
        self.program.depth()
    }

    pub fn output_type(&self) -> Type {
        self.program.result_type()
    }

    /// Constants search may use for this task: the base pool plus integers
    /// mentioned in the text.
    pub fn constant_pool(&self) -> Vec<Constant> {
        let mut pool = Constant::base_pool();
        for n in int_literals(&self.text) {
            let c = Constant::Int(n);
            if !pool.contains(&c) {
                pool.push(c);
            }
        }
        pool
    }
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n_tasks: usize,
    pub seed: u64,
    pub ratios: [f64; 3],
    /// Restrict generation to these template ids (sources always allowed).
    pub templates: Option<Vec<String>>,
    /// Probability that one more template is composed on top; the number of
    /// composed templates is `1 + min(G, max_extra)` with `G` geometric.
    pub extend_prob: f64,
    pub max_extra: usize,
    pub exec: Exec,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_tasks: 6000,
            seed: 1,
            ratios: [5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0],
            templates: None,
            extend_prob: 0.65,
            max_extra: 4,
            exec: Exec::Parallel,
        }
    }
}

const SOURCE_WEIGHTS: [(&str, u32); 3] = [("array", 75), ("range", 15), ("strings", 10)];
const ATTEMPTS_PER_TASK: u64 = 64;

fn preamble<R: Rng + ?Sized>(rng: &mut R, args: &[ArgDecl], stmt: &str) -> String {
    let describe = |a: &ArgDecl| -> String {
        let options: &[&str] = match (&*a.name, &a.ty) {
            (_, Type::Int) => &["a number", "an integer"],
            (_, Type::Array(e)) if **e == Type::Str => &["an array of strings", "a list of words"],
            _ => &["an array of numbers", "an array", "an array of integers"],
        };
        format!("{} {}", options.choose(rng).unwrap(), a.name)
    };
    let descs: Vec<String> = args.iter().map(describe).collect();
    let joined = match descs.as_slice() {
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
        [] => String::new(),
    };
    match rng.gen_range(0..3) {
        0 => format!("given {joined}, {stmt}."),
        1 => format!("you are given {joined}. {stmt}."),
        _ => format!("consider {joined}, your task is to {stmt}."),
    }
}

/// Pairs of consecutive templates that are redundant or degenerate.
fn allowed_after(prev: &TaskTemplate, next: &TaskTemplate) -> bool {
    if prev.id == next.id {
        return false;
    }
    let reorders = matches!(prev.id, "sort" | "reverse");
    let keeps_len = matches!(prev.id, "sort" | "reverse" | "map_arith");
    !(reorders && next.order_blind) && !(keeps_len && next.id == "count")
}

/// Draws one task. Returns `None` when the drawn composition is degenerate
/// (its tests cannot be generated).
pub fn generate_task<R: Rng + ?Sized>(rng: &mut R, pool: &[TaskTemplate], cfg: &GenConfig) -> Option<Task> {
    let source_id = SOURCE_WEIGHTS.choose_weighted(rng, |s| s.1).ok()?.0;
    let source = pool.iter().find(|t| t.id == source_id)?;
    let mut frag = instantiate_random(source, rng);
    let mut extra = 0;
    while extra < cfg.max_extra && rng.gen_bool(cfg.extend_prob) {
        extra += 1;
    }
    let stages = 1 + extra + usize::from(source_id == "strings" && extra == 0);

    let mut prev: Option<&TaskTemplate> = None;
    for i in 0..stages {
        let last = i + 1 == stages;
        let options: Vec<&TaskTemplate> = pool
            .iter()
            .filter(|t| t.input.is_some())
            .filter(|t| last || matches!(t.output, Type::Array(_)))
            .filter(|t| stages > 1 || t.standalone)
            .filter(|t| prev.is_none_or(|p| allowed_after(p, t)))
            .filter(|t| {
                let probe = Fragment { input: t.input.clone(), output: t.output.clone(), ..frag.clone() };
                compose(&probe, &frag, Joint::Nest).is_ok()
            })
            .collect();
        let t = *options.choose_weighted(rng, |t| t.weight).ok()?;
        let inst = instantiate_random(t, rng);
        let joint = if i > 0 && inst.cont.is_some() && rng.gen_bool(0.35) { Joint::Chain } else { Joint::Nest };
        frag = compose(&inst, &frag, joint).ok()?;
        prev = Some(t);
    }

    let text = tokenize(&preamble(rng, &frag.args, &frag.stmt));
    let program = parse_typed(&frag.code, &frag.args, Some(frag.output.clone())).ok()?;
    let tests = generate_tests(&program, &frag.args, rng.gen()).ok()?;
    Some(Task::new(text, frag.args, program, tests))
}

/// Generates `cfg.n_tasks` tasks and splits them by surface form. Task `i`
/// draws from its own stream of the master seed, so the result does not
/// depend on thread scheduling.
pub fn generate_dataset(cfg: &GenConfig) -> Result<DatasetSplit, SplitError> {
    split_dataset(generate_tasks(cfg), cfg.ratios, cfg.seed)
}

pub fn generate_tasks(cfg: &GenConfig) -> Vec<Task> {
    let pool: Vec<TaskTemplate> = templates()
        .into_iter()
        .filter(|t| t.input.is_none() || cfg.templates.as_ref().is_none_or(|ids| ids.iter().any(|id| id == t.id)))
        .collect();
    cfg.exec
        .map_range(cfg.n_tasks, |i| {
            (0..ATTEMPTS_PER_TASK).find_map(|attempt| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64 * ATTEMPTS_PER_TASK + attempt);
                generate_task(&mut rng, &pool, cfg)
            })
        })
        .into_iter()
        .flatten()
        .collect()
}
