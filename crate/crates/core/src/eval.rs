//! Accuracy under the evaluation protocol.
//!
//! Search modes see the first [`SAMPLE_TESTS`] tests of a task and a task
//! counts as solved only if the returned program also passes every
//! remaining (holdout) test. Model-only decoding sees no tests and must pass
//! all of them.

use std::time::Duration;

use serde::Serialize;

use crate::datagen::Task;
use crate::dsl::{render_program, Tree};
use crate::exec::Exec;
use crate::guidance::Guidance;
use crate::interp::run_tests;
use crate::search::{batched_synthesize, greedy_decode, synthesize, Outcome, SearchConfig, SearchResult, SAMPLE_TESTS};

/// Depth buckets with fewer tasks than this are flagged.
pub const SMALL_BUCKET: usize = 10;
/// Default per-task wall-clock limit for evaluation searches.
pub const EVAL_TIMEOUT: Duration = Duration::from_secs(30);
/// Node limit for greedy decoding.
pub const GREEDY_MAX_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRecord {
    pub id: usize,
    pub solved: bool,
    /// `found`, `decoded`, `no_program`, or the search's stop reason.
    pub outcome: String,
    pub program: Option<String>,
    pub trees_visited: usize,
    pub expansions: usize,
    pub wall_time_ms: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthRow {
    pub depth: usize,
    pub n: usize,
    pub solved: usize,
    pub accuracy: f64,
    pub small: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub max_visited: usize,
    pub n: usize,
    pub solved: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: String,
    pub n: usize,
    pub solved: usize,
    pub accuracy: f64,
    pub by_depth: Vec<DepthRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub by_max_visited: Vec<SweepPoint>,
    pub tasks: Vec<TaskRecord>,
}

impl EvalReport {
    pub fn new(mode: &str, tasks: Vec<TaskRecord>) -> EvalReport {
        let solved = tasks.iter().filter(|t| t.solved).count();
        EvalReport {
            mode: mode.to_string(),
            n: tasks.len(),
            solved,
            accuracy: accuracy(solved, tasks.len()),
            by_depth: stratify_by_depth(&tasks),
            by_max_visited: Vec::new(),
            tasks,
        }
    }

    /// Equality ignoring wall times.
    pub fn same_as(&self, other: &EvalReport) -> bool {
        let strip = |r: &EvalReport| {
            let mut r = r.clone();
            r.tasks.iter_mut().for_each(|t| t.wall_time_ms = 0.0);
            r
        };
        strip(self) == strip(other)
    }

    pub fn table(&self) -> String {
        let mut s = format!("mode {}: {}/{} solved, Acc = {:.1}%\n", self.mode, self.solved, self.n, 100.0 * self.accuracy);
        s += &depth_table(&self.by_depth);
        if !self.by_max_visited.is_empty() {
            s += &sweep_table(&self.by_max_visited);
        }
        s
    }
}

pub fn accuracy(solved: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        solved as f64 / n as f64
    }
}

/// How evaluation runs over tasks: a map over independent searches, or
/// lock-step batches of the given width sharing one guidance call per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plan {
    Map(Exec),
    Batched(usize),
}

/// Whether `program` passes the tests a search never saw.
pub fn passes_holdout(program: &Tree, task: &Task, fuel: u64) -> bool {
    run_tests(program, &task.tests[SAMPLE_TESTS.min(task.tests.len())..], fuel).passed()
}

fn search_record(id: usize, task: &Task, r: &SearchResult, fuel: u64) -> TaskRecord {
    let (solved, outcome) = match &r.outcome {
        Outcome::Found(p) => (passes_holdout(p, task, fuel), "found".to_string()),
        Outcome::NotFound(reason) => (false, serde_json::to_value(reason).unwrap().as_str().unwrap().to_string()),
    };
    TaskRecord {
        id,
        solved,
        outcome,
        program: r.program().map(render_program),
        trees_visited: r.trees_visited,
        expansions: r.expansions,
        wall_time_ms: r.wall_time.as_secs_f64() * 1e3,
        depth: task.depth(),
    }
}

pub fn search_results<G: Guidance>(tasks: &[Task], guidance: &G, cfg: &SearchConfig, plan: Plan) -> Vec<SearchResult> {
    match plan {
        Plan::Map(exec) => exec.map(tasks, |t| synthesize(t, guidance, cfg)),
        Plan::Batched(width) => batched_synthesize(tasks, guidance, cfg, width),
    }
}

pub fn evaluate_search<G: Guidance>(
    mode: &str,
    tasks: &[Task],
    guidance: &G,
    cfg: &SearchConfig,
    plan: Plan,
) -> EvalReport {
    let results = search_results(tasks, guidance, cfg, plan);
    let records = tasks.iter().zip(&results).enumerate().map(|(i, (t, r))| search_record(i, t, r, cfg.fuel)).collect();
    EvalReport::new(mode, records)
}

/// Greedy decoding with no tests consumed; solved iff all tests pass.
pub fn evaluate_greedy<G: Guidance>(mode: &str, tasks: &[Task], guidance: &G, max_depth: usize, fuel: u64, exec: Exec) -> EvalReport {
    let ids: Vec<usize> = (0..tasks.len()).collect();
    let records = exec.map(&ids, |&i| {
        let task = &tasks[i];
        let start = std::time::Instant::now();
        let program = greedy_decode(task, guidance, max_depth, GREEDY_MAX_NODES);
        let solved = program.as_ref().is_some_and(|p| run_tests(p, &task.tests, fuel).passed());
        TaskRecord {
            id: i,
            solved,
            outcome: if program.is_some() { "decoded" } else { "no_program" }.to_string(),
            program: program.as_ref().map(render_program),
            trees_visited: usize::from(program.is_some()),
            expansions: 0,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            depth: task.depth(),
        }
    });
    EvalReport::new(mode, records)
}

/// One independent evaluation per budget.
pub fn sweep_max_visited<G: Guidance>(
    tasks: &[Task],
    guidance: &G,
    base: &SearchConfig,
    values: &[usize],
    plan: Plan,
) -> Vec<(SweepPoint, EvalReport)> {
    values
        .iter()
        .map(|&v| {
            let cfg = SearchConfig { max_visited: v, ..base.clone() };
            let report = evaluate_search(&format!("max_visited={v}"), tasks, guidance, &cfg, plan);
            let point = SweepPoint { max_visited: v, n: report.n, solved: report.solved, accuracy: report.accuracy };
            (point, report)
        })
        .collect()
}

pub fn stratify_by_depth(records: &[TaskRecord]) -> Vec<DepthRow> {
    let mut depths: Vec<usize> = records.iter().map(|r| r.depth).collect();
    depths.sort_unstable();
    depths.dedup();
    depths
        .into_iter()
        .map(|d| {
            let n = records.iter().filter(|r| r.depth == d).count();
            let solved = records.iter().filter(|r| r.depth == d && r.solved).count();
            DepthRow { depth: d, n, solved, accuracy: accuracy(solved, n), small: n < SMALL_BUCKET }
        })
        .collect()
}

/// Accuracy over tasks whose depth lies in `range`.
pub fn accuracy_within(records: &[TaskRecord], range: impl std::ops::RangeBounds<usize>) -> (usize, usize) {
    let sel: Vec<&TaskRecord> = records.iter().filter(|r| range.contains(&r.depth)).collect();
    (sel.iter().filter(|r| r.solved).count(), sel.len())
}

pub fn depth_csv(rows: &[DepthRow]) -> String {
    let mut s = String::from("depth,n,solved,accuracy,small\n");
    for r in rows {
        s += &format!("{},{},{},{:.6},{}\n", r.depth, r.n, r.solved, r.accuracy, r.small);
    }
    s
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("max_visited,n,solved,accuracy\n");
    for p in points {
        s += &format!("{},{},{},{:.6}\n", p.max_visited, p.n, p.solved, p.accuracy);
    }
    s
}

fn depth_table(rows: &[DepthRow]) -> String {
    let mut s = String::from("depth      n  solved     acc\n");
    for r in rows {
        let flag = if r.small { "  (small n)" } else { "" };
        s += &format!("{:>5} {:>6} {:>7} {:>6.1}%{flag}\n", r.depth, r.n, r.solved, 100.0 * r.accuracy);
    }
    s
}

fn sweep_table(points: &[SweepPoint]) -> String {
    let mut s = String::from("max_visited      acc\n");
    for p in points {
        s += &format!("{:>11} {:>7.1}%\n", p.max_visited, 100.0 * p.accuracy);
    }
    s
}
