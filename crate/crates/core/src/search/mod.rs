//! Tree-beam search over partial programs.
//!
//! The search keeps a bounded queue of partial trees ordered by cumulative
//! log-probability. Complete trees are run on the sample tests; incomplete
//! ones have their first hole expanded with every type-valid symbol the
//! guidance scores above a threshold.
//!
//! [`Searcher`] holds one search as a resumable state machine: `poll` pops
//! trees until it needs scores from the guidance, `feed` expands with those
//! scores. [`synthesize`] drives one searcher; [`batched_synthesize`] drives
//! many and scores their pending holes in one batched guidance call.

mod queue;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::datagen::Task;
use crate::dsl::{Constant, HoleSite, Inhabitation, Symbol, Tree, Type};
use crate::guidance::{argmax, Guidance, NodeContext, Request, Scored};
use crate::interp::{infer_json_type, run_tests, TestCase, DEFAULT_FUEL};

pub use queue::BeamQueue;

/// Number of leading tests a search may see; the rest are holdout.
pub const SAMPLE_TESTS: usize = 3;
/// Default bound on program depth.
pub const MAX_DEPTH: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub queue_n: usize,
    pub max_visited: usize,
    pub threshold: f64,
    pub fuel: u64,
    /// Hard cap on incomplete trees expanded.
    pub max_expansions: usize,
    /// Programs deeper than this many levels are never built.
    pub max_depth: usize,
    pub timeout: Option<Duration>,
    /// Incomplete trees popped per step before scoring. Values above 1
    /// change the search order.
    pub pop_batch: usize,
    pub sample_tests: usize,
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            queue_n: 100,
            max_visited: 100,
            threshold: 1e-4,
            fuel: DEFAULT_FUEL,
            max_expansions: 50_000,
            max_depth: MAX_DEPTH,
            timeout: None,
            pop_batch: 1,
            sample_tests: SAMPLE_TESTS,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    QueueEmpty,
    VisitBudget,
    ExpansionCap,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Found(Tree),
    NotFound(StopReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub log_prob: f64,
    pub holes: usize,
    pub visited: usize,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub trees_visited: usize,
    pub expansions: usize,
    /// Child trees pushed, and the sum of the depths of the holes they fill.
    pub children: usize,
    pub child_depth_sum: usize,
    pub wall_time: Duration,
    pub trace: Vec<TraceRecord>,
}

impl SearchResult {
    pub fn program(&self) -> Option<&Tree> {
        match &self.outcome {
            Outcome::Found(t) => Some(t),
            Outcome::NotFound(_) => None,
        }
    }

    /// Equality ignoring wall time.
    pub fn same_as(&self, other: &SearchResult) -> bool {
        self.outcome == other.outcome
            && self.trees_visited == other.trees_visited
            && self.expansions == other.expansions
            && self.children == other.children
            && self.trace == other.trace
    }
}

/// Root type for a search: the type of the sample outputs.
pub fn root_type(tests: &[TestCase]) -> Option<Type> {
    tests.iter().find_map(|t| infer_json_type(&t.output.to_json()))
}

/// An incomplete tree waiting for guidance scores at its first hole.
#[derive(Debug)]
pub struct Expansion<S> {
    pub tree: Tree<S>,
    pub log_prob: f64,
    pub site: HoleSite<S>,
    pub candidates: Vec<Symbol>,
}

impl<S> Expansion<S> {
    pub fn context(&self) -> NodeContext<'_, S> {
        NodeContext {
            parent: self.site.parent.as_ref(),
            sibling: self.site.sibling.as_ref(),
            child_index: self.site.child_index,
        }
    }
}

/// Children of `tree` for each candidate at or above `threshold`, in
/// decreasing probability; stops at the first candidate below it.
pub fn expand<S: Clone>(
    tree: &Tree<S>,
    log_prob: f64,
    site: &HoleSite<S>,
    candidates: &[Symbol],
    scored: &Scored<S>,
    threshold: f64,
) -> Vec<(f64, Tree<S>)> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scored.log_probs[b].total_cmp(&scored.log_probs[a]));
    let cut = threshold.ln();
    let mut out = Vec::new();
    for i in order {
        let lp = scored.log_probs[i];
        if lp < cut {
            break;
        }
        let child = tree
            .substitute(&site.path, candidates[i].clone(), scored.state.clone())
            .expect("candidates are type-valid");
        out.push((log_prob + lp, child));
    }
    out
}

pub struct Searcher<'a, G: Guidance> {
    cfg: &'a SearchConfig,
    tests: &'a [TestCase],
    pool: Vec<Constant>,
    inhabitation: Inhabitation,
    encoding: G::Encoding,
    queue: BeamQueue<Tree<G::State>>,
    visited: usize,
    expansions: usize,
    children: usize,
    child_depth_sum: usize,
    steps: usize,
    started: Instant,
    trace: Vec<TraceRecord>,
    stop: Option<Outcome>,
}

impl<'a, G: Guidance> Searcher<'a, G> {
    pub fn new(guidance: &G, task: &'a Task, cfg: &'a SearchConfig) -> Self {
        let tests = &task.tests[..cfg.sample_tests.min(task.tests.len())];
        let mut queue = BeamQueue::new();
        queue.push(0.0, Tree::empty(task.args.clone(), root_type(tests)));
        Searcher {
            cfg,
            tests,
            pool: task.constant_pool(),
            inhabitation: Inhabitation::new(&task.args, &task.constant_pool()),
            encoding: guidance.encode(task),
            queue,
            visited: 0,
            expansions: 0,
            children: 0,
            child_depth_sum: 0,
            steps: 0,
            started: Instant::now(),
            trace: Vec::new(),
            stop: None,
        }
    }

    pub fn encoding(&self) -> &G::Encoding {
        &self.encoding
    }

    pub fn is_done(&self) -> bool {
        self.stop.is_some()
    }

    /// Pops until `pop_batch` incomplete trees need scoring or the search
    /// ends. An empty result means the search is over.
    pub fn poll(&mut self) -> Vec<Expansion<G::State>> {
        let mut out = Vec::new();
        while self.stop.is_none() && out.len() < self.cfg.pop_batch.max(1) {
            if self.visited >= self.cfg.max_visited {
                self.stop = Some(Outcome::NotFound(StopReason::VisitBudget));
                break;
            }
            if self.cfg.timeout.is_some_and(|t| self.started.elapsed() >= t) {
                self.stop = Some(Outcome::NotFound(StopReason::Timeout));
                break;
            }
            let Some((log_prob, tree)) = self.queue.pop_max() else {
                if out.is_empty() {
                    self.stop = Some(Outcome::NotFound(StopReason::QueueEmpty));
                }
                break;
            };
            self.steps += 1;
            if self.cfg.trace {
                let holes = tree.hole_count();
                self.trace.push(TraceRecord { step: self.steps, log_prob, holes, visited: self.visited });
            }
            match tree.first_empty_node() {
                None => {
                    self.visited += 1;
                    if run_tests(&tree, self.tests, self.cfg.fuel).passed() {
                        self.stop = Some(Outcome::Found(tree.strip()));
                        out.clear();
                    }
                }
                Some(site) => {
                    if self.expansions >= self.cfg.max_expansions {
                        self.stop = Some(Outcome::NotFound(StopReason::ExpansionCap));
                        break;
                    }
                    self.expansions += 1;
                    let candidates =
                        tree.candidates_within(&site, &self.pool, self.cfg.max_depth, &mut self.inhabitation);
                    if !candidates.is_empty() {
                        out.push(Expansion { tree, log_prob, site, candidates });
                    }
                }
            }
        }
        out
    }

    /// Expands polled trees with their scores, then trims the queue.
    pub fn feed(&mut self, pending: Vec<Expansion<G::State>>, scored: Vec<Scored<G::State>>) {
        if self.stop.is_some() {
            return;
        }
        assert_eq!(pending.len(), scored.len());
        for (e, s) in pending.into_iter().zip(scored) {
            let kids = expand(&e.tree, e.log_prob, &e.site, &e.candidates, &s, self.cfg.threshold);
            self.children += kids.len();
            self.child_depth_sum += kids.len() * e.site.depth();
            for (lp, t) in kids {
                self.queue.push(lp, t);
            }
            self.queue.truncate(self.cfg.queue_n);
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn finish(self) -> SearchResult {
        SearchResult {
            outcome: self.stop.unwrap_or(Outcome::NotFound(StopReason::QueueEmpty)),
            trees_visited: self.visited,
            expansions: self.expansions,
            children: self.children,
            child_depth_sum: self.child_depth_sum,
            wall_time: self.started.elapsed(),
            trace: self.trace,
        }
    }
}

pub fn synthesize<G: Guidance>(task: &Task, guidance: &G, cfg: &SearchConfig) -> SearchResult {
    let mut s = Searcher::new(guidance, task, cfg);
    loop {
        let pending = s.poll();
        if pending.is_empty() && s.is_done() {
            break;
        }
        let scored = pending.iter().map(|e| guidance.get_probs(s.encoding(), e.context(), &e.candidates)).collect();
        s.feed(pending, scored);
    }
    s.finish()
}

/// Runs up to `width` searches in lock step, scoring the pending hole of
/// every live search in one batched call. Each result equals what
/// [`synthesize`] returns for that task alone (wall time aside).
pub fn batched_synthesize<G: Guidance>(
    tasks: &[Task],
    guidance: &G,
    cfg: &SearchConfig,
    width: usize,
) -> Vec<SearchResult> {
    let mut results: Vec<Option<SearchResult>> = (0..tasks.len()).map(|_| None).collect();
    let mut active: Vec<(usize, Searcher<'_, G>)> = Vec::new();
    let mut next = 0;
    loop {
        while active.len() < width.max(1) && next < tasks.len() {
            active.push((next, Searcher::new(guidance, &tasks[next], cfg)));
            next += 1;
        }
        if active.is_empty() {
            break;
        }
        let pending: Vec<Vec<Expansion<G::State>>> = active.iter_mut().map(|(_, s)| s.poll()).collect();
        let scored = {
            let requests: Vec<Request<'_, G>> = active
                .iter()
                .zip(&pending)
                .flat_map(|((_, s), exps)| {
                    exps.iter().map(|e| Request { encoding: s.encoding(), context: e.context(), candidates: &e.candidates })
                })
                .collect();
            guidance.get_probs_batch(&requests)
        };
        let mut scored = scored.into_iter();
        for ((_, s), exps) in active.iter_mut().zip(pending) {
            let mine: Vec<_> = scored.by_ref().take(exps.len()).collect();
            s.feed(exps, mine);
        }
        let mut i = 0;
        while i < active.len() {
            if active[i].1.is_done() {
                let (idx, s) = active.swap_remove(i);
                results[idx] = Some(s.finish());
            } else {
                i += 1;
            }
        }
        // keep lock-step order stable regardless of retirement
        active.sort_by_key(|(idx, _)| *idx);
    }
    results.into_iter().map(|r| r.expect("every task finishes")).collect()
}

/// Fills holes left to right with the single most probable candidate,
/// without looking at any test (the root type is left open).
/// `None` if some hole has no candidate or the tree outgrows `max_nodes`.
pub fn greedy_decode<G: Guidance>(task: &Task, guidance: &G, max_depth: usize, max_nodes: usize) -> Option<Tree> {
    let encoding = guidance.encode(task);
    let pool = task.constant_pool();
    let mut inhabitation = Inhabitation::new(&task.args, &pool);
    let mut tree: Tree<G::State> = Tree::empty(task.args.clone(), None);
    let mut filled = 0;
    while let Some(site) = tree.first_empty_node() {
        filled += 1;
        if filled > max_nodes {
            return None;
        }
        let candidates = tree.candidates_within(&site, &pool, max_depth, &mut inhabitation);
        let ctx = NodeContext { parent: site.parent.as_ref(), sibling: site.sibling.as_ref(), child_index: site.child_index };
        let scored = guidance.get_probs(&encoding, ctx, &candidates);
        let best = argmax(&scored.log_probs)?;
        tree = tree.substitute(&site.path, candidates[best].clone(), scored.state).ok()?;
    }
    Some(tree.strip())
}
