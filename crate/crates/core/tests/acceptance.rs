//! End-to-end acceptance checks against the checked-in dataset and model
//! fixtures. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treebeam::datagen::{read_tasks, Task};
use treebeam::dsl::{allocated_nodes, sample::random_program, ArgDecl, Tree, Type};
use treebeam::eval::{self, accuracy_within, EvalReport, Plan};
use treebeam::exec::Exec;
use treebeam::guidance::{argmax, Guidance, NodeContext, OracleGuidance, UniformGuidance};
use treebeam::search::{batched_synthesize, synthesize, SearchConfig, MAX_DEPTH};
use treebeam::seq2tree::parity::{check_parity, ParityFixture};
use treebeam::seq2tree::{ModelParams, NodeState, Seq2Tree};

// Tolerances and thresholds.
const ORACLE_PAIRS: usize = 10_000;
const ORACLE_SECONDS: f64 = 60.0;
const SUBSTITUTIONS: usize = 1_000;
const ORACLE_TASKS: usize = 100;
const UNIFORM_MAX_ACC: f64 = 0.05;
const BATCH_TASKS: usize = 64;
const MASS_TOL: f64 = 1e-6;
const PARTIAL_TREES: usize = 100;
const REDECODE_TOL: f64 = 1e-9;
const SWEEP: [usize; 5] = [1, 5, 10, 50, 100];
const SWEEP_MIN_GAIN: f64 = 0.10;
const SWEEP_SECONDS: f64 = 30.0 * 60.0;
const ABLATION_MIN_GAP: f64 = 0.10;
const PARITY_TOL: f64 = 1e-5;

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Ctx {
    dev: Vec<Task>,
    test: Vec<Task>,
    model: Seq2Tree,
    /// Neural search on dev at each sweep budget.
    sweep: Vec<(usize, EvalReport)>,
    sweep_time: Duration,
}

fn search_cfg(max_visited: usize) -> SearchConfig {
    SearchConfig { max_visited, ..SearchConfig::default() }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn interpreter_oracle() -> Outcome {
    let start = Instant::now();
    let t = common::differential(ORACLE_PAIRS, 2024);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{} pairs, {} mismatches, {} errors agreed, {} skipped, {secs:.1}s (limit {ORACLE_SECONDS}s)",
        t.checked,
        t.mismatches.len(),
        t.errors,
        t.skipped
    );
    if t.mismatches.is_empty() && secs < ORACLE_SECONDS {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {:?}", t.mismatches.first()))
    }
}

fn persistent_tree() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let args = vec![ArgDecl::new("a", Type::array(Type::Int)), ArgDecl::new("n", Type::Int)];
    let (mut done, mut bad_alloc, mut bad_render) = (0, 0, 0);
    while done < SUBSTITUTIONS {
        let Some(gold) = random_program(&mut rng, &args, Some(Type::Int), 6, 40) else { continue };
        let mut history: Vec<(Tree, String)> = Vec::new();
        let mut t = Tree::empty(args.clone(), Some(Type::Int));
        for sym in gold.symbols() {
            let site = t.first_empty_node().expect("gold has a symbol for every hole");
            let before = t.to_string();
            let n0 = allocated_nodes();
            let next = t.substitute(&site.path, sym.clone(), ()).expect("gold symbols are valid");
            bad_alloc += usize::from(allocated_nodes() - n0 != site.depth() as u64 + 1);
            bad_render += usize::from(t.to_string() != before);
            history.push((t, before));
            t = next;
            done += 1;
        }
        bad_render += history.iter().filter(|(t, s)| &t.to_string() != s).count();
        if !t.same_program(&gold) {
            return Err(format!("replay of {gold} produced {t}"));
        }
    }
    let detail = format!("{done} substitutions, {bad_alloc} wrong allocation counts, {bad_render} changed originals");
    if bad_alloc == 0 && bad_render == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn search_fidelity(ctx: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sample: Vec<&Task> = ctx.dev.choose_multiple(&mut rng, ORACLE_TASKS).collect();
    let mut wrong = Vec::new();
    for t in &sample {
        let r = synthesize(t, &OracleGuidance, &search_cfg(100));
        let ok = r.trees_visited == 1 && r.program().is_some_and(|p| p.same_program(&t.program));
        if !ok {
            wrong.push(t.surface_form.clone());
        }
    }
    let uniform = eval::evaluate_search("uniform", &ctx.dev, &UniformGuidance, &search_cfg(100), Plan::Map(Exec::Parallel));
    let detail = format!(
        "oracle: {}/{} gold with one visit; uniform dev Acc {} (limit < {})",
        sample.len() - wrong.len(),
        sample.len(),
        pct(uniform.accuracy),
        pct(UNIFORM_MAX_ACC)
    );
    if wrong.is_empty() && uniform.accuracy < UNIFORM_MAX_ACC {
        Ok(detail)
    } else {
        Err(format!("{detail}; oracle misses: {:?}", wrong.iter().take(3).collect::<Vec<_>>()))
    }
}

fn batching(ctx: &Ctx) -> Outcome {
    let tasks = &ctx.dev[..BATCH_TASKS];
    let cfg = search_cfg(100);
    let batched = batched_synthesize(tasks, &ctx.model, &cfg, BATCH_TASKS);
    let single: Vec<_> = tasks.iter().map(|t| synthesize(t, &ctx.model, &cfg)).collect();
    let differ = batched.iter().zip(&single).filter(|(a, b)| !a.same_as(b)).count();
    let found = single.iter().filter(|r| r.program().is_some()).count();
    let uniform_b = batched_synthesize(tasks, &UniformGuidance, &search_cfg(20), 16);
    let uniform_differ = uniform_b
        .iter()
        .zip(tasks)
        .filter(|(b, t)| !b.same_as(&synthesize(t, &UniformGuidance, &search_cfg(20))))
        .count();
    let detail = format!(
        "{BATCH_TASKS} tasks: {differ} neural and {uniform_differ} uniform results differ from sequential ({found} found)"
    );
    if differ == 0 && uniform_differ == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Walks random partial trees of dev tasks, checking each distribution.
fn forward_pass(ctx: &Ctx) -> Outcome {
    let m = &ctx.model;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut worst_mass, mut worst_attn, mut worst_redecode, mut trees) = (0.0f64, 0.0f64, 0.0f64, 0);
    while trees < PARTIAL_TREES {
        let task = ctx.dev.choose(&mut rng).unwrap();
        let enc = m.encode(task);
        let pool = task.constant_pool();
        let mut tree: Tree<std::sync::Arc<NodeState>> = Tree::empty(task.args.clone(), Some(task.output_type()));
        let stop = rng.gen_range(0..task.program.size().max(1));
        for _ in 0..=stop {
            let Some(site) = tree.first_empty_node() else { break };
            let cands = tree.candidates(&site, &pool);
            if cands.is_empty() {
                break;
            }
            let ctx_n = NodeContext { parent: site.parent.as_ref(), sibling: site.sibling.as_ref(), child_index: site.child_index };
            let (full, state) = m.distribution(&enc, ctx_n);
            worst_mass = worst_mass.max((full.iter().map(|p| p.exp()).sum::<f64>() - 1.0).abs());
            let scored = m.get_probs(&enc, ctx_n, &cands);
            worst_mass = worst_mass.max((scored.log_probs.iter().map(|p| p.exp()).sum::<f64>() - 1.0).abs());
            let fresh = m.redecode(task, &tree).expect("tree has a hole");
            worst_redecode = full.iter().zip(&fresh).map(|(a, b)| (a - b).abs()).fold(worst_redecode, f64::max);
            let sym = site.parent.as_ref().map_or(2, |p| m.symbol_id(&enc, &p.symbol));
            let a = m.params.attention(m.params.symbol_embedding(sym), &enc.encoder);
            worst_attn = worst_attn.max((a.iter().map(|x| *x as f64).sum::<f64>() - 1.0).abs());
            let pick = if rng.gen_bool(0.7) {
                argmax(&scored.log_probs).unwrap()
            } else {
                rng.gen_range(0..cands.len())
            };
            tree = tree.substitute(&site.path, cands[pick].clone(), std::sync::Arc::new(state)).unwrap();
        }
        trees += 1;
    }
    let zero = Seq2Tree::new(ModelParams::zeros(m.vocab.len(), m.hidden()), (*m.vocab).clone()).unwrap();
    let zenc = zero.encode(&ctx.dev[0]);
    let (zfull, _) = zero.distribution(&zenc, NodeContext::root());
    let uniform_err = zfull.iter().map(|l| (l.exp() - 1.0 / zfull.len() as f64).abs()).fold(0.0, f64::max);
    let zero_states = zenc.encoder.states.data.iter().all(|x| *x == 0.0);
    let detail = format!(
        "{trees} partial trees: mass error {worst_mass:.1e} (tol {MASS_TOL:e}), attention {worst_attn:.1e}, \
         cached vs re-decode {worst_redecode:.1e} (tol {REDECODE_TOL:e}); zero model uniform within {uniform_err:.1e}"
    );
    let ok = worst_mass <= MASS_TOL
        && worst_attn <= MASS_TOL
        && worst_redecode <= REDECODE_TOL
        && uniform_err <= MASS_TOL
        && zero_states;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn monotone_sweep(ctx: &Ctx) -> Outcome {
    let accs: Vec<f64> = ctx.sweep.iter().map(|(_, r)| r.accuracy).collect();
    let curve: Vec<String> = ctx.sweep.iter().map(|(v, r)| format!("{v}:{}", pct(r.accuracy))).collect();
    let monotone = accs.windows(2).all(|w| w[0] <= w[1]);
    let gain = accs.last().unwrap() - accs[0];
    let secs = ctx.sweep_time.as_secs_f64();
    let detail = format!(
        "dev {} tasks, curve [{}], gain {} (need >= {}), {secs:.0}s (limit {SWEEP_SECONDS:.0}s)",
        ctx.dev.len(),
        curve.join(" "),
        pct(gain),
        pct(SWEEP_MIN_GAIN)
    );
    if monotone && gain >= SWEEP_MIN_GAIN && secs <= SWEEP_SECONDS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ablation(ctx: &Ctx) -> Outcome {
    let search = eval::evaluate_search("search-neural", &ctx.test, &ctx.model, &search_cfg(100), Plan::Batched(64));
    let greedy = eval::evaluate_greedy("model-only", &ctx.test, &ctx.model, MAX_DEPTH, search_cfg(100).fuel, Exec::Parallel);
    let uniform = eval::evaluate_search("search-uniform", &ctx.test, &UniformGuidance, &search_cfg(100), Plan::Map(Exec::Parallel));
    let detail = format!(
        "test {} tasks: search {} > greedy {} > uniform {}; first gap {} (need >= {})",
        ctx.test.len(),
        pct(search.accuracy),
        pct(greedy.accuracy),
        pct(uniform.accuracy),
        pct(search.accuracy - greedy.accuracy),
        pct(ABLATION_MIN_GAP)
    );
    let ok = search.accuracy > greedy.accuracy
        && greedy.accuracy > uniform.accuracy
        && search.accuracy - greedy.accuracy >= ABLATION_MIN_GAP;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn depth_trend(ctx: &Ctx) -> Outcome {
    let report = &ctx.sweep.last().unwrap().1;
    let (s_lo, n_lo) = accuracy_within(&report.tasks, ..=5);
    let (s_hi, n_hi) = accuracy_within(&report.tasks, 10..);
    let (lo, hi) = (eval::accuracy(s_lo, n_lo), eval::accuracy(s_hi, n_hi));
    let detail = format!("dev guided search: depth <= 5 {} ({s_lo}/{n_lo}), depth >= 10 {} ({s_hi}/{n_hi})", pct(lo), pct(hi));
    if n_lo > 0 && n_hi > 0 && lo > hi {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parity(model: &Path) -> Outcome {
    let f = ParityFixture::read(&fixtures().join("parity.json"))?;
    let bytes = std::fs::read(model).map_err(|e| e.to_string())?;
    let tensors = treebeam::seq2tree::archive::decode_archive(&bytes).map_err(|e| e.to_string())?;
    let canonical = treebeam::seq2tree::archive::encode_archive(&tensors) == bytes;
    let params = ModelParams::from_tensors(tensors, None).map_err(|e| e.to_string())?;
    let p = check_parity(&params, &f);
    let detail = format!(
        "{} nodes: logits within {:.1e}, encoder within {:.1e} (tol {PARITY_TOL:e}); re-export identical: {canonical}",
        p.nodes, p.max_logit_diff, p.max_encoder_diff
    );
    if canonical && p.max_logit_diff <= PARITY_TOL && p.max_encoder_diff <= PARITY_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn load() -> Result<Ctx, String> {
    let data = fixtures().join("data");
    let dev = read_tasks(&data.join("dev.jsonl")).map_err(|e| e.to_string())?;
    let test = read_tasks(&data.join("test.jsonl")).map_err(|e| e.to_string())?;
    let model = Seq2Tree::load(&fixtures().join("model.nta"), None).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let sweep = eval::sweep_max_visited(&dev, &model, &SearchConfig::default(), &SWEEP, Plan::Batched(64))
        .into_iter()
        .map(|(p, r)| (p.max_visited, r))
        .collect();
    Ok(Ctx { dev, test, model, sweep, sweep_time: start.elapsed() })
}

fn report(name: &str, outcome: Outcome) -> bool {
    match &outcome {
        Ok(d) => println!("PASS  {name}: {d}"),
        Err(d) => println!("FAIL  {name}: {d}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut ok = true;
    ok &= report("interpreter oracle equivalence", interpreter_oracle());
    ok &= report("persistent tree path copying", persistent_tree());
    match load() {
        Ok(ctx) => {
            ok &= report("search fidelity", search_fidelity(&ctx));
            ok &= report("batching equivalence", batching(&ctx));
            ok &= report("seq2tree forward pass", forward_pass(&ctx));
            ok &= report("max-visited sweep", monotone_sweep(&ctx));
            ok &= report("ablation ordering", ablation(&ctx));
            ok &= report("depth trend", depth_trend(&ctx));
        }
        Err(e) => {
            for name in ["search fidelity", "batching equivalence", "seq2tree forward pass", "max-visited sweep", "ablation ordering", "depth trend"] {
                ok &= report(name, Err(format!("fixtures unavailable: {e}")));
            }
        }
    }
    ok &= report("trainer parity (secondary)", parity(&fixtures().join("model.nta")));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
