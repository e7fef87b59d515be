use std::path::Path;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treebeam::datagen::{generate_tasks, read_tasks, GenConfig, Task};
use treebeam::eval::{evaluate_search, Plan};
use treebeam::exec::Exec;
use treebeam::guidance::{FrequencyGuidance, UniformGuidance};
use treebeam::search::{batched_synthesize, SearchConfig};
use treebeam::seq2tree::Seq2Tree;

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

fn dev_tasks(n: usize) -> Vec<Task> {
    let mut tasks = read_tasks(&fixtures().join("data/dev.jsonl"))
        .unwrap_or_else(|_| generate_tasks(&GenConfig { n_tasks: n, ..GenConfig::default() }));
    tasks.truncate(n);
    tasks
}

fn modes() -> Vec<(&'static str, Exec)> {
    let mut m = vec![("sequential", Exec::Sequential)];
    if Exec::parallel_available() {
        m.push(("parallel", Exec::Parallel));
    }
    m
}

fn generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate_200_tasks");
    g.sample_size(10);
    for (name, exec) in modes() {
        let cfg = GenConfig { n_tasks: 200, exec, ..GenConfig::default() };
        g.bench_function(name, |b| b.iter(|| generate_tasks(&cfg)));
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let tasks = dev_tasks(24);
    let train = read_tasks(&fixtures().join("data/train.jsonl")).unwrap_or_else(|_| tasks.clone());
    let freq = FrequencyGuidance::train(&train);
    let cfg = SearchConfig { max_visited: 20, ..SearchConfig::default() };
    let mut g = c.benchmark_group("search_24_tasks");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new("uniform", name), |b| {
            b.iter(|| evaluate_search("uniform", &tasks, &UniformGuidance, &cfg, Plan::Map(exec)))
        });
        g.bench_function(BenchmarkId::new("frequency", name), |b| {
            b.iter(|| evaluate_search("freq", &tasks, &freq, &cfg, Plan::Map(exec)))
        });
    }
    g.finish();
}

fn neural(c: &mut Criterion) {
    let Ok(model) = Seq2Tree::load(&fixtures().join("model.nta"), None) else {
        eprintln!("no model fixture; skipping neural benchmarks");
        return;
    };
    let tasks = dev_tasks(16);
    let cfg = SearchConfig { max_visited: 10, ..SearchConfig::default() };
    let mut g = c.benchmark_group("neural_search_16_tasks");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::new("map", name), |b| {
            b.iter(|| evaluate_search("neural", &tasks, &model, &cfg, Plan::Map(exec)))
        });
    }
    for width in [1, 16] {
        g.bench_function(BenchmarkId::new("lockstep", width), |b| b.iter(|| batched_synthesize(&tasks, &model, &cfg, width)));
    }
    g.finish();
}

criterion_group!(benches, generation, search, neural);
criterion_main!(benches);
