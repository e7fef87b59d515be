use std::collections::BTreeSet;

use serde::Serialize;

use super::Task;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStats {
    pub tasks: usize,
    pub avg_text_len: f64,
    /// Mean program depth in nodes (a lone leaf has depth 1).
    pub avg_code_depth: f64,
    /// Mean number of program nodes.
    pub avg_code_len: f64,
    /// Distinct text tokens and program symbols together.
    pub vocab_size: usize,
}

pub fn dataset_stats(tasks: &[Task]) -> SplitStats {
    let n = tasks.len().max(1) as f64;
    let mut vocab = BTreeSet::new();
    for t in tasks {
        vocab.extend(t.text.iter().cloned());
        vocab.extend(t.program.symbols().iter().map(|s| s.token()));
    }
    SplitStats {
        tasks: tasks.len(),
        avg_text_len: tasks.iter().map(|t| t.text.len()).sum::<usize>() as f64 / n,
        avg_code_depth: tasks.iter().map(|t| t.depth()).sum::<usize>() as f64 / n,
        avg_code_len: tasks.iter().map(|t| t.program.size()).sum::<usize>() as f64 / n,
        vocab_size: vocab.len(),
    }
}
