use std::collections::{HashMap, HashSet};

use super::{Guidance, NodeContext, Scored};
use crate::datagen::Task;
use crate::dsl::{Constant, Node, Symbol};

/// Parent token used for the root of a program.
pub const ROOT_TOKEN: &str = "<root>";
/// Shared token for integer literals outside the base constant pool.
pub const LITERAL_TOKEN: &str = "<lit>";

/// Counts of `(parent token, child index) -> child token` over a corpus of
/// programs, add-one smoothed over the symbol vocabulary seen in training
/// plus one slot for unseen symbols.
#[derive(Debug, Clone, Default)]
pub struct FrequencyGuidance {
    counts: HashMap<(String, usize), HashMap<String, u64>>,
    totals: HashMap<(String, usize), u64>,
    vocab: HashSet<String>,
}

fn key(symbol: &Symbol) -> String {
    match symbol {
        Symbol::Const(c @ Constant::Int(_)) if !Constant::base_pool().contains(c) => LITERAL_TOKEN.to_string(),
        s => s.token(),
    }
}

impl FrequencyGuidance {
    pub fn train<'a>(tasks: impl IntoIterator<Item = &'a Task>) -> Self {
        let mut g = FrequencyGuidance::default();
        for t in tasks {
            g.count(ROOT_TOKEN, 0, t.program.root());
        }
        g
    }

    fn count(&mut self, parent: &str, index: usize, node: &Node) {
        let Some(f) = node.as_filled() else { return };
        let tok = key(&f.symbol);
        let ctx = (parent.to_string(), index);
        *self.counts.entry(ctx.clone()).or_default().entry(tok.clone()).or_default() += 1;
        *self.totals.entry(ctx).or_default() += 1;
        for (i, c) in f.children.iter().enumerate() {
            self.count(&tok, i, c);
        }
        self.vocab.insert(tok);
    }

    /// Smoothed `P(child | parent, index)` over the whole vocabulary.
    pub fn prob(&self, parent: &str, index: usize, child: &str) -> f64 {
        let ctx = (parent.to_string(), index);
        let n = self.counts.get(&ctx).and_then(|m| m.get(child)).copied().unwrap_or(0);
        let total = self.totals.get(&ctx).copied().unwrap_or(0);
        (n as f64 + 1.0) / (total as f64 + self.vocab.len() as f64 + 1.0)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

impl Guidance for FrequencyGuidance {
    type Encoding = ();
    type State = ();

    fn encode(&self, _: &Task) {}

    fn get_probs(&self, _: &(), ctx: NodeContext<'_, ()>, candidates: &[Symbol]) -> Scored<()> {
        let parent = ctx.parent.map_or_else(|| ROOT_TOKEN.to_string(), |p| key(&p.symbol));
        let lp = candidates.iter().map(|c| self.prob(&parent, ctx.child_index, &key(c)).ln()).collect();
        Scored { log_probs: super::renormalize(lp), state: () }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_typed, ArgDecl, Type};

    fn task(code: &str) -> Task {
        let args = vec![ArgDecl::new("a", Type::array(Type::Int))];
        let program = parse_typed(code, &args, None).unwrap();
        Task::new(vec![], args, program, vec![])
    }

    #[test]
    fn conditional_frequencies_follow_corpus() {
        let mut corpus = Vec::new();
        for _ in 0..700 {
            corpus.push(task("(reduce a inf min)"));
        }
        for _ in 0..300 {
            corpus.push(task("(reduce a 0 +)"));
        }
        let g = FrequencyGuidance::train(&corpus);
        let p = g.prob("reduce", 2, "min");
        assert!((p - 0.7).abs() < 0.01, "{p}");
        // unseen context falls back to uniform over vocabulary + unknown
        let u = g.prob("sort", 0, "a");
        assert!((u - 1.0 / (g.vocab_size() as f64 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn literals_share_a_token() {
        let g = FrequencyGuidance::train(&[task("(filter a (partial0 7 <))"), task("(filter a (partial0 0 <))")]);
        assert!(g.prob("partial0", 0, LITERAL_TOKEN) > g.prob("partial0", 0, "1"));
        assert_eq!(key(&Symbol::int(-3)), LITERAL_TOKEN);
        assert_eq!(key(&Symbol::int(2)), "2");
    }
}
