//! Sequence-to-tree guidance: a recurrent encoder over the task text with a
//! doubly-recurrent tree decoder (one state along parent links, one along
//! sibling links) and attention over the encoder states.

pub mod archive;
pub mod model;
pub mod parity;
pub mod prep;
pub mod vocab;

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::Task;
use crate::dsl::{Node, Symbol, Tree};
use crate::guidance::{mask_log_probs, Guidance, NodeContext, Request, Scored};

pub use archive::{read_archive, write_archive, ArchiveError, Tensor};
pub use model::{log_softmax, EncoderOutput, ModelParams, Step, StepInput};
pub use vocab::{PlaceholderMap, Vocab, VocabError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Archive { path: PathBuf, source: ArchiveError },
    #[error("{path}: {source}")]
    Vocab { path: PathBuf, source: VocabError },
    #[error("{0}")]
    Mismatch(ArchiveError),
}

/// Vocabulary sidecar path for an archive: same stem, `.vocab` extension.
pub fn vocab_path(archive: &Path) -> PathBuf {
    archive.with_extension("vocab")
}

/// Decoder state attached to a filled node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub hp: Vec<f32>,
    pub hs: Vec<f32>,
}

/// Everything the decoder needs about one task.
#[derive(Debug)]
pub struct TaskEncoding {
    pub ids: Vec<u32>,
    pub placeholders: PlaceholderMap,
    pub encoder: EncoderOutput,
    contexts: Vec<OnceLock<Vec<f32>>>,
}

impl TaskEncoding {
    /// How many symbol contexts have been computed so far.
    pub fn cached_contexts(&self) -> usize {
        self.contexts.iter().filter(|c| c.get().is_some()).count()
    }
}

#[derive(Debug, Clone)]
pub struct Seq2Tree {
    pub params: Arc<ModelParams>,
    pub vocab: Arc<Vocab>,
}

/// Seed for a task's placeholder assignment, derived from its encoder input.
fn task_seed(tokens: &[String]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tokens {
        for b in t.bytes().chain([0]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl Seq2Tree {
    pub fn new(params: ModelParams, vocab: Vocab) -> Result<Seq2Tree, ArchiveError> {
        if vocab.len() != params.vocab {
            return Err(ArchiveError::VocabSize { vocab: vocab.len(), archive: params.vocab });
        }
        Ok(Seq2Tree { params: Arc::new(params), vocab: Arc::new(vocab) })
    }

    /// Loads an archive and its vocabulary sidecar.
    pub fn load(path: &Path, hidden: Option<usize>) -> Result<Seq2Tree, LoadError> {
        let archive = |source| LoadError::Archive { path: path.to_path_buf(), source };
        let tensors = read_archive(path).map_err(archive)?;
        let params = ModelParams::from_tensors(tensors, hidden).map_err(archive)?;
        let vp = vocab_path(path);
        let vocab = Vocab::read(&vp).map_err(|source| LoadError::Vocab { path: vp, source })?;
        Seq2Tree::new(params, vocab).map_err(LoadError::Mismatch)
    }

    pub fn hidden(&self) -> usize {
        self.params.hidden
    }

    /// Encodes a task; the placeholder assignment is seeded by the task
    /// itself so repeated encodings agree.
    pub fn encode_task(&self, task: &Task) -> TaskEncoding {
        let tokens = vocab::encoder_tokens(task);
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(&tokens));
        let (ids, placeholders) = match self.vocab.apply_placeholders(&tokens, &[], &mut rng) {
            Ok(x) => x,
            Err(_) => {
                // Too many unknown tokens: those without a slot read as <unk>.
                let mut rng = ChaCha8Rng::seed_from_u64(task_seed(&tokens));
                let kept: Vec<String> = self.truncate_oov(&tokens);
                let (_, map) = self.vocab.apply_placeholders(&kept, &[], &mut rng).expect("fits by construction");
                let ids = tokens.iter().map(|t| self.vocab.id(t).or_else(|| map.id(t)).unwrap_or(vocab::UNK_ID)).collect();
                (ids, map)
            }
        };
        let encoder = self.params.encode(&ids);
        let contexts = (0..self.vocab.len()).map(|_| OnceLock::new()).collect();
        TaskEncoding { ids, placeholders, encoder, contexts }
    }

    fn truncate_oov(&self, tokens: &[String]) -> Vec<String> {
        let mut seen: Vec<&String> = Vec::new();
        let mut out = Vec::new();
        for t in tokens {
            if self.vocab.id(t).is_none() && !seen.contains(&t) {
                if seen.len() == self.vocab.n_placeholders() {
                    continue;
                }
                seen.push(t);
            }
            out.push(t.clone());
        }
        out
    }

    pub fn symbol_id(&self, enc: &TaskEncoding, symbol: &Symbol) -> u32 {
        self.vocab.symbol_id(symbol, &enc.placeholders)
    }

    /// Attention context of a symbol's embedding, computed once per task.
    pub fn context<'e>(&self, enc: &'e TaskEncoding, id: u32) -> &'e [f32] {
        enc.contexts[id as usize].get_or_init(|| self.params.context(self.params.symbol_embedding(id), &enc.encoder))
    }

    fn zero(&self) -> Vec<f32> {
        vec![0.0; self.params.hidden]
    }

    /// Parent and sibling inputs of a hole: `(state, symbol id)` pairs.
    fn links<'a>(
        &self,
        enc: &'a TaskEncoding,
        ctx: &NodeContext<'a, Arc<NodeState>>,
        zero: &'a [f32],
    ) -> ((&'a [f32], u32), (&'a [f32], u32)) {
        let parent = match ctx.parent {
            Some(l) => (l.ann.hp.as_slice(), self.symbol_id(enc, &l.symbol)),
            None => (enc.encoder.last.as_slice(), vocab::START_PARENT_ID),
        };
        let sibling = match ctx.sibling {
            Some(l) => (l.ann.hs.as_slice(), self.symbol_id(enc, &l.symbol)),
            None => (zero, vocab::START_SIBLING_ID),
        };
        (parent, sibling)
    }

    /// Full output distribution (natural-log, over the vocabulary) at a
    /// hole, with the state for the node that fills it.
    pub fn distribution(&self, enc: &TaskEncoding, ctx: NodeContext<'_, Arc<NodeState>>) -> (Vec<f64>, NodeState) {
        let zero = self.zero();
        let ((ps, pid), (ss, sid)) = self.links(enc, &ctx, &zero);
        let input =
            StepInput { parent_ctx: self.context(enc, pid), parent_state: ps, sibling_ctx: self.context(enc, sid), sibling_state: ss };
        let step = self.params.decoder_steps(&[input]).pop().unwrap();
        (log_softmax(&step.logits), NodeState { hp: step.hp, hs: step.hs })
    }

    fn score(&self, enc: &TaskEncoding, full: &[f64], candidates: &[Symbol]) -> Vec<f64> {
        let ids: Vec<usize> = candidates.iter().map(|c| self.symbol_id(enc, c) as usize).collect();
        mask_log_probs(full, &ids)
    }

    /// Distribution at the first hole of `tree`, recomputing every decoder
    /// state and attention context along the way without any caching.
    pub fn redecode<A>(&self, task: &Task, tree: &Tree<A>) -> Option<Vec<f64>> {
        let enc = self.encode_task(task);
        let zero = self.zero();
        let start = (enc.encoder.last.clone(), vocab::START_PARENT_ID);
        self.redecode_node(&enc, tree.root(), start, (zero, vocab::START_SIBLING_ID)).err()
    }

    /// Walks a subtree in pre-order. Returns `Err(distribution)` at the
    /// first hole, otherwise the node's sibling state.
    fn redecode_node<A>(
        &self,
        enc: &TaskEncoding,
        node: &Node<A>,
        parent: (Vec<f32>, u32),
        sibling: (Vec<f32>, u32),
    ) -> Result<Vec<f32>, Vec<f64>> {
        let step = self.params.decoder_step(
            model::Link { state: &parent.0, symbol: parent.1 },
            model::Link { state: &sibling.0, symbol: sibling.1 },
            &enc.encoder,
        );
        let f = match node {
            Node::Hole(_) => return Err(log_softmax(&step.logits)),
            Node::Filled(f) => f,
        };
        let id = self.symbol_id(enc, &f.symbol);
        let mut prev = (self.zero(), vocab::START_SIBLING_ID);
        for c in &f.children {
            let hs = self.redecode_node(enc, c, (step.hp.clone(), id), prev)?;
            let cid = c.as_filled().map(|cf| self.symbol_id(enc, &cf.symbol)).unwrap_or(vocab::UNK_ID);
            prev = (hs, cid);
        }
        Ok(step.hs)
    }
}

impl Guidance for Seq2Tree {
    type Encoding = TaskEncoding;
    type State = Arc<NodeState>;

    fn encode(&self, task: &Task) -> TaskEncoding {
        self.encode_task(task)
    }

    fn get_probs(
        &self,
        enc: &TaskEncoding,
        ctx: NodeContext<'_, Arc<NodeState>>,
        candidates: &[Symbol],
    ) -> Scored<Arc<NodeState>> {
        let (full, state) = self.distribution(enc, ctx);
        Scored { log_probs: self.score(enc, &full, candidates), state: Arc::new(state) }
    }

    fn get_probs_batch(&self, requests: &[Request<'_, Self>]) -> Vec<Scored<Arc<NodeState>>> {
        let zero = self.zero();
        let links: Vec<_> = requests.iter().map(|r| self.links(r.encoding, &r.context, &zero)).collect();
        let inputs: Vec<StepInput> = requests
            .iter()
            .zip(&links)
            .map(|(r, ((ps, pid), (ss, sid)))| StepInput {
                parent_ctx: self.context(r.encoding, *pid),
                parent_state: ps,
                sibling_ctx: self.context(r.encoding, *sid),
                sibling_state: ss,
            })
            .collect();
        let steps = self.params.decoder_steps(&inputs);
        requests
            .iter()
            .zip(steps)
            .map(|(r, s)| Scored {
                log_probs: self.score(r.encoding, &log_softmax(&s.logits), r.candidates),
                state: Arc::new(NodeState { hp: s.hp, hs: s.hs }),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_tasks, GenConfig};
    use crate::dsl::Constant;
    use crate::guidance::argmax;

    fn setup() -> (Vec<Task>, Seq2Tree) {
        let cfg = GenConfig { n_tasks: 30, seed: 5, ..GenConfig::default() };
        let tasks = generate_tasks(&cfg);
        let vocab = Vocab::build(&tasks, 8);
        let params = ModelParams::random(vocab.len(), 12, 0.5, 9);
        (tasks, Seq2Tree::new(params, vocab).unwrap())
    }

    /// Fills `tree` greedily for `steps` holes, checking each cached
    /// distribution against a from-scratch decode of the same partial tree.
    #[test]
    fn cached_states_match_full_redecode() {
        let (tasks, m) = setup();
        for task in tasks.iter().take(5) {
            let enc = m.encode(task);
            let mut tree: Tree<Arc<NodeState>> = Tree::empty(task.program.shared_args(), Some(task.output_type()));
            let pool = task.constant_pool();
            for _ in 0..6 {
                let Some(site) = tree.first_empty_node() else { break };
                let cands = tree.candidates(&site, &pool);
                if cands.is_empty() {
                    break;
                }
                let ctx = NodeContext { parent: site.parent.as_ref(), sibling: site.sibling.as_ref(), child_index: site.child_index };
                let (full, state) = m.distribution(&enc, ctx);
                let fresh = m.redecode(task, &tree).unwrap();
                for (a, b) in full.iter().zip(&fresh) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                let scored = m.score(&enc, &full, &cands);
                let pick = cands[argmax(&scored).unwrap()].clone();
                tree = tree.substitute(&site.path, pick, Arc::new(state)).unwrap();
            }
        }
    }

    #[test]
    fn batch_matches_single_calls() {
        let (tasks, m) = setup();
        let encs: Vec<TaskEncoding> = tasks.iter().take(4).map(|t| m.encode(t)).collect();
        let cands = vec![Symbol::Const(Constant::Int(0)), Symbol::Const(Constant::Int(1))];
        let reqs: Vec<Request<Seq2Tree>> =
            encs.iter().map(|e| Request { encoding: e, context: NodeContext::root(), candidates: &cands }).collect();
        let batch = m.get_probs_batch(&reqs);
        for (e, b) in encs.iter().zip(&batch) {
            let s = m.get_probs(e, NodeContext::root(), &cands);
            assert_eq!(s.log_probs, b.log_probs);
            assert_eq!(s.state, b.state);
        }
    }

    #[test]
    fn encoding_is_deterministic_and_memoized() {
        let (tasks, m) = setup();
        let a = m.encode(&tasks[0]);
        let b = m.encode(&tasks[0]);
        assert_eq!(a.ids, b.ids);
        assert_eq!(a.placeholders, b.placeholders);
        assert_eq!(a.cached_contexts(), 0);
        m.get_probs(&a, NodeContext::root(), &[Symbol::Const(Constant::Int(0))]);
        assert_eq!(a.cached_contexts(), 2);
    }

    #[test]
    fn load_checks_vocab_size() {
        let (tasks, m) = setup();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.nta");
        write_archive(&path, &m.params.to_tensors()).unwrap();
        m.vocab.write(&vocab_path(&path)).unwrap();
        let back = Seq2Tree::load(&path, Some(12)).unwrap();
        assert_eq!(*back.params, *m.params);
        Vocab::build(&tasks[..2], 8).write(&vocab_path(&path)).unwrap();
        assert!(matches!(Seq2Tree::load(&path, None), Err(LoadError::Mismatch(ArchiveError::VocabSize { .. }))));
    }
}
