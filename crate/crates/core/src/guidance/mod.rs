//! Scoring the symbols that may fill a hole.
//!
//! A guidance model first encodes a task once. For every hole the search
//! asks it for a distribution over the type-valid candidates, given the
//! filled parent and previous sibling of the hole together with the states
//! the model attached to them. The model also returns the state to attach to
//! whichever symbol ends up filling the hole; children and later siblings
//! see it through their own contexts.
//!
//! Distributions are exchanged as natural-log probabilities, already masked
//! to the candidates and renormalized over them.

mod frequency;
mod oracle;
mod uniform;

use crate::datagen::Task;
use crate::dsl::{Link, Symbol};

pub use frequency::{FrequencyGuidance, LITERAL_TOKEN, ROOT_TOKEN};
pub use oracle::OracleGuidance;
pub use uniform::UniformGuidance;

/// Where a hole sits: its filled parent (absent at the root) and filled
/// previous sibling (absent for a first child), with their model states.
#[derive(Debug)]
pub struct NodeContext<'a, S> {
    pub parent: Option<&'a Link<S>>,
    pub sibling: Option<&'a Link<S>>,
    pub child_index: usize,
}

impl<S> Clone for NodeContext<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for NodeContext<'_, S> {}

impl<'a, S> NodeContext<'a, S> {
    pub fn root() -> Self {
        NodeContext { parent: None, sibling: None, child_index: 0 }
    }
}

/// A distribution over candidates plus the state for the node being filled.
#[derive(Debug, Clone)]
pub struct Scored<S> {
    /// One entry per candidate, in candidate order; `logsumexp = 0`.
    pub log_probs: Vec<f64>,
    pub state: S,
}

/// One hole to score in a batch.
pub struct Request<'a, G: Guidance + ?Sized> {
    pub encoding: &'a G::Encoding,
    pub context: NodeContext<'a, G::State>,
    pub candidates: &'a [Symbol],
}

pub trait Guidance: Sync {
    /// Per-task data computed once per search.
    type Encoding: Send + Sync;
    /// Per-node data attached to filled nodes.
    type State: Clone + Send + Sync;

    fn encode(&self, task: &Task) -> Self::Encoding;

    fn get_probs(
        &self,
        encoding: &Self::Encoding,
        context: NodeContext<'_, Self::State>,
        candidates: &[Symbol],
    ) -> Scored<Self::State>;

    /// Scores many holes at once, possibly from different tasks. Must equal
    /// calling [`Guidance::get_probs`] on each request.
    fn get_probs_batch(&self, requests: &[Request<'_, Self>]) -> Vec<Scored<Self::State>> {
        requests.iter().map(|r| self.get_probs(r.encoding, r.context, r.candidates)).collect()
    }
}

/// Restricts `log_probs` (indexed by vocabulary id) to `ids` and renormalizes.
/// If every selected entry is `-inf` the result is uniform.
pub fn mask_log_probs(full: &[f64], ids: &[usize]) -> Vec<f64> {
    let picked: Vec<f64> = ids.iter().map(|&i| full[i]).collect();
    renormalize(picked)
}

pub fn renormalize(mut log_probs: Vec<f64>) -> Vec<f64> {
    let max = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let u = -(log_probs.len() as f64).ln();
        log_probs.iter_mut().for_each(|p| *p = u);
        return log_probs;
    }
    let lse = max + log_probs.iter().map(|p| (p - max).exp()).sum::<f64>().ln();
    log_probs.iter_mut().for_each(|p| *p -= lse);
    log_probs
}

/// Index of the most probable candidate; ties go to the earliest.
pub fn argmax(log_probs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in log_probs.iter().enumerate() {
        if best.is_none_or(|b| *p > log_probs[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renormalize_sums_to_one() {
        let lp = renormalize(vec![0.5f64.ln(), 0.25f64.ln()]);
        assert!((lp[0].exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((lp.iter().map(|p| p.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
        let u = renormalize(vec![f64::NEG_INFINITY; 4]);
        assert!(u.iter().all(|p| (p.exp() - 0.25).abs() < 1e-12));
    }

    #[test]
    fn masking_keeps_argmax() {
        let full: Vec<f64> = [0.1, 0.4, 0.2, 0.3].iter().map(|p: &f64| p.ln()).collect();
        let ids = [0, 2, 3];
        let m = mask_log_probs(&full, &ids);
        assert_eq!(argmax(&m), Some(2));
        assert!((m[2].exp() - 0.5).abs() < 1e-12);
    }
}
