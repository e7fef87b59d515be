use super::{Guidance, NodeContext, Scored};
use crate::datagen::Task;
use crate::dsl::Symbol;

/// Equal probability for every candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformGuidance;

impl Guidance for UniformGuidance {
    type Encoding = ();
    type State = ();

    fn encode(&self, _: &Task) {}

    fn get_probs(&self, _: &(), _: NodeContext<'_, ()>, candidates: &[Symbol]) -> Scored<()> {
        let lp = -(candidates.len() as f64).ln();
        Scored { log_probs: vec![lp; candidates.len()], state: () }
    }
}
