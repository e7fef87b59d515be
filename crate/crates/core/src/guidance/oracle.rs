use super::{Guidance, NodeContext, Scored};
use crate::datagen::Task;
use crate::dsl::{Node, Symbol};

/// Puts all probability on the symbol of the task's own program at the
/// hole's position. Each node's state is the program node at its position.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleGuidance;

impl Guidance for OracleGuidance {
    type Encoding = Node;
    type State = Option<Node>;

    fn encode(&self, task: &Task) -> Node {
        task.program.root().clone()
    }

    fn get_probs(&self, gold: &Node, ctx: NodeContext<'_, Option<Node>>, candidates: &[Symbol]) -> Scored<Option<Node>> {
        let here = match ctx.parent {
            None => Some(gold.clone()),
            Some(p) => p
                .ann
                .as_ref()
                .and_then(|n| n.as_filled())
                .and_then(|f| f.children.get(ctx.child_index).cloned()),
        };
        let target = here.as_ref().and_then(|n| n.as_filled()).map(|f| &f.symbol);
        let log_probs = match target.and_then(|t| candidates.iter().position(|c| c == t)) {
            Some(i) => (0..candidates.len()).map(|j| if j == i { 0.0 } else { f64::NEG_INFINITY }).collect(),
            None => vec![-(candidates.len() as f64).ln(); candidates.len()],
        };
        Scored { log_probs, state: here }
    }
}
