use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
struct Key {
    log_prob: f64,
    seq: Reverse<u64>,
}

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_prob.total_cmp(&other.log_prob).then(self.seq.cmp(&other.seq))
    }
}

/// Double-ended priority queue on log-probability. Among equal scores the
/// earliest inserted item is popped first from the top and last from the
/// bottom.
#[derive(Debug)]
pub struct BeamQueue<T> {
    items: BTreeMap<Key, T>,
    next_seq: u64,
}

impl<T> Default for BeamQueue<T> {
    fn default() -> Self {
        BeamQueue { items: BTreeMap::new(), next_seq: 0 }
    }
}

impl<T> BeamQueue<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, log_prob: f64, item: T) {
        let key = Key { log_prob, seq: Reverse(self.next_seq) };
        self.next_seq += 1;
        self.items.insert(key, item);
    }

    pub fn pop_max(&mut self) -> Option<(f64, T)> {
        self.items.pop_last().map(|(k, v)| (k.log_prob, v))
    }

    pub fn pop_min(&mut self) -> Option<(f64, T)> {
        self.items.pop_first().map(|(k, v)| (k.log_prob, v))
    }

    pub fn peek_max(&self) -> Option<f64> {
        self.items.last_key_value().map(|(k, _)| k.log_prob)
    }

    /// Drops the least likely items until at most `n` remain.
    pub fn truncate(&mut self, n: usize) {
        while self.items.len() > n {
            self.items.pop_first();
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_are_fifo_at_the_top() {
        let mut q = BeamQueue::new();
        q.push(-1.0, 'a');
        q.push(-1.0, 'b');
        q.push(-0.5, 'c');
        q.push(-1.0, 'd');
        assert_eq!(q.pop_max().unwrap().1, 'c');
        assert_eq!(q.pop_min().unwrap().1, 'd');
        assert_eq!(q.pop_max().unwrap().1, 'a');
        assert_eq!(q.pop_max().unwrap().1, 'b');
        assert!(q.pop_max().is_none());
    }

    proptest! {
        #[test]
        fn truncate_keeps_the_best(scores in prop::collection::vec(-50i32..=0, 1..60), n in 1usize..20) {
            let mut q = BeamQueue::new();
            for (i, s) in scores.iter().enumerate() {
                q.push(f64::from(*s), i);
            }
            q.truncate(n);
            prop_assert_eq!(q.len(), n.min(scores.len()));
            let mut sorted: Vec<i32> = scores.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let mut popped = Vec::new();
            while let Some((lp, _)) = q.pop_max() {
                popped.push(lp as i32);
            }
            prop_assert_eq!(popped, sorted[..n.min(scores.len())].to_vec());
        }
    }
}
