//! Training records for the external trainer.
//!
//! Each task becomes one JSON line:
//!
//! ```json
//! {"src": [7, 12, -1, ...], "sym": [30, 9, -1, ...], "parent": [-1, 0, 0, ...], "prev": [-1, -1, 1, ...]}
//! ```
//!
//! `src` is the encoder input and `sym` the program in pre-order, with
//! `parent` and `prev` giving each node's parent and previous sibling
//! (`-1` when absent). Ids `>= 0` index the vocabulary; `-(k + 1)` marks the
//! task's `k`-th distinct out-of-vocabulary token, which the trainer binds
//! to a placeholder of its choosing.

use serde::{Deserialize, Serialize};

use super::vocab::{encoder_tokens, is_placeholder_literal, Vocab, UNK_ID};
use crate::datagen::Task;
use crate::dsl::Node;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub src: Vec<i64>,
    pub sym: Vec<i64>,
    pub parent: Vec<i64>,
    pub prev: Vec<i64>,
}

pub fn record(vocab: &Vocab, task: &Task) -> Record {
    let mut oov: Vec<String> = Vec::new();
    let mut code = |tok: &str, literal: bool| -> i64 {
        if !literal {
            if let Some(id) = vocab.id(tok) {
                return id as i64;
            }
        }
        let k = oov.iter().position(|t| t == tok).unwrap_or_else(|| {
            oov.push(tok.to_string());
            oov.len() - 1
        });
        if k < vocab.n_placeholders() {
            -(k as i64 + 1)
        } else {
            UNK_ID as i64
        }
    };
    let src = encoder_tokens(task).iter().map(|t| code(t, false)).collect();
    let mut rec = Record { src, sym: Vec::new(), parent: Vec::new(), prev: Vec::new() };
    fn walk(n: &Node, parent: i64, prev: i64, rec: &mut Record, code: &mut dyn FnMut(&str, bool) -> i64) {
        let Some(f) = n.as_filled() else { return };
        let me = rec.sym.len() as i64;
        rec.sym.push(code(&f.symbol.token(), is_placeholder_literal(&f.symbol)));
        rec.parent.push(parent);
        rec.prev.push(prev);
        let mut last = -1;
        for c in &f.children {
            let id = rec.sym.len() as i64;
            walk(c, me, last, rec, code);
            last = id;
        }
    }
    walk(task.program.root(), -1, -1, &mut rec, &mut code);
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::tokenize;
    use crate::dsl::{parse_typed, ArgDecl, Type};

    #[test]
    fn literals_share_the_text_slot() {
        let args = vec![ArgDecl::new("a", Type::array(Type::Int))];
        let mk = |text: &str, code: &str| {
            Task::new(tokenize(text), args.clone(), parse_typed(code, &args, None).unwrap(), vec![])
        };
        let vocab = Vocab::build(&[mk("given a, keep elements below 5.", "(filter a (partial0 0 <))")], 4);
        let t = mk("given a, keep elements below 17.", "(filter a (partial0 17 <))");
        let r = record(&vocab, &t);
        assert_eq!(r.src.iter().filter(|&&x| x == -1).count(), 1);
        assert_eq!(r.sym, vec![vocab.id("filter").unwrap() as i64, vocab.id("a").unwrap() as i64,
            vocab.id("partial0").unwrap() as i64, -1, vocab.id("<").unwrap() as i64]);
        assert_eq!(r.parent, vec![-1, 0, 0, 2, 2]);
        assert_eq!(r.prev, vec![-1, -1, 1, -1, 3]);
    }
}
