//! Joint token table for task text and program symbols, with placeholder
//! slots for out-of-vocabulary tokens.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use crate::datagen::Task;
use crate::dsl::{Constant, Node, Symbol};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const START_PARENT: &str = "<start_parent>";
pub const START_SIBLING: &str = "<start_sibling>";
pub const SEP: &str = "<sep>";
pub const SPECIALS: [&str; 5] = [PAD, UNK, START_PARENT, START_SIBLING, SEP];

pub const UNK_ID: u32 = 1;
pub const START_PARENT_ID: u32 = 2;
pub const START_SIBLING_ID: u32 = 3;

fn placeholder_token(k: usize) -> String {
    format!("<ph{k}>")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    n_placeholders: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("vocabulary line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("task has {needed} distinct out-of-vocabulary tokens but only {available} placeholders")]
    PlaceholdersExhausted { needed: usize, available: usize },
}

/// Whether a program literal is always routed through a placeholder.
pub fn is_placeholder_literal(symbol: &Symbol) -> bool {
    matches!(symbol, Symbol::Const(c @ Constant::Int(_)) if !Constant::base_pool().contains(c))
}

/// Encoder input: each argument's name and type, a separator, then the text.
pub fn encoder_tokens(task: &Task) -> Vec<String> {
    let mut out = Vec::with_capacity(task.args.len() * 2 + 1 + task.text.len());
    for a in task.args.iter() {
        out.push(a.name.to_string());
        out.push(a.ty.to_string());
    }
    out.push(SEP.to_string());
    out.extend(task.text.iter().cloned());
    out
}

/// Pre-order symbols of a complete program.
pub fn program_symbols(root: &Node) -> Vec<Symbol> {
    fn walk(n: &Node, out: &mut Vec<Symbol>) {
        if let Some(f) = n.as_filled() {
            out.push(f.symbol.clone());
            f.children.iter().for_each(|c| walk(c, out));
        }
    }
    let mut out = Vec::new();
    walk(root, &mut out);
    out
}

impl Vocab {
    /// Tokens seen in `tasks` (encoder inputs and program symbols), most
    /// frequent first, excluding integer literals outside the base pool.
    pub fn build<'a>(tasks: impl IntoIterator<Item = &'a Task>, n_placeholders: usize) -> Vocab {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let base: Vec<String> = Constant::base_pool().iter().map(|c| c.to_string()).collect();
        for t in tasks {
            for tok in encoder_tokens(t) {
                *counts.entry(tok).or_default() += 1;
            }
            for s in program_symbols(t.program.root()) {
                if !is_placeholder_literal(&s) {
                    *counts.entry(s.token()).or_default() += 1;
                }
            }
        }
        counts.retain(|tok, _| !SPECIALS.contains(&tok.as_str()) && (tok.parse::<i64>().is_err() || base.contains(tok)));
        let mut toks: Vec<(String, usize)> = counts.into_iter().collect();
        toks.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let regular = SPECIALS.iter().map(|s| s.to_string()).chain(toks.into_iter().map(|(t, _)| t)).collect();
        Vocab::from_parts(regular, n_placeholders)
    }

    fn from_parts(regular: Vec<String>, n_placeholders: usize) -> Vocab {
        let mut tokens = regular;
        tokens.extend((0..n_placeholders).map(placeholder_token));
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocab { tokens, index, n_placeholders }
    }

    /// Total size, placeholders included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of regular (non-placeholder) entries.
    pub fn n_regular(&self) -> usize {
        self.tokens.len() - self.n_placeholders
    }

    pub fn n_placeholders(&self) -> usize {
        self.n_placeholders
    }

    pub fn placeholder_id(&self, k: usize) -> u32 {
        (self.n_regular() + k) as u32
    }

    pub fn is_placeholder(&self, id: u32) -> bool {
        (id as usize) >= self.n_regular() && (id as usize) < self.len()
    }

    /// Id of a regular token.
    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied().filter(|&i| !self.is_placeholder(i))
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Vocab, VocabError> {
        let lines: Vec<&str> = text.lines().collect();
        for (i, l) in lines.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(VocabError::Format { line: i + 1, msg: format!("bad token {l:?}") });
            }
        }
        for (i, s) in SPECIALS.iter().enumerate() {
            if lines.get(i) != Some(s) {
                return Err(VocabError::Format { line: i + 1, msg: format!("expected {s}") });
            }
        }
        let n_ph = lines.iter().rev().take_while(|l| l.starts_with("<ph")).count();
        let first_ph = lines.len() - n_ph;
        for (k, l) in lines[first_ph..].iter().enumerate() {
            if *l != placeholder_token(k) {
                return Err(VocabError::Format { line: first_ph + k + 1, msg: format!("expected {}", placeholder_token(k)) });
            }
        }
        let regular: Vec<String> = lines[..first_ph].iter().map(|s| s.to_string()).collect();
        let mut seen = std::collections::HashSet::new();
        for (i, t) in regular.iter().enumerate() {
            if !seen.insert(t) {
                return Err(VocabError::Format { line: i + 1, msg: format!("duplicate token {t}") });
            }
        }
        Ok(Vocab::from_parts(regular, n_ph))
    }

    pub fn write(&self, path: &Path) -> Result<(), VocabError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Vocab, VocabError> {
        Vocab::from_text(&std::fs::read_to_string(path)?)
    }

    /// Maps tokens to ids, giving each distinct out-of-vocabulary token
    /// (and each non-base integer literal) a placeholder drawn at random
    /// from the unused ones. `extra` tokens (e.g. a gold program's) share
    /// the same map but are not part of the returned id sequence.
    pub fn apply_placeholders<R: Rng + ?Sized>(
        &self,
        tokens: &[String],
        extra: &[String],
        rng: &mut R,
    ) -> Result<(Vec<u32>, PlaceholderMap), VocabError> {
        let mut map = PlaceholderMap::default();
        let mut free: Vec<usize> = (0..self.n_placeholders).collect();
        let mut needed = 0;
        for tok in tokens.iter().chain(extra) {
            if self.id(tok).is_some() || map.by_token.contains_key(tok) {
                continue;
            }
            needed += 1;
            if free.is_empty() {
                continue;
            }
            let k = free.swap_remove(rng.gen_range(0..free.len()));
            let id = self.placeholder_id(k);
            map.by_token.insert(tok.clone(), id);
            map.by_id.insert(id, tok.clone());
        }
        if needed > self.n_placeholders {
            return Err(VocabError::PlaceholdersExhausted { needed, available: self.n_placeholders });
        }
        let ids = tokens.iter().map(|t| self.id(t).or_else(|| map.id(t)).unwrap_or(UNK_ID)).collect();
        Ok((ids, map))
    }

    /// Id under which `symbol` is scored, given the task's placeholder map.
    pub fn symbol_id(&self, symbol: &Symbol, map: &PlaceholderMap) -> u32 {
        let tok = symbol.token();
        if is_placeholder_literal(symbol) {
            return map.id(&tok).unwrap_or(UNK_ID);
        }
        self.id(&tok).or_else(|| map.id(&tok)).unwrap_or(UNK_ID)
    }
}

/// Per-task assignment of out-of-vocabulary tokens to placeholder ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlaceholderMap {
    by_token: HashMap<String, u32>,
    by_id: HashMap<u32, String>,
}

impl PlaceholderMap {
    pub fn id(&self, token: &str) -> Option<u32> {
        self.by_token.get(token).copied()
    }

    /// Surface token a placeholder stands for.
    pub fn token(&self, id: u32) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }
}
