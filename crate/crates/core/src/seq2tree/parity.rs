//! Cross-checking this forward pass against reference values exported by
//! the trainer for one task.

use std::path::Path;

use serde::Deserialize;

use super::model::{log_softmax, Link, ModelParams};
use super::vocab::{START_PARENT_ID, START_SIBLING_ID};

/// Teacher-forced reference pass over one gold tree. Node arrays are in
/// pre-order; `parent`/`prev` are node indices or `-1`.
#[derive(Debug, Clone, Deserialize)]
pub struct ParityFixture {
    pub src: Vec<u32>,
    pub sym: Vec<u32>,
    pub parent: Vec<i64>,
    pub prev: Vec<i64>,
    pub encoder_last: Vec<f64>,
    pub logits: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityReport {
    pub nodes: usize,
    pub max_encoder_diff: f64,
    pub max_logit_diff: f64,
    /// Largest deviation of any node's distribution from summing to one.
    pub max_mass_error: f64,
}

impl ParityFixture {
    pub fn read(path: &Path) -> Result<ParityFixture, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Logits of every gold node, computed with this implementation.
pub fn teacher_forced_logits(params: &ModelParams, f: &ParityFixture) -> (Vec<f32>, Vec<Vec<f32>>) {
    let enc = params.encode(&f.src);
    let zero = vec![0.0f32; params.hidden];
    let mut hp: Vec<Vec<f32>> = Vec::with_capacity(f.sym.len());
    let mut hs: Vec<Vec<f32>> = Vec::with_capacity(f.sym.len());
    let mut logits = Vec::with_capacity(f.sym.len());
    for i in 0..f.sym.len() {
        let parent = match f.parent[i] {
            p if p >= 0 => Link { state: &hp[p as usize], symbol: f.sym[p as usize] },
            _ => Link { state: &enc.last, symbol: START_PARENT_ID },
        };
        let sibling = match f.prev[i] {
            s if s >= 0 => Link { state: &hs[s as usize], symbol: f.sym[s as usize] },
            _ => Link { state: &zero, symbol: START_SIBLING_ID },
        };
        let step = params.decoder_step(parent, sibling, &enc);
        hp.push(step.hp);
        hs.push(step.hs);
        logits.push(step.logits);
    }
    (enc.last, logits)
}

pub fn check_parity(params: &ModelParams, f: &ParityFixture) -> ParityReport {
    let (last, logits) = teacher_forced_logits(params, f);
    let diff = |a: &[f32], b: &[f64]| a.iter().zip(b).map(|(x, y)| (*x as f64 - y).abs()).fold(0.0, f64::max);
    let max_mass_error = logits
        .iter()
        .map(|l| (log_softmax(l).iter().map(|p| p.exp()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    ParityReport {
        nodes: logits.len(),
        max_encoder_diff: diff(&last, &f.encoder_last),
        max_logit_diff: logits.iter().zip(&f.logits).map(|(a, b)| diff(a, b)).fold(0.0, f64::max),
        max_mass_error,
    }
}
