//! Forward pass of the sequence-to-tree model.
//!
//! Vectors are rows. With `σ` the logistic function, a gated recurrent cell
//! with input `x` and state `h` computes
//!
//! ```text
//! z  = σ(x·Wz + h·Uz + bz)
//! r  = σ(x·Wr + h·Ur + br)
//! h~ = tanh(x·Wh + (r⊙h)·Uh + bh)
//! h' = (1 − z)⊙h + z⊙h~
//! ```
//!
//! The encoder runs one cell over the embedded tokens (`enc.E` rows). For a
//! tree node with parent `(hp, p)` and previous sibling `(hs, s)`:
//!
//! ```text
//! ctx(x)  = tanh([aᵀHe ; x]·Wc),   a = softmax(He·(Wa·x))
//! hp'     = gp(ctx(W[p]), hp)
//! hs'     = gs(ctx(W[s]), hs)
//! h       = Up·hp' + Us·hs'
//! o       = softmax(W·h)
//! ```
//!
//! where `W[v]` is row `v` of the output matrix, which doubles as the
//! symbol embedding. `Wa`, `Up`, `Us` act on column vectors; `Wc` is 2H×H.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::archive::{ArchiveError, Tensor};

const GATES: [&str; 9] = ["Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh"];
const CELLS: [&str; 3] = ["enc", "dec.p", "dec.s"];

/// Every tensor name an archive must hold, in file order.
pub fn tensor_names() -> Vec<String> {
    let mut out = vec!["enc.E".to_string()];
    for c in CELLS {
        out.extend(GATES.iter().map(|g| format!("{c}.{g}")));
    }
    out.extend(["dec.Wa", "dec.Wc", "dec.Up", "dec.Us", "dec.W"].map(String::from));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        for k in 0..8 {
            acc[k] += a[c * 8 + k] * b[c * 8 + k];
        }
    }
    let mut s = 0.0;
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    let pairs = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    (pairs[0] + pairs[2]) + (pairs[1] + pairs[3]) + s
}

/// `x·M` for each row vector in `xs`.
fn vecmat(xs: &[&[f32]], m: &Mat) -> Vec<Vec<f32>> {
    let mut out = vec![vec![0.0f32; m.cols]; xs.len()];
    for i in 0..m.rows {
        let row = m.row(i);
        for (o, x) in out.iter_mut().zip(xs) {
            let xi = x[i];
            for (oj, wj) in o.iter_mut().zip(row) {
                *oj += xi * wj;
            }
        }
    }
    out
}

/// `M·x` for each column vector in `xs`.
fn matvec(m: &Mat, xs: &[&[f32]]) -> Vec<Vec<f32>> {
    let mut out = vec![vec![0.0f32; m.rows]; xs.len()];
    for r in 0..m.rows {
        let row = m.row(r);
        for (o, x) in out.iter_mut().zip(xs) {
            o[r] = dot(row, x);
        }
    }
    out
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Softmax as natural-log probabilities, accumulated in f64.
pub fn log_softmax(logits: &[f32]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let sum: f64 = logits.iter().map(|&l| (l as f64 - max).exp()).sum();
    let lse = max + sum.ln();
    logits.iter().map(|&l| l as f64 - lse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub wz: Mat,
    pub uz: Mat,
    pub bz: Vec<f32>,
    pub wr: Mat,
    pub ur: Mat,
    pub br: Vec<f32>,
    pub wh: Mat,
    pub uh: Mat,
    pub bh: Vec<f32>,
}

impl Gru {
    fn zeros(input: usize, hidden: usize) -> Gru {
        Gru {
            wz: Mat::zeros(input, hidden),
            uz: Mat::zeros(hidden, hidden),
            bz: vec![0.0; hidden],
            wr: Mat::zeros(input, hidden),
            ur: Mat::zeros(hidden, hidden),
            br: vec![0.0; hidden],
            wh: Mat::zeros(input, hidden),
            uh: Mat::zeros(hidden, hidden),
            bh: vec![0.0; hidden],
        }
    }

    /// One step for each `(input, state)` pair.
    pub fn step(&self, xs: &[&[f32]], hs: &[&[f32]]) -> Vec<Vec<f32>> {
        let xz = vecmat(xs, &self.wz);
        let hz = vecmat(hs, &self.uz);
        let xr = vecmat(xs, &self.wr);
        let hr = vecmat(hs, &self.ur);
        let xh = vecmat(xs, &self.wh);
        let n = self.bz.len();
        let mut zs = Vec::with_capacity(xs.len());
        let mut rhs = Vec::with_capacity(xs.len());
        for b in 0..xs.len() {
            let z: Vec<f32> = (0..n).map(|j| sigmoid(xz[b][j] + hz[b][j] + self.bz[j])).collect();
            let rh: Vec<f32> = (0..n).map(|j| sigmoid(xr[b][j] + hr[b][j] + self.br[j]) * hs[b][j]).collect();
            zs.push(z);
            rhs.push(rh);
        }
        let rh_refs: Vec<&[f32]> = rhs.iter().map(Vec::as_slice).collect();
        let hh = vecmat(&rh_refs, &self.uh);
        (0..xs.len())
            .map(|b| {
                (0..n)
                    .map(|j| {
                        let cand = (xh[b][j] + hh[b][j] + self.bh[j]).tanh();
                        (1.0 - zs[b][j]) * hs[b][j] + zs[b][j] * cand
                    })
                    .collect()
            })
            .collect()
    }

    fn tensors(&self, prefix: &str) -> Vec<Tensor> {
        let m = |g: &str, m: &Mat| Tensor::new(&format!("{prefix}.{g}"), vec![m.rows, m.cols], m.data.clone());
        let v = |g: &str, v: &[f32]| Tensor::new(&format!("{prefix}.{g}"), vec![v.len()], v.to_vec());
        vec![
            m("Wz", &self.wz),
            m("Uz", &self.uz),
            v("bz", &self.bz),
            m("Wr", &self.wr),
            m("Ur", &self.ur),
            v("br", &self.br),
            m("Wh", &self.wh),
            m("Uh", &self.uh),
            v("bh", &self.bh),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Vec<f32>> {
        vec![
            &mut self.wz.data,
            &mut self.uz.data,
            &mut self.bz,
            &mut self.wr.data,
            &mut self.ur.data,
            &mut self.br,
            &mut self.wh.data,
            &mut self.uh.data,
            &mut self.bh,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub hidden: usize,
    pub vocab: usize,
    pub embed: Mat,
    pub enc: Gru,
    pub dec_p: Gru,
    pub dec_s: Gru,
    pub wa: Mat,
    pub wc: Mat,
    pub up: Mat,
    pub us: Mat,
    pub w: Mat,
}

/// Encoder states, one row per input token, and the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub states: Mat,
    pub last: Vec<f32>,
}

/// One node's decoder input: a state and the symbol id it came with.
#[derive(Debug, Clone, Copy)]
pub struct Link<'a> {
    pub state: &'a [f32],
    pub symbol: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub logits: Vec<f32>,
    pub hp: Vec<f32>,
    pub hs: Vec<f32>,
    pub h: Vec<f32>,
}

impl ModelParams {
    pub fn zeros(vocab: usize, hidden: usize) -> ModelParams {
        ModelParams {
            hidden,
            vocab,
            embed: Mat::zeros(vocab, hidden),
            enc: Gru::zeros(hidden, hidden),
            dec_p: Gru::zeros(hidden, hidden),
            dec_s: Gru::zeros(hidden, hidden),
            wa: Mat::zeros(hidden, hidden),
            wc: Mat::zeros(2 * hidden, hidden),
            up: Mat::zeros(hidden, hidden),
            us: Mat::zeros(hidden, hidden),
            w: Mat::zeros(vocab, hidden),
        }
    }

    /// Uniform weights in `[-scale, scale]`.
    pub fn random(vocab: usize, hidden: usize, scale: f32, seed: u64) -> ModelParams {
        let mut p = ModelParams::zeros(vocab, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in p.params_mut() {
            v.iter_mut().for_each(|x| *x = rng.gen_range(-scale..=scale));
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Vec<f32>> {
        let mut out = vec![&mut self.embed.data];
        out.extend(self.enc.params_mut());
        out.extend(self.dec_p.params_mut());
        out.extend(self.dec_s.params_mut());
        out.extend([&mut self.wa.data, &mut self.wc.data, &mut self.up.data, &mut self.us.data, &mut self.w.data]);
        out
    }

    pub fn to_tensors(&self) -> Vec<Tensor> {
        let m = |name: &str, m: &Mat| Tensor::new(name, vec![m.rows, m.cols], m.data.clone());
        let mut out = vec![m("enc.E", &self.embed)];
        out.extend(self.enc.tensors("enc"));
        out.extend(self.dec_p.tensors("dec.p"));
        out.extend(self.dec_s.tensors("dec.s"));
        out.extend([m("dec.Wa", &self.wa), m("dec.Wc", &self.wc), m("dec.Up", &self.up), m("dec.Us", &self.us)]);
        out.push(m("dec.W", &self.w));
        out
    }

    /// Validates names, shapes and values. `hidden`, when given, must match
    /// the archive.
    pub fn from_tensors(tensors: Vec<Tensor>, hidden: Option<usize>) -> Result<ModelParams, ArchiveError> {
        let names = tensor_names();
        if let Some(t) = tensors.iter().find(|t| !names.contains(&t.name)) {
            return Err(ArchiveError::UnexpectedTensor(t.name.clone()));
        }
        for n in &names {
            if !tensors.iter().any(|t| &t.name == n) {
                return Err(ArchiveError::MissingTensor(n.clone()));
            }
        }
        let get = |n: &str| tensors.iter().find(|t| t.name == n).expect("checked above");
        let e = get("enc.E");
        if e.dims.len() != 2 {
            return Err(ArchiveError::Shape { name: e.name.clone(), expected: vec![0, 0], found: e.dims.clone() });
        }
        let (v, h) = (e.dims[0], e.dims[1]);
        if let Some(expected) = hidden.filter(|x| *x != h) {
            return Err(ArchiveError::Hidden { archive: h, expected });
        }
        let mut p = ModelParams::zeros(v, h);
        let expected: Vec<(String, Vec<usize>)> =
            p.to_tensors().into_iter().map(|t| (t.name, t.dims)).collect();
        for (name, dims) in &expected {
            let t = get(name);
            if &t.dims != dims {
                return Err(ArchiveError::Shape { name: name.clone(), expected: dims.clone(), found: t.dims.clone() });
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(ArchiveError::NonFinite(name.clone()));
            }
        }
        let mut slots = p.params_mut();
        for ((name, _), slot) in expected.iter().zip(slots.iter_mut()) {
            slot.copy_from_slice(&get(name).data);
        }
        Ok(p)
    }

    pub fn encode(&self, ids: &[u32]) -> EncoderOutput {
        let h = self.hidden;
        let mut states = Mat::zeros(ids.len(), h);
        let mut cur = vec![0.0f32; h];
        for (t, &id) in ids.iter().enumerate() {
            cur = self.enc.step(&[self.embed.row(id as usize)], &[&cur]).pop().unwrap();
            states.data[t * h..(t + 1) * h].copy_from_slice(&cur);
        }
        EncoderOutput { states, last: cur }
    }

    /// Attention weights of `x` over the encoder states.
    pub fn attention(&self, x: &[f32], enc: &EncoderOutput) -> Vec<f32> {
        let q = matvec(&self.wa, &[x]).pop().unwrap();
        let scores: Vec<f32> = (0..enc.states.rows).map(|t| dot(enc.states.row(t), &q)).collect();
        log_softmax(&scores).into_iter().map(|l| l.exp() as f32).collect()
    }

    pub fn context(&self, x: &[f32], enc: &EncoderOutput) -> Vec<f32> {
        let a = self.attention(x, enc);
        let mut cat = vec![0.0f32; 2 * self.hidden];
        for (t, at) in a.iter().enumerate() {
            for (c, s) in cat[..self.hidden].iter_mut().zip(enc.states.row(t)) {
                *c += at * s;
            }
        }
        cat[self.hidden..].copy_from_slice(x);
        vecmat(&[&cat], &self.wc).pop().unwrap().into_iter().map(f32::tanh).collect()
    }

    /// Symbol embedding: a row of the output matrix.
    pub fn symbol_embedding(&self, id: u32) -> &[f32] {
        self.w.row(id as usize)
    }

    /// Decoder steps for several nodes at once, given each node's parent
    /// and sibling contexts `ctx(W[p])`, `ctx(W[s])` and incoming states.
    pub fn decoder_steps(&self, inputs: &[StepInput<'_>]) -> Vec<Step> {
        let cp: Vec<&[f32]> = inputs.iter().map(|i| i.parent_ctx).collect();
        let hp_in: Vec<&[f32]> = inputs.iter().map(|i| i.parent_state).collect();
        let cs: Vec<&[f32]> = inputs.iter().map(|i| i.sibling_ctx).collect();
        let hs_in: Vec<&[f32]> = inputs.iter().map(|i| i.sibling_state).collect();
        let hp = self.dec_p.step(&cp, &hp_in);
        let hs = self.dec_s.step(&cs, &hs_in);
        let hp_refs: Vec<&[f32]> = hp.iter().map(Vec::as_slice).collect();
        let hs_refs: Vec<&[f32]> = hs.iter().map(Vec::as_slice).collect();
        let a = matvec(&self.up, &hp_refs);
        let b = matvec(&self.us, &hs_refs);
        let h: Vec<Vec<f32>> = a.iter().zip(&b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect();
        let h_refs: Vec<&[f32]> = h.iter().map(Vec::as_slice).collect();
        let logits = matvec(&self.w, &h_refs);
        logits
            .into_iter()
            .zip(hp)
            .zip(hs)
            .zip(h)
            .map(|(((logits, hp), hs), h)| Step { logits, hp, hs, h })
            .collect()
    }

    /// One decoder step computing both attention contexts from scratch.
    pub fn decoder_step(&self, parent: Link<'_>, sibling: Link<'_>, enc: &EncoderOutput) -> Step {
        let cp = self.context(self.symbol_embedding(parent.symbol), enc);
        let cs = self.context(self.symbol_embedding(sibling.symbol), enc);
        let input =
            StepInput { parent_ctx: &cp, parent_state: parent.state, sibling_ctx: &cs, sibling_state: sibling.state };
        self.decoder_steps(&[input]).pop().unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepInput<'a> {
    pub parent_ctx: &'a [f32],
    pub parent_state: &'a [f32],
    pub sibling_ctx: &'a [f32],
    pub sibling_state: &'a [f32],
}
