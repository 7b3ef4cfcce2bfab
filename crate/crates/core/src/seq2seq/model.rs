use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::autodiff::{dot, read_u32, ParamSet, Tape, Tensor, Var, INIT_SCALE};
use crate::corpus::{BOS, EOS, PAD, TAG_L1, TAG_L2};
use crate::error::{Error, Result};

const MODEL_MAGIC: &[u8; 4] = b"S2SM";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seq2SeqConfig {
    pub d_emb: usize,
    pub d_h: usize,
    /// Source vocabulary size; 0 builds a decoder-only model.
    pub v_src: usize,
    pub v_tgt: usize,
    pub attention: bool,
}

impl Seq2SeqConfig {
    pub const DEFAULT_D_EMB: usize = 32;
    pub const DEFAULT_D_H: usize = 64;

    pub fn has_encoder(&self) -> bool {
        self.v_src > 0
    }
}

/// Per-token encoder states (`len + 1` rows, EOS included) and the summed
/// final states of both directions.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderStates {
    pub states: Tensor,
    pub final_state: Vec<f64>,
}

impl EncoderStates {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fixed-size sentence representation used to condition style generators.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentRep {
    pub z: Vec<f64>,
}

impl LatentRep {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("latent vector must be nonempty and finite".into()));
        }
        Ok(LatentRep { z })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Elementwise mean of two representations.
    pub fn average(a: &LatentRep, b: &LatentRep) -> Result<LatentRep> {
        if a.dim() != b.dim() {
            return Err(Error::ShapeMismatch {
                op: "latent average",
                detail: format!("{} vs {}", a.dim(), b.dim()),
            });
        }
        let z = a.z.iter().zip(&b.z).map(|(x, y)| (x + y) / 2.0).collect();
        Ok(LatentRep { z })
    }
}

/// What the decoder is conditioned on.
#[derive(Clone, Copy, Debug)]
pub enum Condition<'a> {
    /// Source ids, encoded on the same tape so the encoder is trained too.
    Source(&'a [u32]),
    /// Precomputed encoder states (constants); attention on when configured.
    Encoded(&'a EncoderStates),
    /// Initial decoder state `z`; no attention.
    Latent(&'a LatentRep),
}

#[derive(Clone, Copy)]
struct GruVars {
    wr: Var,
    wz: Var,
    wn: Var,
    ur: Var,
    uz: Var,
    un: Var,
    br: Var,
    bz: Var,
    bn: Var,
}

/// Parameters of one model recorded on a tape.
pub struct BoundModel {
    src_emb: Option<Var>,
    enc_f: Option<GruVars>,
    enc_b: Option<GruVars>,
    tgt_emb: Var,
    dec: GruVars,
    att: Option<(Var, Var, Var)>,
    out_w: Var,
    out_b: Var,
}

struct Memory {
    states: Var,
    states_t: Var,
}

/// Recorded result of a teacher-forced pass.
pub struct DecodeTrace {
    pub loss: Var,
    /// Logits per output position; the last one predicts EOS.
    pub logits: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Seq2Seq {
    config: Seq2SeqConfig,
    params: ParamSet,
}

const GATES: [&str; 9] = ["wr", "wz", "wn", "ur", "uz", "un", "br", "bz", "bn"];

fn init_gru<R: Rng + ?Sized>(p: &mut ParamSet, prefix: &str, d_in: usize, d_h: usize, rng: &mut R) -> Result<()> {
    for g in GATES {
        let shape = match &g[..1] {
            "w" => vec![d_in, d_h],
            "u" => vec![d_h, d_h],
            _ => vec![1, d_h],
        };
        p.init_uniform(&format!("{prefix}.{g}"), shape, INIT_SCALE, rng)?;
    }
    Ok(())
}

fn bind_gru(tape: &mut Tape, p: &ParamSet, prefix: &str, trainable: bool) -> Result<GruVars> {
    let mut v = Vec::with_capacity(9);
    for g in GATES {
        let name = format!("{prefix}.{g}");
        v.push(if trainable { tape.param(p, &name)? } else { tape.frozen(p, &name)? });
    }
    Ok(GruVars {
        wr: v[0],
        wz: v[1],
        wn: v[2],
        ur: v[3],
        uz: v[4],
        un: v[5],
        br: v[6],
        bz: v[7],
        bn: v[8],
    })
}

fn affine(tape: &mut Tape, x: Var, w: Var, h: Var, u: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    let hu = tape.matmul(h, u)?;
    let s = tape.add(xw, hu)?;
    tape.add(s, b)
}

/// `h' = n + u * (h - n)` with reset gate applied before the recurrent product.
fn gru_step(tape: &mut Tape, g: &GruVars, x: Var, h: Var) -> Result<Var> {
    let r = affine(tape, x, g.wr, h, g.ur, g.br)?;
    let r = tape.sigmoid(r)?;
    let u = affine(tape, x, g.wz, h, g.uz, g.bz)?;
    let u = tape.sigmoid(u)?;
    let rh = tape.mul(r, h)?;
    let n = affine(tape, x, g.wn, rh, g.un, g.bn)?;
    let n = tape.tanh(n)?;
    let diff = tape.sub(h, n)?;
    let gated = tape.mul(u, diff)?;
    tape.add(n, gated)
}

/// Token ids that greedy decoding never emits.
fn banned(id: usize) -> bool {
    let id = id as u32;
    id == PAD || id == BOS || id == TAG_L1 || id == TAG_L2
}

impl Seq2Seq {
    pub fn new<R: Rng + ?Sized>(config: Seq2SeqConfig, rng: &mut R) -> Result<Self> {
        if config.d_emb == 0 || config.d_h == 0 || config.v_tgt == 0 {
            return Err(Error::InvalidArgument(format!("degenerate model config {config:?}")));
        }
        let mut p = ParamSet::new();
        let (e, h) = (config.d_emb, config.d_h);
        if config.has_encoder() {
            p.init_uniform("src_emb", vec![config.v_src, e], INIT_SCALE, rng)?;
            init_gru(&mut p, "enc_f", e, h, rng)?;
            init_gru(&mut p, "enc_b", e, h, rng)?;
        }
        p.init_uniform("tgt_emb", vec![config.v_tgt, e], INIT_SCALE, rng)?;
        init_gru(&mut p, "dec", e, h, rng)?;
        if config.attention {
            p.init_uniform("att.w", vec![h, h], INIT_SCALE, rng)?;
            p.init_uniform("att.c", vec![2 * h, h], INIT_SCALE, rng)?;
            p.init_uniform("att.cb", vec![1, h], INIT_SCALE, rng)?;
        }
        p.init_uniform("out.w", vec![h, config.v_tgt], INIT_SCALE, rng)?;
        p.init_uniform("out.b", vec![1, config.v_tgt], INIT_SCALE, rng)?;
        Ok(Seq2Seq { config, params: p })
    }

    pub fn from_params(config: Seq2SeqConfig, params: ParamSet) -> Result<Self> {
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let template = Seq2Seq::new(config, &mut rng)?;
        let expected: Vec<(&str, &[usize])> = template.params.iter().map(|(n, t)| (n, t.shape())).collect();
        let got: Vec<(&str, &[usize])> = params.iter().map(|(n, t)| (n, t.shape())).collect();
        if expected != got {
            return Err(Error::Format(format!(
                "parameters do not match configuration {config:?}"
            )));
        }
        Ok(Seq2Seq { config, params })
    }

    pub fn config(&self) -> Seq2SeqConfig {
        self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<BoundModel> {
        self.bind_set(tape, &self.params, trainable)
    }

    /// Binds `p` (same layout as this model's parameters) in place of the
    /// model's own parameters.
    pub fn bind_set(&self, tape: &mut Tape, p: &ParamSet, trainable: bool) -> Result<BoundModel> {
        let get = |tape: &mut Tape, name: &str| if trainable { tape.param(p, name) } else { tape.frozen(p, name) };
        let (src_emb, enc_f, enc_b) = if self.config.has_encoder() {
            (
                Some(get(tape, "src_emb")?),
                Some(bind_gru(tape, p, "enc_f", trainable)?),
                Some(bind_gru(tape, p, "enc_b", trainable)?),
            )
        } else {
            (None, None, None)
        };
        let tgt_emb = get(tape, "tgt_emb")?;
        let dec = bind_gru(tape, p, "dec", trainable)?;
        let att = if self.config.attention {
            Some((get(tape, "att.w")?, get(tape, "att.c")?, get(tape, "att.cb")?))
        } else {
            None
        };
        Ok(BoundModel {
            src_emb,
            enc_f,
            enc_b,
            tgt_emb,
            dec,
            att,
            out_w: get(tape, "out.w")?,
            out_b: get(tape, "out.b")?,
        })
    }

    fn check_ids(ids: &[u32], limit: usize, what: &'static str) -> Result<()> {
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= limit) {
            return Err(Error::TargetOutOfRange {
                target: bad as usize,
                classes: limit,
            });
        }
        if ids.is_empty() {
            return Err(Error::Empty(what));
        }
        Ok(())
    }

    /// Runs both encoder directions over `src + EOS`. Returns the per-token
    /// states (`T x d_h`) and the final state (`1 x d_h`).
    fn encode_on(&self, tape: &mut Tape, b: &BoundModel, src: &[u32]) -> Result<(Var, Var)> {
        let (Some(emb), Some(fwd), Some(bwd)) = (b.src_emb, b.enc_f, b.enc_b) else {
            return Err(Error::InvalidArgument("decoder-only model cannot encode".into()));
        };
        Self::check_ids(src, self.config.v_src, "source sentence")?;
        let ids: Vec<usize> = src.iter().map(|&i| i as usize).chain([EOS as usize]).collect();
        let t = ids.len();
        let inputs = ids
            .iter()
            .map(|&id| tape.embedding(emb, &[id]))
            .collect::<Result<Vec<_>>>()?;
        let h0 = tape.constant(Tensor::zeros(vec![1, self.config.d_h]));
        let mut f_states = Vec::with_capacity(t);
        let mut h = h0;
        for &x in &inputs {
            h = gru_step(tape, &fwd, x, h)?;
            f_states.push(h);
        }
        let mut b_states = vec![h0; t];
        let mut h = h0;
        for i in (0..t).rev() {
            h = gru_step(tape, &bwd, inputs[i], h)?;
            b_states[i] = h;
        }
        let summed = f_states
            .iter()
            .zip(&b_states)
            .map(|(&f, &b)| tape.add(f, b))
            .collect::<Result<Vec<_>>>()?;
        let states = tape.concat(&summed, 0)?;
        let fin = tape.add(f_states[t - 1], b_states[0])?;
        Ok((states, fin))
    }

    pub fn encode(&self, src: &[u32]) -> Result<EncoderStates> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false)?;
        let (states, fin) = self.encode_on(&mut tape, &b, src)?;
        Ok(EncoderStates {
            states: tape.value(states)?.clone(),
            final_state: tape.value(fin)?.data().to_vec(),
        })
    }

    /// Bilinear attention of one decoder state over encoder states.
    /// Returns the context vector and the attention weights.
    pub fn attend(&self, decoder_state: &[f64], enc: &EncoderStates) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = self
            .params
            .get("att.w")
            .map_err(|_| Error::InvalidArgument("model has no attention".into()))?;
        let d = self.config.d_h;
        if decoder_state.len() != d || enc.states.cols() != d {
            return Err(Error::ShapeMismatch {
                op: "attend",
                detail: format!("state {} / encoder {} vs d_h {d}", decoder_state.len(), enc.states.cols()),
            });
        }
        let mut q = vec![0.0; d];
        for (i, &s) in decoder_state.iter().enumerate() {
            for (qj, &wv) in q.iter_mut().zip(w.row_slice(i)) {
                *qj += s * wv;
            }
        }
        let scores: Vec<f64> = (0..enc.len()).map(|t| dot(&q, enc.states.row_slice(t))).collect();
        let weights = softmax(&scores);
        let mut ctx = vec![0.0; d];
        for (t, &a) in weights.iter().enumerate() {
            for (c, &s) in ctx.iter_mut().zip(enc.states.row_slice(t)) {
                *c += a * s;
            }
        }
        Ok((ctx, weights))
    }

    fn start(&self, tape: &mut Tape, b: &BoundModel, cond: Condition<'_>) -> Result<(Var, Option<Memory>)> {
        let d = self.config.d_h;
        let (h0, states) = match cond {
            Condition::Source(src) => {
                let (states, fin) = self.encode_on(tape, b, src)?;
                (fin, Some(states))
            }
            Condition::Encoded(enc) => {
                if enc.states.cols() != d || enc.final_state.len() != d {
                    return Err(Error::ShapeMismatch {
                        op: "decoder",
                        detail: format!("encoder width {} vs d_h {d}", enc.states.cols()),
                    });
                }
                let fin = tape.constant(Tensor::from_parts(vec![1, d], enc.final_state.clone()));
                (fin, Some(tape.constant(enc.states.clone())))
            }
            Condition::Latent(z) => {
                if z.dim() != d {
                    return Err(Error::ShapeMismatch {
                        op: "decoder",
                        detail: format!("latent dim {} vs d_h {d}", z.dim()),
                    });
                }
                (tape.constant(Tensor::from_parts(vec![1, d], z.z.clone())), None)
            }
        };
        let memory = match (states, b.att.is_some()) {
            (Some(states), true) => Some(Memory {
                states,
                states_t: tape.transpose(states)?,
            }),
            _ => None,
        };
        Ok((h0, memory))
    }

    fn step(&self, tape: &mut Tape, b: &BoundModel, prev: u32, h: Var, mem: Option<&Memory>) -> Result<(Var, Var)> {
        let x = tape.embedding(b.tgt_emb, &[prev as usize])?;
        let h = gru_step(tape, &b.dec, x, h)?;
        let o = match (mem, b.att) {
            (Some(m), Some((w, c, cb))) => {
                let q = tape.matmul(h, w)?;
                let scores = tape.matmul(q, m.states_t)?;
                let weights = tape.softmax(scores)?;
                let ctx = tape.matmul(weights, m.states)?;
                let hc = tape.concat(&[h, ctx], 1)?;
                let o = tape.matmul(hc, c)?;
                let o = tape.add(o, cb)?;
                tape.tanh(o)?
            }
            _ => h,
        };
        let logits = tape.matmul(o, b.out_w)?;
        let logits = tape.add(logits, b.out_b)?;
        Ok((h, logits))
    }

    /// Teacher-forced pass over `y + EOS`, recording mean token cross-entropy.
    pub fn trace(&self, tape: &mut Tape, b: &BoundModel, cond: Condition<'_>, y: &[u32]) -> Result<DecodeTrace> {
        Self::check_ids(y, self.config.v_tgt, "target sentence")?;
        let (mut h, mem) = self.start(tape, b, cond)?;
        let mut logits = Vec::with_capacity(y.len() + 1);
        let mut prev = BOS;
        for &tok in y.iter().chain(std::iter::once(&EOS)) {
            let (nh, l) = self.step(tape, b, prev, h, mem.as_ref())?;
            h = nh;
            logits.push(l);
            prev = tok;
        }
        let targets: Vec<usize> = y.iter().map(|&i| i as usize).chain([EOS as usize]).collect();
        let all = tape.concat(&logits, 0)?;
        let loss = tape.cross_entropy(all, &targets)?;
        Ok(DecodeTrace { loss, logits })
    }

    pub fn teacher_forced_loss(&self, cond: Condition<'_>, y: &[u32]) -> Result<f64> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false)?;
        let trace = self.trace(&mut tape, &b, cond, y)?;
        tape.value(trace.loss)?.item()
    }

    /// Argmax decoding from BOS until EOS or `max_len` tokens. Ties go to the
    /// lowest id; PAD, BOS and language tags are never emitted.
    pub fn greedy_decode(&self, cond: Condition<'_>, max_len: usize) -> Result<Vec<u32>> {
        self.decode_with(cond, max_len, |_, _| {})
    }

    /// Greedy decoding that also reports attention weights per step.
    pub fn greedy_decode_with_attention(&self, cond: Condition<'_>, max_len: usize) -> Result<(Vec<u32>, Vec<Vec<f64>>)> {
        let mut weights = Vec::new();
        let out = self.decode_with(cond, max_len, |h, enc| {
            if let Some(enc) = enc {
                if let Ok((_, w)) = self.attend(h, enc) {
                    weights.push(w);
                }
            }
        })?;
        Ok((out, weights))
    }

    fn decode_with<F>(&self, cond: Condition<'_>, max_len: usize, mut observe: F) -> Result<Vec<u32>>
    where
        F: FnMut(&[f64], Option<&EncoderStates>),
    {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false)?;
        let owned;
        let enc_view = match cond {
            Condition::Encoded(e) => Some(e),
            Condition::Source(src) if self.config.attention => {
                owned = self.encode(src)?;
                Some(&owned)
            }
            _ => None,
        };
        let (mut h, mem) = self.start(&mut tape, &b, cond)?;
        let mut out = Vec::new();
        let mut prev = BOS;
        while out.len() < max_len {
            let (nh, logits) = self.step(&mut tape, &b, prev, h, mem.as_ref())?;
            h = nh;
            if mem.is_some() {
                observe(tape.value(h)?.data(), enc_view);
            }
            let l = tape.value(logits)?.data();
            let mut best = usize::MAX;
            for (i, &v) in l.iter().enumerate() {
                if banned(i) {
                    continue;
                }
                if best == usize::MAX || v > l[best] {
                    best = i;
                }
            }
            let tok = best as u32;
            if tok == EOS {
                break;
            }
            out.push(tok);
            prev = tok;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let c = &self.config;
        w.write_all(MODEL_MAGIC)?;
        for v in [MODEL_VERSION, c.d_emb as u32, c.d_h as u32, c.v_src as u32, c.v_tgt as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[c.attention as u8])?;
        self.params.write_to(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::Format("not a seq2seq model file".into()));
        }
        let version = read_u32(r)?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let d_emb = read_u32(r)? as usize;
        let d_h = read_u32(r)? as usize;
        let v_src = read_u32(r)? as usize;
        let v_tgt = read_u32(r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let config = Seq2SeqConfig {
            d_emb,
            d_h,
            v_src,
            v_tgt,
            attention: flag[0] != 0,
        };
        let params = ParamSet::read_from(r)?;
        Self::from_params(config, params)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub(crate) fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Decoding cap relative to the source length.
pub fn max_decode_len(src_len: usize) -> usize {
    2 * src_len + 5
}
