use std::fmt;
use std::str::FromStr;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A differentiable operation that can be recorded on a [`Tape`](super::Tape).
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    MatMul,
    /// Elementwise; the right operand may be a single row broadcast over rows.
    Add,
    Sub,
    Mul,
    Tanh,
    Sigmoid,
    /// Softmax over the last axis.
    Softmax,
    Log,
    /// Mean over every entry; yields a rank-0 scalar.
    Mean,
    /// Concatenation of rank-2 inputs along `axis` (0 = rows, 1 = columns).
    Concat { axis: usize },
    /// Row gather from an embedding table.
    Embedding { ids: Vec<usize> },
    /// Row gather where `None` produces a zero row.
    Gather { rows: Vec<Option<usize>> },
    Scale(f64),
    Transpose,
    /// Column-wise maximum over rows (max-over-time pooling).
    MaxRows,
    /// Mean negative log-likelihood of `targets` under row-wise softmax.
    CrossEntropy { targets: Vec<usize> },
}

/// Fieldless tag for [`Primitive`], parseable from its name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    MatMul,
    Add,
    Sub,
    Mul,
    Tanh,
    Sigmoid,
    Softmax,
    Log,
    Mean,
    Concat,
    Embedding,
    Gather,
    Scale,
    Transpose,
    MaxRows,
    CrossEntropy,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 16] = [
        PrimitiveKind::MatMul,
        PrimitiveKind::Add,
        PrimitiveKind::Sub,
        PrimitiveKind::Mul,
        PrimitiveKind::Tanh,
        PrimitiveKind::Sigmoid,
        PrimitiveKind::Softmax,
        PrimitiveKind::Log,
        PrimitiveKind::Mean,
        PrimitiveKind::Concat,
        PrimitiveKind::Embedding,
        PrimitiveKind::Gather,
        PrimitiveKind::Scale,
        PrimitiveKind::Transpose,
        PrimitiveKind::MaxRows,
        PrimitiveKind::CrossEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::MatMul => "matmul",
            PrimitiveKind::Add => "add",
            PrimitiveKind::Sub => "sub",
            PrimitiveKind::Mul => "mul",
            PrimitiveKind::Tanh => "tanh",
            PrimitiveKind::Sigmoid => "sigmoid",
            PrimitiveKind::Softmax => "softmax",
            PrimitiveKind::Log => "log",
            PrimitiveKind::Mean => "mean",
            PrimitiveKind::Concat => "concat",
            PrimitiveKind::Embedding => "embedding",
            PrimitiveKind::Gather => "gather",
            PrimitiveKind::Scale => "scale",
            PrimitiveKind::Transpose => "transpose",
            PrimitiveKind::MaxRows => "max_rows",
            PrimitiveKind::CrossEntropy => "cross_entropy",
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrimitiveKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPrimitive(s.to_string()))
    }
}

/// Values kept from the forward pass that the backward pass cannot cheaply
/// recover from inputs and output.
#[derive(Clone, Debug, Default)]
pub(crate) enum Saved {
    #[default]
    Nothing,
    Probs(Vec<f64>),
    Argmax(Vec<usize>),
}

fn mismatch(op: &'static str, detail: String) -> Error {
    Error::ShapeMismatch { op, detail }
}

fn expect_arity(op: &'static str, inputs: &[&Tensor], n: usize) -> Result<()> {
    if inputs.len() != n {
        return Err(mismatch(op, format!("expected {n} inputs, got {}", inputs.len())));
    }
    Ok(())
}

fn expect_rank2(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        s => Err(mismatch(op, format!("expected a matrix, got shape {s:?}"))),
    }
}

/// How the right operand of a binary elementwise op lines up with the left.
#[derive(Clone, Copy, PartialEq)]
enum Broadcast {
    Same,
    Row,
}

fn broadcast_mode(op: &'static str, a: &Tensor, b: &Tensor) -> Result<Broadcast> {
    if a.shape() == b.shape() {
        return Ok(Broadcast::Same);
    }
    let row_like = match b.shape() {
        [n] => *n == a.cols(),
        [1, n] => *n == a.cols(),
        _ => false,
    };
    if row_like && a.shape().len() == 2 {
        Ok(Broadcast::Row)
    } else {
        Err(mismatch(op, format!("{:?} vs {:?}", a.shape(), b.shape())))
    }
}

fn elementwise(a: &Tensor, b: &Tensor, mode: Broadcast, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    match mode {
        Broadcast::Same => a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
        Broadcast::Row => {
            let c = a.cols();
            a.data()
                .iter()
                .enumerate()
                .map(|(i, &x)| f(x, b.data()[i % c]))
                .collect()
        }
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
    out
}

fn softmax_rows(data: &[f64], cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.len());
    for row in data.chunks(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        let mut sum = 0.0;
        for &v in row {
            let e = (v - max).exp();
            sum += e;
            out.push(e);
        }
        for v in &mut out[start..] {
            *v /= sum;
        }
    }
    out
}

impl Primitive {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Primitive::MatMul => PrimitiveKind::MatMul,
            Primitive::Add => PrimitiveKind::Add,
            Primitive::Sub => PrimitiveKind::Sub,
            Primitive::Mul => PrimitiveKind::Mul,
            Primitive::Tanh => PrimitiveKind::Tanh,
            Primitive::Sigmoid => PrimitiveKind::Sigmoid,
            Primitive::Softmax => PrimitiveKind::Softmax,
            Primitive::Log => PrimitiveKind::Log,
            Primitive::Mean => PrimitiveKind::Mean,
            Primitive::Concat { .. } => PrimitiveKind::Concat,
            Primitive::Embedding { .. } => PrimitiveKind::Embedding,
            Primitive::Gather { .. } => PrimitiveKind::Gather,
            Primitive::Scale(_) => PrimitiveKind::Scale,
            Primitive::Transpose => PrimitiveKind::Transpose,
            Primitive::MaxRows => PrimitiveKind::MaxRows,
            Primitive::CrossEntropy { .. } => PrimitiveKind::CrossEntropy,
        }
    }

    pub(crate) fn forward(&self, inputs: &[&Tensor]) -> Result<(Tensor, Saved)> {
        let name = self.kind().name();
        let (out, saved) = match self {
            Primitive::MatMul => {
                expect_arity(name, inputs, 2)?;
                let (m, k) = expect_rank2(name, inputs[0])?;
                let (k2, n) = expect_rank2(name, inputs[1])?;
                if k != k2 {
                    return Err(mismatch(name, format!("{m}x{k} times {k2}x{n}")));
                }
                let data = matmul_raw(inputs[0].data(), inputs[1].data(), m, k, n);
                (Tensor::from_parts(vec![m, n], data), Saved::Nothing)
            }
            Primitive::Add | Primitive::Sub | Primitive::Mul => {
                expect_arity(name, inputs, 2)?;
                let (a, b) = (inputs[0], inputs[1]);
                let mode = broadcast_mode(name, a, b)?;
                let data = match self {
                    Primitive::Add => elementwise(a, b, mode, |x, y| x + y),
                    Primitive::Sub => elementwise(a, b, mode, |x, y| x - y),
                    _ => elementwise(a, b, mode, |x, y| x * y),
                };
                (Tensor::from_parts(a.shape().to_vec(), data), Saved::Nothing)
            }
            Primitive::Tanh | Primitive::Sigmoid | Primitive::Log | Primitive::Scale(_) => {
                expect_arity(name, inputs, 1)?;
                let x = inputs[0];
                let data: Vec<f64> = match self {
                    Primitive::Tanh => x.data().iter().map(|v| v.tanh()).collect(),
                    Primitive::Sigmoid => x.data().iter().map(|&v| sigmoid(v)).collect(),
                    Primitive::Log => x.data().iter().map(|v| v.ln()).collect(),
                    Primitive::Scale(c) => x.data().iter().map(|v| v * c).collect(),
                    _ => unreachable!(),
                };
                (Tensor::from_parts(x.shape().to_vec(), data), Saved::Nothing)
            }
            Primitive::Softmax => {
                expect_arity(name, inputs, 1)?;
                let x = inputs[0];
                let data = softmax_rows(x.data(), x.cols());
                (Tensor::from_parts(x.shape().to_vec(), data), Saved::Nothing)
            }
            Primitive::Mean => {
                expect_arity(name, inputs, 1)?;
                let x = inputs[0];
                let mean = x.data().iter().sum::<f64>() / x.numel() as f64;
                (Tensor::scalar(mean), Saved::Nothing)
            }
            Primitive::Concat { axis } => {
                if inputs.is_empty() {
                    return Err(mismatch(name, "no inputs".into()));
                }
                let dims = inputs
                    .iter()
                    .map(|t| expect_rank2(name, t))
                    .collect::<Result<Vec<_>>>()?;
                match axis {
                    0 => {
                        let cols = dims[0].1;
                        if dims.iter().any(|d| d.1 != cols) {
                            return Err(mismatch(name, format!("column counts differ: {dims:?}")));
                        }
                        let rows = dims.iter().map(|d| d.0).sum();
                        let mut data = Vec::with_capacity(rows * cols);
                        for t in inputs {
                            data.extend_from_slice(t.data());
                        }
                        (Tensor::from_parts(vec![rows, cols], data), Saved::Nothing)
                    }
                    1 => {
                        let rows = dims[0].0;
                        if dims.iter().any(|d| d.0 != rows) {
                            return Err(mismatch(name, format!("row counts differ: {dims:?}")));
                        }
                        let cols: usize = dims.iter().map(|d| d.1).sum();
                        let mut data = Vec::with_capacity(rows * cols);
                        for r in 0..rows {
                            for t in inputs {
                                data.extend_from_slice(t.row_slice(r));
                            }
                        }
                        (Tensor::from_parts(vec![rows, cols], data), Saved::Nothing)
                    }
                    _ => return Err(mismatch(name, format!("axis {axis} on rank-2 inputs"))),
                }
            }
            Primitive::Embedding { ids } => {
                expect_arity(name, inputs, 1)?;
                let (v, d) = expect_rank2(name, inputs[0])?;
                if ids.is_empty() {
                    return Err(Error::Empty("embedding ids"));
                }
                let mut data = Vec::with_capacity(ids.len() * d);
                for &id in ids {
                    if id >= v {
                        return Err(mismatch(name, format!("id {id} >= table size {v}")));
                    }
                    data.extend_from_slice(inputs[0].row_slice(id));
                }
                (Tensor::from_parts(vec![ids.len(), d], data), Saved::Nothing)
            }
            Primitive::Gather { rows } => {
                expect_arity(name, inputs, 1)?;
                let (v, d) = expect_rank2(name, inputs[0])?;
                if rows.is_empty() {
                    return Err(Error::Empty("gather rows"));
                }
                let mut data = Vec::with_capacity(rows.len() * d);
                for r in rows {
                    match r {
                        Some(id) if *id >= v => {
                            return Err(mismatch(name, format!("row {id} >= {v}")));
                        }
                        Some(id) => data.extend_from_slice(inputs[0].row_slice(*id)),
                        None => data.extend(std::iter::repeat(0.0).take(d)),
                    }
                }
                (Tensor::from_parts(vec![rows.len(), d], data), Saved::Nothing)
            }
            Primitive::Transpose => {
                expect_arity(name, inputs, 1)?;
                let (r, c) = expect_rank2(name, inputs[0])?;
                let x = inputs[0].data();
                let mut data = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        data[j * r + i] = x[i * c + j];
                    }
                }
                (Tensor::from_parts(vec![c, r], data), Saved::Nothing)
            }
            Primitive::MaxRows => {
                expect_arity(name, inputs, 1)?;
                let (r, c) = expect_rank2(name, inputs[0])?;
                let x = inputs[0].data();
                let mut arg = vec![0usize; c];
                let mut best = x[..c].to_vec();
                for i in 1..r {
                    for j in 0..c {
                        if x[i * c + j] > best[j] {
                            best[j] = x[i * c + j];
                            arg[j] = i;
                        }
                    }
                }
                (Tensor::from_parts(vec![1, c], best), Saved::Argmax(arg))
            }
            Primitive::CrossEntropy { targets } => {
                expect_arity(name, inputs, 1)?;
                let (n, v) = expect_rank2(name, inputs[0])?;
                if targets.is_empty() {
                    return Err(Error::Empty("cross-entropy targets"));
                }
                if targets.len() != n {
                    return Err(mismatch(name, format!("{n} rows but {} targets", targets.len())));
                }
                let logits = inputs[0].data();
                let mut probs = Vec::with_capacity(n * v);
                let mut total = 0.0;
                for (i, &t) in targets.iter().enumerate() {
                    if t >= v {
                        return Err(Error::TargetOutOfRange { target: t, classes: v });
                    }
                    let row = &logits[i * v..(i + 1) * v];
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
                    let lse = max + sum.ln();
                    total += lse - row[t];
                    probs.extend(row.iter().map(|x| (x - lse).exp()));
                }
                (Tensor::scalar(total / n as f64), Saved::Probs(probs))
            }
        };
        if !out.is_finite() {
            return Err(Error::NonFinite(name));
        }
        Ok((out, saved))
    }

    /// Adds d(loss)/d(inputs[which]) into `acc`, given d(loss)/d(output) in `g`.
    pub(crate) fn accumulate_grad(
        &self,
        which: usize,
        g: &[f64],
        inputs: &[&Tensor],
        output: &Tensor,
        saved: &Saved,
        acc: &mut [f64],
    ) {
        match self {
            Primitive::MatMul => {
                let (m, k) = (inputs[0].shape()[0], inputs[0].shape()[1]);
                let n = inputs[1].shape()[1];
                let a = inputs[0].data();
                let b = inputs[1].data();
                if which == 0 {
                    // dA = G B^T
                    for i in 0..m {
                        let g_row = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let b_row = &b[p * n..(p + 1) * n];
                            acc[i * k + p] += dot(g_row, b_row);
                        }
                    }
                } else {
                    // dB = A^T G
                    for i in 0..m {
                        let g_row = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let aip = a[i * k + p];
                            if aip == 0.0 {
                                continue;
                            }
                            for (o, &gv) in acc[p * n..(p + 1) * n].iter_mut().zip(g_row) {
                                *o += aip * gv;
                            }
                        }
                    }
                }
            }
            Primitive::Add | Primitive::Sub | Primitive::Mul => {
                let (a, b) = (inputs[0], inputs[1]);
                let row = a.shape() != b.shape();
                let cols = a.cols();
                let sign = if matches!(self, Primitive::Sub) && which == 1 { -1.0 } else { 1.0 };
                for (i, &gv) in g.iter().enumerate() {
                    let bi = if row { i % cols } else { i };
                    let local = match self {
                        Primitive::Mul if which == 0 => b.data()[bi],
                        Primitive::Mul => a.data()[i],
                        _ => sign,
                    };
                    if which == 0 {
                        acc[i] += gv * local;
                    } else {
                        acc[bi] += gv * local;
                    }
                }
            }
            Primitive::Tanh => {
                for ((o, &gv), &y) in acc.iter_mut().zip(g).zip(output.data()) {
                    *o += gv * (1.0 - y * y);
                }
            }
            Primitive::Sigmoid => {
                for ((o, &gv), &y) in acc.iter_mut().zip(g).zip(output.data()) {
                    *o += gv * y * (1.0 - y);
                }
            }
            Primitive::Log => {
                for ((o, &gv), &x) in acc.iter_mut().zip(g).zip(inputs[0].data()) {
                    *o += gv / x;
                }
            }
            Primitive::Scale(c) => {
                for (o, &gv) in acc.iter_mut().zip(g) {
                    *o += gv * c;
                }
            }
            Primitive::Softmax => {
                let cols = output.cols();
                for ((o_row, g_row), y_row) in acc
                    .chunks_mut(cols)
                    .zip(g.chunks(cols))
                    .zip(output.data().chunks(cols))
                {
                    let inner = dot(g_row, y_row);
                    for ((o, &gv), &y) in o_row.iter_mut().zip(g_row).zip(y_row) {
                        *o += y * (gv - inner);
                    }
                }
            }
            Primitive::Mean => {
                let share = g[0] / inputs[0].numel() as f64;
                for o in acc.iter_mut() {
                    *o += share;
                }
            }
            Primitive::Concat { axis } => {
                let out_cols = output.cols();
                if *axis == 0 {
                    let offset: usize = inputs[..which].iter().map(|t| t.numel()).sum();
                    let len = inputs[which].numel();
                    for (o, &gv) in acc.iter_mut().zip(&g[offset..offset + len]) {
                        *o += gv;
                    }
                } else {
                    let col_off: usize = inputs[..which].iter().map(|t| t.cols()).sum();
                    let c = inputs[which].cols();
                    for r in 0..output.rows() {
                        let src = &g[r * out_cols + col_off..r * out_cols + col_off + c];
                        for (o, &gv) in acc[r * c..(r + 1) * c].iter_mut().zip(src) {
                            *o += gv;
                        }
                    }
                }
            }
            Primitive::Embedding { ids } => {
                let d = inputs[0].cols();
                for (k, &id) in ids.iter().enumerate() {
                    for (o, &gv) in acc[id * d..(id + 1) * d].iter_mut().zip(&g[k * d..(k + 1) * d]) {
                        *o += gv;
                    }
                }
            }
            Primitive::Gather { rows } => {
                let d = inputs[0].cols();
                for (k, r) in rows.iter().enumerate() {
                    if let Some(id) = r {
                        for (o, &gv) in acc[id * d..(id + 1) * d]
                            .iter_mut()
                            .zip(&g[k * d..(k + 1) * d])
                        {
                            *o += gv;
                        }
                    }
                }
            }
            Primitive::Transpose => {
                let (r, c) = (inputs[0].shape()[0], inputs[0].shape()[1]);
                for i in 0..r {
                    for j in 0..c {
                        acc[i * c + j] += g[j * r + i];
                    }
                }
            }
            Primitive::MaxRows => {
                let c = inputs[0].cols();
                if let Saved::Argmax(arg) = saved {
                    for (j, &i) in arg.iter().enumerate() {
                        acc[i * c + j] += g[j];
                    }
                }
            }
            Primitive::CrossEntropy { targets } => {
                let v = inputs[0].cols();
                let scale = g[0] / targets.len() as f64;
                if let Saved::Probs(probs) = saved {
                    for (i, &t) in targets.iter().enumerate() {
                        let row = &mut acc[i * v..(i + 1) * v];
                        for (o, &p) in row.iter_mut().zip(&probs[i * v..(i + 1) * v]) {
                            *o += scale * p;
                        }
                        row[t] -= scale;
                    }
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Evaluates a primitive on plain tensors without recording anything.
pub fn apply_primitive(kind: &Primitive, inputs: &[Tensor]) -> Result<Tensor> {
    let refs: Vec<&Tensor> = inputs.iter().collect();
    kind.forward(&refs).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let x = Tensor::row(vec![0.0, 0.0]).unwrap();
        let y = apply_primitive(&Primitive::Softmax, &[x]).unwrap();
        assert_eq!(y.data(), &[0.5, 0.5]);
    }

    #[test]
    fn tanh_of_zero_is_zero() {
        let x = Tensor::zeros(vec![2, 3]);
        let y = apply_primitive(&Primitive::Tanh, &[x.clone()]).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(matches!("conv9".parse::<PrimitiveKind>(), Err(Error::UnknownPrimitive(_))));
        for k in PrimitiveKind::ALL {
            assert_eq!(k.name().parse::<PrimitiveKind>().unwrap(), k);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = Tensor::zeros(vec![2, 3]);
        let b = Tensor::zeros(vec![2, 3]);
        let err = apply_primitive(&Primitive::MatMul, &[a, b]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { op: "matmul", .. }));
    }

    #[test]
    fn log_of_zero_is_a_hard_error() {
        let x = Tensor::row(vec![1.0, 0.0]).unwrap();
        let err = apply_primitive(&Primitive::Log, &[x]).unwrap_err();
        assert!(matches!(err, Error::NonFinite("log")));
    }

    #[test]
    fn row_broadcast_add() {
        let a = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::row(vec![10.0, 20.0]).unwrap();
        let y = apply_primitive(&Primitive::Add, &[a, b]).unwrap();
        assert_eq!(y.data(), &[11.0, 22.0, 13.0, 24.0]);
    }

    #[test]
    fn concat_along_both_axes() {
        let a = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        let b = Tensor::matrix(1, 2, vec![3.0, 4.0]).unwrap();
        let rows = apply_primitive(&Primitive::Concat { axis: 0 }, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(rows.shape(), &[2, 2]);
        let cols = apply_primitive(&Primitive::Concat { axis: 1 }, &[a, b]).unwrap();
        assert_eq!(cols.shape(), &[1, 4]);
        assert_eq!(cols.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn gather_pads_with_zero_rows() {
        let t = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = apply_primitive(&Primitive::Gather { rows: vec![None, Some(1), Some(0)] }, &[t])
            .unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn cross_entropy_rejects_bad_targets() {
        let logits = Tensor::zeros(vec![1, 4]);
        let err = apply_primitive(&Primitive::CrossEntropy { targets: vec![4] }, &[logits.clone()])
            .unwrap_err();
        assert!(matches!(err, Error::TargetOutOfRange { target: 4, classes: 4 }));
        let err =
            apply_primitive(&Primitive::CrossEntropy { targets: vec![] }, &[logits]).unwrap_err();
        assert!(matches!(err, Error::Empty(_)));
    }
}
