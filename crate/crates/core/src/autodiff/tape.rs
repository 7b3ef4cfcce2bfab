use std::sync::atomic::{AtomicU64, Ordering};

use super::ops::{Primitive, Saved};
use super::params::{Gradients, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    tape: u64,
    idx: usize,
}

enum Origin {
    Constant,
    Param { set: u64, name: String },
    Op(Primitive),
}

struct Node {
    value: Tensor,
    origin: Origin,
    inputs: Vec<usize>,
    requires_grad: bool,
    saved: Saved,
}

/// Wengert list of primitive applications. Nodes are appended in evaluation
/// order, so the list is topologically sorted by construction.
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, node: Node) -> Var {
        self.nodes.push(node);
        Var {
            tape: self.id,
            idx: self.nodes.len() - 1,
        }
    }

    fn index(&self, v: Var) -> Result<usize> {
        if v.tape != self.id || v.idx >= self.nodes.len() {
            return Err(Error::ForeignVar);
        }
        Ok(v.idx)
    }

    /// Records a leaf. It takes part in differentiation only if the tensor
    /// itself has `requires_grad` set, and then only as an anonymous input.
    pub fn constant(&mut self, value: Tensor) -> Var {
        let requires_grad = value.requires_grad();
        self.push(Node {
            value,
            origin: Origin::Constant,
            inputs: Vec::new(),
            requires_grad,
            saved: Saved::Nothing,
        })
    }

    /// Records a trainable parameter of `set`.
    pub fn param(&mut self, set: &ParamSet, name: &str) -> Result<Var> {
        let value = set.get(name)?.clone();
        Ok(self.push(Node {
            value,
            origin: Origin::Param {
                set: set.id(),
                name: name.to_string(),
            },
            inputs: Vec::new(),
            requires_grad: true,
            saved: Saved::Nothing,
        }))
    }

    /// Records a parameter of `set` as a constant; no gradient reaches it.
    pub fn frozen(&mut self, set: &ParamSet, name: &str) -> Result<Var> {
        let value = set.get(name)?.clone().with_requires_grad(false);
        Ok(self.constant(value))
    }

    pub fn value(&self, v: Var) -> Result<&Tensor> {
        let i = self.index(v)?;
        Ok(&self.nodes[i].value)
    }

    pub fn apply(&mut self, kind: Primitive, inputs: &[Var]) -> Result<Var> {
        let idx = inputs
            .iter()
            .map(|&v| self.index(v))
            .collect::<Result<Vec<_>>>()?;
        let (value, saved) = {
            let refs: Vec<&Tensor> = idx.iter().map(|&i| &self.nodes[i].value).collect();
            kind.forward(&refs)?
        };
        let requires_grad = idx.iter().any(|&i| self.nodes[i].requires_grad);
        Ok(self.push(Node {
            value,
            origin: Origin::Op(kind),
            inputs: idx,
            requires_grad,
            saved,
        }))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(Primitive::Mul, &[a, b])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Tanh, &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Sigmoid, &[a])
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Softmax, &[a])
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Log, &[a])
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Mean, &[a])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.apply(Primitive::Scale(c), &[a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        self.apply(Primitive::Concat { axis }, parts)
    }

    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        self.apply(Primitive::Embedding { ids: ids.to_vec() }, &[table])
    }

    pub fn gather(&mut self, table: Var, rows: Vec<Option<usize>>) -> Result<Var> {
        self.apply(Primitive::Gather { rows }, &[table])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::Transpose, &[a])
    }

    pub fn max_rows(&mut self, a: Var) -> Result<Var> {
        self.apply(Primitive::MaxRows, &[a])
    }

    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        self.apply(
            Primitive::CrossEntropy {
                targets: targets.to_vec(),
            },
            &[logits],
        )
    }

    /// Gradients of the scalar `loss` with respect to every parameter of
    /// `params`. Parameters that did not take part get explicit zeros.
    pub fn backward(&self, loss: Var, params: &ParamSet) -> Result<Gradients> {
        let mut all = self.backward_many(loss, &[params])?;
        Ok(all.pop().expect("one set in, one out"))
    }

    /// Like [`Tape::backward`] for several parameter sets at once.
    pub fn backward_many(&self, loss: Var, sets: &[&ParamSet]) -> Result<Vec<Gradients>> {
        let root = self.index(loss)?;
        let loss_value = &self.nodes[root].value;
        if !loss_value.is_scalar() {
            return Err(Error::NotScalar(loss_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(root + 1);
        grads.resize_with(root + 1, || None);
        grads[root] = Some(vec![1.0]);

        for i in (0..=root).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Origin::Op(kind) = &node.origin else {
                continue;
            };
            let Some(g) = grads[i].take() else {
                continue;
            };
            let inputs: Vec<&Tensor> = node.inputs.iter().map(|&j| &self.nodes[j].value).collect();
            for (which, &j) in node.inputs.iter().enumerate() {
                if !self.nodes[j].requires_grad {
                    continue;
                }
                let mut acc = grads[j]
                    .take()
                    .unwrap_or_else(|| vec![0.0; self.nodes[j].value.numel()]);
                kind.accumulate_grad(which, &g, &inputs, &node.value, &node.saved, &mut acc);
                grads[j] = Some(acc);
            }
            // Keep the seed so a scalar parameter used directly as the loss
            // still reports its gradient.
            if i == root {
                grads[i] = Some(g);
            }
        }

        let mut outs: Vec<Gradients> = sets.iter().map(|_| Gradients::new()).collect();
        for (i, node) in self.nodes[..=root].iter().enumerate() {
            let Origin::Param { set, name } = &node.origin else {
                continue;
            };
            let Some(k) = sets.iter().position(|p| p.id() == *set) else {
                continue;
            };
            let Some(g) = grads[i].take() else {
                continue;
            };
            let out = &mut outs[k];
            let merged = match out.get(name) {
                Some(prev) => prev.data().iter().zip(&g).map(|(a, b)| a + b).collect(),
                None => g,
            };
            out.insert(name.clone(), Tensor::from_parts(node.value.shape().to_vec(), merged));
        }
        for (out, params) in outs.iter_mut().zip(sets) {
            for (name, t) in params.iter() {
                if out.get(name).is_none() {
                    out.insert(name, Tensor::zeros(t.shape().to_vec()));
                }
            }
            for (_, g) in out.iter() {
                if !g.is_finite() {
                    return Err(Error::NonFinite("backward"));
                }
            }
        }
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::row(vec![v]).unwrap()).unwrap();
        p
    }

    #[test]
    fn square_has_gradient_two_x() {
        let p = scalar_param(3.0);
        let mut tape = Tape::new();
        let x = tape.param(&p, "x").unwrap();
        let y = tape.mul(x, x).unwrap();
        let loss = tape.mean(y).unwrap();
        let g = tape.backward(loss, &p).unwrap();
        assert_eq!(g.get("x").unwrap().data(), &[6.0]);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let mut p = scalar_param(3.0);
        p.insert("unused", Tensor::zeros(vec![2, 2])).unwrap();
        let mut tape = Tape::new();
        let _x = tape.param(&p, "x").unwrap();
        let c = tape.constant(Tensor::row(vec![5.0]).unwrap());
        let loss = tape.mean(c).unwrap();
        let g = tape.backward(loss, &p).unwrap();
        assert_eq!(g.get("x").unwrap().data(), &[0.0]);
        assert_eq!(g.get("unused").unwrap().data(), &[0.0; 4]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let p = scalar_param(1.0);
        let mut tape = Tape::new();
        let c = tape.constant(Tensor::zeros(vec![2, 2]));
        assert!(matches!(tape.backward(c, &p), Err(Error::NotScalar(_))));
    }

    #[test]
    fn foreign_variables_are_rejected() {
        let p = scalar_param(1.0);
        let mut a = Tape::new();
        let b = Tape::new();
        let x = a.param(&p, "x").unwrap();
        let loss = a.mean(x).unwrap();
        assert!(matches!(b.backward(loss, &p), Err(Error::ForeignVar)));
    }

    #[test]
    fn replay_is_bitwise_identical() {
        let run = || {
            let mut tape = Tape::new();
            let a = tape.constant(Tensor::matrix(2, 2, vec![0.3, -1.2, 2.5, 0.7]).unwrap());
            let b = tape.softmax(a).unwrap();
            let c = tape.tanh(b).unwrap();
            let d = tape.matmul(c, a).unwrap();
            tape.value(d).unwrap().clone()
        };
        let (x, y) = (run(), run());
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&x), bits(&y));
    }
}
