use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ops::{Primitive, PrimitiveKind};
use super::params::ParamSet;
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Outcome of comparing reverse-mode gradients against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index where the largest error occurred.
    pub worst: Option<(String, usize)>,
    pub components: usize,
}

/// `|a - n| / max(1, |a|, |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

fn eval<F>(f: &F, params: &ParamSet) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    tape.value(out)?.item()
}

/// Checks every scalar of every parameter in `params`.
pub fn grad_check<F>(f: F, params: &ParamSet, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
{
    grad_check_with(f, params, eps, |_, _| true)
}

/// Like [`grad_check`], restricted to the components selected by `keep(name, index)`.
pub fn grad_check_with<F, K>(f: F, params: &ParamSet, eps: f64, keep: K) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamSet) -> Result<Var>,
    K: Fn(&str, usize) -> bool,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    let first = tape.value(out)?.item()?;
    let analytic = tape.backward(out, params)?;
    drop(tape);

    let second = eval(&f, params)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministic { first, second });
    }

    let mut work = params.clone();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        components: 0,
    };
    for name in &names {
        let n = params.get(name)?.numel();
        let grad = analytic.get(name).ok_or_else(|| Error::MissingGradient(name.clone()))?;
        for k in 0..n {
            if !keep(name, k) {
                continue;
            }
            let orig = params.get(name)?.data()[k];
            set_component(&mut work, name, k, orig + eps);
            let plus = eval(&f, &work)?;
            set_component(&mut work, name, k, orig - eps);
            let minus = eval(&f, &work)?;
            set_component(&mut work, name, k, orig);
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(grad.data()[k], numeric);
            report.components += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err.max(report.max_rel_error);
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}

fn set_component(set: &mut ParamSet, name: &str, k: usize, value: f64) {
    if let Some(t) = set.get_mut(name) {
        t.data_mut()[k] = value;
    }
}

/// Builds a small random scalar function around one primitive and checks
/// it. The primitive's output is contracted with a random constant so the
/// upstream gradient is not uniform.
pub fn check_primitive(kind: PrimitiveKind, seed: u64, eps: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let mut add = |name: &str, shape: Vec<usize>, lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        params.insert(name, Tensor::new(shape, data).expect("finite"))
    };
    let out_shape: Vec<usize> = match kind {
        PrimitiveKind::MatMul => {
            add("a", vec![2, 3], -1.0, 1.0, &mut rng)?;
            add("b", vec![3, 2], -1.0, 1.0, &mut rng)?;
            vec![2, 2]
        }
        PrimitiveKind::Add | PrimitiveKind::Sub | PrimitiveKind::Mul => {
            add("a", vec![2, 3], -1.0, 1.0, &mut rng)?;
            add("b", vec![2, 3], -1.0, 1.0, &mut rng)?;
            add("row", vec![1, 3], -1.0, 1.0, &mut rng)?;
            vec![2, 3]
        }
        PrimitiveKind::Log => {
            add("a", vec![2, 3], 0.5, 2.0, &mut rng)?;
            vec![2, 3]
        }
        PrimitiveKind::Tanh | PrimitiveKind::Sigmoid | PrimitiveKind::Softmax | PrimitiveKind::Scale => {
            add("a", vec![2, 3], -2.0, 2.0, &mut rng)?;
            vec![2, 3]
        }
        PrimitiveKind::Mean | PrimitiveKind::CrossEntropy => {
            add("a", vec![3, 5], -2.0, 2.0, &mut rng)?;
            vec![]
        }
        PrimitiveKind::Concat => {
            add("a", vec![2, 3], -1.0, 1.0, &mut rng)?;
            add("b", vec![2, 2], -1.0, 1.0, &mut rng)?;
            add("c", vec![1, 5], -1.0, 1.0, &mut rng)?;
            vec![3, 5]
        }
        PrimitiveKind::Embedding | PrimitiveKind::Gather => {
            add("a", vec![5, 3], -1.0, 1.0, &mut rng)?;
            vec![3, 3]
        }
        PrimitiveKind::Transpose => {
            add("a", vec![2, 3], -1.0, 1.0, &mut rng)?;
            vec![3, 2]
        }
        PrimitiveKind::MaxRows => {
            add("a", vec![3, 4], -1.0, 1.0, &mut rng)?;
            vec![1, 4]
        }
    };
    let weights = if out_shape.is_empty() {
        Tensor::scalar(rng.gen_range(0.5..1.5))
    } else {
        Tensor::uniform(out_shape, 1.0, &mut rng)
    };
    let targets: Vec<usize> = (0..3).map(|_| rng.gen_range(0..5)).collect();
    let ids: Vec<usize> = (0..3).map(|_| rng.gen_range(0..5)).collect();
    let scale = rng.gen_range(-2.0..2.0);

    let f = move |tape: &mut Tape, p: &ParamSet| -> Result<Var> {
        let a = tape.param(p, "a")?;
        let out = match kind {
            PrimitiveKind::MatMul => {
                let b = tape.param(p, "b")?;
                tape.matmul(a, b)?
            }
            PrimitiveKind::Add | PrimitiveKind::Sub | PrimitiveKind::Mul => {
                let b = tape.param(p, "b")?;
                let row = tape.param(p, "row")?;
                let prim = match kind {
                    PrimitiveKind::Add => Primitive::Add,
                    PrimitiveKind::Sub => Primitive::Sub,
                    _ => Primitive::Mul,
                };
                let full = tape.apply(prim.clone(), &[a, b])?;
                tape.apply(prim, &[full, row])?
            }
            PrimitiveKind::Tanh => tape.tanh(a)?,
            PrimitiveKind::Sigmoid => tape.sigmoid(a)?,
            PrimitiveKind::Softmax => tape.softmax(a)?,
            PrimitiveKind::Log => tape.log(a)?,
            PrimitiveKind::Scale => tape.scale(a, scale)?,
            PrimitiveKind::Mean => tape.mean(a)?,
            PrimitiveKind::CrossEntropy => tape.cross_entropy(a, &targets)?,
            PrimitiveKind::Concat => {
                let b = tape.param(p, "b")?;
                let c = tape.param(p, "c")?;
                let ab = tape.concat(&[a, b], 1)?;
                tape.concat(&[ab, c], 0)?
            }
            PrimitiveKind::Embedding => tape.embedding(a, &ids)?,
            PrimitiveKind::Gather => tape.gather(a, vec![None, Some(ids[0]), Some(ids[1])])?,
            PrimitiveKind::Transpose => tape.transpose(a)?,
            PrimitiveKind::MaxRows => tape.max_rows(a)?,
        };
        let w = tape.constant(weights.clone());
        let weighted = tape.mul(out, w)?;
        tape.mean(weighted)
    };
    grad_check(f, &params, eps)
}
