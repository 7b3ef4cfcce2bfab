use super::params::{Gradients, ParamSet};
use crate::error::{Error, Result};

/// Default global-norm clipping threshold.
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

/// One plain SGD update with global-norm clipping. Every parameter needs an
/// explicit gradient entry. Returns the pre-clip gradient norm.
pub fn sgd_step(params: &mut ParamSet, grads: &Gradients, lr: f64, clip_norm: f64) -> Result<f64> {
    sgd_step_many(&mut [params], std::slice::from_ref(grads), lr, clip_norm)
}

/// SGD over several parameter sets, clipped by their joint gradient norm.
pub fn sgd_step_many(sets: &mut [&mut ParamSet], grads: &[Gradients], lr: f64, clip_norm: f64) -> Result<f64> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if !(clip_norm > 0.0) {
        return Err(Error::InvalidArgument(format!("clip norm must be positive, got {clip_norm}")));
    }
    if sets.len() != grads.len() {
        return Err(Error::InvalidArgument(format!(
            "{} parameter sets but {} gradient sets",
            sets.len(),
            grads.len()
        )));
    }
    for (params, grads) in sets.iter().zip(grads) {
        for name in params.names() {
            let g = grads.get(name).ok_or_else(|| Error::MissingGradient(name.to_string()))?;
            if g.shape() != params.get(name)?.shape() {
                return Err(Error::ShapeMismatch {
                    op: "sgd_step",
                    detail: format!("gradient for `{name}` has shape {:?}", g.shape()),
                });
            }
        }
    }
    let norm = grads.iter().map(|g| g.global_norm().powi(2)).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("sgd_step"));
    }
    let factor = if norm > clip_norm { clip_norm / norm } else { 1.0 };
    let step = lr * factor;
    for (params, grads) in sets.iter_mut().zip(grads) {
        let names: Vec<String> = params.names().map(str::to_string).collect();
        for name in &names {
            let g = grads.get(name).expect("checked above");
            if g.data().iter().all(|&v| v == 0.0) {
                continue;
            }
            let p = params.get_mut(name).expect("names come from params");
            for (w, &gv) in p.data_mut().iter_mut().zip(g.data()) {
                *w -= step * gv;
            }
        }
    }
    Ok(norm)
}

/// Multiplies every parameter by `factor`; the decay half of an L2-penalized step.
pub fn shrink_weights(sets: &mut [&mut ParamSet], factor: f64) {
    for params in sets.iter_mut() {
        let names: Vec<String> = params.names().map(str::to_string).collect();
        for name in &names {
            let p = params.get_mut(name).expect("names come from params");
            p.data_mut().iter_mut().for_each(|w| *w *= factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn one(v: f64) -> (ParamSet, Gradients) {
        let mut p = ParamSet::new();
        p.insert("p", Tensor::row(vec![1.0]).unwrap()).unwrap();
        let mut g = Gradients::new();
        g.insert("p", Tensor::row(vec![v]).unwrap());
        (p, g)
    }

    #[test]
    fn shrink_scales_every_weight() {
        let (mut p, _) = one(0.0);
        shrink_weights(&mut [&mut p], 0.9);
        assert_eq!(p.get("p").unwrap().data(), &[0.9]);
    }

    #[test]
    fn plain_step() {
        let (mut p, g) = one(2.0);
        sgd_step(&mut p, &g, 0.1, 100.0).unwrap();
        assert!((p.get("p").unwrap().data()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_bits_alone() {
        let (mut p, g) = one(0.0);
        let before = p.to_bytes();
        sgd_step(&mut p, &g, 0.1, 5.0).unwrap();
        assert_eq!(p.to_bytes(), before);
    }

    #[test]
    fn clipping_halves_a_norm_ten_gradient() {
        let mut p = ParamSet::new();
        p.insert("a", Tensor::row(vec![0.0, 0.0]).unwrap()).unwrap();
        let mut g = Gradients::new();
        g.insert("a", Tensor::row(vec![6.0, 8.0]).unwrap());
        let norm = sgd_step(&mut p, &g, 1.0, 5.0).unwrap();
        assert_eq!(norm, 10.0);
        assert_eq!(p.get("a").unwrap().data(), &[-3.0, -4.0]);
    }

    #[test]
    fn missing_gradient_is_an_error() {
        let (mut p, _) = one(1.0);
        let empty = Gradients::new();
        assert!(matches!(sgd_step(&mut p, &empty, 0.1, 5.0), Err(Error::MissingGradient(_))));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let (mut p, g) = one(1.0);
        assert!(sgd_step(&mut p, &g, 0.0, 5.0).is_err());
        assert!(sgd_step(&mut p, &g, 0.1, -1.0).is_err());
    }
}
