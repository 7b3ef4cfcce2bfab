//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every primitive application as it is evaluated;
//! [`Tape::backward`] walks it once in reverse. All values are checked for
//! NaN/Inf at every primitive boundary.

mod gradcheck;
mod ops;
mod optim;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{check_primitive, grad_check, grad_check_with, relative_error, GradCheckReport};
pub use ops::{apply_primitive, Primitive, PrimitiveKind};
pub use optim::{sgd_step, sgd_step_many, shrink_weights, DEFAULT_CLIP_NORM};
pub use params::{Gradients, ParamSet};
pub(crate) use params::read_u32;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

pub(crate) use ops::{dot, sigmoid};

/// Scale of the `uniform(-s, s)` parameter initialisation.
pub const INIT_SCALE: f64 = 0.08;
