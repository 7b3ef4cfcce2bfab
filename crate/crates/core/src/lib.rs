pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod mt;
pub mod seq2seq;
pub mod style;

pub use error::{Error, Result};
