//! Permutation-interleaved neural belief propagation for BCH codes.

pub mod automorphism;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod hessian;
pub mod reference;
pub mod train;

pub use code::{build_bch_code, build_bch_code_circulant, CodeSpec, Gf2Matrix, TannerGraph};
pub use error::{Error, Result};
