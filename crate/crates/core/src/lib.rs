pub mod circuit;
pub mod error;
pub mod experiments;
pub mod field;
pub mod mpc;
pub mod protocol;
pub mod sharing;
pub mod simnet;
pub mod stats;

pub use error::{Error, Result};
pub use field::{Fe, Polynomial, PrimeField};
pub use sharing::{Share, SharedValue};
