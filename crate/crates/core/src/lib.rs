pub mod arith;
pub mod augment;
pub mod chardata;
pub mod constructions;
pub mod error;
pub mod ffield;
pub mod help;
pub mod invariants;
pub mod matrix;
pub mod oracle;
pub mod patterns;

pub use error::{Error, Result};
