pub mod berezin;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod fock;
pub mod linalg;
pub mod modeltheory;
pub mod ncalg;
pub mod operator;
pub mod polydomain;
pub mod rkhs;
pub mod variety;

pub use error::{Error, Result};
