// `!(x > 0.0)` is how NaN is rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bethe;
pub mod cli;
pub mod classical;
pub mod correlators;
pub mod error;
pub mod hamiltonians;
pub mod qes;
pub mod schrodinger_fd;
pub mod tridiag;

pub use error::{Error, Result};
