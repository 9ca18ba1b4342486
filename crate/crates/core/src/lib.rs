//! Learning post-processing unitaries for the quantum period-finding
//! algorithm by gradient descent, together with the analyses used to
//! compare the learned operators against the inverse quantum Fourier
//! transform.

pub mod analysis;
pub mod circuit;
pub mod classifier;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod training;

pub use error::{Error, Result};
