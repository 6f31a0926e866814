pub mod algebra;
pub mod cli;
pub mod error;
pub mod func;
pub mod handeye;
pub mod pose;
pub mod posegraph;
pub mod random;
pub mod selftest;
pub mod solver;
pub mod tolerance;

pub use error::{Error, Result};
