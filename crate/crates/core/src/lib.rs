//! Simulator for a cheat-sensitive quantum data system and the
//! privacy-preserving perceptron built on top of it.

pub mod baselines;
pub mod bits;
pub mod data;
pub mod error;
pub mod harness;
pub mod noise;
pub mod perceptron;
pub mod privacy;
pub mod protocol;
pub mod qstate;

pub use bits::BitString;
pub use error::{Error, Result};
