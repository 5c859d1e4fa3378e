//! Paired significance testing for NLP evaluation measures.

pub mod cli;
pub mod error;
pub mod io;
pub mod measures;
pub mod normality;
pub mod numerics;
pub mod rng;
pub mod recommend;
pub mod significance;
pub mod validity;

pub use error::{Error, Result};
