//! Interpretable-by-design models for tabular data, with explanations,
//! complexity measures, and fairness / privacy / causal audits, plus
//! Rashomon-set exploration over a finite hypothesis space.

pub mod causal;
pub mod data;
pub mod explain;
pub mod fairness;
pub mod models;
pub mod privacy;
pub mod rashomon;
mod error;
pub(crate) mod rng;

pub use error::{Error, Result};
