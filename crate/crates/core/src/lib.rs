//! Measuring dehumanizing language toward social groups in a diachronic
//! news corpus.

pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod lexicons;
pub mod measures;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synthetic;
pub mod syntax;

pub use error::{Error, Result};
