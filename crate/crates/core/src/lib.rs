//! Reference-network extraction and analysis over a historical text corpus.

pub mod config;
pub mod corpus;
pub mod dataset;
mod error;
pub mod export;
pub mod fixture;
pub mod graph;
pub mod matcher;
pub mod pipeline;
pub mod topics;

pub use error::{Error, Result};
