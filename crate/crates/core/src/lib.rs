#![no_std]

extern crate alloc;

pub mod adapter;
pub mod config;
pub mod datagen;
pub mod embedding;
pub mod error;
pub mod eval;
#[cfg(test)]
mod fixtures;
pub mod matching;
pub mod model;
pub mod postprocess;
pub mod prompt;
pub mod segment;
pub mod sentiment;
pub mod taxonomy_builder;

pub use error::{Error, Result};
