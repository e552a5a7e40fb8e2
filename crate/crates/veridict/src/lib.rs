//! IO, formats, HTTP backends and the command-line front end over
//! [`veridict_core`].

pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod error;
pub mod http;
pub mod manifest;
pub mod report;

pub use error::{Error, Result};
pub use veridict_core as core;
