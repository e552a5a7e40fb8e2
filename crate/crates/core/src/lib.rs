//! Algorithms for chunked summarization of long legal documents and for
//! measuring and repairing the factual consistency of the resulting summaries.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the outside world (files, HTTP backends, clocks) is expressed as a trait
//! here and implemented by the `veridict` companion crate:
//!
//! * [`orchestrator::Generator`] for LLM completion backends,
//! * [`embedding::Embedder`] for text embeddings,
//! * [`metrics::Nli`] for premise/hypothesis entailment,
//! * [`recognizers::Recognizer`] for named-entity recognition,
//! * [`orchestrator::Pause`] for retry backoff.
//!
//! Deterministic in-crate implementations of each trait exist so that every
//! pipeline property can be checked hermetically.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod chunker;
pub mod corpus;
pub mod corrector;
pub mod embedding;
pub mod error;
pub mod evalreport;
pub mod extractive;
pub mod metrics;
pub mod orchestrator;
pub mod recognizers;
pub mod stem;
pub mod textproc;

pub use error::{BackendError, Error, Result};
