//! Mask-then-fill data augmentation for span-annotated event-extraction corpora.
//!
//! The crate is `no_std` (it only needs `alloc`). It covers the data model and
//! validation, adjunct-fragment masking, the infilling and scoring backend
//! traits with a native n-gram implementation, annotation remapping, baseline
//! augmenters, the affinity and distinct-n metrics, and deterministic
//! subsampling. File formats, HTTP backends and the command line live in the
//! `maskfill` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod corpus;
pub mod error;
pub mod fragmenter;
pub mod harness;
pub mod infill;
pub mod metrics;
pub mod rng;

pub use corpus::{AnnotatedSample, Argument, Corpus, EventMention, Span, Violation};
pub use error::Error;
