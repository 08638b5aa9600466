use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{Span, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("sample `{id}` is invalid: {}", Joined(violations))]
    InvalidSample { id: String, violations: Vec<Violation> },

    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),

    #[error("no adjunct fragment with length in [{min}, {max}]")]
    NoEligibleFragment { min: usize, max: usize },

    #[error("sample already contains the mask token `{0}`")]
    PlaceholderInInput(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("backend could not produce a legal fill")]
    NoCandidate,

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("span {span} intersects the masked range {mask}")]
    SpanIntersectsMask { span: Span, mask: Span },

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("token `{0}` is reserved by the n-gram model")]
    ReservedToken(String),

    #[error("no {0}-grams in input")]
    EmptyInput(usize),

    #[error("augmented sample `{aug_id}` refers to unknown source `{source_id}`")]
    OrphanedSample { aug_id: String, source_id: String },

    #[error("split `{name}` asks for {size} samples but the corpus has {available}")]
    SizeExceedsCorpus {
        name: String,
        size: usize,
        available: usize,
    },
}

struct Joined<'a>(&'a [Violation]);

impl fmt::Display for Joined<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
