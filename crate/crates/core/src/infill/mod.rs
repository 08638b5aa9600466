//! Infilling and scoring backends.
//!
//! [`Infiller`] fills a single placeholder with candidate spans; [`Scorer`]
//! returns a sequence's negative log-likelihood. The native backend is the
//! n-gram model in [`ngram`]; remote backends live in the `maskfill` crate and
//! honor the same contracts.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::Error;
use crate::fragmenter::{single_placeholder, DEFAULT_MASK_TOKEN};

pub mod ngram;
pub mod sampling;

pub use ngram::{ngram_generate_fill, train_ngram, NgramModel};

pub const DEFAULT_TOP_K: usize = 100;
pub const DEFAULT_TOP_P: f64 = 0.7;
pub const DEFAULT_BEAM_SIZE: usize = 5;
pub const DEFAULT_MAX_FILL_LEN: usize = 10;
pub const DEFAULT_NUM_CANDIDATES: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct InfillRequest {
    pub tokens_with_mask: Vec<String>,
    pub mask_token: String,
    pub num_candidates: usize,
    pub max_fill_len: usize,
    pub top_k: usize,
    pub top_p: f64,
    /// Passed through to remote backends; the native backend only samples.
    pub beam_size: usize,
}

impl InfillRequest {
    pub fn new(tokens_with_mask: Vec<String>) -> Self {
        InfillRequest {
            tokens_with_mask,
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            num_candidates: DEFAULT_NUM_CANDIDATES,
            max_fill_len: DEFAULT_MAX_FILL_LEN,
            top_k: DEFAULT_TOP_K,
            top_p: DEFAULT_TOP_P,
            beam_size: DEFAULT_BEAM_SIZE,
        }
    }

    /// Checks the request and returns the placeholder position.
    pub fn validate(&self) -> Result<usize, Error> {
        let invalid = |msg: String| Err(Error::InvalidRequest(msg));
        if self.num_candidates == 0 {
            return invalid("num_candidates must be >= 1".into());
        }
        if self.max_fill_len == 0 {
            return invalid("max_fill_len must be >= 1".into());
        }
        if self.top_k == 0 {
            return invalid("top_k must be >= 1".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return invalid(format!("top_p must lie in (0, 1], got {}", self.top_p));
        }
        match single_placeholder(&self.tokens_with_mask, &self.mask_token) {
            Some(at) => Ok(at),
            None => invalid(format!("expected exactly one `{}` token", self.mask_token)),
        }
    }

    /// Tokens left and right of the placeholder.
    pub fn contexts(&self) -> Result<(&[String], &[String]), Error> {
        let at = self.validate()?;
        Ok((&self.tokens_with_mask[..at], &self.tokens_with_mask[at + 1..]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfillCandidate {
    pub tokens: Vec<String>,
    /// Log-probability, `<= 0`; higher is better.
    pub score: f64,
}

/// Checks a backend's answer against the request: 1..=k candidates, each
/// 1..=max_fill_len tokens without the placeholder, scores `<= 0` and sorted
/// descending.
pub fn check_candidates(req: &InfillRequest, cands: &[InfillCandidate]) -> Result<(), String> {
    if cands.is_empty() || cands.len() > req.num_candidates {
        return Err(format!(
            "expected 1..={} candidates, got {}",
            req.num_candidates,
            cands.len()
        ));
    }
    for (i, c) in cands.iter().enumerate() {
        if c.tokens.is_empty() || c.tokens.len() > req.max_fill_len {
            return Err(format!("candidate {i} has {} tokens", c.tokens.len()));
        }
        if c.tokens.contains(&req.mask_token) {
            return Err(format!("candidate {i} contains the mask token"));
        }
        if c.tokens.iter().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(format!("candidate {i} contains an empty or whitespace token"));
        }
        if c.score.is_nan() || c.score > 0.0 {
            return Err(format!("candidate {i} has score {}", c.score));
        }
    }
    if cands.windows(2).any(|w| w[0].score < w[1].score) {
        return Err("candidates not sorted by score".into());
    }
    Ok(())
}

pub trait Infiller: Send + Sync {
    /// Identifier recorded in augmentation provenance.
    fn backend_id(&self) -> String;

    /// Between 1 and `req.num_candidates` fills, best first. Deterministic for
    /// a given backend state, request and rng state.
    fn infill(&self, req: &InfillRequest, rng: &mut dyn RngCore)
        -> Result<Vec<InfillCandidate>, Error>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// Total negative log-likelihood in nats.
    pub neg_log_likelihood: f64,
}

pub trait Scorer: Send + Sync {
    fn scorer_id(&self) -> String;

    /// Negative log-likelihood of the whole sequence; zero for an empty one.
    fn score(&self, tokens: &[String]) -> Result<Score, Error>;
}

impl<T: Infiller + ?Sized> Infiller for &T {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }

    fn infill(
        &self,
        req: &InfillRequest,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<InfillCandidate>, Error> {
        (**self).infill(req, rng)
    }
}

impl<T: Scorer + ?Sized> Scorer for &T {
    fn scorer_id(&self) -> String {
        (**self).scorer_id()
    }

    fn score(&self, tokens: &[String]) -> Result<Score, Error> {
        (**self).score(tokens)
    }
}

/// Returns the same fill for every request. Useful as a test double.
#[derive(Debug, Clone)]
pub struct FixedInfiller {
    pub fill: Vec<String>,
    pub score: f64,
}

impl Infiller for FixedInfiller {
    fn backend_id(&self) -> String {
        "fixed".into()
    }

    fn infill(
        &self,
        req: &InfillRequest,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<InfillCandidate>, Error> {
        req.validate()?;
        Ok(alloc::vec![InfillCandidate { tokens: self.fill.clone(), score: self.score }])
    }
}
