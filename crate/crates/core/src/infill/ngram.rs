//! Add-k smoothed n-gram language model used as the offline infiller and scorer.
//!
//! Sentences are padded with `order - 1` [`BOS`] tokens and one [`EOS`] token.
//! The prediction space is the training vocabulary plus [`EOS`] and [`UNK`];
//! unseen tokens are mapped to [`UNK`] both in contexts and as targets, so
//! every next-token distribution sums to one.
//!
//! Filling conditions on the left context only. Generation stops when the
//! first right-context token (or [`EOS`] at sentence end) is drawn after at
//! least one fill token, or when `max_len` tokens have been produced. The
//! candidate's score includes the log-probability of that right-context token
//! after the fill.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::sampling::{sample, truncate};
use super::{InfillCandidate, InfillRequest, Infiller, Score, Scorer};
use crate::error::Error;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_SMOOTHING: f64 = 0.01;

/// Sampling attempts per requested candidate before giving up on distinct fills.
const ATTEMPTS_PER_CANDIDATE: usize = 10;

fn is_reserved(tok: &str) -> bool {
    tok == BOS || tok == EOS || tok == UNK
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    order: usize,
    smoothing: f64,
    counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
    totals: BTreeMap<Vec<String>, u64>,
    vocabulary: BTreeSet<String>,
}

/// Counts every `order`-gram of the padded sentences. Empty sentences are ignored.
pub fn train_ngram(
    plain_sentences: &[Vec<String>],
    order: usize,
    smoothing: f64,
) -> Result<NgramModel, Error> {
    check_params(order, smoothing)?;
    let mut model = NgramModel {
        order,
        smoothing,
        counts: BTreeMap::new(),
        totals: BTreeMap::new(),
        vocabulary: BTreeSet::new(),
    };
    let mut any = false;
    for sentence in plain_sentences.iter().filter(|s| !s.is_empty()) {
        any = true;
        if let Some(t) = sentence.iter().find(|t| is_reserved(t)) {
            return Err(Error::ReservedToken(t.clone()));
        }
        model.vocabulary.extend(sentence.iter().cloned());
        let mut padded: Vec<&str> = Vec::with_capacity(sentence.len() + order);
        padded.extend(core::iter::repeat_n(BOS, order - 1));
        padded.extend(sentence.iter().map(String::as_str));
        padded.push(EOS);
        for window in padded.windows(order) {
            let ctx: Vec<String> = window[..order - 1].iter().map(|t| t.to_string()).collect();
            model.add(ctx, window[order - 1].to_string(), 1);
        }
    }
    if !any {
        return Err(Error::EmptyCorpus);
    }
    Ok(model)
}

fn check_params(order: usize, smoothing: f64) -> Result<(), Error> {
    if order < 2 {
        return Err(Error::InvalidRequest(format!("n-gram order must be >= 2, got {order}")));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidRequest(format!("smoothing must be >= 0, got {smoothing}")));
    }
    Ok(())
}

impl NgramModel {
    /// Rebuilds a model from `(context, next, count)` triples, as produced by
    /// [`NgramModel::counts`].
    pub fn from_counts<I>(order: usize, smoothing: f64, counts: I) -> Result<Self, Error>
    where
        I: IntoIterator<Item = (Vec<String>, String, u64)>,
    {
        check_params(order, smoothing)?;
        let mut model = NgramModel {
            order,
            smoothing,
            counts: BTreeMap::new(),
            totals: BTreeMap::new(),
            vocabulary: BTreeSet::new(),
        };
        for (ctx, next, count) in counts {
            let bad = |msg: String| Err(Error::InvalidRequest(msg));
            if ctx.len() != order - 1 {
                return bad(format!("context {ctx:?} does not have length {}", order - 1));
            }
            if count == 0 {
                return bad(format!("zero count for {ctx:?} -> {next}"));
            }
            if next == BOS || next == UNK || ctx.iter().any(|t| t == EOS || t == UNK) {
                return bad(format!("misplaced boundary token in {ctx:?} -> {next}"));
            }
            if next != EOS {
                model.vocabulary.insert(next.clone());
            }
            model.add(ctx, next, count);
        }
        if model.counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(model)
    }

    fn add(&mut self, ctx: Vec<String>, next: String, n: u64) {
        *self.totals.entry(ctx.clone()).or_default() += n;
        *self.counts.entry(ctx).or_default().entry(next).or_default() += n;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    /// All `(context, next, count)` entries in sorted order.
    pub fn counts(&self) -> impl Iterator<Item = (&[String], &str, u64)> + '_ {
        self.counts
            .iter()
            .flat_map(|(ctx, row)| row.iter().map(move |(t, c)| (ctx.as_slice(), t.as_str(), *c)))
    }

    pub fn count(&self, ctx: &[String], next: &str) -> u64 {
        self.counts.get(ctx).and_then(|row| row.get(next)).copied().unwrap_or(0)
    }

    /// Maps a token to the symbol the model predicts (itself, or [`UNK`]).
    pub fn symbol<'a>(&self, tok: &'a str) -> &'a str {
        if tok == EOS || tok == UNK || self.vocabulary.contains(tok) {
            tok
        } else {
            UNK
        }
    }

    /// The last `order - 1` symbols of the BOS-padded history.
    pub fn context_for(&self, history: &[String]) -> Vec<String> {
        let n = self.order - 1;
        let take = history.len().min(n);
        let mut ctx = Vec::with_capacity(n);
        ctx.extend(core::iter::repeat_n(BOS.to_string(), n - take));
        ctx.extend(history[history.len() - take..].iter().map(|t| self.symbol(t).to_string()));
        ctx
    }

    fn space_size(&self) -> usize {
        self.vocabulary.len() + 2
    }

    /// Smoothed `p(next | ctx)`; zero when the context is unseen and smoothing is zero.
    pub fn probability(&self, ctx: &[String], next: &str) -> f64 {
        let total = self.totals.get(ctx).copied().unwrap_or(0) as f64;
        let denom = total + self.smoothing * self.space_size() as f64;
        if denom <= 0.0 {
            return 0.0;
        }
        (self.count(ctx, self.symbol(next)) as f64 + self.smoothing) / denom
    }

    /// Full smoothed distribution over vocabulary, [`EOS`] and [`UNK`].
    pub fn next_token_distribution(&self, ctx: &[String]) -> Vec<(String, f64)> {
        let row = self.counts.get(ctx);
        let total = self.totals.get(ctx).copied().unwrap_or(0) as f64;
        let denom = total + self.smoothing * self.space_size() as f64;
        let p = |tok: &str| {
            if denom <= 0.0 {
                return 0.0;
            }
            let c = row.and_then(|r| r.get(tok)).copied().unwrap_or(0) as f64;
            (c + self.smoothing) / denom
        };
        self.vocabulary
            .iter()
            .map(String::as_str)
            .chain([EOS, UNK])
            .map(|t| (t.to_string(), p(t)))
            .collect()
    }

    /// `-Σ ln p(token | context)` including the end-of-sentence term; zero for
    /// an empty sequence and infinite if any step has zero probability.
    pub fn neg_log_likelihood(&self, tokens: &[String]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        let mut nll = 0.0;
        for i in 0..tokens.len() {
            let ctx = self.context_for(&tokens[..i]);
            nll -= libm::log(self.probability(&ctx, &tokens[i]));
        }
        nll - libm::log(self.probability(&self.context_for(tokens), EOS))
    }
}

/// Samples one fill of `1..=max_len` tokens between the given contexts.
pub fn ngram_generate_fill<R: Rng + ?Sized>(
    model: &NgramModel,
    left_context: &[String],
    right_context: &[String],
    max_len: usize,
    top_k: usize,
    top_p: f64,
    rng: &mut R,
) -> Result<InfillCandidate, Error> {
    if max_len == 0 {
        return Err(Error::InvalidRequest("max_len must be >= 1".into()));
    }
    let stop = right_context.first().map_or(EOS, |t| model.symbol(t));
    let mut history = left_context.to_vec();
    let mut fill: Vec<String> = Vec::new();
    let mut log_p = 0.0;

    for step in 0..max_len {
        let ctx = model.context_for(&history);
        let allowed = |t: &str| (step > 0 && t == stop) || (t != EOS && t != UNK);
        let dist: Vec<(String, f64)> = model
            .next_token_distribution(&ctx)
            .into_iter()
            .filter(|(t, _)| allowed(t))
            .collect();
        let truncated = truncate(dist, top_k, top_p);
        let Some(next) = sample(&truncated, rng) else {
            if fill.is_empty() {
                return Err(Error::NoCandidate);
            }
            break;
        };
        if step > 0 && next == stop {
            break;
        }
        log_p += libm::log(model.probability(&ctx, next));
        fill.push(next.to_string());
        history.push(next.to_string());
    }
    log_p += libm::log(model.probability(&model.context_for(&history), stop));
    Ok(InfillCandidate { tokens: fill, score: log_p })
}

impl Infiller for NgramModel {
    fn backend_id(&self) -> String {
        format!("native-ngram/order{}/k{}", self.order, self.smoothing)
    }

    fn infill(
        &self,
        req: &InfillRequest,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<InfillCandidate>, Error> {
        let (left, right) = req.contexts()?;
        let mut found: Vec<InfillCandidate> = Vec::new();
        for _ in 0..req.num_candidates * ATTEMPTS_PER_CANDIDATE {
            let cand = match ngram_generate_fill(
                self,
                left,
                right,
                req.max_fill_len,
                req.top_k,
                req.top_p,
                rng,
            ) {
                Ok(c) => c,
                Err(Error::NoCandidate) => break,
                Err(e) => return Err(e),
            };
            if cand.tokens.contains(&req.mask_token) {
                continue;
            }
            if !found.iter().any(|c| c.tokens == cand.tokens) {
                found.push(cand);
                if found.len() == req.num_candidates {
                    break;
                }
            }
        }
        if found.is_empty() {
            return Err(Error::NoCandidate);
        }
        found.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tokens.cmp(&b.tokens)));
        Ok(found)
    }
}

impl Scorer for NgramModel {
    fn scorer_id(&self) -> String {
        self.backend_id()
    }

    fn score(&self, tokens: &[String]) -> Result<Score, Error> {
        Ok(Score { neg_log_likelihood: self.neg_log_likelihood(tokens) })
    }
}
