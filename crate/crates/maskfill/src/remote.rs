//! HTTP client for a remote infilling/scoring service.
//!
//! Wire protocol, JSON bodies in the canonical record encoding:
//!
//! | endpoint              | request                                                                              | response                              |
//! |-----------------------|--------------------------------------------------------------------------------------|---------------------------------------|
//! | `POST /infill`        | `{tokens_with_mask, mask_token, num_candidates, max_fill_len, top_k, top_p, beam_size, seed}` | `{candidates: [{tokens, score}]}` |
//! | `POST /score`         | `{tokens}`                                                                           | `{neg_log_likelihood}`                |
//! | `GET /health`         |                                                                                      | `{status: "ok", model_id}`            |
//! | `POST /backtranslate` | `{tokens, seed}`                                                                     | `{tokens}`                            |
//!
//! Any non-2xx status or malformed body maps to
//! [`Error::BackendUnavailable`]. Requests carry an explicit seed, so they are
//! idempotent and retried on transport failures and 5xx/429 responses.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use maskfill_core::augment::Translator;
use maskfill_core::infill::{check_candidates, InfillCandidate, InfillRequest, Infiller, Score, Scorer};
use maskfill_core::Error;
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::format::canonical_string;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;
pub const DEFAULT_RETRIES: usize = 2;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Extra attempts after a retryable failure.
    pub retries: usize,
    pub retry_backoff: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: &str) -> Self {
        RemoteConfig {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            timeout: DEFAULT_TIMEOUT,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
            retries: DEFAULT_RETRIES,
            retry_backoff: Duration::from_millis(100),
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Gate { limit: limit.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_id: String,
}

#[derive(Serialize)]
struct InfillBody<'a> {
    tokens_with_mask: &'a [String],
    mask_token: &'a str,
    num_candidates: usize,
    max_fill_len: usize,
    top_k: usize,
    top_p: f64,
    beam_size: usize,
    seed: u64,
}

#[derive(Deserialize)]
struct CandidateBody {
    tokens: Vec<String>,
    score: f64,
}

#[derive(Deserialize)]
struct InfillResponse {
    candidates: Vec<CandidateBody>,
}

#[derive(Serialize)]
struct TokensBody<'a> {
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct ScoreResponse {
    neg_log_likelihood: f64,
}

#[derive(Serialize)]
struct TranslateBody<'a> {
    tokens: &'a [String],
    seed: u64,
}

#[derive(Deserialize)]
struct TranslateResponse {
    tokens: Vec<String>,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

pub struct RemoteClient {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemoteClient {
    pub fn new(endpoint: &str) -> Self {
        Self::with_config(RemoteConfig::new(endpoint))
    }

    pub fn with_config(cfg: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate::new(cfg.max_in_flight);
        RemoteClient { cfg, agent, gate }
    }

    pub fn endpoint(&self) -> &str {
        &self.cfg.endpoint
    }

    fn attempt(&self, path: &str, body: Option<&str>) -> Result<String, Failure> {
        let url = format!("{}{}", self.cfg.endpoint, path);
        let _permit = self.gate.acquire();
        let sent = match body {
            Some(b) => self.agent.post(&url).header("content-type", "application/json").send(b),
            None => self.agent.get(&url).call(),
        };
        let mut resp = sent.map_err(|e| Failure::Retryable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("{url}: reading body: {e}")))?;
        match status {
            200..=299 => Ok(text),
            429 | 500..=599 => Err(Failure::Retryable(format!("{url}: HTTP {status}: {}", snippet(&text)))),
            _ => Err(Failure::Fatal(format!("{url}: HTTP {status}: {}", snippet(&text)))),
        }
    }

    fn call<T: DeserializeOwned>(&self, path: &str, body: Option<String>) -> Result<T, Error> {
        let mut tries = 0;
        let text = loop {
            match self.attempt(path, body.as_deref()) {
                Ok(t) => break t,
                Err(Failure::Retryable(msg)) if tries < self.cfg.retries => {
                    log::warn!("retrying after: {msg}");
                    thread::sleep(self.cfg.retry_backoff * (1 << tries.min(6)));
                    tries += 1;
                }
                Err(Failure::Retryable(msg) | Failure::Fatal(msg)) => return Err(Error::BackendUnavailable(msg)),
            }
        };
        serde_json::from_str(&text)
            .map_err(|e| Error::BackendUnavailable(format!("{path}: malformed response body: {e}")))
    }

    pub fn health(&self) -> Result<Health, Error> {
        let h: Health = self.call("/health", None)?;
        if h.status != "ok" {
            return Err(Error::BackendUnavailable(format!("health status `{}`", h.status)));
        }
        Ok(h)
    }
}

fn snippet(body: &str) -> &str {
    let end = body.char_indices().nth(200).map_or(body.len(), |(i, _)| i);
    &body[..end]
}

impl Infiller for RemoteClient {
    fn backend_id(&self) -> String {
        format!("remote/{}", self.cfg.endpoint)
    }

    fn infill(&self, req: &InfillRequest, rng: &mut dyn RngCore) -> Result<Vec<InfillCandidate>, Error> {
        req.validate()?;
        let body = InfillBody {
            tokens_with_mask: &req.tokens_with_mask,
            mask_token: &req.mask_token,
            num_candidates: req.num_candidates,
            max_fill_len: req.max_fill_len,
            top_k: req.top_k,
            top_p: req.top_p,
            beam_size: req.beam_size,
            seed: rng.next_u64(),
        };
        let resp: InfillResponse = self.call("/infill", Some(canonical_string(&body)))?;
        if resp.candidates.is_empty() {
            return Err(Error::NoCandidate);
        }
        let cands: Vec<InfillCandidate> = resp
            .candidates
            .into_iter()
            .map(|c| InfillCandidate { tokens: c.tokens, score: c.score })
            .collect();
        check_candidates(req, &cands).map_err(|e| Error::BackendUnavailable(format!("/infill: {e}")))?;
        Ok(cands)
    }
}

impl Scorer for RemoteClient {
    fn scorer_id(&self) -> String {
        self.backend_id()
    }

    fn score(&self, tokens: &[String]) -> Result<Score, Error> {
        let resp: ScoreResponse = self.call("/score", Some(canonical_string(&TokensBody { tokens })))?;
        let nll = resp.neg_log_likelihood;
        if !nll.is_finite() || nll < 0.0 {
            return Err(Error::BackendUnavailable(format!("/score: invalid negative log-likelihood {nll}")));
        }
        Ok(Score { neg_log_likelihood: nll })
    }
}

/// Round-trip translator served at `POST /backtranslate`.
pub struct RemoteTranslator(pub RemoteClient);

impl Translator for RemoteTranslator {
    fn translator_id(&self) -> String {
        format!("remote-backtranslate/{}", self.0.cfg.endpoint)
    }

    fn round_trip(&self, tokens: &[String], rng: &mut dyn RngCore) -> Result<Vec<String>, Error> {
        let body = TranslateBody { tokens, seed: rng.next_u64() };
        let resp: TranslateResponse = self.0.call("/backtranslate", Some(canonical_string(&body)))?;
        Ok(resp.tokens)
    }
}
