//! In-process HTTP stub speaking the remote backend protocol, backed by the
//! native n-gram model.

#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use maskfill::maskfill_core::infill::{InfillRequest, Infiller, NgramModel, Scorer};
use maskfill::maskfill_core::rng::seeded;
use maskfill::maskfill_core::Error;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Normal,
    /// Every request answers with this status.
    Status(u16),
    /// 200 with a body that is not the expected JSON.
    Malformed,
    /// Candidates longer than `max_fill_len` and unsorted.
    BadCandidates,
    /// The first `n` requests answer 503.
    FailFirst(usize),
}

pub struct Stub {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    server: Arc<Server>,
    handle: Option<JoinHandle<()>>,
}

impl Drop for Stub {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn reply(status: u16, body: Value) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(body.to_string())
        .with_status_code(status)
        .with_header(Header::from_bytes("Content-Type", "application/json").unwrap())
}

fn strings(v: &Value) -> Option<Vec<String>> {
    v.as_array()?.iter().map(|t| t.as_str().map(str::to_string)).collect()
}

fn handle(model: &NgramModel, method: &Method, path: &str, body: &str) -> (u16, Value) {
    let Ok(v) = serde_json::from_str::<Value>(body).or_else(|e| if body.is_empty() { Ok(Value::Null) } else { Err(e) })
    else {
        return (400, json!({"error": "malformed body"}));
    };
    match (method, path) {
        (Method::Get, "/health") => (200, json!({"status": "ok", "model_id": "stub-ngram"})),
        (Method::Post, "/infill") => {
            let Some(tokens) = strings(&v["tokens_with_mask"]) else {
                return (400, json!({"error": "tokens_with_mask"}));
            };
            let mut req = InfillRequest::new(tokens);
            req.mask_token = v["mask_token"].as_str().unwrap_or("[MASK]").to_string();
            req.num_candidates = v["num_candidates"].as_u64().unwrap_or(1) as usize;
            req.max_fill_len = v["max_fill_len"].as_u64().unwrap_or(10) as usize;
            req.top_k = v["top_k"].as_u64().unwrap_or(100) as usize;
            req.top_p = v["top_p"].as_f64().unwrap_or(0.7);
            let seed = v["seed"].as_u64().unwrap_or(0);
            match model.infill(&req, &mut seeded(seed)) {
                Ok(c) => {
                    let cands: Vec<Value> = c.iter().map(|c| json!({"tokens": c.tokens, "score": c.score})).collect();
                    (200, json!({ "candidates": cands }))
                }
                Err(Error::NoCandidate) => (200, json!({"candidates": []})),
                Err(e) => (400, json!({"error": e.to_string()})),
            }
        }
        (Method::Post, "/score") => match strings(&v["tokens"]) {
            Some(t) => (200, json!({"neg_log_likelihood": model.score(&t).unwrap().neg_log_likelihood})),
            None => (400, json!({"error": "tokens"})),
        },
        (Method::Post, "/backtranslate") => match strings(&v["tokens"]) {
            Some(t) if t.len() == 1 => (200, json!({"tokens": ["as", "reported"]})),
            Some(t) => (200, json!({ "tokens": t })),
            None => (400, json!({"error": "tokens"})),
        },
        _ => (404, json!({"error": "not found"})),
    }
}

pub fn spawn(model: NgramModel, mode: Mode) -> Stub {
    let server = Arc::new(Server::http("127.0.0.1:0").expect("bind stub server"));
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let (srv, counter) = (server.clone(), hits.clone());
    let handle = thread::spawn(move || {
        for mut req in srv.incoming_requests() {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let mut body = String::new();
            let _ = req.as_reader().read_to_string(&mut body);
            let (status, value) = match mode {
                Mode::Status(code) => (code, json!({"error": "forced"})),
                Mode::FailFirst(k) if n < k => (503, json!({"error": "warming up"})),
                Mode::Malformed => {
                    let _ = req.respond(Response::from_string("<html>oops</html>"));
                    continue;
                }
                Mode::BadCandidates if req.url() == "/infill" => {
                    (200, json!({"candidates": [{"tokens": ["a"], "score": -3.0}, {"tokens": vec!["b"; 40], "score": -1.0}]}))
                }
                _ => handle(&model, req.method(), req.url(), &body),
            };
            let _ = req.respond(reply(status, value));
        }
    });
    Stub { url, hits, server, handle: Some(handle) }
}
