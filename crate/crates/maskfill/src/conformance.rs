//! Backend-agnostic contract checks, run against the native n-gram model and
//! against the HTTP client alike.

use maskfill_core::infill::{check_candidates, InfillRequest, Infiller, Scorer};
use maskfill_core::rng::seeded;
use maskfill_core::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

impl Check {
    fn new(name: &'static str, outcome: Result<(), String>) -> Self {
        Check { name, outcome }
    }
}

const PROBES: &[&str] = &[
    "the [MASK] left the town .",
    "[MASK] attacked the convoy",
    "officials said the minister met [MASK]",
];

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn request(probe: &str, k: usize, max_len: usize) -> InfillRequest {
    InfillRequest { num_candidates: k, max_fill_len: max_len, ..InfillRequest::new(toks(probe)) }
}

fn candidate_bounds(b: &dyn Infiller) -> Result<(), String> {
    for probe in PROBES {
        for (k, max_len) in [(1, 1), (3, 4), (5, 10)] {
            let req = request(probe, k, max_len);
            let cands = b.infill(&req, &mut seeded(11)).map_err(|e| format!("`{probe}` k={k}: {e}"))?;
            check_candidates(&req, &cands).map_err(|e| format!("`{probe}` k={k}: {e}"))?;
            if max_len == 1 && cands.iter().any(|c| c.tokens.len() != 1) {
                return Err(format!("`{probe}`: fill longer than max_fill_len 1"));
            }
        }
    }
    Ok(())
}

fn seeded_determinism(b: &dyn Infiller) -> Result<(), String> {
    for probe in PROBES {
        let req = request(probe, 3, 6);
        for seed in [0, 7, 1024] {
            let a = b.infill(&req, &mut seeded(seed)).map_err(|e| e.to_string())?;
            let c = b.infill(&req, &mut seeded(seed)).map_err(|e| e.to_string())?;
            if a != c {
                return Err(format!("`{probe}` seed {seed}: {a:?} != {c:?}"));
            }
        }
    }
    Ok(())
}

fn greedy_is_seed_independent(b: &dyn Infiller) -> Result<(), String> {
    for probe in PROBES {
        let req = InfillRequest { top_k: 1, ..request(probe, 1, 4) };
        let first = b.infill(&req, &mut seeded(0)).map_err(|e| e.to_string())?;
        for seed in 1..5 {
            let other = b.infill(&req, &mut seeded(seed)).map_err(|e| e.to_string())?;
            if other[0].tokens != first[0].tokens {
                return Err(format!("`{probe}`: top_k=1 fill depends on the seed"));
            }
        }
    }
    Ok(())
}

fn rejects_invalid(b: &dyn Infiller) -> Result<(), String> {
    let bad = [
        ("no placeholder", request("a b c", 1, 3)),
        ("two placeholders", request("a [MASK] b [MASK]", 1, 3)),
        ("zero candidates", request("a [MASK]", 0, 3)),
        ("zero max_fill_len", request("a [MASK]", 1, 0)),
        ("top_p out of range", InfillRequest { top_p: 1.5, ..request("a [MASK]", 1, 3) }),
    ];
    for (what, req) in bad {
        match b.infill(&req, &mut seeded(0)) {
            Err(Error::InvalidRequest(_)) => {}
            other => return Err(format!("{what}: expected InvalidRequest, got {other:?}")),
        }
    }
    Ok(())
}

pub fn infiller_suite(b: &dyn Infiller) -> Vec<Check> {
    vec![
        Check::new("infill candidate bounds", candidate_bounds(b)),
        Check::new("infill seeded determinism", seeded_determinism(b)),
        Check::new("infill top_k=1 is greedy", greedy_is_seed_independent(b)),
        Check::new("infill rejects invalid requests", rejects_invalid(b)),
        Check::new(
            "backend id is non-empty",
            if b.backend_id().is_empty() { Err("empty backend id".into()) } else { Ok(()) },
        ),
    ]
}

fn score_conventions(s: &dyn Scorer) -> Result<(), String> {
    let empty = s.score(&[]).map_err(|e| e.to_string())?.neg_log_likelihood;
    if empty != 0.0 {
        return Err(format!("empty sequence scored {empty}, expected 0"));
    }
    for probe in ["the minister left the town .", "unseen zzz qqq", "the"] {
        let t = toks(probe);
        let a = s.score(&t).map_err(|e| e.to_string())?.neg_log_likelihood;
        let b = s.score(&t).map_err(|e| e.to_string())?.neg_log_likelihood;
        if !a.is_finite() || a < 0.0 {
            return Err(format!("`{probe}` scored {a}"));
        }
        if a.to_bits() != b.to_bits() {
            return Err(format!("`{probe}` scored {a} then {b}"));
        }
    }
    Ok(())
}

pub fn scorer_suite(s: &dyn Scorer) -> Vec<Check> {
    vec![Check::new("score conventions", score_conventions(s))]
}

/// Panics with every failed check listed.
pub fn assert_all_pass(checks: &[Check]) {
    let failed: Vec<String> = checks
        .iter()
        .filter_map(|c| c.outcome.as_ref().err().map(|e| format!("{}: {e}", c.name)))
        .collect();
    assert!(failed.is_empty(), "conformance failures:\n{}", failed.join("\n"));
}
