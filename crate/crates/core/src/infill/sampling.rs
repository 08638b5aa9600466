//! Top-k / top-p truncation over explicit token distributions.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

/// Sorts by probability (descending, ties by token), keeps the `top_k` most
/// probable entries, renormalizes, then keeps the smallest prefix whose mass
/// reaches `top_p` and renormalizes again.
///
/// Zero-probability entries are dropped first. Returns an empty list when no
/// mass remains.
pub fn truncate(mut dist: Vec<(String, f64)>, top_k: usize, top_p: f64) -> Vec<(String, f64)> {
    dist.retain(|(_, p)| *p > 0.0);
    dist.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    dist.truncate(top_k.max(1));
    normalize(&mut dist);

    let mut mass = 0.0;
    let mut keep = dist.len();
    for (i, (_, p)) in dist.iter().enumerate() {
        mass += p;
        if mass >= top_p {
            keep = i + 1;
            break;
        }
    }
    dist.truncate(keep);
    normalize(&mut dist);
    dist
}

pub fn normalize(dist: &mut [(String, f64)]) {
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if total > 0.0 {
        for (_, p) in dist.iter_mut() {
            *p /= total;
        }
    }
}

/// Draws one entry proportionally to its weight. `None` for an empty list.
pub fn sample<'a, R: Rng + ?Sized>(dist: &'a [(String, f64)], rng: &mut R) -> Option<&'a str> {
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    if dist.is_empty() || total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (tok, p) in dist {
        if u < *p {
            return Some(tok);
        }
        u -= p;
    }
    dist.iter().rev().find(|(_, p)| *p > 0.0).map(|(t, _)| t.as_str())
}
