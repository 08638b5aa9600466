//! Mask-then-fill orchestration, annotation remapping and baseline augmenters.
//!
//! Every augmented sample keeps each trigger and argument token sequence
//! verbatim; only adjunct tokens change. Random choices for the `j`-th
//! augmentation of a sample come from `stream_rng(seed, source_id, j)`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::corpus::{AnnotatedSample, Argument, EventMention, Span};
use crate::error::Error;
use crate::fragmenter::{compute_adjunct_fragments, select_and_mask, select_fragment, mask_span};
use crate::fragmenter::{LengthBounds, MaskedSample, DEFAULT_MASK_TOKEN};
use crate::infill::{InfillRequest, Infiller};
use crate::infill::{DEFAULT_BEAM_SIZE, DEFAULT_MAX_FILL_LEN, DEFAULT_NUM_CANDIDATES, DEFAULT_TOP_K, DEFAULT_TOP_P};
use crate::rng::stream_rng;

/// Extra attempts per requested augmentation after a rejected or missing fill.
pub const RETRY_BUDGET: usize = 5;

pub const METHOD_MASK_THEN_FILL: &str = "mask-then-fill";
pub const METHOD_SYNONYM: &str = "synonym-replacement";
pub const METHOD_BACKTRANSLATION: &str = "span-backtranslation";
pub const METHOD_IDENTITY: &str = "identity";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source_id: String,
    pub method: String,
    /// Replaced range in source coordinates; `None` for token-level methods.
    pub masked_range: Option<Span>,
    pub fill_len: Option<usize>,
    pub seed: u64,
    pub backend_id: String,
}

impl Provenance {
    /// Provenance for a sample paired with itself.
    pub fn identity(source_id: &str) -> Self {
        Provenance {
            source_id: source_id.to_string(),
            method: METHOD_IDENTITY.to_string(),
            masked_range: None,
            fill_len: None,
            seed: 0,
            backend_id: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedSample {
    pub sample: AnnotatedSample,
    pub provenance: Provenance,
}

pub fn augmented_id(source_id: &str, j: usize) -> String {
    format!("{source_id}#aug{j}")
}

/// Screens candidate fills.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillFilterConfig {
    /// Lowercased trigger lexemes; a fill containing any of them is rejected.
    pub banned_lexemes: BTreeSet<String>,
    bounds: LengthBounds,
    pub mask_token: String,
}

impl FillFilterConfig {
    pub fn new(
        banned_lexemes: BTreeSet<String>,
        min_fill_len: usize,
        max_fill_len: usize,
        mask_token: &str,
    ) -> Result<Self, Error> {
        Ok(FillFilterConfig {
            banned_lexemes,
            bounds: LengthBounds::new(min_fill_len, max_fill_len)?,
            mask_token: mask_token.to_string(),
        })
    }

    pub fn min_fill_len(&self) -> usize {
        self.bounds.min()
    }

    pub fn max_fill_len(&self) -> usize {
        self.bounds.max()
    }
}

impl Default for FillFilterConfig {
    fn default() -> Self {
        FillFilterConfig {
            banned_lexemes: BTreeSet::new(),
            bounds: LengthBounds::new(1, DEFAULT_MAX_FILL_LEN).expect("static bounds"),
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
        }
    }
}

/// Lowercased tokens of every trigger span.
pub fn harvest_trigger_lexicon<'a, I>(samples: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = &'a AnnotatedSample>,
{
    let mut out = BTreeSet::new();
    for s in samples {
        for ev in &s.events {
            if let Some(surface) = s.surface(ev.trigger) {
                out.extend(surface.iter().map(|t| t.to_lowercase()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    BannedLexeme(String),
    Length(usize),
    ContainsPlaceholder,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Reject(RejectReason),
}

impl FilterDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, FilterDecision::Accept)
    }
}

pub fn filter_fill(fill: &[String], cfg: &FillFilterConfig) -> FilterDecision {
    if !cfg.bounds.admits(fill.len()) {
        return FilterDecision::Reject(RejectReason::Length(fill.len()));
    }
    if fill.contains(&cfg.mask_token) {
        return FilterDecision::Reject(RejectReason::ContainsPlaceholder);
    }
    for tok in fill {
        let lower = tok.to_lowercase();
        if cfg.banned_lexemes.contains(&lower) {
            return FilterDecision::Reject(RejectReason::BannedLexeme(lower));
        }
    }
    FilterDecision::Accept
}

fn remap_span(span: Span, mask: Span, fill_len: usize) -> Result<Span, Error> {
    if span.end <= mask.start {
        Ok(span)
    } else if span.start >= mask.end {
        // start >= mask.end >= mask.len(), so the subtraction cannot underflow
        let shift = |i: usize| i - mask.len() + fill_len;
        Ok(Span::new(shift(span.start), shift(span.end)))
    } else {
        Err(Error::SpanIntersectsMask { span, mask })
    }
}

/// Splices `fill` over the masked range and shifts every event span behind it.
///
/// The result keeps the source id; callers assign the augmented id.
pub fn fill_and_remap(m: &MaskedSample, fill: &[String]) -> Result<AnnotatedSample, Error> {
    let at = m.masked_range.start;
    let placeholder = m
        .tokens_with_mask
        .get(at)
        .ok_or_else(|| Error::InvalidRequest(format!("masked range {} out of bounds", m.masked_range)))?;
    if fill.is_empty() {
        return Err(Error::InvalidRequest("fill must contain at least one token".into()));
    }
    if fill.iter().any(|t| t == placeholder) {
        return Err(Error::InvalidRequest("fill contains the mask token".into()));
    }

    let mut tokens = Vec::with_capacity(m.tokens_with_mask.len() + fill.len());
    tokens.extend_from_slice(&m.tokens_with_mask[..at]);
    tokens.extend_from_slice(fill);
    tokens.extend_from_slice(&m.tokens_with_mask[at + 1..]);

    let remap = |sp: Span| remap_span(sp, m.masked_range, fill.len());
    let events = m
        .events
        .iter()
        .map(|ev| {
            Ok(EventMention {
                event_type: ev.event_type.clone(),
                trigger: remap(ev.trigger)?,
                arguments: ev
                    .arguments
                    .iter()
                    .map(|a| Ok(Argument { role: a.role.clone(), span: remap(a.span)? }))
                    .collect::<Result<_, Error>>()?,
            })
        })
        .collect::<Result<_, Error>>()?;

    Ok(AnnotatedSample { id: m.source_id.clone(), tokens, events })
}

/// True when both samples carry the same events with identical labels and
/// identical trigger/argument surface tokens.
pub fn surface_preserved(source: &AnnotatedSample, augmented: &AnnotatedSample) -> bool {
    if source.events.len() != augmented.events.len() {
        return false;
    }
    source.events.iter().zip(&augmented.events).all(|(a, b)| {
        a.event_type == b.event_type
            && a.arguments.len() == b.arguments.len()
            && same_surface(source, a.trigger, augmented, b.trigger)
            && a.arguments.iter().zip(&b.arguments).all(|(x, y)| {
                x.role == y.role && same_surface(source, x.span, augmented, y.span)
            })
    })
}

fn same_surface(a: &AnnotatedSample, sa: Span, b: &AnnotatedSample, sb: Span) -> bool {
    match (a.surface(sa), b.surface(sb)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub n_aug: usize,
    pub filter: FillFilterConfig,
    /// Eligible lengths of the fragment being masked.
    pub mask_bounds: LengthBounds,
    pub num_candidates: usize,
    pub top_k: usize,
    pub top_p: f64,
    pub beam_size: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            n_aug: 1,
            filter: FillFilterConfig::default(),
            mask_bounds: LengthBounds::default(),
            num_candidates: DEFAULT_NUM_CANDIDATES,
            top_k: DEFAULT_TOP_K,
            top_p: DEFAULT_TOP_P,
            beam_size: DEFAULT_BEAM_SIZE,
            seed: 0,
        }
    }
}

/// Up to `cfg.n_aug` mask-then-fill variants of `s`.
///
/// Each requested variant gets `1 + RETRY_BUDGET` attempts at mask, infill and
/// filter; variants whose attempts are exhausted are dropped. A sample without
/// an eligible fragment yields an empty list. Only backend failures other than
/// [`Error::NoCandidate`] are returned as errors.
pub fn augment_sample<B: Infiller + ?Sized>(
    s: &AnnotatedSample,
    backend: &B,
    cfg: &AugmentConfig,
) -> Result<Vec<AugmentedSample>, Error> {
    if cfg.n_aug == 0 {
        return Err(Error::InvalidRequest("n_aug must be >= 1".into()));
    }
    let mut out = Vec::new();
    for j in 0..cfg.n_aug {
        let mut rng = stream_rng(cfg.seed, &s.id, j as u64);
        for _ in 0..=RETRY_BUDGET {
            let masked = match select_and_mask(s, &mut rng, cfg.mask_bounds, &cfg.filter.mask_token) {
                Ok(m) => m,
                Err(Error::NoEligibleFragment { .. } | Error::PlaceholderInInput(_)) => return Ok(out),
                Err(e) => return Err(e),
            };
            let req = InfillRequest {
                tokens_with_mask: masked.tokens_with_mask.clone(),
                mask_token: cfg.filter.mask_token.clone(),
                num_candidates: cfg.num_candidates,
                max_fill_len: cfg.filter.max_fill_len(),
                top_k: cfg.top_k,
                top_p: cfg.top_p,
                beam_size: cfg.beam_size,
            };
            let candidates = match backend.infill(&req, &mut rng) {
                Ok(c) => c,
                Err(Error::NoCandidate) => continue,
                Err(e) => return Err(e),
            };
            let Some(fill) = candidates.iter().find(|c| filter_fill(&c.tokens, &cfg.filter).is_accept()) else {
                continue;
            };
            let mut sample = fill_and_remap(&masked, &fill.tokens)?;
            sample.id = augmented_id(&s.id, j);
            out.push(AugmentedSample {
                sample,
                provenance: Provenance {
                    source_id: s.id.clone(),
                    method: METHOD_MASK_THEN_FILL.to_string(),
                    masked_range: Some(masked.masked_range),
                    fill_len: Some(fill.tokens.len()),
                    seed: cfg.seed,
                    backend_id: backend.backend_id(),
                },
            });
            break;
        }
    }
    Ok(out)
}

/// Headword to synonym list.
pub type Lexicon = BTreeMap<String, Vec<String>>;

fn usable_token(t: &str) -> bool {
    !t.is_empty() && !t.chars().any(char::is_whitespace)
}

/// Replaces each adjunct token, independently with probability `p_replace`,
/// by a synonym drawn uniformly from the lexicon entry for the token (exact
/// match first, then lowercased). Event tokens are never touched.
pub fn synonym_replacement(
    s: &AnnotatedSample,
    lexicon: &Lexicon,
    p_replace: f64,
    seed: u64,
    j: usize,
) -> Result<AugmentedSample, Error> {
    if !(0.0..=1.0).contains(&p_replace) {
        return Err(Error::InvalidRequest(format!("p_replace must lie in [0, 1], got {p_replace}")));
    }
    let mut rng = stream_rng(seed, &s.id, j as u64);
    let mut tokens = s.tokens.clone();
    for frag in compute_adjunct_fragments(s) {
        for tok in &mut tokens[frag.span.start..frag.span.end] {
            if !rng.random_bool(p_replace) {
                continue;
            }
            let entry = lexicon.get(tok.as_str()).or_else(|| lexicon.get(&tok.to_lowercase()));
            let choices: Vec<&String> =
                entry.into_iter().flatten().filter(|c| usable_token(c)).collect();
            if !choices.is_empty() {
                *tok = choices[rng.random_range(0..choices.len())].clone();
            }
        }
    }
    Ok(AugmentedSample {
        sample: AnnotatedSample { id: augmented_id(&s.id, j), tokens, events: s.events.clone() },
        provenance: Provenance {
            source_id: s.id.clone(),
            method: METHOD_SYNONYM.to_string(),
            masked_range: None,
            fill_len: None,
            seed,
            backend_id: "lexicon".to_string(),
        },
    })
}

/// Round-trip (e.g. English to pivot language and back) translation of a
/// token span.
pub trait Translator: Send + Sync {
    fn translator_id(&self) -> String;

    fn round_trip(&self, tokens: &[String], rng: &mut dyn RngCore) -> Result<Vec<String>, Error>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translator_id(&self) -> String {
        "identity".into()
    }

    fn round_trip(&self, tokens: &[String], _rng: &mut dyn RngCore) -> Result<Vec<String>, Error> {
        Ok(tokens.to_vec())
    }
}

/// Back-translates one adjunct fragment, selected as in masking, and splices
/// the result in with [`fill_and_remap`].
pub fn span_backtranslation<T: Translator + ?Sized>(
    s: &AnnotatedSample,
    translator: &T,
    bounds: LengthBounds,
    seed: u64,
    j: usize,
) -> Result<AugmentedSample, Error> {
    let mut rng = stream_rng(seed, &s.id, j as u64);
    let range = select_fragment(s, &mut rng, bounds)?;
    let masked = mask_span(s, range, DEFAULT_MASK_TOKEN)?;
    let translated = translator.round_trip(&masked.target, &mut rng)?;
    if translated.is_empty() || !translated.iter().all(|t| usable_token(t) && t != DEFAULT_MASK_TOKEN) {
        return Err(Error::NoCandidate);
    }
    let mut sample = fill_and_remap(&masked, &translated)?;
    sample.id = augmented_id(&s.id, j);
    Ok(AugmentedSample {
        sample,
        provenance: Provenance {
            source_id: s.id.clone(),
            method: METHOD_BACKTRANSLATION.to_string(),
            masked_range: Some(range),
            fill_len: Some(translated.len()),
            seed,
            backend_id: translator.translator_id(),
        },
    })
}
