//! Adjunct fragments, masking, and infilling training examples.
//!
//! An adjunct fragment is a maximal run of tokens not covered by any trigger
//! or argument span. Masking replaces exactly one whole fragment with a single
//! placeholder token and keeps the removed tokens as the target.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::{AnnotatedSample, EventMention, Span};
use crate::error::Error;

pub const DEFAULT_MASK_TOKEN: &str = "[MASK]";
pub const DEFAULT_MIN_MASK_LEN: usize = 1;
pub const DEFAULT_MAX_MASK_LEN: usize = 10;
/// Upper bound on the number of partition spans when generating training examples.
pub const MAX_TRAINING_SPANS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fragment {
    pub span: Span,
}

/// Inclusive `[min, max]` token-length bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthBounds {
    min: usize,
    max: usize,
}

impl LengthBounds {
    pub fn new(min: usize, max: usize) -> Result<Self, Error> {
        if min == 0 || max < min {
            return Err(Error::InvalidRequest(alloc::format!(
                "length bounds must satisfy 1 <= min <= max, got [{min}, {max}]"
            )));
        }
        Ok(LengthBounds { min, max })
    }

    pub fn min(&self) -> usize {
        self.min
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn admits(&self, len: usize) -> bool {
        self.min <= len && len <= self.max
    }
}

impl Default for LengthBounds {
    fn default() -> Self {
        LengthBounds { min: DEFAULT_MIN_MASK_LEN, max: DEFAULT_MAX_MASK_LEN }
    }
}

/// Maximal token runs not covered by any event span, sorted by start.
pub fn compute_adjunct_fragments(s: &AnnotatedSample) -> Vec<Fragment> {
    let len = s.tokens.len();
    let mut covered: Vec<Span> = s
        .event_spans()
        .map(|sp| Span::new(sp.start.min(len), sp.end.min(len)))
        .filter(|sp| !sp.is_empty())
        .collect();
    covered.sort_unstable();

    let mut out = Vec::new();
    let mut cursor = 0;
    for sp in covered {
        if sp.start > cursor {
            out.push(Fragment { span: Span::new(cursor, sp.start) });
        }
        cursor = cursor.max(sp.end);
    }
    if cursor < len {
        out.push(Fragment { span: Span::new(cursor, len) });
    }
    out
}

/// A sentence with one fragment replaced by the placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSample {
    pub source_id: String,
    pub tokens_with_mask: Vec<String>,
    /// Range of the masked fragment in the original tokens.
    pub masked_range: Span,
    pub target: Vec<String>,
    /// Events in original-token coordinates.
    pub events: Vec<EventMention>,
}

impl MaskedSample {
    /// The original token list, rebuilt by splicing the target back in.
    pub fn reconstruct(&self) -> Vec<String> {
        splice(&self.tokens_with_mask, self.masked_range.start, &self.target)
    }
}

fn splice(tokens: &[String], at: usize, fill: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() + fill.len());
    out.extend_from_slice(&tokens[..at]);
    out.extend_from_slice(fill);
    out.extend_from_slice(&tokens[at + 1..]);
    out
}

/// Replaces the single placeholder in `tokens_with_mask` with `fill`.
///
/// Returns `None` unless exactly one placeholder is present.
pub fn splice_placeholder(
    tokens_with_mask: &[String],
    mask_token: &str,
    fill: &[String],
) -> Option<Vec<String>> {
    let at = single_placeholder(tokens_with_mask, mask_token)?;
    Some(splice(tokens_with_mask, at, fill))
}

pub(crate) fn single_placeholder(tokens: &[String], mask_token: &str) -> Option<usize> {
    let mut found = None;
    for (i, t) in tokens.iter().enumerate() {
        if t == mask_token {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        }
    }
    found
}

/// Masks the given range of `s`. The range must be non-empty and in bounds.
pub fn mask_span(s: &AnnotatedSample, range: Span, mask_token: &str) -> Result<MaskedSample, Error> {
    if range.is_empty() || range.end > s.tokens.len() {
        return Err(Error::InvalidRequest(alloc::format!(
            "mask range {range} invalid for {} tokens",
            s.tokens.len()
        )));
    }
    if s.tokens.iter().any(|t| t == mask_token) {
        return Err(Error::PlaceholderInInput(mask_token.to_string()));
    }
    let mut tokens_with_mask = Vec::with_capacity(s.tokens.len() - range.len() + 1);
    tokens_with_mask.extend_from_slice(&s.tokens[..range.start]);
    tokens_with_mask.push(mask_token.to_string());
    tokens_with_mask.extend_from_slice(&s.tokens[range.end..]);
    Ok(MaskedSample {
        source_id: s.id.clone(),
        tokens_with_mask,
        masked_range: range,
        target: s.tokens[range.start..range.end].to_vec(),
        events: s.events.clone(),
    })
}

/// Masks one adjunct fragment whose length lies within `bounds`, chosen
/// uniformly among the eligible ones.
pub fn select_and_mask<R: Rng + ?Sized>(
    s: &AnnotatedSample,
    rng: &mut R,
    bounds: LengthBounds,
    mask_token: &str,
) -> Result<MaskedSample, Error> {
    let range = select_fragment(s, rng, bounds)?;
    mask_span(s, range, mask_token)
}

pub(crate) fn select_fragment<R: Rng + ?Sized>(
    s: &AnnotatedSample,
    rng: &mut R,
    bounds: LengthBounds,
) -> Result<Span, Error> {
    let eligible: Vec<Span> = compute_adjunct_fragments(s)
        .into_iter()
        .map(|f| f.span)
        .filter(|sp| bounds.admits(sp.len()))
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleFragment { min: bounds.min, max: bounds.max });
    }
    Ok(eligible[rng.random_range(0..eligible.len())])
}

/// One training pair for a blank-infilling model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfillTrainingExample {
    pub masked_text: Vec<String>,
    pub target: Vec<String>,
}

impl InfillTrainingExample {
    pub fn reconstruct(&self, mask_token: &str) -> Option<Vec<String>> {
        splice_placeholder(&self.masked_text, mask_token, &self.target)
    }
}

/// Splits `len` tokens into `n` contiguous spans whose sizes differ by at most
/// one, longer spans first.
///
/// # Panics
/// If `n == 0` or `n > len`.
pub fn partition_spans(len: usize, n: usize) -> Vec<Span> {
    assert!(n >= 1 && n <= len, "cannot split {len} tokens into {n} spans");
    let base = len / n;
    let extra = len % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        out.push(Span::new(start, start + size));
        start += size;
    }
    out
}

/// Builds the training example that holds out span `index` of an `n`-way
/// partition of `sentence`.
pub fn training_example(
    sentence: &[String],
    n: usize,
    index: usize,
    mask_token: &str,
) -> InfillTrainingExample {
    let span = partition_spans(sentence.len(), n)[index];
    let mut masked_text = Vec::with_capacity(sentence.len() - span.len() + 1);
    masked_text.extend_from_slice(&sentence[..span.start]);
    masked_text.push(mask_token.to_string());
    masked_text.extend_from_slice(&sentence[span.end..]);
    InfillTrainingExample { masked_text, target: sentence[span.start..span.end].to_vec() }
}

/// One example per non-empty sentence: draw a span count from
/// `[1, min(10, L)]`, partition the sentence, hold out one span uniformly.
pub fn generate_infill_training_examples<R: Rng + ?Sized>(
    plain_sentences: &[Vec<String>],
    rng: &mut R,
    mask_token: &str,
) -> Vec<InfillTrainingExample> {
    plain_sentences
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let n = rng.random_range(1..=s.len().min(MAX_TRAINING_SPANS));
            let index = rng.random_range(0..n);
            training_example(s, n, index, mask_token)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{arg, toks, transport};
    use crate::corpus::{Argument, EventMention};
    use crate::rng::seeded;
    use alloc::vec;
    use proptest::prelude::*;

    /// Per-token coverage array, then run-length extraction.
    fn coverage_oracle(s: &AnnotatedSample) -> Vec<Span> {
        let mut covered = vec![false; s.tokens.len()];
        for ev in &s.events {
            for sp in ev.spans() {
                covered[sp.start..sp.end].fill(true);
            }
        }
        let mut out = Vec::new();
        let mut run: Option<usize> = None;
        for (i, &c) in covered.iter().enumerate() {
            match (c, run) {
                (false, None) => run = Some(i),
                (true, Some(st)) => {
                    out.push(Span::new(st, i));
                    run = None;
                }
                _ => {}
            }
        }
        if let Some(st) = run {
            out.push(Span::new(st, covered.len()));
        }
        out
    }

    fn bare(tokens: &str) -> AnnotatedSample {
        AnnotatedSample { id: "x".into(), tokens: toks(tokens), events: vec![] }
    }

    #[test]
    fn transport_has_single_trailing_fragment() {
        let f = compute_adjunct_fragments(&transport());
        assert_eq!(f, vec![Fragment { span: Span::new(5, 6) }]);
    }

    #[test]
    fn no_events_whole_sentence() {
        let f = compute_adjunct_fragments(&bare("a b c d"));
        assert_eq!(f, vec![Fragment { span: Span::new(0, 4) }]);
    }

    #[test]
    fn fully_covered_sentence_has_no_fragments() {
        let mut s = transport();
        s.tokens.pop();
        assert!(compute_adjunct_fragments(&s).is_empty());
    }

    #[test]
    fn transport_mask() {
        let s = transport();
        let m = select_and_mask(&s, &mut seeded(0), LengthBounds::default(), DEFAULT_MASK_TOKEN)
            .unwrap();
        assert_eq!(m.tokens_with_mask, toks("Mike left this town yesterday [MASK]"));
        assert_eq!(m.target, toks("."));
        assert_eq!(m.masked_range, Span::new(5, 6));
        assert_eq!(m.events, s.events);
        assert_eq!(m.reconstruct(), s.tokens);
    }

    #[test]
    fn forced_choice_ignores_seed() {
        let s = transport();
        for seed in 0..20 {
            let m = select_and_mask(&s, &mut seeded(seed), LengthBounds::default(), "[MASK]")
                .unwrap();
            assert_eq!(m.masked_range, Span::new(5, 6));
        }
    }

    fn three_fragments() -> AnnotatedSample {
        // fragments [0,2), [3,5), [6,8)
        AnnotatedSample {
            id: "three".into(),
            tokens: toks("a b T c d A e f"),
            events: vec![EventMention {
                event_type: "E".into(),
                trigger: Span::new(2, 3),
                arguments: vec![arg("R", 5, 6)],
            }],
        }
    }

    #[test]
    fn selection_is_seed_deterministic() {
        let s = three_fragments();
        let b = LengthBounds::default();
        let a1 = select_and_mask(&s, &mut seeded(42), b, "[MASK]").unwrap();
        let a2 = select_and_mask(&s, &mut seeded(42), b, "[MASK]").unwrap();
        assert_eq!(a1, a2);
        let _ = select_and_mask(&s, &mut seeded(43), b, "[MASK]").unwrap();
        // all three fragments get picked over enough seeds
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..64 {
            seen.insert(select_and_mask(&s, &mut seeded(seed), b, "[MASK]").unwrap().masked_range);
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn no_eligible_fragment() {
        let s = three_fragments();
        let err = select_and_mask(&s, &mut seeded(1), LengthBounds::new(3, 5).unwrap(), "[MASK]")
            .unwrap_err();
        assert_eq!(err, Error::NoEligibleFragment { min: 3, max: 5 });
    }

    #[test]
    fn placeholder_already_present() {
        let s = bare("a [MASK] b");
        let err = select_and_mask(&s, &mut seeded(1), LengthBounds::default(), "[MASK]").unwrap_err();
        assert_eq!(err, Error::PlaceholderInInput("[MASK]".into()));
    }

    #[test]
    fn bounds_validation() {
        assert!(LengthBounds::new(0, 3).is_err());
        assert!(LengthBounds::new(4, 3).is_err());
        assert!(LengthBounds::new(2, 2).unwrap().admits(2));
    }

    #[test]
    fn partition_rule() {
        assert_eq!(
            partition_spans(12, 3),
            vec![Span::new(0, 4), Span::new(4, 8), Span::new(8, 12)]
        );
        assert_eq!(
            partition_spans(7, 3),
            vec![Span::new(0, 3), Span::new(3, 5), Span::new(5, 7)]
        );
        assert_eq!(partition_spans(1, 1), vec![Span::new(0, 1)]);
    }

    #[test]
    fn twelve_tokens_three_spans_index_one() {
        let s = toks("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11");
        let e = training_example(&s, 3, 1, "[MASK]");
        assert_eq!(e.target, toks("t4 t5 t6 t7"));
        assert_eq!(e.masked_text, toks("t0 t1 t2 t3 [MASK] t8 t9 t10 t11"));
    }

    #[test]
    fn single_token_sentence_is_forced() {
        let out = generate_infill_training_examples(&[toks("hello")], &mut seeded(3), "[MASK]");
        assert_eq!(out, vec![InfillTrainingExample { masked_text: toks("[MASK]"), target: toks("hello") }]);
    }

    #[test]
    fn span_count_stays_within_cap() {
        let long: Vec<String> = (0..40).map(|i| alloc::format!("w{i}")).collect();
        let mut rng = seeded(9);
        for _ in 0..200 {
            let e = &generate_infill_training_examples(core::slice::from_ref(&long), &mut rng, "[MASK]")[0];
            // at least ceil(40/10) = 4 tokens held out
            assert!(e.target.len() >= 4 && e.target.len() <= 40);
        }
    }

    fn arb_sample() -> impl Strategy<Value = AnnotatedSample> {
        (1usize..=12).prop_flat_map(|len| {
            let span = (0..len).prop_flat_map(move |s| (Just(s), s + 1..=len));
            let event = (span.clone(), proptest::collection::vec(span, 0..3));
            proptest::collection::vec(event, 0..=3).prop_map(move |evs| AnnotatedSample {
                id: "p".into(),
                tokens: (0..len).map(|i| alloc::format!("w{i}")).collect(),
                events: evs
                    .into_iter()
                    .map(|((ts, te), args)| EventMention {
                        event_type: "E".into(),
                        trigger: Span::new(ts, te),
                        arguments: args
                            .into_iter()
                            .map(|(s, e)| Argument { role: "R".into(), span: Span::new(s, e) })
                            .collect(),
                    })
                    .collect(),
            })
        })
    }

    proptest! {
        #[test]
        fn fragments_match_coverage_oracle(s in arb_sample()) {
            let got: Vec<Span> = compute_adjunct_fragments(&s).into_iter().map(|f| f.span).collect();
            prop_assert_eq!(&got, &coverage_oracle(&s));
            for w in got.windows(2) {
                prop_assert!(w[0].end < w[1].start, "adjacent fragments");
            }
        }

        #[test]
        fn masking_reconstructs(s in arb_sample(), seed in any::<u64>()) {
            match select_and_mask(&s, &mut seeded(seed), LengthBounds::new(1, 12).unwrap(), "[MASK]") {
                Ok(m) => {
                    prop_assert_eq!(m.tokens_with_mask.iter().filter(|t| *t == "[MASK]").count(), 1);
                    prop_assert_eq!(m.reconstruct(), s.tokens.clone());
                }
                Err(Error::NoEligibleFragment { .. }) => {
                    prop_assert!(compute_adjunct_fragments(&s).is_empty());
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }

        #[test]
        fn training_examples_reconstruct(len in 1usize..30, seed in any::<u64>()) {
            let s: Vec<String> = (0..len).map(|i| alloc::format!("w{i}")).collect();
            let e = &generate_infill_training_examples(core::slice::from_ref(&s), &mut seeded(seed), "[MASK]")[0];
            prop_assert_eq!(e.reconstruct("[MASK]"), Some(s));
        }
    }
}
