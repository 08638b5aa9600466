//! Span-annotated event samples and their validation.
//!
//! Spans are half-open token ranges over a pre-tokenized sentence. A sample is
//! valid when every token is a non-empty string without whitespace, every span
//! is non-empty and inside the sentence, labels are non-empty, and no event's
//! trigger overlaps one of its own arguments. Mentions of *different* events
//! may overlap freely.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Argument {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventMention {
    pub event_type: String,
    pub trigger: Span,
    pub arguments: Vec<Argument>,
}

impl EventMention {
    /// Trigger followed by argument spans.
    pub fn spans(&self) -> impl Iterator<Item = Span> + '_ {
        core::iter::once(self.trigger).chain(self.arguments.iter().map(|a| a.span))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSample {
    pub id: String,
    pub tokens: Vec<String>,
    pub events: Vec<EventMention>,
}

impl AnnotatedSample {
    /// Every trigger and argument span of every event.
    pub fn event_spans(&self) -> impl Iterator<Item = Span> + '_ {
        self.events.iter().flat_map(EventMention::spans)
    }

    /// Tokens under `span`, or `None` when the span is out of range.
    pub fn surface(&self, span: Span) -> Option<&[String]> {
        if span.start <= span.end && span.end <= self.tokens.len() {
            Some(&self.tokens[span.start..span.end])
        } else {
            None
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_sample(self)
    }
}

/// Location of a span inside a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanField {
    Trigger { event: usize },
    Argument { event: usize, argument: usize },
}

impl fmt::Display for SpanField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpanField::Trigger { event } => write!(f, "events[{event}].trigger"),
            SpanField::Argument { event, argument } => {
                write!(f, "events[{event}].arguments[{argument}].span")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptySentence,
    EmptyToken { index: usize },
    WhitespaceInToken { index: usize },
    EmptySpan { field: SpanField, span: Span },
    SpanOutOfBounds { field: SpanField, span: Span, len: usize },
    EmptyEventType { event: usize },
    EmptyRole { event: usize, argument: usize },
    TriggerOverlapsArgument { event: usize, argument: usize, trigger: Span, span: Span },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySentence => f.write_str("tokens: sentence has no tokens"),
            Violation::EmptyToken { index } => write!(f, "tokens[{index}]: empty token"),
            Violation::WhitespaceInToken { index } => {
                write!(f, "tokens[{index}]: token contains whitespace")
            }
            Violation::EmptySpan { field, span } => write!(f, "{field}: empty span {span}"),
            Violation::SpanOutOfBounds { field, span, len } => {
                write!(f, "{field}: span {span} out of bounds for {len} tokens")
            }
            Violation::EmptyEventType { event } => write!(f, "events[{event}].type: empty label"),
            Violation::EmptyRole { event, argument } => {
                write!(f, "events[{event}].arguments[{argument}].role: empty label")
            }
            Violation::TriggerOverlapsArgument { event, argument, trigger, span } => write!(
                f,
                "events[{event}]: trigger {trigger} overlaps arguments[{argument}] {span}"
            ),
        }
    }
}

/// Lists every invariant the sample breaks; empty when the sample is valid.
pub fn validate_sample(s: &AnnotatedSample) -> Vec<Violation> {
    let mut out = Vec::new();
    let len = s.tokens.len();
    if len == 0 {
        out.push(Violation::EmptySentence);
    }
    for (index, tok) in s.tokens.iter().enumerate() {
        if tok.is_empty() {
            out.push(Violation::EmptyToken { index });
        } else if tok.chars().any(char::is_whitespace) {
            out.push(Violation::WhitespaceInToken { index });
        }
    }

    let check_span = |field: SpanField, span: Span, out: &mut Vec<Violation>| {
        if span.is_empty() {
            out.push(Violation::EmptySpan { field, span });
        } else if span.end > len {
            out.push(Violation::SpanOutOfBounds { field, span, len });
        }
    };

    for (ei, ev) in s.events.iter().enumerate() {
        if ev.event_type.is_empty() {
            out.push(Violation::EmptyEventType { event: ei });
        }
        check_span(SpanField::Trigger { event: ei }, ev.trigger, &mut out);
        for (ai, arg) in ev.arguments.iter().enumerate() {
            if arg.role.is_empty() {
                out.push(Violation::EmptyRole { event: ei, argument: ai });
            }
            check_span(SpanField::Argument { event: ei, argument: ai }, arg.span, &mut out);
            if ev.trigger.overlaps(&arg.span) {
                out.push(Violation::TriggerOverlapsArgument {
                    event: ei,
                    argument: ai,
                    trigger: ev.trigger,
                    span: arg.span,
                });
            }
        }
    }
    out
}

/// Ordered, id-unique collection of valid samples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    samples: Vec<AnnotatedSample>,
    ids: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(samples: Vec<AnnotatedSample>) -> Result<Self, Error> {
        let mut corpus = Corpus::default();
        for s in samples {
            corpus.push(s)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, sample: AnnotatedSample) -> Result<(), Error> {
        let violations = validate_sample(&sample);
        if !violations.is_empty() {
            return Err(Error::InvalidSample { id: sample.id, violations });
        }
        if self.ids.contains_key(&sample.id) {
            return Err(Error::DuplicateId(sample.id));
        }
        self.ids.insert(sample.id.clone(), self.samples.len());
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[AnnotatedSample] {
        &self.samples
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.ids.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedSample> {
        self.ids.get(id).map(|&i| &self.samples[i])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<AnnotatedSample> {
        self.samples
    }

    pub fn iter(&self) -> core::slice::Iter<'_, AnnotatedSample> {
        self.samples.iter()
    }

    /// Sentences as plain token lists, e.g. for training an n-gram scorer.
    pub fn sentences(&self) -> Vec<Vec<String>> {
        self.samples.iter().map(|s| s.tokens.clone()).collect()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a AnnotatedSample;
    type IntoIter = core::slice::Iter<'a, AnnotatedSample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    pub fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(ToString::to_string).collect()
    }

    pub fn arg(role: &str, start: usize, end: usize) -> Argument {
        Argument { role: role.to_string(), span: Span::new(start, end) }
    }

    /// "Mike left this town yesterday ." with a Transport event on "left".
    pub fn transport() -> AnnotatedSample {
        AnnotatedSample {
            id: "fig1".to_string(),
            tokens: toks("Mike left this town yesterday ."),
            events: vec![EventMention {
                event_type: "Transport".to_string(),
                trigger: Span::new(1, 2),
                arguments: vec![
                    arg("Artifact", 0, 1),
                    arg("Destination", 2, 4),
                    arg("Time", 4, 5),
                ],
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn transport_sample_is_valid() {
        assert_eq!(validate_sample(&transport()), vec![]);
    }

    #[test]
    fn trigger_argument_overlap_is_one_violation() {
        let mut s = transport();
        s.events[0].arguments = vec![arg("Artifact", 1, 3)];
        let v = validate_sample(&s);
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v[0],
            Violation::TriggerOverlapsArgument { event: 0, argument: 0, .. }
        ));
    }

    #[test]
    fn token_with_space_is_one_violation() {
        let mut s = transport();
        s.tokens[2] = "two words".to_string();
        assert_eq!(validate_sample(&s), vec![Violation::WhitespaceInToken { index: 2 }]);
    }

    #[test]
    fn out_of_bounds_trigger_names_field() {
        let mut s = transport();
        s.events[0].trigger = Span::new(5, 7);
        let v = validate_sample(&s);
        assert_eq!(
            v,
            vec![Violation::SpanOutOfBounds {
                field: SpanField::Trigger { event: 0 },
                span: Span::new(5, 7),
                len: 6
            }]
        );
        assert_eq!(v[0].to_string(), "events[0].trigger: span [5,7) out of bounds for 6 tokens");
    }

    #[test]
    fn overlap_across_events_is_allowed() {
        let mut s = transport();
        s.events.push(EventMention {
            event_type: "Movement".to_string(),
            trigger: Span::new(0, 1),
            arguments: vec![arg("Agent", 1, 2)],
        });
        assert!(validate_sample(&s).is_empty());
    }

    #[test]
    fn empty_labels_and_spans() {
        let mut s = transport();
        s.events[0].event_type.clear();
        s.events[0].arguments[0].role.clear();
        s.events[0].arguments[1].span = Span::new(3, 3);
        let v = validate_sample(&s);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn corpus_rejects_duplicates_and_invalid() {
        let err = Corpus::new(vec![transport(), transport()]).unwrap_err();
        assert_eq!(err, Error::DuplicateId("fig1".to_string()));

        let mut bad = transport();
        bad.events[0].trigger = Span::new(5, 7);
        match Corpus::new(vec![bad]).unwrap_err() {
            Error::InvalidSample { id, violations } => {
                assert_eq!(id, "fig1");
                assert_eq!(violations.len(), 1);
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
