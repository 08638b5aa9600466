//! Newline-delimited record formats.
//!
//! Every record is one JSON object per line. Output is canonical: object keys
//! sorted, no insignificant whitespace, `\n` after each record. Spans are
//! encoded as `[start, end]` pairs.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use maskfill_core::augment::{AugmentedSample, Lexicon, Provenance};
use maskfill_core::fragmenter::{Fragment, InfillTrainingExample, MaskedSample};
use maskfill_core::infill::NgramModel;
use maskfill_core::metrics::MetricsReport;
use maskfill_core::{AnnotatedSample, Argument, Corpus, EventMention, Span};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Writes `v` with object keys sorted at every level.
pub fn write_canonical(out: &mut String, v: &Value) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(out, &map[k]);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(out, item);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn canonical_string<T: Serialize>(record: &T) -> String {
    let value = serde_json::to_value(record).expect("records serialize to JSON");
    let mut out = String::new();
    write_canonical(&mut out, &value);
    out
}

/// Canonical records, one per line.
pub fn canonical_lines<T: Serialize>(records: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        out.extend_from_slice(canonical_string(&r).as_bytes());
        out.push(b'\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArgumentRecord {
    role: String,
    span: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    #[serde(rename = "type")]
    event_type: String,
    trigger: [usize; 2],
    #[serde(default)]
    arguments: Vec<ArgumentRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceRecord {
    source_id: String,
    method: String,
    masked_range: Option<[usize; 2]>,
    fill_len: Option<usize>,
    seed: u64,
    backend_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    id: String,
    tokens: Vec<String>,
    #[serde(default)]
    events: Vec<EventRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<ProvenanceRecord>,
}

fn span_pair(s: Span) -> [usize; 2] {
    [s.start, s.end]
}

fn pair_span(p: [usize; 2]) -> Span {
    Span::new(p[0], p[1])
}

fn events_to_records(events: &[EventMention]) -> Vec<EventRecord> {
    events
        .iter()
        .map(|e| EventRecord {
            event_type: e.event_type.clone(),
            trigger: span_pair(e.trigger),
            arguments: e
                .arguments
                .iter()
                .map(|a| ArgumentRecord { role: a.role.clone(), span: span_pair(a.span) })
                .collect(),
        })
        .collect()
}

fn records_to_events(events: Vec<EventRecord>) -> Vec<EventMention> {
    events
        .into_iter()
        .map(|e| EventMention {
            event_type: e.event_type,
            trigger: pair_span(e.trigger),
            arguments: e
                .arguments
                .into_iter()
                .map(|a| Argument { role: a.role, span: pair_span(a.span) })
                .collect(),
        })
        .collect()
}

fn sample_record(s: &AnnotatedSample, provenance: Option<&Provenance>) -> SampleRecord {
    SampleRecord {
        id: s.id.clone(),
        tokens: s.tokens.clone(),
        events: events_to_records(&s.events),
        provenance: provenance.map(|p| ProvenanceRecord {
            source_id: p.source_id.clone(),
            method: p.method.clone(),
            masked_range: p.masked_range.map(span_pair),
            fill_len: p.fill_len,
            seed: p.seed,
            backend_id: p.backend_id.clone(),
        }),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn lines<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, String)>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(Error::Parse { line: i + 1, message: e.to_string() })),
    })
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: usize, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse { line, message: format!("malformed record: {e}") })
}

/// A parsed line: the sample plus its provenance, if any.
pub struct ParsedRecord {
    pub line: usize,
    pub sample: AnnotatedSample,
    pub provenance: Option<Provenance>,
}

/// Parses records without validating them.
pub fn read_records<R: BufRead>(input: R) -> impl Iterator<Item = Result<ParsedRecord>> {
    lines(input).map(|item| {
        let (line, text) = item?;
        let rec: SampleRecord = parse_line(line, &text)?;
        let provenance = rec.provenance.map(|p| Provenance {
            source_id: p.source_id,
            method: p.method,
            masked_range: p.masked_range.map(pair_span),
            fill_len: p.fill_len,
            seed: p.seed,
            backend_id: p.backend_id,
        });
        Ok(ParsedRecord {
            line,
            sample: AnnotatedSample { id: rec.id, tokens: rec.tokens, events: records_to_events(rec.events) },
            provenance,
        })
    })
}

/// Parses and validates a corpus file; stops at the first bad record.
pub fn parse_corpus<R: BufRead>(input: R) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for rec in read_records(input) {
        let rec = rec?;
        let line = rec.line;
        corpus
            .push(rec.sample)
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
    }
    Ok(corpus)
}

/// Parses an augmented corpus. Records without a provenance object are
/// paired with the original sample of the same id.
pub fn parse_augmented<R: BufRead>(input: R) -> Result<Vec<AugmentedSample>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in read_records(input) {
        let rec = rec?;
        let line = rec.line;
        let violations = rec.sample.validate();
        if !violations.is_empty() {
            let e = maskfill_core::Error::InvalidSample { id: rec.sample.id, violations };
            return Err(Error::Parse { line, message: e.to_string() });
        }
        if !seen.insert(rec.sample.id.clone()) {
            return Err(Error::Parse {
                line,
                message: maskfill_core::Error::DuplicateId(rec.sample.id).to_string(),
            });
        }
        let provenance = rec.provenance.unwrap_or_else(|| Provenance::identity(&rec.sample.id));
        out.push(AugmentedSample { sample: rec.sample, provenance });
    }
    Ok(out)
}

pub fn serialize_corpus(c: &Corpus) -> Vec<u8> {
    canonical_lines(c.iter().map(|s| sample_record(s, None)))
}

pub fn serialize_augmented(samples: &[AugmentedSample]) -> Vec<u8> {
    canonical_lines(samples.iter().map(|a| sample_record(&a.sample, Some(&a.provenance))))
}

pub fn write_corpus<W: Write>(mut w: W, c: &Corpus) -> std::io::Result<()> {
    w.write_all(&serialize_corpus(c))
}

#[derive(Serialize)]
struct MaskedRecord<'a> {
    source_id: &'a str,
    tokens_with_mask: &'a [String],
    masked_range: [usize; 2],
    target: &'a [String],
    events: Vec<EventRecord>,
}

pub fn serialize_masked(samples: &[MaskedSample]) -> Vec<u8> {
    canonical_lines(samples.iter().map(|m| MaskedRecord {
        source_id: &m.source_id,
        tokens_with_mask: &m.tokens_with_mask,
        masked_range: span_pair(m.masked_range),
        target: &m.target,
        events: events_to_records(&m.events),
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainingRecord {
    masked_text: Vec<String>,
    target: Vec<String>,
}

pub fn serialize_training_examples(examples: &[InfillTrainingExample]) -> Vec<u8> {
    canonical_lines(examples.iter().map(|e| TrainingRecord {
        masked_text: e.masked_text.clone(),
        target: e.target.clone(),
    }))
}

pub fn parse_training_examples<R: BufRead>(input: R) -> Result<Vec<InfillTrainingExample>> {
    lines(input)
        .map(|item| {
            let (line, text) = item?;
            let r: TrainingRecord = parse_line(line, &text)?;
            Ok(InfillTrainingExample { masked_text: r.masked_text, target: r.target })
        })
        .collect()
}

#[derive(Serialize)]
struct FragmentsRecord<'a> {
    id: &'a str,
    fragments: Vec<[usize; 2]>,
}

pub fn serialize_fragments<'a>(rows: impl IntoIterator<Item = (&'a str, Vec<Fragment>)>) -> Vec<u8> {
    canonical_lines(rows.into_iter().map(|(id, frags)| FragmentsRecord {
        id,
        fragments: frags.iter().map(|f| span_pair(f.span)).collect(),
    }))
}

/// Whitespace-tokenized sentences, one per non-blank line.
pub fn read_plain_sentences<R: BufRead>(input: R) -> Result<Vec<Vec<String>>> {
    lines(input)
        .map(|item| item.map(|(_, l)| l.split_whitespace().map(str::to_string).collect()))
        .collect()
}

/// `headword<TAB>syn1,syn2,...` per line. Repeated headwords accumulate.
pub fn parse_lexicon<R: BufRead>(input: R) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for item in lines(input) {
        let (line, text) = item?;
        let (head, syns) = text.split_once('\t').ok_or_else(|| Error::Parse {
            line,
            message: "expected `headword<TAB>synonym,...`".into(),
        })?;
        let head = head.trim();
        if head.is_empty() {
            return Err(Error::Parse { line, message: "empty headword".into() });
        }
        let entry = lex.entry(head.to_string()).or_default();
        entry.extend(syns.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string));
    }
    Ok(lex)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountRecord {
    context: Vec<String>,
    next: String,
    count: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    format: String,
    order: usize,
    smoothing: f64,
    counts: Vec<CountRecord>,
}

const MODEL_FORMAT: &str = "maskfill-ngram-v1";

pub fn serialize_model(m: &NgramModel) -> Vec<u8> {
    let rec = ModelRecord {
        format: MODEL_FORMAT.into(),
        order: m.order(),
        smoothing: m.smoothing(),
        counts: m
            .counts()
            .map(|(c, t, n)| CountRecord { context: c.to_vec(), next: t.to_string(), count: n })
            .collect(),
    };
    canonical_lines([rec])
}

pub fn parse_model(bytes: &[u8]) -> Result<NgramModel> {
    let rec: ModelRecord = serde_json::from_slice(bytes)
        .map_err(|e| Error::Parse { line: e.line(), message: format!("malformed model: {e}") })?;
    if rec.format != MODEL_FORMAT {
        return Err(Error::Parse { line: 1, message: format!("unsupported model format `{}`", rec.format) });
    }
    Ok(NgramModel::from_counts(
        rec.order,
        rec.smoothing,
        rec.counts.into_iter().map(|c| (c.context, c.next, c.count)),
    )?)
}

#[derive(Serialize)]
struct PairRecord<'a> {
    source_id: &'a str,
    aug_id: &'a str,
    tau: f64,
}

#[derive(Serialize)]
struct CountsRecord {
    pairs: usize,
    tokens: usize,
    distinct_unigrams: usize,
    bigrams: usize,
    distinct_bigrams: usize,
}

#[derive(Serialize)]
struct ReportRecord<'a> {
    affinity_mean: f64,
    affinity_per_pair: Vec<PairRecord<'a>>,
    dist1: f64,
    dist2: f64,
    counts: CountsRecord,
    scorer: &'a str,
}

pub fn serialize_report(r: &MetricsReport, scorer_id: &str) -> Vec<u8> {
    let rec = ReportRecord {
        affinity_mean: r.affinity_mean,
        affinity_per_pair: r
            .affinity_per_pair
            .iter()
            .map(|p| PairRecord { source_id: &p.source_id, aug_id: &p.aug_id, tau: p.tau })
            .collect(),
        dist1: r.dist1,
        dist2: r.dist2,
        counts: CountsRecord {
            pairs: r.counts.pairs,
            tokens: r.counts.tokens,
            distinct_unigrams: r.counts.distinct_unigrams,
            bigrams: r.counts.bigrams,
            distinct_bigrams: r.counts.distinct_bigrams,
        },
        scorer: scorer_id,
    };
    canonical_lines([rec])
}

/// Aligned plain-text summary of a report.
pub fn report_table(r: &MetricsReport) -> String {
    let rows = [
        ("pairs", r.counts.pairs.to_string()),
        ("affinity", format!("{:.3}", r.affinity_mean)),
        ("dist-1", format!("{:.3}", r.dist1)),
        ("dist-2", format!("{:.3}", r.dist2)),
        ("tokens", r.counts.tokens.to_string()),
        ("distinct unigrams", r.counts.distinct_unigrams.to_string()),
        ("bigrams", r.counts.bigrams.to_string()),
        ("distinct bigrams", r.counts.distinct_bigrams.to_string()),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v:>10}\n")).collect()
}
