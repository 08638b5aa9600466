//! Deterministic synthetic corpus in the event schema, used as a fixture in
//! place of licensed news data.

use maskfill_core::rng::seeded;
use maskfill_core::{AnnotatedSample, Argument, Corpus, EventMention, Span};
use rand::Rng;

const PEOPLE: &[&str] = &[
    "Mike",
    "the president",
    "two soldiers",
    "Ahmed Chalabi",
    "the rebels",
    "a police officer",
    "the militants",
    "Jane Smith",
    "the delegation",
    "three civilians",
    "the minister",
    "US troops",
];

const PLACES: &[&str] = &[
    "this town",
    "Baghdad",
    "the capital",
    "a nearby village",
    "Kabul",
    "the border",
    "Gaza",
    "the northern province",
    "Basra",
    "the airport",
];

const TIMES: &[&str] = &["yesterday", "Monday", "last week", "2003", "early Tuesday", "overnight", "this morning"];

const TARGETS: &[&str] = &["the convoy", "a checkpoint", "the embassy", "an army base", "the bridge", "a market"];

const PREFIXES: &[&str] = &[
    "Officials said",
    "According to witnesses ,",
    "In a surprise move ,",
    "Reports indicate that",
    "As expected ,",
    "Once again ,",
    "Late in the evening ,",
];

const MIDDLES: &[&str] = &["reportedly", "quickly", "finally", "apparently", "briefly"];

const SUFFIXES: &[&str] = &[
    ", the police said",
    ", sources reported",
    "despite repeated warnings",
    "after a long delay",
    "according to local media",
    "without any notice",
    ", a spokesman told reporters",
];

/// (trigger, optional preposition before the destination)
const TRANSPORT: &[(&str, Option<&str>)] = &[
    ("left", None),
    ("traveled", Some("to")),
    ("moved", Some("to")),
    ("arrived", Some("in")),
    ("returned", Some("to")),
];

const ATTACK: &[&str] = &["attacked", "bombed", "raided", "shelled", "ambushed"];
const DIE: &[&str] = &["died", "was killed", "were killed"];
const MEET: &[&str] = &["met", "talked", "negotiated"];

struct Builder {
    tokens: Vec<String>,
}

impl Builder {
    fn push(&mut self, phrase: &str) -> Span {
        let start = self.tokens.len();
        self.tokens.extend(phrase.split_whitespace().map(str::to_string));
        Span::new(start, self.tokens.len())
    }

    fn arg(&mut self, role: &str, phrase: &str) -> Argument {
        Argument { role: role.to_string(), span: self.push(phrase) }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn maybe_push<R: Rng>(b: &mut Builder, rng: &mut R, p: f64, xs: &[&str]) {
    if rng.random_bool(p) {
        let phrase = pick(rng, xs);
        b.push(phrase);
    }
}

fn time_arg<R: Rng>(b: &mut Builder, rng: &mut R, args: &mut Vec<Argument>) {
    if rng.random_bool(0.5) {
        let t = pick(rng, TIMES);
        if t.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            b.push("in");
        } else if t == "Monday" {
            b.push("on");
        }
        args.push(b.arg("Time", t));
    }
}

fn event<R: Rng>(b: &mut Builder, rng: &mut R) -> EventMention {
    let mut args = Vec::new();
    let (event_type, trigger) = match rng.random_range(0..4) {
        0 => {
            args.push(b.arg("Artifact", pick(rng, PEOPLE)));
            maybe_push(b, rng, 0.2, MIDDLES);
            let (word, prep) = TRANSPORT[rng.random_range(0..TRANSPORT.len())];
            let trigger = b.push(word);
            if let Some(p) = prep {
                b.push(p);
            }
            args.push(b.arg("Destination", pick(rng, PLACES)));
            time_arg(b, rng, &mut args);
            ("Transport", trigger)
        }
        1 => {
            args.push(b.arg("Attacker", pick(rng, PEOPLE)));
            maybe_push(b, rng, 0.2, MIDDLES);
            let trigger = b.push(pick(rng, ATTACK));
            args.push(b.arg("Target", pick(rng, TARGETS)));
            if rng.random_bool(0.6) {
                b.push("in");
                args.push(b.arg("Place", pick(rng, PLACES)));
            }
            time_arg(b, rng, &mut args);
            ("Attack", trigger)
        }
        2 => {
            args.push(b.arg("Victim", pick(rng, PEOPLE)));
            let trigger = b.push(pick(rng, DIE));
            if rng.random_bool(0.6) {
                b.push("in");
                args.push(b.arg("Place", pick(rng, PLACES)));
            }
            time_arg(b, rng, &mut args);
            ("Die", trigger)
        }
        _ => {
            args.push(b.arg("Entity", pick(rng, PEOPLE)));
            maybe_push(b, rng, 0.2, MIDDLES);
            let trigger = b.push(pick(rng, MEET));
            b.push("with");
            args.push(b.arg("Entity", pick(rng, PEOPLE)));
            if rng.random_bool(0.4) {
                b.push("in");
                args.push(b.arg("Place", pick(rng, PLACES)));
            }
            time_arg(b, rng, &mut args);
            ("Meet", trigger)
        }
    };
    EventMention { event_type: event_type.to_string(), trigger, arguments: args }
}

fn sample<R: Rng>(id: String, rng: &mut R) -> AnnotatedSample {
    let mut b = Builder { tokens: Vec::new() };
    let mut events = Vec::new();
    let roll: f64 = rng.random();
    if roll < 0.05 {
        b.push(pick(rng, PREFIXES));
        b.push("nothing happened");
        maybe_push(&mut b, rng, 0.5, SUFFIXES);
    } else {
        maybe_push(&mut b, rng, 0.35, PREFIXES);
        events.push(event(&mut b, rng));
        if roll > 0.8 {
            b.push(if rng.random_bool(0.5) { "and" } else { ", while" });
            events.push(event(&mut b, rng));
        }
        maybe_push(&mut b, rng, 0.4, SUFFIXES);
    }
    b.push(".");
    AnnotatedSample { id, tokens: b.tokens, events }
}

/// `n` valid samples with ids `syn-00000`, `syn-00001`, ...
pub fn synthetic_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = seeded(seed);
    let samples = (0..n).map(|i| sample(format!("syn-{i:05}"), &mut rng)).collect();
    Corpus::new(samples).expect("generated samples are valid and uniquely named")
}
