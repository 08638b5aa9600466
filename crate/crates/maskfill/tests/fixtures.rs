use std::fs;
use std::path::Path;

use maskfill::format::{parse_corpus, parse_lexicon, read_plain_sentences, serialize_corpus};
use maskfill::synthetic::synthetic_corpus;

fn fixture(name: &str) -> Vec<u8> {
    fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)).unwrap()
}

#[test]
fn checked_in_corpus_matches_generator() {
    let bytes = fixture("synthetic.jsonl");
    let c = parse_corpus(&bytes[..]).unwrap();
    assert_eq!(c.len(), 300);
    assert_eq!(serialize_corpus(&synthetic_corpus(300, 0)), bytes, "run `cargo run --example gen_fixtures`");
    let plain = read_plain_sentences(&fixture("sentences.txt")[..]).unwrap();
    assert_eq!(plain, c.sentences());
}

#[test]
fn lexicon_fixture_parses() {
    let lex = parse_lexicon(&fixture("lexicon.tsv")[..]).unwrap();
    assert_eq!(lex["said"], ["stated", "declared", "told"]);
}
