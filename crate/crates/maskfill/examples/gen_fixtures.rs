//! Regenerates the checked-in files under `fixtures/`.
//!
//! cargo run -p maskfill --example gen_fixtures

use std::fs;
use std::path::Path;

use maskfill::format::serialize_corpus;
use maskfill::synthetic::synthetic_corpus;

pub const FIXTURE_SAMPLES: usize = 300;
pub const FIXTURE_SEED: u64 = 0;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    fs::create_dir_all(&dir).unwrap();
    let corpus = synthetic_corpus(FIXTURE_SAMPLES, FIXTURE_SEED);
    fs::write(dir.join("synthetic.jsonl"), serialize_corpus(&corpus)).unwrap();
    let plain: String = corpus.iter().map(|s| s.tokens.join(" ") + "\n").collect();
    fs::write(dir.join("sentences.txt"), plain).unwrap();
    println!("wrote {} samples to {}", corpus.len(), dir.display());
}
