use std::fs;

use maskfill::export::{export_experiment, manifest_role, sha256_hex, CorpusRole, Manifest, MANIFEST_FILE};
use maskfill::format::parse_corpus;
use maskfill::maskfill_core::harness::{SplitSize, SplitSpec};
use maskfill::synthetic::synthetic_corpus;
use maskfill::Error;

#[test]
fn presets_write_four_files_and_manifest() {
    let c = synthetic_corpus(8200, 2);
    let dir = tempfile::tempdir().unwrap();
    let m = export_experiment(&c, &SplitSpec::low_resource_presets(5), dir.path(), CorpusRole::Train).unwrap();

    let names: Vec<&str> = m.splits.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["S", "M", "L", "F"]);
    let sizes: Vec<usize> = m.splits.iter().map(|s| s.size).collect();
    assert_eq!(sizes, [1000, 4000, 8000, 8200]);
    assert_eq!(m.digest_algorithm, "sha256");

    let mut files: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(files, ["F.jsonl", "L.jsonl", "M.jsonl", "S.jsonl", MANIFEST_FILE]);

    for entry in &m.splits {
        let bytes = fs::read(dir.path().join(&entry.file)).unwrap();
        assert_eq!(sha256_hex(&bytes), entry.digest);
        assert_eq!(parse_corpus(&bytes[..]).unwrap().len(), entry.size);
        assert_eq!(entry.seed, 5);
    }
    assert_eq!(Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap(), m);
}

#[test]
fn rerun_gives_identical_digests() {
    let c = synthetic_corpus(500, 2);
    let specs = vec![SplitSpec::new("a", SplitSize::Count(100), 1), SplitSpec::new("b", SplitSize::Count(100), 2)];
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = export_experiment(&c, &specs, d1.path(), CorpusRole::Train).unwrap();
    let m2 = export_experiment(&c, &specs, d2.path(), CorpusRole::Train).unwrap();
    assert_eq!(m1, m2);
    assert_ne!(m1.splits[0].digest, m1.splits[1].digest);
    assert_eq!(fs::read(d1.path().join(MANIFEST_FILE)).unwrap(), fs::read(d2.path().join(MANIFEST_FILE)).unwrap());
}

#[test]
fn empty_specs_give_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = export_experiment(&synthetic_corpus(3, 0), &[], dir.path(), CorpusRole::Train).unwrap();
    assert!(m.splits.is_empty());
    let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(text, "{\"digest_algorithm\":\"sha256\",\"role\":\"train\",\"splits\":[]}\n");
}

#[test]
fn protected_roles_are_only_copied_whole() {
    let c = synthetic_corpus(50, 0);
    let dir = tempfile::tempdir().unwrap();
    let err = export_experiment(&c, &[SplitSpec::new("S", SplitSize::Count(10), 0)], dir.path(), CorpusRole::Dev)
        .unwrap_err();
    assert!(matches!(err, Error::ProtectedSplit(_)));

    let m = export_experiment(&c, &[SplitSpec::new("dev", SplitSize::All, 0)], dir.path(), CorpusRole::Dev).unwrap();
    assert_eq!(m.role, CorpusRole::Dev);
    assert_eq!(manifest_role(&dir.path().join("dev.jsonl")).unwrap(), Some(CorpusRole::Dev));
    assert_eq!(manifest_role(&dir.path().join("other.jsonl")).unwrap(), None);
}

#[test]
fn oversized_split_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let err = export_experiment(&synthetic_corpus(5, 0), &[SplitSpec::new("L", SplitSize::Count(8), 0)], &out, CorpusRole::Train)
        .unwrap_err();
    assert!(err.to_string().contains("8"), "{err}");
    assert!(!out.join("L.jsonl").exists());
}

#[test]
fn io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = export_experiment(&synthetic_corpus(2, 0), &[], &blocker.join("sub"), CorpusRole::Train).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("file"), "{err}");
}
