//! Affinity (loss shift) and distinct-n diversity over original/augmented pairs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::augment::AugmentedSample;
use crate::corpus::Corpus;
use crate::error::Error;
use crate::infill::Scorer;

/// `loss(x) - loss(x_plus)` under `scorer`. Negative when the augmented
/// sequence is less likely than the original.
pub fn affinity<S: Scorer + ?Sized>(scorer: &S, x: &[String], x_plus: &[String]) -> Result<f64, Error> {
    let orig = scorer.score(x)?.neg_log_likelihood;
    let aug = scorer.score(x_plus)?.neg_log_likelihood;
    Ok(orig - aug)
}

/// Distinct and total `n`-gram counts, pooled over all texts. N-grams never
/// cross text boundaries.
pub fn ngram_counts(texts: &[Vec<String>], n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let mut distinct: BTreeSet<&[String]> = BTreeSet::new();
    let mut total = 0;
    for t in texts {
        for w in t.windows(n) {
            distinct.insert(w);
            total += 1;
        }
    }
    (distinct.len(), total)
}

/// Distinct `n`-grams divided by `n`-gram occurrences, pooled over all texts.
pub fn dist_n(texts: &[Vec<String>], n: usize) -> Result<f64, Error> {
    let (distinct, total) = ngram_counts(texts, n);
    if total == 0 {
        return Err(Error::EmptyInput(n));
    }
    Ok(distinct as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAffinity {
    pub source_id: String,
    pub aug_id: String,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricCounts {
    pub pairs: usize,
    pub tokens: usize,
    pub distinct_unigrams: usize,
    pub bigrams: usize,
    pub distinct_bigrams: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub affinity_mean: f64,
    pub affinity_per_pair: Vec<PairAffinity>,
    pub dist1: f64,
    pub dist2: f64,
    pub counts: MetricCounts,
}

/// Affinity for every augmented sample against its source, plus Dist-1/2 over
/// the augmented texts.
pub fn evaluate_pair_corpus<S: Scorer + ?Sized>(
    orig: &Corpus,
    aug: &[AugmentedSample],
    scorer: &S,
) -> Result<MetricsReport, Error> {
    if aug.is_empty() {
        return Err(Error::EmptyInput(1));
    }
    let mut per_pair = Vec::with_capacity(aug.len());
    for a in aug {
        let source = orig.get(&a.provenance.source_id).ok_or_else(|| Error::OrphanedSample {
            aug_id: a.sample.id.clone(),
            source_id: a.provenance.source_id.clone(),
        })?;
        per_pair.push(PairAffinity {
            source_id: source.id.clone(),
            aug_id: a.sample.id.clone(),
            tau: affinity(scorer, &source.tokens, &a.sample.tokens)?,
        });
    }
    let texts: Vec<Vec<String>> = aug.iter().map(|a| a.sample.tokens.clone()).collect();
    let (distinct_unigrams, tokens) = ngram_counts(&texts, 1);
    let (distinct_bigrams, bigrams) = ngram_counts(&texts, 2);
    let affinity_mean = per_pair.iter().map(|p| p.tau).sum::<f64>() / per_pair.len() as f64;
    Ok(MetricsReport {
        affinity_mean,
        dist1: dist_n(&texts, 1)?,
        dist2: dist_n(&texts, 2)?,
        counts: MetricCounts {
            pairs: per_pair.len(),
            tokens,
            distinct_unigrams,
            bigrams,
            distinct_bigrams,
        },
        affinity_per_pair: per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Provenance;
    use crate::corpus::fixtures::{toks, transport};
    use crate::corpus::AnnotatedSample;
    use crate::infill::{train_ngram, Score};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;
    use std::collections::HashMap;

    /// Set/count oracle over joined strings.
    fn dist_oracle(texts: &[Vec<String>], n: usize) -> Option<f64> {
        let mut counts: HashMap<std::string::String, usize> = HashMap::new();
        for t in texts {
            if t.len() < n {
                continue;
            }
            for i in 0..=t.len() - n {
                *counts.entry(t[i..i + n].join("\u{1f}")).or_default() += 1;
            }
        }
        let total: usize = counts.values().sum();
        (total > 0).then(|| counts.len() as f64 / total as f64)
    }

    #[test]
    fn dist_hand_cases() {
        assert_eq!(dist_n(&[toks("a a b")], 1).unwrap(), 2.0 / 3.0);
        assert_eq!(dist_n(&[toks("a a a")], 1).unwrap(), 1.0 / 3.0);
        assert_eq!(dist_n(&[toks("a b a b")], 2).unwrap(), 2.0 / 3.0);
        assert_eq!(dist_n(&[toks("a")], 2), Err(Error::EmptyInput(2)));
        assert_eq!(dist_n(&[], 1), Err(Error::EmptyInput(1)));
    }

    #[test]
    fn bigrams_do_not_cross_texts() {
        // "a b" + "c" has one bigram, not two
        assert_eq!(ngram_counts(&[toks("a b"), toks("c")], 2), (1, 1));
    }

    struct Table(Vec<(Vec<String>, f64)>);
    impl Scorer for Table {
        fn scorer_id(&self) -> String {
            "table".into()
        }
        fn score(&self, tokens: &[String]) -> Result<Score, Error> {
            let nll = self.0.iter().find(|(t, _)| t == tokens).map(|x| x.1).unwrap_or(0.0);
            Ok(Score { neg_log_likelihood: nll })
        }
    }

    #[test]
    fn affinity_direct_subtraction() {
        let s = Table(vec![(toks("x"), 2.5), (toks("y"), 2.586)]);
        let tau = affinity(&s, &toks("x"), &toks("y")).unwrap();
        assert!((tau - (-0.086)).abs() < 1e-12);
        assert_eq!(affinity(&s, &toks("x"), &toks("x")).unwrap(), 0.0);
    }

    #[test]
    fn affinity_with_hand_evaluated_chains() {
        // add-1 bigram over ["a b", "a c"]; space {a, b, c, </s>, <unk>}
        // loss("a b") = -ln(3/7 * 2/7 * 2/6), loss("a a") = -ln(3/7 * 1/7 * 1/7)
        // tau = ln((3/7 * 1/7 * 1/7) / (3/7 * 2/7 * 1/3)) = ln(3/14)
        let m = train_ngram(&[toks("a b"), toks("a c")], 2, 1.0).unwrap();
        let tau = affinity(&m, &toks("a b"), &toks("a a")).unwrap();
        assert!((tau - (3.0f64 / 14.0).ln()).abs() < 1e-12, "{tau}");
    }

    fn aug_of(s: &AnnotatedSample, j: usize, tokens: Vec<String>) -> AugmentedSample {
        let mut sample = s.clone();
        sample.id = alloc::format!("{}#aug{j}", s.id);
        sample.tokens = tokens;
        AugmentedSample {
            sample,
            provenance: Provenance { method: "test".into(), ..Provenance::identity(&s.id) },
        }
    }

    #[test]
    fn identity_pairs_have_zero_affinity() {
        let s = transport();
        let corpus = Corpus::new(vec![s.clone()]).unwrap();
        let m = train_ngram(&corpus.sentences(), 2, 0.01).unwrap();
        let aug = vec![AugmentedSample { sample: s.clone(), provenance: Provenance::identity(&s.id) }];
        let r = evaluate_pair_corpus(&corpus, &aug, &m).unwrap();
        assert_eq!(r.affinity_mean, 0.0);
        assert_eq!(r.counts.pairs, 1);
        assert_eq!(r.dist1, 1.0);
    }

    #[test]
    fn single_pair_propagates() {
        let mut s = transport();
        s.tokens = toks("x");
        s.events.clear();
        let corpus = Corpus::new(vec![s.clone()]).unwrap();
        let aug = vec![aug_of(&s, 0, toks("y z"))];
        let scorer = Table(vec![(toks("x"), 2.5), (toks("y z"), 2.586)]);
        let r = evaluate_pair_corpus(&corpus, &aug, &scorer).unwrap();
        assert_eq!(r.affinity_per_pair.len(), 1);
        assert_eq!(r.affinity_per_pair[0].source_id, "fig1");
        assert_eq!(r.affinity_per_pair[0].aug_id, "fig1#aug0");
        assert!((r.affinity_per_pair[0].tau + 0.086).abs() < 1e-12);
        assert_eq!(r.affinity_mean, r.affinity_per_pair[0].tau);
        assert_eq!(r.counts, MetricCounts { pairs: 1, tokens: 2, distinct_unigrams: 2, bigrams: 1, distinct_bigrams: 1 });
    }

    #[test]
    fn orphan_is_an_error() {
        let s = transport();
        let corpus = Corpus::new(vec![s.clone()]).unwrap();
        let mut a = aug_of(&s, 0, toks("q"));
        a.provenance.source_id = "missing".to_string();
        let err = evaluate_pair_corpus(&corpus, &[a], &Table(vec![])).unwrap_err();
        assert!(matches!(err, Error::OrphanedSample { .. }));
    }

    fn arb_texts() -> impl Strategy<Value = Vec<Vec<String>>> {
        let tok = prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(String::from);
        proptest::collection::vec(proptest::collection::vec(tok, 0..=10), 0..6)
    }

    proptest! {
        #[test]
        fn dist_matches_oracle(texts in arb_texts(), n in 1usize..=2) {
            match (dist_n(&texts, n), dist_oracle(&texts, n)) {
                (Ok(v), Some(o)) => prop_assert_eq!(v, o),
                (Err(Error::EmptyInput(_)), None) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn dist_is_permutation_invariant(mut texts in arb_texts(), n in 1usize..=2) {
            let before = dist_n(&texts, n);
            texts.reverse();
            prop_assert_eq!(before, dist_n(&texts, n));
        }

        #[test]
        fn repeating_texts_keeps_numerator(texts in arb_texts(), n in 1usize..=2) {
            let (d1, t1) = ngram_counts(&texts, n);
            let doubled: Vec<Vec<String>> = texts.iter().chain(texts.iter()).cloned().collect();
            let (d2, t2) = ngram_counts(&doubled, n);
            prop_assert_eq!(d1, d2);
            prop_assert_eq!(2 * t1, t2);
            if t1 > 0 && d1 == t1 {
                prop_assert_eq!(dist_n(&doubled, n).unwrap(), 0.5);
            }
        }

        #[test]
        fn affinity_is_antisymmetric(
            a in proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "q"]).prop_map(String::from), 0..8),
            b in proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "q"]).prop_map(String::from), 0..8),
        ) {
            let m = train_ngram(&[toks("a b c"), toks("b a"), toks("c c a b")], 3, 0.01).unwrap();
            let ab = affinity(&m, &a, &b).unwrap();
            let ba = affinity(&m, &b, &a).unwrap();
            prop_assert!((ab + ba).abs() < 1e-9);
        }
    }
}
