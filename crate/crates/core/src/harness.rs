//! Deterministic low-resource subsets of a training corpus.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::corpus::Corpus;
use crate::error::Error;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSize {
    Count(usize),
    All,
}

impl fmt::Display for SplitSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSize::Count(n) => write!(f, "{n}"),
            SplitSize::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub name: String,
    pub size: SplitSize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(name: &str, size: SplitSize, seed: u64) -> Self {
        SplitSpec { name: name.to_string(), size, seed }
    }

    /// S/M/L subsets of 1,000, 4,000 and 8,000 samples plus the full set F.
    pub fn low_resource_presets(seed: u64) -> Vec<SplitSpec> {
        alloc::vec![
            SplitSpec::new("S", SplitSize::Count(1000), seed),
            SplitSpec::new("M", SplitSize::Count(4000), seed),
            SplitSpec::new("L", SplitSize::Count(8000), seed),
            SplitSpec::new("F", SplitSize::All, seed),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseSplitError(pub String);

impl fmt::Display for ParseSplitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid split `{}`, expected NAME=SIZE or NAME=all", self.0)
    }
}

impl core::error::Error for ParseSplitError {}

/// Parses `NAME=SIZE` or `NAME=all`; the seed is left at zero for the caller to set.
impl FromStr for SplitSpec {
    type Err = ParseSplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSplitError(s.to_string());
        let (name, size) = s.split_once('=').ok_or_else(err)?;
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(err());
        }
        let size = if size.eq_ignore_ascii_case("all") {
            SplitSize::All
        } else {
            SplitSize::Count(size.parse().map_err(|_| err())?)
        };
        Ok(SplitSpec::new(name, size, 0))
    }
}

/// Indices of a uniform sample of `k` out of `n`, via a partial Fisher-Yates
/// shuffle, returned in ascending order.
fn sample_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Exactly `spec.size` samples drawn without replacement, in corpus order.
pub fn subsample(c: &Corpus, spec: &SplitSpec) -> Result<Corpus, Error> {
    let k = match spec.size {
        SplitSize::All => return Ok(c.clone()),
        SplitSize::Count(k) => k,
    };
    if k > c.len() {
        return Err(Error::SizeExceedsCorpus { name: spec.name.clone(), size: k, available: c.len() });
    }
    let mut rng = seeded(spec.seed);
    let picked = sample_indices(c.len(), k, &mut rng)
        .into_iter()
        .map(|i| c.samples()[i].clone())
        .collect();
    Corpus::new(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AnnotatedSample;
    use alloc::format;
    use alloc::vec;
    use std::collections::BTreeSet;

    fn corpus(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| AnnotatedSample { id: format!("s{i:03}"), tokens: vec![format!("w{i}")], events: vec![] })
                .collect(),
        )
        .unwrap()
    }

    fn ids(c: &Corpus) -> Vec<String> {
        c.iter().map(|s| s.id.clone()).collect()
    }

    /// Shuffles the id list itself with the same draws, then filters the
    /// corpus by membership.
    fn shuffle_oracle(c: &Corpus, k: usize, seed: u64) -> Vec<String> {
        let mut pool: Vec<String> = ids(c);
        let mut rng = seeded(seed);
        let n = pool.len();
        for i in 0..k {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        let chosen: BTreeSet<String> = pool.into_iter().take(k).collect();
        ids(c).into_iter().filter(|id| chosen.contains(id)).collect()
    }

    #[test]
    fn full_size_is_identity() {
        let c = corpus(20);
        assert_eq!(subsample(&c, &SplitSpec::new("x", SplitSize::Count(20), 4)).unwrap(), c);
        assert_eq!(subsample(&c, &SplitSpec::new("F", SplitSize::All, 4)).unwrap(), c);
    }

    #[test]
    fn seeded_and_matches_oracle() {
        let c = corpus(100);
        let a = subsample(&c, &SplitSpec::new("S", SplitSize::Count(10), 1)).unwrap();
        let b = subsample(&c, &SplitSpec::new("S", SplitSize::Count(10), 1)).unwrap();
        assert_eq!(a, b);
        let other = subsample(&c, &SplitSpec::new("S", SplitSize::Count(10), 2)).unwrap();
        assert_ne!(ids(&a), ids(&other));
        for seed in 0..50 {
            for k in [0, 1, 10, 57, 100] {
                let got = subsample(&c, &SplitSpec::new("S", SplitSize::Count(k), seed)).unwrap();
                assert_eq!(ids(&got), shuffle_oracle(&c, k, seed));
                let set: BTreeSet<_> = ids(&got).into_iter().collect();
                assert_eq!(set.len(), k);
                let mut sorted = ids(&got);
                sorted.sort();
                assert_eq!(sorted, ids(&got), "order preserved");
            }
        }
    }

    #[test]
    fn too_large() {
        let err = subsample(&corpus(5), &SplitSpec::new("L", SplitSize::Count(6), 0)).unwrap_err();
        assert_eq!(err, Error::SizeExceedsCorpus { name: "L".into(), size: 6, available: 5 });
    }

    #[test]
    fn parse_specs() {
        assert_eq!("S=1000".parse::<SplitSpec>().unwrap(), SplitSpec::new("S", SplitSize::Count(1000), 0));
        assert_eq!("F=all".parse::<SplitSpec>().unwrap().size, SplitSize::All);
        assert!("S".parse::<SplitSpec>().is_err());
        assert!("=3".parse::<SplitSpec>().is_err());
        assert!("S=x".parse::<SplitSpec>().is_err());
        assert!("../S=3".parse::<SplitSpec>().is_err());
        assert_eq!(SplitSpec::low_resource_presets(7).len(), 4);
    }
}
