use crate::ir::{tokenize_lenient, Lang, Token};
use crate::util::fnv1a;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_DIM: usize = 1 << 15;

/// Sparse hashed counts, sorted by index, all counts positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Unigram features hash `u:<lexeme>`, bigram features hash
/// `b:<first>\x1f<second>` over consecutive non-layout tokens. Indices
/// are the low bits of the 64-bit FNV-1a hash.
pub fn featurize(tokens: &[Token], dim: usize) -> FeatureVector {
    assert!(dim.is_power_of_two(), "feature dimension must be a power of two");
    let mask = (dim - 1) as u64;
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let lexemes: Vec<&str> = tokens.iter().filter(|t| !t.kind.is_layout()).map(|t| t.text.as_str()).collect();
    for w in &lexemes {
        let h = fnv1a(b"u:".iter().copied().chain(w.bytes()));
        *counts.entry((h & mask) as u32).or_default() += 1.0;
    }
    for pair in lexemes.windows(2) {
        let h = fnv1a(b"b:".iter().copied().chain(pair[0].bytes()).chain([0x1f]).chain(pair[1].bytes()));
        *counts.entry((h & mask) as u32).or_default() += 1.0;
    }
    FeatureVector { dim, entries: counts.into_iter().collect() }
}

/// Featurize source text that may not parse.
pub fn featurize_source(source: &str, lang: Lang, dim: usize) -> FeatureVector {
    featurize(&tokenize_lenient(source, lang), dim)
}
