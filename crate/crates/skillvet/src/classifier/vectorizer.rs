//! Tokenization and the 1/2/3-gram binary tf-idf vectorizer.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledSentence;
use crate::error::{Error, Result};

/// Splits a sentence on whitespace, lowercasing and stripping punctuation
/// glued to tokens except intra-word apostrophes and hyphens. Digits are
/// kept. Preprocessed sentences are already lowercase; this also tolerates
/// raw input.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .filter_map(|raw| {
            let token: String = raw
                .chars()
                .filter(|c| c.is_ascii_alphanumeric() || *c == '\'' || *c == '-')
                .map(|c| c.to_ascii_lowercase())
                .collect();
            let token = token.trim_matches(|c| c == '\'' || c == '-').to_string();
            if token.is_empty() {
                None
            } else {
                Some(token)
            }
        })
        .collect()
}

/// All n-grams of the requested sizes, tokens space-joined.
pub fn ngrams(tokens: &[String], min_n: usize, max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in min_n..=max_n {
        if n == 0 || tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Sparse feature vector: (feature index, weight) pairs sorted by index.
pub type SparseVec = Vec<(usize, f64)>;

/// Fitted n-gram vocabulary and per-feature idf weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorizerModel {
    /// Terms in index order; `terms[i]` has feature index `i`.
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub ngram_min: usize,
    pub ngram_max: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl VectorizerModel {
    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Rebuilds the term lookup; call after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// Binary term presence times idf, L2-normalized. Out-of-vocabulary
    /// n-grams are ignored; an all-OOV sentence maps to the zero vector.
    pub fn vectorize(&self, sentence: &str) -> SparseVec {
        let tokens = tokenize(sentence);
        let mut present: BTreeMap<usize, f64> = BTreeMap::new();
        for gram in ngrams(&tokens, self.ngram_min, self.ngram_max) {
            if let Some(&i) = self.index.get(&gram) {
                present.insert(i, self.idf[i]);
            }
        }
        let norm: f64 = present.values().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Vec::new();
        }
        present.into_iter().map(|(i, v)| (i, v / norm)).collect()
    }
}

/// Fits the vocabulary over a corpus: all 1..=3-grams occurring in at least
/// `min_df` documents, with idf(t) = ln((1+N)/(1+df(t))) + 1.
pub fn fit_vectorizer(
    corpus: &[LabeledSentence],
    ngram_min: usize,
    ngram_max: usize,
    min_df: usize,
) -> Result<VectorizerModel> {
    if corpus.is_empty() {
        return Err(Error::Contract("cannot fit vectorizer on empty corpus".into()));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for sent in corpus {
        let tokens = tokenize(&sent.text);
        let mut grams = ngrams(&tokens, ngram_min, ngram_max);
        grams.sort();
        grams.dedup();
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let mut kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|(_, c)| *c >= min_df)
        .collect();
    kept.sort();
    if kept.is_empty() {
        log::warn!("degenerate vocabulary: no n-gram met min_df = {min_df}");
    }
    let mut terms = Vec::with_capacity(kept.len());
    let mut idf = Vec::with_capacity(kept.len());
    for (term, count) in kept {
        terms.push(term);
        idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
    }
    let mut model = VectorizerModel {
        terms,
        idf,
        ngram_min,
        ngram_max,
        index: HashMap::new(),
    };
    model.rebuild_index();
    Ok(model)
}
