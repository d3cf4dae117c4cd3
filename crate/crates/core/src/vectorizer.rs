//! N-gram vocabulary construction and binary sparse vectorization.
//!
//! Terms are unigrams and bigrams of lowercased tokens, where a token is a
//! maximal run of alphanumeric characters and a bigram joins two adjacent
//! tokens with a single space. The vocabulary is built from the unlabeled
//! review corpus and pruned by document frequency; vectors are binary
//! regardless of how often a term repeats inside a document.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Document-frequency thresholds used throughout the experiments.
pub const DEFAULT_MIN_DF: usize = 50;
pub const DEFAULT_MAX_DF_RATIO: f64 = 0.95;

/// Lowercases and splits on maximal runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Unigrams followed by the bigrams of adjacent token pairs.
pub fn ngrams(tokens: &[String]) -> Vec<String> {
    let mut terms = Vec::with_capacity(tokens.len().saturating_mul(2));
    terms.extend(tokens.iter().cloned());
    terms.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    terms
}

/// Term -> dense feature index map with document-frequency statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    total_docs: usize,
    min_df: usize,
    max_df_ratio: f64,
}

impl Vocabulary {
    /// Number of features `k`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, j: usize) -> &str {
        &self.terms[j]
    }

    pub fn doc_freq(&self, j: usize) -> usize {
        self.doc_freq[j]
    }

    pub fn total_docs(&self) -> usize {
        self.total_docs
    }

    pub fn min_df(&self) -> usize {
        self.min_df
    }

    pub fn max_df_ratio(&self) -> f64 {
        self.max_df_ratio
    }

    /// Fixture constructor: terms get indices in the given order and zero
    /// document frequency. Duplicate terms are rejected.
    pub fn from_terms<S: AsRef<str>>(terms: &[S]) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        let mut owned = Vec::with_capacity(terms.len());
        for (j, t) in terms.iter().enumerate() {
            let t = t.as_ref().to_string();
            if index.insert(t.clone(), j).is_some() {
                return Err(Error::param("terms", format!("duplicate term {t:?}")));
            }
            owned.push(t);
        }
        Ok(Vocabulary {
            doc_freq: vec![0; owned.len()],
            terms: owned,
            index,
            total_docs: 0,
            min_df: 1,
            max_df_ratio: 1.0,
        })
    }
}

/// Builds the pruned unigram+bigram vocabulary from `corpus`.
///
/// A term is counted once per document containing it and retained when
/// `min_df <= doc_freq <= max_df_ratio * total_docs`. Retained terms get
/// dense indices in lexicographic order.
pub fn build_vocabulary(corpus: &Corpus, min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if min_df < 1 {
        return Err(Error::param("min_df", "must be at least 1"));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::param("max_df_ratio", "must be in (0, 1]"));
    }

    let total_docs = corpus.len();
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    for doc in corpus.iter() {
        seen.clear();
        let tokens = tokenize(&doc.text);
        for term in ngrams(&tokens) {
            if seen.insert(term.clone()) {
                *counts.entry(term).or_insert(0) += 1;
            }
        }
    }

    let max_df = max_df_ratio * total_docs as f64;
    let mut retained: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, df)| df >= min_df && (df as f64) <= max_df)
        .collect();
    retained.sort_by(|a, b| a.0.cmp(&b.0));

    let mut index = HashMap::with_capacity(retained.len());
    let mut terms = Vec::with_capacity(retained.len());
    let mut doc_freq = Vec::with_capacity(retained.len());
    for (j, (term, df)) in retained.into_iter().enumerate() {
        index.insert(term.clone(), j);
        terms.push(term);
        doc_freq.push(df);
    }

    Ok(Vocabulary {
        terms,
        index,
        doc_freq,
        total_docs,
        min_df,
        max_df_ratio,
    })
}

/// Sparse feature vector over a fixed vocabulary dimension.
///
/// Entries are `(feature index, value)` with strictly increasing indices.
/// Freshly vectorized documents have every value exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    /// Entries must be sorted by strictly increasing index, all below `dim`,
    /// with finite non-negative values.
    pub fn new(entries: Vec<(usize, f64)>, dim: usize) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(j, v) in &entries {
            if j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: j,
                });
            }
            if let Some(p) = prev {
                if j <= p {
                    return Err(Error::param("entries", "indices must strictly increase"));
                }
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(
                    "entries",
                    format!("bad value {v} at index {j}"),
                ));
            }
            prev = Some(j);
        }
        Ok(SparseVector { entries, dim })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// True when every stored value is exactly 1.
    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 1.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, v)| v * dense[j]).sum()
    }
}

/// Maps a document to its binary feature vector; out-of-vocabulary terms are
/// dropped silently.
pub fn vectorize(doc: &Document, vocab: &Vocabulary) -> SparseVector {
    vectorize_text(&doc.text, vocab)
}

pub fn vectorize_text(text: &str, vocab: &Vocabulary) -> SparseVector {
    let tokens = tokenize(text);
    let mut indices: Vec<usize> = ngrams(&tokens)
        .into_iter()
        .filter_map(|term| vocab.index_of(&term))
        .collect();
    indices.sort_unstable();
    indices.dedup();
    SparseVector {
        entries: indices.into_iter().map(|j| (j, 1.0)).collect(),
        dim: vocab.len(),
    }
}

/// Flat text format: a header line with the build parameters, then one
/// tab-separated line per term: `term \t index \t doc_freq`.
pub fn save_vocabulary(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "total_docs={}\tmin_df={}\tmax_df_ratio={}",
        vocab.total_docs, vocab.min_df, vocab.max_df_ratio
    )
    .map_err(|e| Error::io(path, e))?;
    for (j, term) in vocab.terms.iter().enumerate() {
        writeln!(w, "{term}\t{j}\t{}", vocab.doc_freq[j]).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::record(path, 1, "header", "missing"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let mut total_docs = None;
    let mut min_df = None;
    let mut max_df_ratio = None;
    for part in header.split('\t') {
        match part.split_once('=') {
            Some(("total_docs", v)) => total_docs = v.parse::<usize>().ok(),
            Some(("min_df", v)) => min_df = v.parse::<usize>().ok(),
            Some(("max_df_ratio", v)) => max_df_ratio = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let (total_docs, min_df, max_df_ratio) = match (total_docs, min_df, max_df_ratio) {
        (Some(t), Some(m), Some(r)) => (t, m, r),
        _ => {
            return Err(Error::record(
                path,
                1,
                "header",
                "expected total_docs, min_df, max_df_ratio",
            ))
        }
    };

    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    let mut index = HashMap::new();
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (term, j, df) = match (parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(j), Some(d)) => (
                t.to_string(),
                j.parse::<usize>()
                    .map_err(|e| Error::record(path, lineno, "index", e.to_string()))?,
                d.parse::<usize>()
                    .map_err(|e| Error::record(path, lineno, "doc_freq", e.to_string()))?,
            ),
            _ => {
                return Err(Error::record(
                    path,
                    lineno,
                    "record",
                    "expected term\\tindex\\tdoc_freq",
                ))
            }
        };
        if j != terms.len() {
            return Err(Error::record(
                path,
                lineno,
                "index",
                format!("expected dense index {}, got {j}", terms.len()),
            ));
        }
        index.insert(term.clone(), j);
        terms.push(term);
        doc_freq.push(df);
    }

    Ok(Vocabulary {
        terms,
        index,
        doc_freq,
        total_docs,
        min_df,
        max_df_ratio,
    })
}
