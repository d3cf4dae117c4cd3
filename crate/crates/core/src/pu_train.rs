//! Baseline PU training-set construction: every complaint becomes a positive
//! example and `s` high-rated reviews are sampled as presumed negatives.
//!
//! Sampling is uniform without replacement over the reviews whose star
//! rating is at least `tau` (no filter when `tau` is absent), seeded for
//! reproducibility. Inverse-class-frequency weights are attached so the fit
//! sees balanced classes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusKind};
use crate::error::{Error, Result};
use crate::linmodel::{class_weights, WeightedDataset};
use crate::vectorizer::{vectorize, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PuConfig {
    /// Minimum star rating for a review to be eligible as a negative;
    /// `None` disables the filter.
    pub tau: Option<u8>,
    /// Number of negatives to sample.
    pub num_neg: usize,
    pub seed: u64,
}

impl Default for PuConfig {
    fn default() -> Self {
        PuConfig {
            tau: Some(5),
            num_neg: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub rows: WeightedDataset,
    /// Review ids chosen as negatives, in sampling order.
    pub sampled_ids: Vec<String>,
    pub num_positive: usize,
    pub num_negative: usize,
}

/// Builds the baseline training set: all of `l` as positives plus
/// `cfg.num_neg` reviews sampled from the eligible pool of `u` as negatives.
pub fn build_training_set(
    l: &Corpus,
    u: &Corpus,
    vocab: &Vocabulary,
    cfg: &PuConfig,
) -> Result<TrainingSet> {
    if l.kind != CorpusKind::PositiveLabeled {
        return Err(Error::param(
            "L",
            "positives corpus must be positive_labeled",
        ));
    }
    if l.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(tau) = cfg.tau {
        if !(1..=5).contains(&tau) {
            return Err(Error::param("tau", format!("{tau} is outside 1..=5")));
        }
    }

    let eligible: Vec<usize> = u
        .iter()
        .enumerate()
        .filter(|(_, doc)| match cfg.tau {
            Some(tau) => doc.star_rating.is_some_and(|r| r >= tau),
            None => true,
        })
        .map(|(i, _)| i)
        .collect();

    let take = if cfg.num_neg > eligible.len() {
        log::warn!(
            "eligible pool has {} reviews, fewer than the requested {}; taking the entire pool",
            eligible.len(),
            cfg.num_neg
        );
        eligible.len()
    } else {
        cfg.num_neg
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chosen = rand::seq::index::sample(&mut rng, eligible.len(), take);

    let p = l.len();
    let n = take;
    // A degenerate set with one class still builds (fit will reject it);
    // weights only make sense when both classes are present.
    let (w_pos, w_neg) = if p > 0 && n > 0 {
        class_weights(p, n)?
    } else {
        (1.0, 1.0)
    };

    let mut rows = WeightedDataset::new(vocab.len());
    for doc in l.iter() {
        rows.push(vectorize(doc, vocab), true, w_pos)?;
    }
    let mut sampled_ids = Vec::with_capacity(take);
    for idx in chosen.iter() {
        let doc = &u.documents[eligible[idx]];
        rows.push(vectorize(doc, vocab), false, w_neg)?;
        sampled_ids.push(doc.id.clone());
    }

    Ok(TrainingSet {
        rows,
        sampled_ids,
        num_positive: p,
        num_negative: n,
    })
}

/// Sidecar listing the sampled negative ids, one per line.
pub fn save_sampled_ids(ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for id in ids {
        writeln!(w, "{id}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
