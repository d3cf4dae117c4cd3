//! Informed-prior feature re-scaling.
//!
//! The baseline classifier inherits selection bias from the complaints
//! corpus: terms for over-represented product types get inflated
//! coefficients. This module corrects for that by predicting hard labels
//! over the entire unlabeled corpus with the baseline model, estimating the
//! Laplace-smoothed class-conditional probability of each feature under
//! those predictions, normalizing the conditionals to sum to one within the
//! positive-coefficient group F+ and the negative-coefficient group F-,
//! scaling both groups to mean 1, and replacing each binary feature value
//! with the resulting factor before refitting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::linmodel::{fit, predict_proba, FitParams, LinearModel, WeightedDataset};
use crate::pu_train::{build_training_set, PuConfig, TrainingSet};
use crate::vectorizer::{vectorize, SparseVector, Vocabulary};

/// Hard labels assigned by a classifier over the unlabeled corpus.
#[derive(Debug, Clone)]
pub struct PredictedCorpus {
    /// One `(review id, features, predicted label)` triple per review.
    pub pairs: Vec<(String, SparseVector, bool)>,
    pub decision_threshold: f64,
}

/// Per-feature counts of containing documents by predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureClassCounts {
    pos: Vec<u32>,
    neg: Vec<u32>,
}

impl FeatureClassCounts {
    pub fn zeros(k: usize) -> Self {
        FeatureClassCounts {
            pos: vec![0; k],
            neg: vec![0; k],
        }
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// `(n_j1, n_j0)` for feature `j`.
    pub fn get(&self, j: usize) -> (u32, u32) {
        (self.pos[j], self.neg[j])
    }

    pub fn record(&mut self, j: usize, predicted_positive: bool) {
        if predicted_positive {
            self.pos[j] += 1;
        } else {
            self.neg[j] += 1;
        }
    }

    pub fn set(&mut self, j: usize, n_j1: u32, n_j0: u32) {
        self.pos[j] = n_j1;
        self.neg[j] = n_j0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    /// Non-negative baseline coefficient.
    Positive,
    /// Negative baseline coefficient.
    Negative,
}

/// The per-feature replacement factors together with the quantities they
/// were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTransform {
    group: Vec<Group>,
    counts: FeatureClassCounts,
    /// Smoothed conditional for the feature's own group: p_j1 on F+, p_j0 on F-.
    p: Vec<f64>,
    /// Group-normalized conditional.
    p_hat: Vec<f64>,
    rho: f64,
    factor: Vec<f64>,
}

impl PriorTransform {
    pub fn len(&self) -> usize {
        self.factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.is_empty()
    }

    pub fn group(&self, j: usize) -> Group {
        self.group[j]
    }

    pub fn conditional(&self, j: usize) -> f64 {
        self.p[j]
    }

    pub fn normalized(&self, j: usize) -> f64 {
        self.p_hat[j]
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn factor(&self, j: usize) -> f64 {
        self.factor[j]
    }

    pub fn factors(&self) -> &[f64] {
        &self.factor
    }

    pub fn counts(&self) -> &FeatureClassCounts {
        &self.counts
    }
}

/// Predicts hard labels for every review in `u` at `threshold`; a
/// probability exactly equal to the threshold is labeled positive.
pub fn predict_unlabeled(
    model: &LinearModel,
    u: &Corpus,
    vocab: &Vocabulary,
    threshold: f64,
) -> Result<PredictedCorpus> {
    let mut pairs = Vec::with_capacity(u.len());
    for doc in u.iter() {
        let x = vectorize(doc, vocab);
        let p = predict_proba(model, &x)?;
        pairs.push((doc.id.clone(), x, p >= threshold));
    }
    Ok(PredictedCorpus {
        pairs,
        decision_threshold: threshold,
    })
}

/// Counts, per feature, how many predicted-positive and predicted-negative
/// documents contain it.
pub fn feature_class_counts(pred: &PredictedCorpus, k: usize) -> FeatureClassCounts {
    let mut counts = FeatureClassCounts::zeros(k);
    for (_, x, label) in &pred.pairs {
        for &(j, _) in x.entries() {
            counts.record(j, *label);
        }
    }
    counts
}

/// Laplace-smoothed class conditionals:
/// `p_j1 = (1 + n_j1) / (2 + n_j1 + n_j0)` and symmetrically for `p_j0`.
pub fn smoothed_conditional(n_j1: u32, n_j0: u32) -> (f64, f64) {
    let denom = 2.0 + n_j1 as f64 + n_j0 as f64;
    ((1.0 + n_j1 as f64) / denom, (1.0 + n_j0 as f64) / denom)
}

/// Derives the replacement factors from the baseline coefficients and the
/// predicted-class counts.
///
/// Features with `theta_j >= 0` form F+ and use `p_j1`; the rest form F-
/// and use `p_j0`. Conditionals are normalized to sum to one within each
/// group, so `rho`, the ratio of the feature count to the sum of normalized
/// conditionals, equals `k / (number of non-empty groups)`.
pub fn compute_transform(
    model: &LinearModel,
    counts: &FeatureClassCounts,
) -> Result<PriorTransform> {
    let k = model.dim();
    if k == 0 {
        return Err(Error::EmptyVocabulary);
    }
    if counts.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: counts.len(),
        });
    }

    let mut group = Vec::with_capacity(k);
    let mut p = Vec::with_capacity(k);
    let mut sum_pos = 0.0;
    let mut sum_neg = 0.0;
    let mut n_pos_features = 0usize;
    for j in 0..k {
        let (n1, n0) = counts.get(j);
        let (p1, p0) = smoothed_conditional(n1, n0);
        if model.coefficient(j) >= 0.0 {
            group.push(Group::Positive);
            p.push(p1);
            sum_pos += p1;
            n_pos_features += 1;
        } else {
            group.push(Group::Negative);
            p.push(p0);
            sum_neg += p0;
        }
    }

    let n_neg_features = k - n_pos_features;
    let p_hat: Vec<f64> = (0..k)
        .map(|j| match group[j] {
            Group::Positive => p[j] / sum_pos,
            Group::Negative => p[j] / sum_neg,
        })
        .collect();

    // Each non-empty group's normalized conditionals sum to one by
    // construction, so the denominator of rho is the group count.
    let non_empty = (n_pos_features > 0) as usize + (n_neg_features > 0) as usize;
    let rho = k as f64 / non_empty as f64;
    let factor: Vec<f64> = p_hat.iter().map(|ph| rho * ph).collect();

    Ok(PriorTransform {
        group,
        counts: counts.clone(),
        p,
        p_hat,
        rho,
        factor,
    })
}

/// Replaces each present binary feature value with its factor. The sparsity
/// pattern is unchanged; non-binary inputs are rejected.
pub fn apply_transform(x: &SparseVector, t: &PriorTransform) -> Result<SparseVector> {
    if x.dim() != t.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: x.dim(),
        });
    }
    let mut entries = Vec::with_capacity(x.nnz());
    for &(j, v) in x.entries() {
        if v != 1.0 {
            return Err(Error::NonBinaryFeature { index: j, value: v });
        }
        entries.push((j, t.factor[j]));
    }
    SparseVector::new(entries, x.dim())
}

/// Baseline model, transform, and the refit informed model.
#[derive(Debug, Clone)]
pub struct InformedFit {
    pub baseline: LinearModel,
    pub transform: PriorTransform,
    pub informed: LinearModel,
    pub training: TrainingSet,
}

/// Runs the full informed-prior pipeline: fit the baseline on the PU
/// training set, predict hard labels over all of `u`, derive the transform,
/// re-scale the same training rows, and refit with the same parameters.
pub fn fit_informed(
    l: &Corpus,
    u: &Corpus,
    vocab: &Vocabulary,
    cfg: &PuConfig,
    params: &FitParams,
    threshold: f64,
) -> Result<InformedFit> {
    let training = build_training_set(l, u, vocab, cfg)?;
    let baseline = fit(&training.rows, params)?;

    let predicted = predict_unlabeled(&baseline, u, vocab, threshold)?;
    let counts = feature_class_counts(&predicted, vocab.len());
    let transform = compute_transform(&baseline, &counts)?;

    let mut rescaled = WeightedDataset::new(vocab.len());
    for row in training.rows.rows() {
        rescaled.push(apply_transform(&row.x, &transform)?, row.label, row.weight)?;
    }
    let informed = fit(&rescaled, params)?;

    Ok(InformedFit {
        baseline,
        transform,
        informed,
        training,
    })
}

/// CSV diagnostics: `term,group,n_j1,n_j0,p,p_hat,factor`, one row per
/// feature.
pub fn transform_csv(t: &PriorTransform, vocab: &Vocabulary) -> String {
    let mut out = String::from("term,group,n_j1,n_j0,p,p_hat,factor\n");
    for j in 0..t.len() {
        let (n1, n0) = t.counts.get(j);
        let sign = match t.group[j] {
            Group::Positive => "+",
            Group::Negative => "-",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            vocab.term(j),
            sign,
            n1,
            n0,
            t.p[j],
            t.p_hat[j],
            t.factor[j]
        ));
    }
    out
}

pub fn save_transform(
    t: &PriorTransform,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(transform_csv(t, vocab).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the transform CSV back, resolving terms through `vocab`.
pub fn load_transform(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<PriorTransform> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let k = vocab.len();
    let mut group = vec![Group::Positive; k];
    let mut counts = FeatureClassCounts::zeros(k);
    let mut p = vec![0.0; k];
    let mut p_hat = vec![0.0; k];
    let mut factor = vec![0.0; k];
    let mut rho = None;
    let mut filled = vec![false; k];

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 1 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::record(path, lineno, "record", "expected 7 fields"));
        }
        let j = vocab
            .index_of(fields[0])
            .ok_or_else(|| Error::record(path, lineno, "term", "not in vocabulary"))?;
        group[j] = match fields[1] {
            "+" => Group::Positive,
            "-" => Group::Negative,
            other => {
                return Err(Error::record(
                    path,
                    lineno,
                    "group",
                    format!("bad sign {other:?}"),
                ))
            }
        };
        let n1: u32 = fields[2]
            .parse()
            .map_err(|_| Error::record(path, lineno, "n_j1", "not an integer"))?;
        let n0: u32 = fields[3]
            .parse()
            .map_err(|_| Error::record(path, lineno, "n_j0", "not an integer"))?;
        counts.set(j, n1, n0);
        p[j] = fields[4]
            .parse()
            .map_err(|_| Error::record(path, lineno, "p", "not a number"))?;
        p_hat[j] = fields[5]
            .parse()
            .map_err(|_| Error::record(path, lineno, "p_hat", "not a number"))?;
        factor[j] = fields[6]
            .parse()
            .map_err(|_| Error::record(path, lineno, "factor", "not a number"))?;
        if p_hat[j] > 0.0 {
            rho.get_or_insert(factor[j] / p_hat[j]);
        }
        filled[j] = true;
    }

    if let Some(j) = filled.iter().position(|f| !f) {
        return Err(Error::record(
            path,
            0,
            "term",
            format!("vocabulary term {:?} missing from transform", vocab.term(j)),
        ));
    }
    let rho = rho.ok_or_else(|| Error::record(path, 0, "factor", "cannot recover rho"))?;
    Ok(PriorTransform {
        group,
        counts,
        p,
        p_hat,
        rho,
        factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusKind, Document, Source};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn review(id: &str, text: &str, rating: u8) -> Document {
        Document {
            id: id.to_string(),
            text: text.to_string(),
            source: Source::Review,
            star_rating: Some(rating),
            date: None,
            product_id: None,
        }
    }

    #[test]
    fn smoothing_with_no_observations_is_uniform() {
        assert_eq!(smoothed_conditional(0, 0), (0.5, 0.5));
    }

    #[test]
    fn smoothing_matches_direct_evaluation() {
        let (p1, p0) = smoothed_conditional(3, 1);
        assert!((p1 - 4.0 / 6.0).abs() < 1e-15);
        assert!((p0 - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn smoothing_stays_strictly_inside_unit_interval() {
        for &(n1, n0) in &[(0u32, 0u32), (0, 1_000_000), (1_000_000, 0), (17, 3)] {
            let (p1, p0) = smoothed_conditional(n1, n0);
            assert!(p1 > 0.0 && p1 < 1.0);
            assert!(p0 > 0.0 && p0 < 1.0);
            assert!((p1 + p0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_counts_approach_the_empirical_rate() {
        // 29% of containing documents predicted positive.
        let (p1, _) = smoothed_conditional(2900, 7100);
        assert!((p1 - 0.29).abs() < 1e-3);
    }

    #[test]
    fn counts_match_a_two_document_fixture() {
        let vocab = Vocabulary::from_terms(&["a", "b"]).unwrap();
        let pred = PredictedCorpus {
            pairs: vec![
                (
                    "d1".into(),
                    crate::vectorizer::vectorize_text("a b", &vocab),
                    true,
                ),
                (
                    "d2".into(),
                    crate::vectorizer::vectorize_text("a", &vocab),
                    false,
                ),
            ],
            decision_threshold: 0.5,
        };
        let counts = feature_class_counts(&pred, 2);
        assert_eq!(counts.get(0), (1, 1));
        assert_eq!(counts.get(1), (1, 0));
    }

    #[test]
    fn absent_feature_counts_zero() {
        let vocab = Vocabulary::from_terms(&["a", "ghost"]).unwrap();
        let pred = PredictedCorpus {
            pairs: vec![(
                "d1".into(),
                crate::vectorizer::vectorize_text("a", &vocab),
                true,
            )],
            decision_threshold: 0.5,
        };
        let counts = feature_class_counts(&pred, 2);
        assert_eq!(counts.get(1), (0, 0));
    }

    // Independent oracle: recount by scanning each document's entries.
    #[test]
    fn counts_agree_with_brute_force_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let k = 12;
        let mut pairs = Vec::new();
        for i in 0..50 {
            let indices: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.3)).collect();
            let entries: Vec<(usize, f64)> = indices.iter().map(|&j| (j, 1.0)).collect();
            pairs.push((
                format!("d{i}"),
                SparseVector::new(entries, k).unwrap(),
                rng.gen_bool(0.4),
            ));
        }
        let pred = PredictedCorpus {
            pairs,
            decision_threshold: 0.5,
        };
        let counts = feature_class_counts(&pred, k);

        for j in 0..k {
            let mut n1 = 0u32;
            let mut n0 = 0u32;
            for (_, x, label) in &pred.pairs {
                if x.entries().iter().any(|&(i, _)| i == j) {
                    if *label {
                        n1 += 1;
                    } else {
                        n0 += 1;
                    }
                }
            }
            assert_eq!(counts.get(j), (n1, n0), "feature {j}");
        }
    }

    /// Builds a transform from explicit coefficients and counts.
    fn transform_from(theta: Vec<f64>, raw: &[(u32, u32)]) -> PriorTransform {
        let k = theta.len();
        let model = LinearModel::from_parts(theta, 0.0, 1.0).unwrap();
        let mut counts = FeatureClassCounts::zeros(k);
        for (j, &(n1, n0)) in raw.iter().enumerate() {
            counts.set(j, n1, n0);
        }
        compute_transform(&model, &counts).unwrap()
    }

    // Hand evaluation: F+ = {a, b} with p_a1 = 0.3, p_b1 = 0.1;
    // F- = {c} with p_c0 = 0.4. Normalized: 0.75, 0.25, 1.0; rho = 1.5;
    // factors 1.125, 0.375, 1.5. Counts picked so the smoothed
    // conditionals hit those values exactly: (1+5)/(2+5+13) = 0.3,
    // (1+1)/(2+1+17) = 0.1, and for class 0, (1+3)/(2+5+3) = 0.4.
    #[test]
    fn transform_matches_hand_computed_example() {
        let t = transform_from(vec![0.5, 0.2, -0.4], &[(5, 13), (1, 17), (5, 3)]);
        assert!((t.conditional(0) - 0.3).abs() < 1e-12);
        assert!((t.conditional(1) - 0.1).abs() < 1e-12);
        assert!((t.conditional(2) - 0.4).abs() < 1e-12);
        assert!((t.normalized(0) - 0.75).abs() < 1e-12);
        assert!((t.normalized(1) - 0.25).abs() < 1e-12);
        assert!((t.normalized(2) - 1.0).abs() < 1e-12);
        assert!((t.rho() - 1.5).abs() < 1e-12);
        assert!((t.factor(0) - 1.125).abs() < 1e-12);
        assert!((t.factor(1) - 0.375).abs() < 1e-12);
        assert!((t.factor(2) - 1.5).abs() < 1e-12);
        let mean = t.factors().iter().sum::<f64>() / 3.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_groups_give_unit_factors() {
        let t = transform_from(
            vec![1.0, 1.0, -1.0, -1.0],
            &[(3, 5), (3, 5), (2, 9), (2, 9)],
        );
        for j in 0..4 {
            assert!(
                (t.factor(j) - 1.0).abs() < 1e-12,
                "factor {j} = {}",
                t.factor(j)
            );
        }
    }

    #[test]
    fn zero_coefficient_lands_in_positive_group() {
        let t = transform_from(vec![0.0, -0.1], &[(1, 1), (1, 1)]);
        assert_eq!(t.group(0), Group::Positive);
        assert_eq!(t.group(1), Group::Negative);
    }

    #[test]
    fn single_group_still_normalizes() {
        let t = transform_from(vec![0.3, 0.7], &[(4, 4), (1, 7)]);
        assert!((t.rho() - 2.0).abs() < 1e-12);
        let sum: f64 = (0..2).map(|j| t.normalized(j)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let mean = t.factors().iter().sum::<f64>() / 2.0;
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn factors_are_strictly_positive() {
        let t = transform_from(vec![2.0, -3.0, 0.0], &[(0, 0), (0, 1000), (1000, 0)]);
        for j in 0..3 {
            assert!(t.factor(j) > 0.0);
        }
    }

    #[test]
    fn empty_vocabulary_is_rejected() {
        let model = LinearModel::zeros(0, 1.0).unwrap();
        let counts = FeatureClassCounts::zeros(0);
        assert!(matches!(
            compute_transform(&model, &counts),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn apply_preserves_sparsity_and_substitutes_factors() {
        let t = transform_from(vec![1.0, 1.0, -1.0], &[(5, 0), (0, 5), (1, 1)]);
        let x = SparseVector::new(vec![(0, 1.0), (2, 1.0)], 3).unwrap();
        let y = apply_transform(&x, &t).unwrap();
        assert_eq!(y.nnz(), 2);
        assert_eq!(y.entries()[0], (0, t.factor(0)));
        assert_eq!(y.entries()[1], (2, t.factor(2)));
    }

    #[test]
    fn apply_on_empty_vector_is_empty() {
        let t = transform_from(vec![1.0], &[(1, 1)]);
        let y = apply_transform(&SparseVector::empty(1), &t).unwrap();
        assert_eq!(y.nnz(), 0);
    }

    #[test]
    fn apply_rejects_non_binary_values() {
        let t = transform_from(vec![1.0], &[(1, 1)]);
        let x = SparseVector::new(vec![(0, 2.0)], 1).unwrap();
        assert!(matches!(
            apply_transform(&x, &t),
            Err(Error::NonBinaryFeature { .. })
        ));
    }

    #[test]
    fn unit_factors_are_identity() {
        let t = transform_from(
            vec![1.0, 1.0, -1.0, -1.0],
            &[(3, 5), (3, 5), (2, 9), (2, 9)],
        );
        let x = SparseVector::new(vec![(1, 1.0), (3, 1.0)], 4).unwrap();
        let y = apply_transform(&x, &t).unwrap();
        for (&(ja, va), &(jb, vb)) in x.entries().iter().zip(y.entries()) {
            assert_eq!(ja, jb);
            assert!((va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_with_half_threshold_predicts_all_positive() {
        let vocab = Vocabulary::from_terms(&["a"]).unwrap();
        let u = Corpus::new(
            vec![review("r1", "a", 5), review("r2", "b", 3)],
            CorpusKind::Unlabeled,
        );
        let model = LinearModel::zeros(1, 1.0).unwrap();
        let pred = predict_unlabeled(&model, &u, &vocab, 0.5).unwrap();
        assert!(pred.pairs.iter().all(|(_, _, y)| *y));
    }

    #[test]
    fn strongly_negative_intercept_predicts_all_negative() {
        let vocab = Vocabulary::from_terms(&["a"]).unwrap();
        let u = Corpus::new(vec![review("r1", "a", 5)], CorpusKind::Unlabeled);
        let model = LinearModel::from_parts(vec![0.5], -30.0, 1.0).unwrap();
        let pred = predict_unlabeled(&model, &u, &vocab, 0.5).unwrap();
        assert!(pred.pairs.iter().all(|(_, _, y)| !*y));
    }

    #[test]
    fn transform_csv_round_trip() {
        let vocab = Vocabulary::from_terms(&["alpha", "beta", "gamma d"]).unwrap();
        let t = transform_from(vec![0.5, -0.2, 0.1], &[(5, 13), (9, 14), (1, 17)]);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_transform(&t, &vocab, f.path()).unwrap();
        let loaded = load_transform(f.path(), &vocab).unwrap();
        assert_eq!(t.group, loaded.group);
        assert_eq!(t.counts, loaded.counts);
        for j in 0..t.len() {
            assert!((t.factor(j) - loaded.factor(j)).abs() < 1e-15);
            assert!((t.p[j] - loaded.p[j]).abs() < 1e-15);
        }
        assert!((t.rho - loaded.rho).abs() < 1e-12);
    }
}
