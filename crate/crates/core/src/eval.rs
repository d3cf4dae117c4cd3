//! Precision/recall/F1 and ROC-AUC, plus the multi-trial experiment runner.
//!
//! AUC is computed as the Mann-Whitney rank statistic (ties count one half),
//! which is exactly the fraction of (positive, negative) pairs ranked
//! correctly. Experiments average several independently seeded trials and
//! report the mean and standard error of each metric.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::informed_prior::{apply_transform, fit_informed};
use crate::linmodel::{fit, predict_proba, FitParams};
use crate::pu_train::{build_training_set, PuConfig};
use crate::vectorizer::{vectorize_text, SparseVector, Vocabulary};

/// Held-out vectors with gold labels.
#[derive(Debug, Clone)]
pub struct LabeledEvalSet {
    items: Vec<(SparseVector, bool)>,
}

impl LabeledEvalSet {
    pub fn new(items: Vec<(SparseVector, bool)>) -> Self {
        LabeledEvalSet { items }
    }

    pub fn from_texts<S: AsRef<str>>(texts: &[(S, bool)], vocab: &Vocabulary) -> Self {
        LabeledEvalSet {
            items: texts
                .iter()
                .map(|(t, y)| (vectorize_text(t.as_ref(), vocab), *y))
                .collect(),
        }
    }

    pub fn items(&self) -> &[(SparseVector, bool)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn gold(&self) -> Vec<bool> {
        self.items.iter().map(|(_, y)| *y).collect()
    }
}

/// One manually labeled review: `{id, text, label}` per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledReview {
    pub id: String,
    pub text: String,
    pub label: u8,
}

pub fn load_labeled_reviews(path: impl AsRef<Path>) -> Result<Vec<LabeledReview>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledReview = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
        if rec.label > 1 {
            return Err(Error::record(path, lineno, "label", "must be 0 or 1"));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Precision, recall, and F1 at a threshold; a score equal to the threshold
/// is predicted positive. With no predicted positives, precision is 0.
pub fn confusion_metrics(scores: &[f64], gold: &[bool], threshold: f64) -> Result<(f64, f64, f64)> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: gold.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::LengthMismatch {
            scores: 0,
            labels: 0,
        });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&s, &y) in scores.iter().zip(gold) {
        let pred = s >= threshold;
        match (pred, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f1))
}

/// Area under the ROC curve via the rank statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], gold: &[bool]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: gold.len(),
        });
    }
    let n_pos = gold.iter().filter(|&&y| y).count();
    let n_neg = gold.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassEval(
            "ROC-AUC needs at least one positive and one negative".to_string(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    // Average ranks over tied scores, then apply the Mann-Whitney identity.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if gold[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// ROC curve points as (fpr, tpr), from (0,0) to (1,1), one step per
/// distinct score.
pub fn roc_points(scores: &[f64], gold: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = gold.iter().filter(|&&y| y).count().max(1) as f64;
    let n_neg = gold.iter().filter(|&&y| !y).count().max(1) as f64;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if gold[idx] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
        }
        points.push((fp / n_neg, tp / n_pos));
        i = j + 1;
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Baseline,
    Informed,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Informed => "informed",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "informed" => Ok(Method::Informed),
            other => Err(Error::param("method", format!("unknown method {other:?}"))),
        }
    }
}

/// One grid point of the experiment sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub method: Method,
    pub tau: Option<u8>,
    pub num_neg: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
}

/// Per-metric values for each trial plus their aggregates.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub method: Method,
    pub tau: Option<u8>,
    pub num_neg: usize,
    pub seeds: Vec<u64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub auc: Vec<f64>,
    /// Scores from the first trial, for ROC curve output.
    pub first_trial_scores: Vec<f64>,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return MetricSummary { mean, stderr: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MetricSummary {
        mean,
        stderr: var.sqrt() / n.sqrt(),
    }
}

impl EvalReport {
    pub fn precision_summary(&self) -> MetricSummary {
        summarize(&self.precision)
    }

    pub fn recall_summary(&self) -> MetricSummary {
        summarize(&self.recall)
    }

    pub fn f1_summary(&self) -> MetricSummary {
        summarize(&self.f1)
    }

    pub fn auc_summary(&self) -> MetricSummary {
        summarize(&self.auc)
    }
}

/// "5" or "none", as written in the results table.
pub fn tau_label(tau: Option<u8>) -> String {
    match tau {
        Some(t) => t.to_string(),
        None => "none".to_string(),
    }
}

/// Scores the eval set with the models produced by one pipeline run.
#[allow(clippy::too_many_arguments)]
fn score_eval_set(
    method: Method,
    l: &Corpus,
    u: &Corpus,
    vocab: &Vocabulary,
    eval_set: &LabeledEvalSet,
    cfg: &PuConfig,
    params: &FitParams,
    threshold: f64,
) -> Result<Vec<f64>> {
    match method {
        Method::Baseline => {
            let ts = build_training_set(l, u, vocab, cfg)?;
            let model = fit(&ts.rows, params)?;
            eval_set
                .items()
                .iter()
                .map(|(x, _)| predict_proba(&model, x))
                .collect()
        }
        Method::Informed => {
            let run = fit_informed(l, u, vocab, cfg, params, threshold)?;
            eval_set
                .items()
                .iter()
                .map(|(x, _)| predict_proba(&run.informed, &apply_transform(x, &run.transform)?))
                .collect()
        }
    }
}

/// Runs `trials` independently seeded pipelines per grid point (trial `t`
/// uses seed `base_seed + t`) and evaluates each on the fixed eval set.
#[allow(clippy::too_many_arguments)]
pub fn run_trials(
    l: &Corpus,
    u: &Corpus,
    vocab: &Vocabulary,
    eval_set: &LabeledEvalSet,
    grid: &[GridPoint],
    trials: usize,
    base_seed: u64,
    params: &FitParams,
    threshold: f64,
) -> Result<Vec<EvalReport>> {
    if trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let gold = eval_set.gold();

    let mut reports = Vec::with_capacity(grid.len());
    for point in grid {
        let mut report = EvalReport {
            method: point.method,
            tau: point.tau,
            num_neg: point.num_neg,
            seeds: Vec::with_capacity(trials),
            precision: Vec::with_capacity(trials),
            recall: Vec::with_capacity(trials),
            f1: Vec::with_capacity(trials),
            auc: Vec::with_capacity(trials),
            first_trial_scores: Vec::new(),
        };
        for t in 0..trials {
            let seed = base_seed + t as u64;
            let cfg = PuConfig {
                tau: point.tau,
                num_neg: point.num_neg,
                seed,
            };
            let scores =
                score_eval_set(point.method, l, u, vocab, eval_set, &cfg, params, threshold)?;
            let (p, r, f1) = confusion_metrics(&scores, &gold, threshold)?;
            let auc = roc_auc(&scores, &gold)?;
            report.seeds.push(seed);
            report.precision.push(p);
            report.recall.push(r);
            report.f1.push(f1);
            report.auc.push(auc);
            if t == 0 {
                report.first_trial_scores = scores;
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Results CSV mirroring the main-results table columns.
pub fn results_csv(reports: &[EvalReport]) -> String {
    let mut out =
        String::from("method,tau,auc,auc_se,f1,f1_se,precision,precision_se,recall,recall_se\n");
    for r in reports {
        let auc = r.auc_summary();
        let f1 = r.f1_summary();
        let p = r.precision_summary();
        let rec = r.recall_summary();
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.method.as_str(),
            tau_label(r.tau),
            auc.mean,
            auc.stderr,
            f1.mean,
            f1.stderr,
            p.mean,
            p.stderr,
            rec.mean,
            rec.stderr,
        ));
    }
    out
}

/// ROC points CSV: `fpr,tpr` per line.
pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in points {
        out.push_str(&format!("{fpr:.6},{tpr:.6}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_fixture_three_quarters() {
        // TP=3, FP=1, FN=1, TN=1
        let scores = [0.9, 0.8, 0.7, 0.6, 0.4, 0.2];
        let gold = [true, true, true, false, true, false];
        let (p, r, f1) = confusion_metrics(&scores, &gold, 0.5).unwrap();
        assert!((p - 0.75).abs() < 1e-12);
        assert!((r - 0.75).abs() < 1e-12);
        assert!((f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn all_correct_is_perfect() {
        let scores = [0.9, 0.1];
        let gold = [true, false];
        assert_eq!(
            confusion_metrics(&scores, &gold, 0.5).unwrap(),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn no_predicted_positives_is_all_zero() {
        let scores = [0.1, 0.2];
        let gold = [true, false];
        assert_eq!(
            confusion_metrics(&scores, &gold, 0.5).unwrap(),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn threshold_zero_has_full_recall() {
        let scores = [0.0, 0.3, 0.9];
        let gold = [true, true, false];
        let (_, r, _) = confusion_metrics(&scores, &gold, 0.0).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn ties_at_threshold_predict_positive() {
        let scores = [0.5];
        let gold = [true];
        let (p, r, _) = confusion_metrics(&scores, &gold, 0.5).unwrap();
        assert_eq!((p, r), (1.0, 1.0));
    }

    #[test]
    fn perfect_ranking_has_unit_auc() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let gold = [true, true, false, false];
        assert_eq!(roc_auc(&scores, &gold).unwrap(), 1.0);
    }

    #[test]
    fn auc_fixture_is_three_quarters() {
        let scores = [0.9, 0.8, 0.3, 0.2];
        let gold = [true, false, true, false];
        assert_eq!(roc_auc(&scores, &gold).unwrap(), 0.75);
    }

    #[test]
    fn all_tied_scores_give_half() {
        let scores = [0.4, 0.4, 0.4, 0.4];
        let gold = [true, false, true, false];
        assert_eq!(roc_auc(&scores, &gold).unwrap(), 0.5);
    }

    #[test]
    fn single_class_auc_is_an_error() {
        assert!(roc_auc(&[0.4, 0.6], &[true, true]).is_err());
    }

    // Exhaustive pair-counting oracle, independent of the rank computation.
    fn pair_count_auc(scores: &[f64], gold: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in gold.iter().enumerate() {
            if !yi {
                continue;
            }
            for (k, &yk) in gold.iter().enumerate() {
                if yk {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[k] {
                    wins += 1.0;
                } else if scores[i] == scores[k] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_matches_pair_counting_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut tested = 0;
        while tested < 200 {
            let n = rng.gen_range(2..=8);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen_range(0..10) as f64) / 10.0)
                .collect();
            let gold: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if gold.iter().all(|&y| y) || gold.iter().all(|&y| !y) {
                continue;
            }
            let expected = pair_count_auc(&scores, &gold);
            let got = roc_auc(&scores, &gold).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "scores {scores:?} gold {gold:?}"
            );
            tested += 1;
        }
    }

    #[test]
    fn stderr_is_sample_stddev_over_sqrt_n() {
        let s = summarize(&[1.0, 2.0, 3.0]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        // sample stddev = 1, n = 3
        assert!((s.stderr - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_trial_has_zero_stderr() {
        let s = summarize(&[0.7]);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn roc_points_start_and_end_at_corners() {
        let scores = [0.9, 0.8, 0.3, 0.2];
        let gold = [true, false, true, false];
        let pts = roc_points(&scores, &gold);
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0);
            assert!(w[1].1 >= w[0].1);
        }
    }

    proptest! {
        // Antisymmetry under score negation, for tie-free scores.
        #[test]
        fn auc_antisymmetric_under_negation(
            raw in proptest::collection::vec(0u32..1000, 2..12)
        ) {
            let mut scores: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
            scores.dedup();
            let n = scores.len();
            if n < 2 { return Ok(()); }
            let mut seen = std::collections::HashSet::new();
            if !scores.iter().all(|s| seen.insert(s.to_bits())) {
                return Ok(());
            }
            let gold: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let a = roc_auc(&scores, &gold).unwrap();
            let b = roc_auc(&neg, &gold).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-9);
        }

        // Invariance under strictly monotone transforms.
        #[test]
        fn auc_invariant_under_monotone_transform(
            raw in proptest::collection::vec(0.0f64..1.0, 3..12)
        ) {
            let n = raw.len();
            let gold: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
            let transformed: Vec<f64> = raw.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
            let a = roc_auc(&raw, &gold).unwrap();
            let b = roc_auc(&transformed, &gold).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
