//! Synthetic complaint/review corpora with a planted selection bias.
//!
//! Documents are bags of sampled tokens. Complaints draw product types from
//! `complaint_share`, reviews from `review_share`; making those shares
//! differ plants the selection bias that the informed prior is meant to
//! correct. Hazardous reviews mix hazard terms into otherwise ordinary
//! review text and skew toward low star ratings. True review labels never
//! appear in the unlabeled corpus; they ride along in a sidecar.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{save_corpus, Corpus, CorpusKind, Document, Source};
use crate::error::{Error, Result};
use crate::eval::LabeledEvalSet;
use crate::vectorizer::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductType {
    /// Single alphanumeric token; doubles as the type's marker term.
    pub name: String,
    pub complaint_share: f64,
    pub review_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_complaints: usize,
    pub n_reviews: usize,
    /// Fraction of reviews that are truly hazardous.
    pub hazard_rate: f64,
    pub product_types: Vec<ProductType>,
    pub hazard_vocab: Vec<String>,
    pub benign_vocab: Vec<String>,
    pub filler_vocab: Vec<String>,
    /// Geometric document lengths, in tokens. Complaints run longer than
    /// reviews, as in the real corpora.
    pub mean_complaint_len: f64,
    pub mean_review_len: f64,
    pub n_eval_pos: usize,
    pub n_eval_neg: usize,
    pub n_products: usize,
    /// Fraction of products flagged as recalled analogues.
    pub recalled_fraction: f64,
    /// Hazard-rate ratio of recalled to non-recalled products; the global
    /// rate stays at `hazard_rate`.
    pub recalled_hazard_multiplier: f64,
    /// Star-rating distributions over 1..=5.
    pub hazard_rating_weights: [f64; 5],
    pub benign_rating_weights: [f64; 5],
}

impl Default for SynthConfig {
    fn default() -> Self {
        let types = [
            ("crib", 0.6, 0.1),
            ("stroller", 0.1, 0.225),
            ("gate", 0.1, 0.225),
            ("monitor", 0.1, 0.225),
            ("swing", 0.1, 0.225),
        ];
        SynthConfig {
            seed: 0,
            n_complaints: 2_000,
            n_reviews: 100_000,
            hazard_rate: 0.01,
            product_types: types
                .iter()
                .map(|&(name, c, r)| ProductType {
                    name: name.to_string(),
                    complaint_share: c,
                    review_share: r,
                })
                .collect(),
            hazard_vocab: [
                "hazard",
                "injury",
                "unsafe",
                "choking",
                "swallowed",
                "snapped",
                "burn",
                "emergency",
                "suffocated",
                "bleeding",
                "dangerous",
                "hospital",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            benign_vocab: [
                "cheap",
                "flimsy",
                "heavy",
                "disappointed",
                "refund",
                "broke",
                "useless",
                "awkward",
                "noisy",
                "ugly",
                "overpriced",
                "returned",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            filler_vocab: (0..150).map(|i| format!("f{i:03}")).collect(),
            mean_complaint_len: 80.0,
            mean_review_len: 40.0,
            n_eval_pos: 100,
            n_eval_neg: 400,
            n_products: 200,
            recalled_fraction: 0.1,
            recalled_hazard_multiplier: 2.0,
            hazard_rating_weights: [0.45, 0.30, 0.15, 0.07, 0.03],
            benign_rating_weights: [0.04, 0.06, 0.10, 0.25, 0.55],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthProduct {
    pub product_id: String,
    pub title: String,
    pub type_index: usize,
    pub recalled: bool,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub complaints: Corpus,
    pub reviews: Corpus,
    /// True label per review, aligned with `reviews.documents`.
    pub hidden_labels: Vec<bool>,
    /// Held-out labeled documents, never part of `reviews`.
    pub eval_docs: Vec<(Document, bool)>,
    pub products: Vec<SynthProduct>,
    /// Product-type terms over-represented in complaints.
    pub bias_tokens: Vec<String>,
    /// The hazard vocabulary.
    pub hazard_tokens: Vec<String>,
}

impl SynthCorpus {
    /// The most over-represented product-type term.
    pub fn bias_token(&self) -> &str {
        &self.bias_tokens[0]
    }

    /// The designated hazard term.
    pub fn hazard_token(&self) -> &str {
        &self.hazard_tokens[0]
    }

    pub fn hidden_positive_count(&self) -> usize {
        self.hidden_labels.iter().filter(|&&y| y).count()
    }

    pub fn eval_set(&self, vocab: &Vocabulary) -> LabeledEvalSet {
        LabeledEvalSet::new(
            self.eval_docs
                .iter()
                .map(|(doc, y)| (crate::vectorizer::vectorize(doc, vocab), *y))
                .collect(),
        )
    }

    pub fn recalled_product_ids(&self) -> HashSet<String> {
        self.products
            .iter()
            .filter(|p| p.recalled)
            .map(|p| p.product_id.clone())
            .collect()
    }
}

/// Token-category mix for one document kind.
struct Mix {
    hazard: f64,
    benign: f64,
    type_term: f64,
    // filler takes the remainder
}

const COMPLAINT_MIX: Mix = Mix {
    hazard: 0.25,
    benign: 0.05,
    type_term: 0.20,
};
const HAZARD_REVIEW_MIX: Mix = Mix {
    hazard: 0.25,
    benign: 0.10,
    type_term: 0.15,
};
const BENIGN_REVIEW_MIX: Mix = Mix {
    hazard: 0.0,
    benign: 0.25,
    type_term: 0.15,
};

fn validate(cfg: &SynthConfig) -> Result<()> {
    if cfg.product_types.is_empty() {
        return Err(Error::param("product_types", "need at least one type"));
    }
    if cfg.n_products == 0 {
        return Err(Error::param("n_products", "need at least one product"));
    }
    let csum: f64 = cfg.product_types.iter().map(|t| t.complaint_share).sum();
    let rsum: f64 = cfg.product_types.iter().map(|t| t.review_share).sum();
    if (csum - 1.0).abs() > 1e-9 {
        return Err(Error::param(
            "complaint_share",
            format!("shares sum to {csum}, not 1"),
        ));
    }
    if (rsum - 1.0).abs() > 1e-9 {
        return Err(Error::param(
            "review_share",
            format!("shares sum to {rsum}, not 1"),
        ));
    }
    if !(0.0..1.0).contains(&cfg.hazard_rate) {
        return Err(Error::param("hazard_rate", "must be in [0, 1)"));
    }
    if cfg.mean_complaint_len <= 1.0 || cfg.mean_review_len <= 1.0 {
        return Err(Error::param("mean_len", "document lengths must exceed 1"));
    }
    if !(0.0..=1.0).contains(&cfg.recalled_fraction) {
        return Err(Error::param("recalled_fraction", "must be in [0, 1]"));
    }
    if cfg.recalled_hazard_multiplier < 1.0 {
        return Err(Error::param(
            "recalled_hazard_multiplier",
            "must be at least 1",
        ));
    }
    for weights in [&cfg.hazard_rating_weights, &cfg.benign_rating_weights] {
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::param(
                "rating_weights",
                "must be a distribution over 1..=5",
            ));
        }
    }

    let mut seen = HashSet::new();
    for term in cfg
        .hazard_vocab
        .iter()
        .chain(&cfg.benign_vocab)
        .chain(&cfg.filler_vocab)
        .chain(cfg.product_types.iter().map(|t| &t.name))
    {
        if term.is_empty() || !term.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(Error::param(
                "vocab",
                format!("term {term:?} is not a single token"),
            ));
        }
        if !seen.insert(term.as_str()) {
            return Err(Error::param(
                "vocab",
                format!("term {term:?} appears in two lists"),
            ));
        }
    }
    if cfg.hazard_vocab.is_empty() || cfg.benign_vocab.is_empty() || cfg.filler_vocab.is_empty() {
        return Err(Error::param("vocab", "vocab lists must be non-empty"));
    }
    Ok(())
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        r -= w;
        if r <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &'a [String]) -> &'a str {
    &list[rng.gen_range(0..list.len())]
}

/// 1 + Geometric(1/mean), giving mean `mean`.
fn doc_len(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    let p = 1.0 / mean;
    let u: f64 = rng.gen();
    1 + ((1.0 - u).ln() / (1.0 - p).ln()).floor() as usize
}

fn gen_text(
    rng: &mut ChaCha8Rng,
    mix: &Mix,
    type_name: &str,
    mean_len: f64,
    cfg: &SynthConfig,
) -> String {
    let len = doc_len(rng, mean_len);
    // The type token is always present once; the rest of the document is
    // drawn from the category mix.
    let mut tokens = Vec::with_capacity(len);
    tokens.push(type_name.to_string());
    for _ in 1..len {
        let r: f64 = rng.gen();
        let tok = if r < mix.hazard {
            pick(rng, &cfg.hazard_vocab)
        } else if r < mix.hazard + mix.benign {
            pick(rng, &cfg.benign_vocab)
        } else if r < mix.hazard + mix.benign + mix.type_term {
            type_name
        } else {
            pick(rng, &cfg.filler_vocab)
        };
        tokens.push(tok.to_string());
    }
    tokens.join(" ")
}

fn gen_date(rng: &mut ChaCha8Rng) -> NaiveDate {
    let base = NaiveDate::from_ymd_opt(2011, 1, 1).expect("valid base date");
    base + chrono::Duration::days(rng.gen_range(0..1461))
}

fn gen_rating(rng: &mut ChaCha8Rng, weights: &[f64; 5]) -> u8 {
    pick_weighted(rng, weights) as u8 + 1
}

/// Allocates products to types proportionally to review share (largest
/// remainder), so a uniform product draw reproduces the review-share type
/// distribution.
fn allocate_products(cfg: &SynthConfig) -> Vec<usize> {
    let n = cfg.n_products;
    let mut counts: Vec<usize> = cfg
        .product_types
        .iter()
        .map(|t| (t.review_share * n as f64).floor() as usize)
        .collect();
    let mut remainders: Vec<(usize, f64)> = cfg
        .product_types
        .iter()
        .enumerate()
        .map(|(i, t)| (i, t.review_share * n as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut short = n - counts.iter().sum::<usize>();
    for (i, _) in remainders {
        if short == 0 {
            break;
        }
        counts[i] += 1;
        short -= 1;
    }
    counts
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let complaint_shares: Vec<f64> = cfg
        .product_types
        .iter()
        .map(|t| t.complaint_share)
        .collect();
    let review_shares: Vec<f64> = cfg.product_types.iter().map(|t| t.review_share).collect();

    let mut products = Vec::with_capacity(cfg.n_products);
    for (type_index, count) in allocate_products(cfg).into_iter().enumerate() {
        let name = &cfg.product_types[type_index].name;
        for i in 0..count {
            let idx = products.len();
            products.push(SynthProduct {
                product_id: format!("p{idx:05}"),
                title: format!("{name} product {i}"),
                type_index,
                recalled: rng.gen_bool(cfg.recalled_fraction),
            });
        }
    }

    let mut complaints = Vec::with_capacity(cfg.n_complaints);
    for i in 0..cfg.n_complaints {
        let t = pick_weighted(&mut rng, &complaint_shares);
        complaints.push(Document {
            id: format!("c{i}"),
            text: gen_text(
                &mut rng,
                &COMPLAINT_MIX,
                &cfg.product_types[t].name,
                cfg.mean_complaint_len,
                cfg,
            ),
            source: Source::Complaint,
            star_rating: None,
            date: Some(gen_date(&mut rng)),
            product_id: None,
        });
    }

    // Per-review hazard probabilities chosen so recalled products carry
    // `recalled_hazard_multiplier` times the non-recalled rate while the
    // global rate stays at `hazard_rate`.
    let frac = cfg.recalled_fraction;
    let mult = cfg.recalled_hazard_multiplier;
    let base_rate = cfg.hazard_rate / (1.0 + frac * (mult - 1.0));
    let recalled_rate = (mult * base_rate).min(1.0);

    let mut reviews = Vec::with_capacity(cfg.n_reviews);
    let mut hidden_labels = Vec::with_capacity(cfg.n_reviews);
    for i in 0..cfg.n_reviews {
        let product = &products[rng.gen_range(0..products.len())];
        let rate = if product.recalled {
            recalled_rate
        } else {
            base_rate
        };
        let hazardous = rng.gen_bool(rate);
        let type_name = &cfg.product_types[product.type_index].name;
        let (mix, weights) = if hazardous {
            (&HAZARD_REVIEW_MIX, &cfg.hazard_rating_weights)
        } else {
            (&BENIGN_REVIEW_MIX, &cfg.benign_rating_weights)
        };
        reviews.push(Document {
            id: format!("r{i}"),
            text: gen_text(&mut rng, mix, type_name, cfg.mean_review_len, cfg),
            source: Source::Review,
            star_rating: Some(gen_rating(&mut rng, weights)),
            date: Some(gen_date(&mut rng)),
            product_id: Some(product.product_id.clone()),
        });
        hidden_labels.push(hazardous);
    }

    let mut eval_docs = Vec::with_capacity(cfg.n_eval_pos + cfg.n_eval_neg);
    for i in 0..(cfg.n_eval_pos + cfg.n_eval_neg) {
        let hazardous = i < cfg.n_eval_pos;
        let t = pick_weighted(&mut rng, &review_shares);
        let (mix, weights) = if hazardous {
            (&HAZARD_REVIEW_MIX, &cfg.hazard_rating_weights)
        } else {
            (&BENIGN_REVIEW_MIX, &cfg.benign_rating_weights)
        };
        eval_docs.push((
            Document {
                id: format!("e{i}"),
                text: gen_text(
                    &mut rng,
                    mix,
                    &cfg.product_types[t].name,
                    cfg.mean_review_len,
                    cfg,
                ),
                source: Source::Review,
                star_rating: Some(gen_rating(&mut rng, weights)),
                date: Some(gen_date(&mut rng)),
                product_id: None,
            },
            hazardous,
        ));
    }

    // Bias tokens: types over-represented in complaints, strongest first.
    let mut biased: Vec<(f64, &str)> = cfg
        .product_types
        .iter()
        .filter(|t| t.complaint_share > t.review_share)
        .map(|t| (t.complaint_share - t.review_share, t.name.as_str()))
        .collect();
    biased.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    if biased.is_empty() {
        return Err(Error::param(
            "product_types",
            "no type is over-represented in complaints; there is no planted bias",
        ));
    }

    Ok(SynthCorpus {
        complaints: Corpus::new(complaints, CorpusKind::PositiveLabeled),
        reviews: Corpus::new(reviews, CorpusKind::Unlabeled),
        hidden_labels,
        eval_docs,
        products,
        bias_tokens: biased
            .into_iter()
            .map(|(_, name)| name.to_string())
            .collect(),
        hazard_tokens: cfg.hazard_vocab.clone(),
    })
}

/// Writes the corpus in the standard line-delimited formats plus the
/// test-only sidecars: `hidden_labels.tsv` and `recalled_products.txt`.
pub fn write_synth_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    save_corpus(&corpus.complaints, dir.join("complaints.jsonl"))?;
    save_corpus(&corpus.reviews, dir.join("reviews.jsonl"))?;

    let eval_path = dir.join("eval.jsonl");
    let file = File::create(&eval_path).map_err(|e| Error::io(&eval_path, e))?;
    let mut w = BufWriter::new(file);
    for (doc, label) in &corpus.eval_docs {
        let rec = crate::eval::LabeledReview {
            id: doc.id.clone(),
            text: doc.text.clone(),
            label: *label as u8,
        };
        writeln!(
            w,
            "{}",
            serde_json::to_string(&rec).expect("labeled reviews serialize")
        )
        .map_err(|e| Error::io(&eval_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&eval_path, e))?;

    let products_path = dir.join("products.jsonl");
    let file = File::create(&products_path).map_err(|e| Error::io(&products_path, e))?;
    let mut w = BufWriter::new(file);
    for p in &corpus.products {
        let listing = crate::recall_match::ProductListing {
            product_id: p.product_id.clone(),
            title: p.title.clone(),
        };
        writeln!(
            w,
            "{}",
            serde_json::to_string(&listing).expect("listings serialize")
        )
        .map_err(|e| Error::io(&products_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&products_path, e))?;

    let labels_path = dir.join("hidden_labels.tsv");
    let file = File::create(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let mut w = BufWriter::new(file);
    for (doc, label) in corpus.reviews.iter().zip(&corpus.hidden_labels) {
        writeln!(w, "{}\t{}", doc.id, *label as u8).map_err(|e| Error::io(&labels_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&labels_path, e))?;

    let recalled_path = dir.join("recalled_products.txt");
    let file = File::create(&recalled_path).map_err(|e| Error::io(&recalled_path, e))?;
    let mut w = BufWriter::new(file);
    for p in corpus.products.iter().filter(|p| p.recalled) {
        writeln!(w, "{}", p.product_id).map_err(|e| Error::io(&recalled_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&recalled_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SynthConfig {
        SynthConfig {
            n_complaints: 500,
            n_reviews: 5_000,
            hazard_rate: 0.05,
            n_eval_pos: 20,
            n_eval_neg: 80,
            n_products: 40,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_hazard_rate_has_no_hidden_positives() {
        let cfg = SynthConfig {
            hazard_rate: 0.0,
            n_reviews: 1_000,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        assert_eq!(corpus.hidden_positive_count(), 0);
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = small_config();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.complaints, b.complaints);
        assert_eq!(a.reviews, b.reviews);
        assert_eq!(a.hidden_labels, b.hidden_labels);
        assert_eq!(a.products, b.products);
        assert_eq!(a.eval_docs, b.eval_docs);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate(&small_config()).unwrap();
        let b = generate(&SynthConfig {
            seed: 1,
            ..small_config()
        })
        .unwrap();
        assert_ne!(a.reviews, b.reviews);
    }

    fn df_fraction(docs: &[&Document], token: &str) -> f64 {
        let containing = docs
            .iter()
            .filter(|d| {
                crate::vectorizer::tokenize(&d.text)
                    .iter()
                    .any(|t| t == token)
            })
            .count();
        containing as f64 / docs.len() as f64
    }

    // Counting oracle: the bias token's document frequency in complaints is
    // about 6x its frequency in hazardous reviews (0.6 vs 0.1 shares).
    #[test]
    fn bias_token_is_overrepresented_in_complaints() {
        for seed in 0..3 {
            let cfg = SynthConfig {
                seed,
                n_reviews: 20_000,
                ..small_config()
            };
            let corpus = generate(&cfg).unwrap();
            let bias = corpus.bias_token().to_string();

            let complaint_docs: Vec<&Document> = corpus.complaints.iter().collect();
            let hazardous_docs: Vec<&Document> = corpus
                .reviews
                .iter()
                .zip(&corpus.hidden_labels)
                .filter(|(_, &y)| y)
                .map(|(d, _)| d)
                .collect();
            assert!(
                hazardous_docs.len() > 100,
                "too few hazardous reviews to compare"
            );

            let ratio = df_fraction(&complaint_docs, &bias) / df_fraction(&hazardous_docs, &bias);
            assert!((3.0..=12.0).contains(&ratio), "seed {seed}: ratio {ratio}");
        }
    }

    // Binomial check at 4 sigma: the bias token appears in complaints at its
    // complaint share and across reviews at its review share.
    #[test]
    fn bias_token_frequency_matches_shares() {
        let cfg = SynthConfig {
            n_reviews: 20_000,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let bias = corpus.bias_token().to_string();

        let complaint_docs: Vec<&Document> = corpus.complaints.iter().collect();
        let f_complaints = df_fraction(&complaint_docs, &bias);
        let share = 0.6;
        let sigma = (share * (1.0 - share) / complaint_docs.len() as f64).sqrt();
        assert!(
            (f_complaints - share).abs() <= 4.0 * sigma,
            "complaints {f_complaints} vs share {share}"
        );

        let review_docs: Vec<&Document> = corpus.reviews.iter().collect();
        let f_reviews = df_fraction(&review_docs, &bias);
        let share = 0.1;
        let sigma = (share * (1.0 - share) / review_docs.len() as f64).sqrt();
        assert!(
            (f_reviews - share).abs() <= 4.0 * sigma,
            "reviews {f_reviews} vs share {share}"
        );
    }

    #[test]
    fn hazardous_fraction_tracks_configured_rate() {
        let cfg = SynthConfig {
            n_reviews: 20_000,
            hazard_rate: 0.02,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let fraction = corpus.hidden_positive_count() as f64 / cfg.n_reviews as f64;
        assert!(
            (fraction - cfg.hazard_rate).abs() <= 0.2 * cfg.hazard_rate,
            "fraction {fraction} vs rate {}",
            cfg.hazard_rate
        );
    }

    #[test]
    fn hazardous_reviews_have_lower_mean_rating() {
        let cfg = SynthConfig {
            n_reviews: 20_000,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let (mut sum_h, mut n_h, mut sum_b, mut n_b) = (0.0, 0, 0.0, 0);
        for (doc, &label) in corpus.reviews.iter().zip(&corpus.hidden_labels) {
            let r = doc.star_rating.unwrap() as f64;
            if label {
                sum_h += r;
                n_h += 1;
            } else {
                sum_b += r;
                n_b += 1;
            }
        }
        assert!(sum_h / (n_h as f64) < sum_b / (n_b as f64));
    }

    #[test]
    fn labels_never_leak_into_review_records() {
        let corpus = generate(&small_config()).unwrap();
        // ids are positional and text carries no label marker beyond the
        // planted vocabulary itself
        for (i, doc) in corpus.reviews.iter().enumerate() {
            assert_eq!(doc.id, format!("r{i}"));
        }
        assert_eq!(corpus.reviews.kind, CorpusKind::Unlabeled);
    }

    #[test]
    fn eval_split_sizes_match_config() {
        let cfg = small_config();
        let corpus = generate(&cfg).unwrap();
        assert_eq!(corpus.eval_docs.len(), cfg.n_eval_pos + cfg.n_eval_neg);
        let pos = corpus.eval_docs.iter().filter(|(_, y)| *y).count();
        assert_eq!(pos, cfg.n_eval_pos);
        let review_ids: HashSet<&str> = corpus.reviews.iter().map(|d| d.id.as_str()).collect();
        assert!(corpus
            .eval_docs
            .iter()
            .all(|(d, _)| !review_ids.contains(d.id.as_str())));
    }

    #[test]
    fn mean_document_length_is_near_configured_mean() {
        let cfg = SynthConfig {
            n_reviews: 2_000,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let mean = corpus
            .reviews
            .iter()
            .map(|d| crate::vectorizer::tokenize(&d.text).len() as f64)
            .sum::<f64>()
            / corpus.reviews.len() as f64;
        assert!((35.0..=45.0).contains(&mean), "mean length {mean}");
    }

    #[test]
    fn recalled_products_carry_double_hazard_rate() {
        let cfg = SynthConfig {
            n_reviews: 50_000,
            hazard_rate: 0.02,
            recalled_fraction: 0.2,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let recalled = corpus.recalled_product_ids();
        let (mut h_rec, mut n_rec, mut h_other, mut n_other) = (0usize, 0usize, 0usize, 0usize);
        for (doc, &label) in corpus.reviews.iter().zip(&corpus.hidden_labels) {
            let pid = doc.product_id.as_ref().unwrap();
            if recalled.contains(pid) {
                n_rec += 1;
                h_rec += label as usize;
            } else {
                n_other += 1;
                h_other += label as usize;
            }
        }
        let ratio = (h_rec as f64 / n_rec as f64) / (h_other as f64 / n_other as f64);
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_shares_are_rejected() {
        let mut cfg = small_config();
        cfg.product_types[0].complaint_share = 0.9;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn overlapping_vocab_lists_are_rejected() {
        let mut cfg = small_config();
        cfg.benign_vocab.push("hazard".to_string());
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn write_produces_loadable_files() {
        let cfg = SynthConfig {
            n_reviews: 200,
            n_complaints: 50,
            ..small_config()
        };
        let corpus = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_synth_corpus(&corpus, dir.path()).unwrap();

        let complaints = crate::corpus::load_corpus(
            dir.path().join("complaints.jsonl"),
            CorpusKind::PositiveLabeled,
        )
        .unwrap();
        assert_eq!(complaints.len(), 50);
        let reviews =
            crate::corpus::load_corpus(dir.path().join("reviews.jsonl"), CorpusKind::Unlabeled)
                .unwrap();
        assert_eq!(reviews.len(), 200);
        let eval = crate::eval::load_labeled_reviews(dir.path().join("eval.jsonl")).unwrap();
        assert_eq!(eval.len(), 100);
        let products =
            crate::recall_match::load_products(dir.path().join("products.jsonl")).unwrap();
        assert_eq!(products.len(), 40);
    }
}
