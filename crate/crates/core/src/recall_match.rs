//! Matching recall records to reviewed products and lead-time analytics.
//!
//! A recall matches a product when their titles share at least two distinct
//! tokens after stop-listing; matches stay unverified until a human flips
//! the flag. Lead time is the signed day count between a hazardous review
//! and the product's recall date, negative when the review came first.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::RecallRecord;
use crate::error::{Error, Result};
use crate::vectorizer::tokenize;

/// Title words that carry no matching evidence (CPSC recall boilerplate).
pub const MATCH_STOP_LIST: &[&str] = &[
    "recall", "recalls", "recalled", "due", "to", "and", "of", "the", "for",
];

/// Category keywords used to pre-filter recall records, mirroring the
/// child-product categories the experiments focus on. Shipped as a default,
/// not a fixed rule.
pub const DEFAULT_CATEGORY_KEYWORDS: &[&str] = &[
    "stroller",
    "car seat",
    "crib",
    "child carrier",
    "bath seat",
    "infant carrier",
    "bassinet",
    "pacifier",
    "rattle",
    "swing",
    "walker",
    "dresser",
];

/// An Amazon-side product listing: `{product_id, title}` per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductListing {
    pub product_id: String,
    pub title: String,
}

pub fn load_products(path: impl AsRef<Path>) -> Result<Vec<ProductListing>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ProductListing = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

/// A candidate recall-product link, unverified until reviewed by a human.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductMatch {
    pub recall_id: String,
    pub product_id: String,
    pub shared_terms: Vec<String>,
    #[serde(default)]
    pub verified: bool,
}

/// Matches persist as one JSON object per line, like the corpora.
pub fn save_matches(matches: &[ProductMatch], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for m in matches {
        writeln!(
            w,
            "{}",
            serde_json::to_string(m).expect("matches serialize")
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_matches(path: impl AsRef<Path>) -> Result<Vec<ProductMatch>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: ProductMatch = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

fn title_terms(title: &str) -> BTreeSet<String> {
    tokenize(title)
        .into_iter()
        .filter(|t| !MATCH_STOP_LIST.contains(&t.as_str()))
        .collect()
}

/// True when the lowercased title contains any keyword as a substring.
fn matches_category(title: &str, keywords: &[String]) -> bool {
    if keywords.is_empty() {
        return true;
    }
    let lower = title.to_lowercase();
    keywords
        .iter()
        .any(|k| lower.contains(k.to_lowercase().as_str()))
}

/// Emits a match for every (recall, product) pair sharing at least two
/// distinct stop-listed title terms. Recalls whose title mentions none of
/// the category keywords are skipped first; an empty keyword list disables
/// that filter.
pub fn match_recalls(
    recalls: &[RecallRecord],
    products: &[ProductListing],
    category_keywords: &[String],
) -> Vec<ProductMatch> {
    let product_terms: Vec<(usize, BTreeSet<String>)> = products
        .iter()
        .enumerate()
        .map(|(i, p)| (i, title_terms(&p.title)))
        .collect();

    let mut matches = Vec::new();
    for recall in recalls {
        if !matches_category(&recall.title, category_keywords) {
            continue;
        }
        let terms = title_terms(&recall.title);
        for (i, pterms) in &product_terms {
            let shared: Vec<String> = terms.intersection(pterms).cloned().collect();
            if shared.len() >= 2 {
                matches.push(ProductMatch {
                    recall_id: recall.recall_id.clone(),
                    product_id: products[*i].product_id.clone(),
                    shared_terms: shared,
                    verified: false,
                });
            }
        }
    }
    matches
}

/// One scored review feeding the lead-time analysis.
#[derive(Debug, Clone)]
pub struct ReviewPrediction {
    pub review_id: String,
    pub product_id: String,
    pub date: Option<NaiveDate>,
    pub hazardous: bool,
}

/// Signed calendar-day difference `review - recall`; negative when the
/// review precedes the recall.
pub fn offset_days(review: NaiveDate, recall: NaiveDate) -> i64 {
    review.signed_duration_since(recall).num_days()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OffsetRow {
    pub product_id: String,
    pub review_id: String,
    pub review_date: NaiveDate,
    pub recall_date: NaiveDate,
    pub offset_days: i64,
}

#[derive(Debug, Clone)]
pub struct LeadTimeReport {
    /// One row per hazardous review of an included product, sorted by
    /// (product, date, review id).
    pub offsets: Vec<OffsetRow>,
    /// Per product: cumulative hazardous-review count at each distinct date.
    pub cumulative: BTreeMap<String, Vec<(NaiveDate, usize)>>,
    pub products_included: usize,
    pub products_with_pre_recall_review: usize,
}

impl LeadTimeReport {
    /// Fraction of included products with at least one hazardous review
    /// strictly before the recall date.
    pub fn pre_recall_fraction(&self) -> f64 {
        if self.products_included == 0 {
            return 0.0;
        }
        self.products_with_pre_recall_review as f64 / self.products_included as f64
    }
}

/// Computes per-review lead times and per-product cumulative series.
/// Products with fewer than `min_reviews` total reviews are excluded. A
/// product matched to several recalls uses its earliest recall date.
pub fn lead_time(
    predictions: &[ReviewPrediction],
    matches: &[ProductMatch],
    recalls: &[RecallRecord],
    min_reviews: usize,
) -> Result<LeadTimeReport> {
    let recall_dates: HashMap<&str, NaiveDate> = recalls
        .iter()
        .map(|r| (r.recall_id.as_str(), r.recall_date))
        .collect();

    let mut product_recall: HashMap<&str, NaiveDate> = HashMap::new();
    for m in matches {
        let date = recall_dates
            .get(m.recall_id.as_str())
            .copied()
            .ok_or_else(|| {
                Error::param(
                    "matches",
                    format!("recall {:?} not in recall list", m.recall_id),
                )
            })?;
        product_recall
            .entry(m.product_id.as_str())
            .and_modify(|d| *d = (*d).min(date))
            .or_insert(date);
    }

    let mut totals: HashMap<&str, usize> = HashMap::new();
    for pred in predictions {
        if !product_recall.contains_key(pred.product_id.as_str()) {
            return Err(Error::UnknownProduct {
                review_id: pred.review_id.clone(),
                product_id: pred.product_id.clone(),
            });
        }
        *totals.entry(pred.product_id.as_str()).or_insert(0) += 1;
    }

    let included: HashSet<&str> = totals
        .iter()
        .filter(|&(_, &count)| count >= min_reviews)
        .map(|(&id, _)| id)
        .collect();

    let mut offsets = Vec::new();
    for pred in predictions {
        if !pred.hazardous || !included.contains(pred.product_id.as_str()) {
            continue;
        }
        let review_date = pred.date.ok_or_else(|| {
            Error::param(
                "predictions",
                format!("hazardous review {:?} has no date", pred.review_id),
            )
        })?;
        let recall_date = product_recall[pred.product_id.as_str()];
        offsets.push(OffsetRow {
            product_id: pred.product_id.clone(),
            review_id: pred.review_id.clone(),
            review_date,
            recall_date,
            offset_days: offset_days(review_date, recall_date),
        });
    }
    offsets.sort_by(|a, b| {
        (&a.product_id, a.review_date, &a.review_id).cmp(&(
            &b.product_id,
            b.review_date,
            &b.review_id,
        ))
    });

    let mut cumulative: BTreeMap<String, Vec<(NaiveDate, usize)>> = BTreeMap::new();
    for row in &offsets {
        let series = cumulative.entry(row.product_id.clone()).or_default();
        match series.last_mut() {
            Some((date, count)) if *date == row.review_date => *count += 1,
            Some((_, count)) => {
                let next = *count + 1;
                series.push((row.review_date, next));
            }
            None => series.push((row.review_date, 1)),
        }
    }

    let products_with_pre_recall_review = cumulative
        .keys()
        .filter(|pid| {
            offsets
                .iter()
                .any(|row| &row.product_id == *pid && row.offset_days < 0)
        })
        .count();

    Ok(LeadTimeReport {
        offsets,
        cumulative,
        products_included: included.len(),
        products_with_pre_recall_review,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-review offsets CSV: `product_id,review_id,offset_days`.
pub fn offsets_csv(report: &LeadTimeReport) -> String {
    let mut out = String::from("product_id,review_id,offset_days\n");
    for row in &report.offsets {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(&row.product_id),
            csv_field(&row.review_id),
            row.offset_days
        ));
    }
    out
}

/// Per-product cumulative series CSV: `product_id,date,cum_count`.
pub fn cumulative_csv(report: &LeadTimeReport) -> String {
    let mut out = String::from("product_id,date,cum_count\n");
    for (pid, series) in &report.cumulative {
        for (date, count) in series {
            out.push_str(&format!("{},{date},{count}\n", csv_field(pid)));
        }
    }
    out
}

/// One prediction row for hazard-rate aggregation.
#[derive(Debug, Clone)]
pub struct ScoredReview {
    pub product_id: String,
    pub hazardous: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductHazardCount {
    pub product_id: String,
    pub total_reviews: usize,
    pub hazardous_reviews: usize,
    pub max_score: f64,
}

#[derive(Debug, Clone)]
pub struct HazardRates {
    pub rate_recalled: f64,
    pub rate_other: f64,
    /// Ranked watchlist: hazardous count descending, then max score
    /// descending, then product id.
    pub per_product: Vec<ProductHazardCount>,
}

/// Hazardous-review rates for recalled vs. non-recalled products, plus
/// ranked per-product counts.
pub fn hazard_rates(
    predictions: &[ScoredReview],
    recalled: &HashSet<String>,
) -> Result<HazardRates> {
    let mut group_total = [0usize; 2];
    let mut group_hazard = [0usize; 2];
    let mut per_product: BTreeMap<&str, ProductHazardCount> = BTreeMap::new();

    for pred in predictions {
        let is_recalled = recalled.contains(&pred.product_id) as usize;
        group_total[is_recalled] += 1;
        group_hazard[is_recalled] += pred.hazardous as usize;

        let entry = per_product
            .entry(pred.product_id.as_str())
            .or_insert_with(|| ProductHazardCount {
                product_id: pred.product_id.clone(),
                total_reviews: 0,
                hazardous_reviews: 0,
                max_score: f64::NEG_INFINITY,
            });
        entry.total_reviews += 1;
        entry.hazardous_reviews += pred.hazardous as usize;
        entry.max_score = entry.max_score.max(pred.score);
    }

    if group_total[1] == 0 {
        return Err(Error::EmptyGroup("recalled".to_string()));
    }
    if group_total[0] == 0 {
        return Err(Error::EmptyGroup("non-recalled".to_string()));
    }

    let mut ranked: Vec<ProductHazardCount> = per_product.into_values().collect();
    ranked.sort_by(|a, b| {
        b.hazardous_reviews
            .cmp(&a.hazardous_reviews)
            .then(
                b.max_score
                    .partial_cmp(&a.max_score)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(a.product_id.cmp(&b.product_id))
    });

    Ok(HazardRates {
        rate_recalled: group_hazard[1] as f64 / group_total[1] as f64,
        rate_other: group_hazard[0] as f64 / group_total[0] as f64,
        per_product: ranked,
    })
}

/// Watchlist CSV: `product_id,hazardous_reviews,total_reviews,max_score`.
pub fn watchlist_csv(rates: &HazardRates) -> String {
    let mut out = String::from("product_id,hazardous_reviews,total_reviews,max_score\n");
    for p in &rates.per_product {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            csv_field(&p.product_id),
            p.hazardous_reviews,
            p.total_reviews,
            p.max_score
        ));
    }
    out
}
