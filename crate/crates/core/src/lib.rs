//! Detect product-safety hazard reports in consumer reviews.
//!
//! Training data for this task is scarce, so the classifier is built from
//! positive-only complaint records plus a large unlabeled review corpus
//! (positive-unlabeled learning). High-rated reviews are sampled as presumed
//! negatives, a class-weighted logistic regression is fit by gradient
//! descent, and the selection bias between the two corpora is corrected by
//! re-scaling feature values with smoothed class-conditional probabilities
//! estimated from the baseline classifier's own predictions on the full
//! unlabeled corpus. Recall-matching utilities turn per-review predictions
//! into lead-time analytics.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod informed_prior;
pub mod linmodel;
pub mod pu_train;
pub mod recall_match;
pub mod synthgen;
pub mod vectorizer;

pub use error::{Error, Result};
