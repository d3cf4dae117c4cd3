//! Corpora of complaint, review, and recall records.
//!
//! All three inputs are line-delimited files with one JSON object per line.
//! Complaints carry `{id, text, date?}`, reviews `{id, text, star_rating,
//! date?, product_id?}`, and recalls `{recall_id, recall_date, title,
//! reason?}`. Loading is order-preserving and fails on the first malformed
//! line, naming the line and field.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Complaint,
    Review,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// Every document is a complaint and carries an implicit positive label.
    PositiveLabeled,
    Unlabeled,
}

/// One text record: a complaint or a review.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: Source,
    /// 1..=5, reviews only.
    pub star_rating: Option<u8>,
    pub date: Option<NaiveDate>,
    pub product_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub kind: CorpusKind,
}

/// One CPSC-style recall record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub recall_id: String,
    pub recall_date: NaiveDate,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComplaintLine {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<NaiveDate>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReviewLine {
    id: String,
    text: String,
    star_rating: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    product_id: Option<String>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, kind: CorpusKind) -> Self {
        Corpus { documents, kind }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }
}

fn validate_text(path: &Path, line: usize, text: &str) -> Result<()> {
    if text.trim().is_empty() {
        return Err(Error::record(path, line, "text", "empty after trimming"));
    }
    Ok(())
}

fn validate_rating(path: &Path, line: usize, rating: u8) -> Result<()> {
    if !(1..=5).contains(&rating) {
        return Err(Error::record(
            path,
            line,
            "star_rating",
            format!("{rating} is outside 1..=5"),
        ));
    }
    Ok(())
}

/// Loads a line-delimited corpus file. `kind` selects the record schema:
/// complaints for [`CorpusKind::PositiveLabeled`], reviews otherwise.
pub fn load_corpus(path: impl AsRef<Path>, kind: CorpusKind) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = match kind {
            CorpusKind::PositiveLabeled => {
                let rec: ComplaintLine = serde_json::from_str(&line)
                    .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
                validate_text(path, lineno, &rec.text)?;
                Document {
                    id: rec.id,
                    text: rec.text,
                    source: Source::Complaint,
                    star_rating: None,
                    date: rec.date,
                    product_id: None,
                }
            }
            CorpusKind::Unlabeled => {
                let rec: ReviewLine = serde_json::from_str(&line)
                    .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
                validate_text(path, lineno, &rec.text)?;
                validate_rating(path, lineno, rec.star_rating)?;
                Document {
                    id: rec.id,
                    text: rec.text,
                    source: Source::Review,
                    star_rating: Some(rec.star_rating),
                    date: rec.date,
                    product_id: rec.product_id,
                }
            }
        };
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId {
                path: path.display().to_string(),
                line: lineno,
                id: doc.id,
            });
        }
        documents.push(doc);
    }

    if documents.is_empty() {
        log::warn!("{}: corpus file is empty", path.display());
    }
    Ok(Corpus::new(documents, kind))
}

/// Writes a corpus back to the line-delimited format it was loaded from.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in &corpus.documents {
        let line = match doc.source {
            Source::Complaint => serde_json::to_string(&ComplaintLine {
                id: doc.id.clone(),
                text: doc.text.clone(),
                date: doc.date,
            }),
            Source::Review => serde_json::to_string(&ReviewLine {
                id: doc.id.clone(),
                text: doc.text.clone(),
                star_rating: doc.star_rating.unwrap_or(0),
                date: doc.date,
                product_id: doc.product_id.clone(),
            }),
        }
        .expect("corpus records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads recall records, in file order, with parsed dates.
pub fn load_recalls(path: impl AsRef<Path>) -> Result<Vec<RecallRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecallRecord = serde_json::from_str(&line)
            .map_err(|e| Error::record(path, lineno, "record", e.to_string()))?;
        if rec.title.trim().is_empty() {
            return Err(Error::record(path, lineno, "title", "empty after trimming"));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn save_recalls(records: &[RecallRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).expect("recall records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_reviews_in_file_order() {
        let f = write_temp(concat!(
            "{\"id\":\"r1\",\"text\":\"works great\",\"star_rating\":5}\n",
            "{\"id\":\"r2\",\"text\":\"leg snapped off\",\"star_rating\":1,\"date\":\"2013-04-30\",\"product_id\":\"p9\"}\n",
            "{\"id\":\"r3\",\"text\":\"meh\",\"star_rating\":3}\n",
        ));
        let corpus = load_corpus(f.path(), CorpusKind::Unlabeled).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.kind, CorpusKind::Unlabeled);
        assert_eq!(corpus.documents[0].id, "r1");
        assert_eq!(corpus.documents[1].star_rating, Some(1));
        assert_eq!(
            corpus.documents[1].date,
            Some(NaiveDate::from_ymd_opt(2013, 4, 30).unwrap())
        );
        assert_eq!(corpus.documents[2].id, "r3");
    }

    #[test]
    fn empty_file_yields_empty_corpus() {
        let f = write_temp("");
        let corpus = load_corpus(f.path(), CorpusKind::Unlabeled).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn out_of_range_rating_names_line_and_field() {
        let f = write_temp(concat!(
            "{\"id\":\"r1\",\"text\":\"ok\",\"star_rating\":4}\n",
            "{\"id\":\"r2\",\"text\":\"bad\",\"star_rating\":6}\n",
        ));
        let err = load_corpus(f.path(), CorpusKind::Unlabeled).unwrap_err();
        match err {
            Error::Record { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "star_rating");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let f = write_temp(concat!(
            "{\"id\":\"c1\",\"text\":\"mattress broke\"}\n",
            "{\"id\":\"c1\",\"text\":\"again\"}\n",
        ));
        let err = load_corpus(f.path(), CorpusKind::PositiveLabeled).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 2, .. }));
    }

    #[test]
    fn blank_text_rejected() {
        let f = write_temp("{\"id\":\"c1\",\"text\":\"   \"}\n");
        let err = load_corpus(f.path(), CorpusKind::PositiveLabeled).unwrap_err();
        match err {
            Error::Record { field, .. } => assert_eq!(field, "text"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn complaints_never_carry_ratings() {
        let f = write_temp(
            "{\"id\":\"c1\",\"text\":\"spring poked through\",\"date\":\"2012-01-05\"}\n",
        );
        let corpus = load_corpus(f.path(), CorpusKind::PositiveLabeled).unwrap();
        assert_eq!(corpus.documents[0].source, Source::Complaint);
        assert_eq!(corpus.documents[0].star_rating, None);
    }

    #[test]
    fn corpus_round_trip() {
        let f = write_temp(concat!(
            "{\"id\":\"r1\",\"text\":\"works great\",\"star_rating\":5,\"product_id\":\"p1\"}\n",
            "{\"id\":\"r2\",\"text\":\"fell apart\",\"star_rating\":1,\"date\":\"2010-12-10\"}\n",
        ));
        let corpus = load_corpus(f.path(), CorpusKind::Unlabeled).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_corpus(&corpus, out.path()).unwrap();
        let reloaded = load_corpus(out.path(), CorpusKind::Unlabeled).unwrap();
        assert_eq!(corpus, reloaded);
    }

    #[test]
    fn recall_fixture_parses() {
        let f = write_temp(concat!(
            "{\"recall_id\":\"12-240\",\"recall_date\":\"2012-07-24\",",
            "\"title\":\"Kolcraft Recalls Contours Tandem Strollers\",",
            "\"reason\":\"front wheel assembly can break\"}\n",
        ));
        let recalls = load_recalls(f.path()).unwrap();
        assert_eq!(recalls.len(), 1);
        assert_eq!(
            recalls[0].recall_date,
            NaiveDate::from_ymd_opt(2012, 7, 24).unwrap()
        );
        assert_eq!(
            recalls[0].title,
            "Kolcraft Recalls Contours Tandem Strollers"
        );
    }

    #[test]
    fn recall_empty_file_is_empty_list() {
        let f = write_temp("");
        assert!(load_recalls(f.path()).unwrap().is_empty());
    }

    #[test]
    fn recall_bad_date_is_parse_error() {
        let f = write_temp(
            "{\"recall_id\":\"x\",\"recall_date\":\"2012-13-40\",\"title\":\"Widget\"}\n",
        );
        assert!(load_recalls(f.path()).is_err());
    }
}
