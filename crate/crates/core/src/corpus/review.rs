use std::collections::HashSet;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SKI: &str = "ski";
pub const BEACH: &str = "beach";
pub const CITY_CENTER: &str = "city_center";

/// One guest review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub accommodation_id: String,
    pub domain: String,
    pub title: String,
    #[serde(default)]
    pub liked: String,
    #[serde(default)]
    pub disliked: String,
}

impl Review {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.review_id.trim().is_empty() {
            return Err("empty review_id".into());
        }
        if self.accommodation_id.trim().is_empty() {
            return Err("empty accommodation_id".into());
        }
        if [&self.title, &self.liked, &self.disliked]
            .iter()
            .all(|s| s.trim().is_empty())
        {
            return Err("title, liked and disliked are all empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ingestion {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedReviews {
    pub reviews: Vec<Review>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads a review JSONL file.
///
/// Duplicate ids always reject the corpus. Lines failing the schema abort in
/// strict mode and are collected into `skipped` in lenient mode.
pub fn load_reviews(path: impl AsRef<Path>, mode: Ingestion) -> Result<LoadedReviews> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_reviews(&text, path, mode)
}

pub fn parse_reviews(text: &str, origin: &Path, mode: Ingestion) -> Result<LoadedReviews> {
    let mut out = LoadedReviews::default();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Review>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(review) => {
                if !seen.insert(review.review_id.clone()) {
                    return Err(Error::DuplicateReview(review.review_id));
                }
                out.reviews.push(review);
            }
            Err(message) => match mode {
                Ingestion::Strict => {
                    return Err(Error::Schema {
                        path: PathBuf::from(origin),
                        line: line_no,
                        message,
                    })
                }
                Ingestion::Lenient => {
                    log::warn!("{}:{line_no}: skipped: {message}", origin.display());
                    out.skipped.push(SkippedLine {
                        line: line_no,
                        reason: message,
                    });
                }
            },
        }
    }
    Ok(out)
}

/// Groups reviews of `domain` by accommodation, preserving input order both
/// across groups (first appearance) and within each group.
pub fn group_by_accommodation<'a>(
    reviews: &'a [Review],
    domain: &str,
) -> IndexMap<&'a str, Vec<&'a Review>> {
    let mut groups: IndexMap<&str, Vec<&Review>> = IndexMap::new();
    for review in reviews.iter().filter(|r| r.domain == domain) {
        groups
            .entry(review.accommodation_id.as_str())
            .or_default()
            .push(review);
    }
    groups
}
