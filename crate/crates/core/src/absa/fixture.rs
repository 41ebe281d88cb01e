use std::collections::BTreeSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use serde_json::{json, Value};

use super::{AspectMention, ExtractionMetadata, MentionSet};
use crate::client::{ClientError, MockClient};
use crate::corpus::{Review, Sentiment, Taxonomy};
use crate::error::{Error, Result};

pub const FIXTURE_MODEL: &str = "fixture-lexicon";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub leaf: String,
    /// Overrides the section default (liked → positive, disliked → negative,
    /// title → neutral).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
}

/// Keyword → (leaf, optional sentiment) table for the offline extractor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    entries: IndexMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, keyword: &str, leaf: &str, sentiment: Option<Sentiment>) -> Self {
        self.insert(keyword, leaf, sentiment);
        self
    }

    pub fn insert(&mut self, keyword: &str, leaf: &str, sentiment: Option<Sentiment>) {
        self.entries.insert(
            keyword.trim().to_lowercase(),
            LexiconEntry {
                leaf: leaf.to_string(),
                sentiment,
            },
        );
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: Lexicon = serde_json::from_str(&text)
            .map_err(|e| Error::Lexicon(format!("{}: {e}", path.display())))?;
        let mut lexicon = Lexicon::new();
        for (k, v) in raw.entries {
            lexicon.insert(&k, &v.leaf, v.sentiment);
        }
        Ok(lexicon)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<()> {
        for (keyword, entry) in &self.entries {
            if keyword.is_empty() {
                return Err(Error::Lexicon("empty keyword".into()));
            }
            if !taxonomy.contains_leaf(&entry.leaf) {
                return Err(Error::Lexicon(format!(
                    "keyword {keyword:?} maps to unknown leaf {:?}",
                    entry.leaf
                )));
            }
        }
        Ok(())
    }
}

fn sentences(text: &str) -> impl Iterator<Item = &str> {
    text.split(['.', '!', '?', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

/// Byte offsets where `needle` occurs in `haystack` on word boundaries.
fn word_matches(haystack: &str, needle: &str) -> Vec<usize> {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    haystack
        .match_indices(needle)
        .filter(|(start, _)| {
            let before = haystack[..*start].chars().next_back();
            let after = haystack[start + needle.len()..].chars().next();
            !before.is_some_and(is_word) && !after.is_some_and(is_word)
        })
        .map(|(start, _)| start)
        .collect()
}

/// Deterministic keyword extractor standing in for the LLM.
///
/// Sections are scanned in title, liked, disliked order, sentence by
/// sentence; the snippet is the matched sentence. Within a sentence a
/// (leaf, sentiment) pair is emitted once, ordered by first match position.
pub fn fixture_extract(
    reviews: &[Review],
    lexicon: &Lexicon,
    taxonomy: &Taxonomy,
) -> Result<MentionSet> {
    lexicon.validate(taxonomy)?;
    let mut mentions = Vec::new();
    let mut ids = BTreeSet::new();
    for review in reviews {
        ids.insert(review.review_id.clone());
        let sections = [
            (&review.title, Sentiment::Neutral),
            (&review.liked, Sentiment::Positive),
            (&review.disliked, Sentiment::Negative),
        ];
        for (text, default_sentiment) in sections {
            for sentence in sentences(text) {
                let lower = sentence.to_lowercase();
                let mut hits: Vec<(usize, &LexiconEntry)> = lexicon
                    .entries
                    .iter()
                    .flat_map(|(kw, e)| word_matches(&lower, kw).into_iter().map(move |pos| (pos, e)))
                    .collect();
                hits.sort_by_key(|(pos, _)| *pos);
                let mut emitted: Vec<(&str, Sentiment)> = Vec::new();
                for (_, entry) in hits {
                    let sentiment = entry.sentiment.unwrap_or(default_sentiment);
                    if emitted.contains(&(entry.leaf.as_str(), sentiment)) {
                        continue;
                    }
                    emitted.push((entry.leaf.as_str(), sentiment));
                    mentions.push(AspectMention {
                        review_id: review.review_id.clone(),
                        aspect_parent: taxonomy
                            .parent_of(&entry.leaf)
                            .expect("validated")
                            .to_string(),
                        aspect_leaf: entry.leaf.clone(),
                        sentiment,
                        snippet: sentence.to_string(),
                    });
                }
            }
        }
    }
    let metadata = ExtractionMetadata::new(FIXTURE_MODEL);
    Ok(MentionSet {
        mentions,
        source_review_ids: ids,
        metadata,
    })
}

/// A [`MockClient`] that answers extraction prompts with the lexicon's
/// mentions, so offline runs exercise the same prompt, parse and cache path
/// as a live model.
pub fn lexicon_client(lexicon: Lexicon, taxonomy: Taxonomy) -> Result<MockClient> {
    lexicon.validate(&taxonomy)?;
    Ok(MockClient::new(FIXTURE_MODEL, move |request, _| {
        let raw = request
            .user
            .lines()
            .find_map(|l| l.strip_prefix("Review: "))
            .ok_or_else(|| ClientError::Malformed("no review line in prompt".into()))?;
        let fields: Value = serde_json::from_str(raw).map_err(|e| ClientError::Malformed(e.to_string()))?;
        let text = |k: &str| fields.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
        let review = Review {
            review_id: "prompt".into(),
            accommodation_id: "prompt".into(),
            domain: String::new(),
            title: text("title"),
            liked: text("liked"),
            disliked: text("disliked"),
        };
        let set = fixture_extract(std::slice::from_ref(&review), &lexicon, &taxonomy)
            .map_err(|e| ClientError::Malformed(e.to_string()))?;
        let items: Vec<Value> = set
            .mentions
            .iter()
            .map(|m| {
                json!({
                    "aspect_parent": m.aspect_parent,
                    "aspect_leaf": m.aspect_leaf,
                    "sentiment": m.sentiment,
                    "snippet": m.snippet,
                })
            })
            .collect();
        Ok(Value::Array(items).to_string())
    }))
}
