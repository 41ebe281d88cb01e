//! Aspect–sentiment extraction: prompt construction, response parsing,
//! cached LLM extraction, an offline lexicon extractor and agreement metrics.

mod agreement;
mod cache;
mod extract;
mod fixture;
mod parse;
mod prompt;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{FeatureKey, Sentiment};

pub use agreement::{agreement_metrics, Agreement, AgreementUniverse};
pub use cache::{CacheEntry, CacheKey, MentionCache};
pub use extract::{extract_aspects, ExtractOptions};
pub use fixture::{fixture_extract, lexicon_client, Lexicon, LexiconEntry, FIXTURE_MODEL};
pub use parse::{parse_extraction_response, ParsedResponse};
pub use prompt::{build_extraction_prompt, render_aspect_listing, EXTRACTION_SYSTEM_PROMPT};

/// One extracted (parent, leaf, sentiment, snippet) tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMention {
    pub review_id: String,
    pub aspect_parent: String,
    pub aspect_leaf: String,
    pub sentiment: Sentiment,
    pub snippet: String,
}

impl AspectMention {
    pub fn feature(&self) -> FeatureKey {
        FeatureKey::new(self.aspect_leaf.clone(), self.sentiment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionMetadata {
    pub model: String,
    pub created_at: DateTime<Utc>,
    pub cache_hits: usize,
    pub client_calls: usize,
    /// Reviews whose extraction failed after all retries.
    pub failed: Vec<String>,
    pub warnings: Vec<String>,
}

impl ExtractionMetadata {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            created_at: Utc::now(),
            cache_hits: 0,
            client_calls: 0,
            failed: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Mentions from a batch of reviews plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionSet {
    pub mentions: Vec<AspectMention>,
    pub source_review_ids: BTreeSet<String>,
    pub metadata: ExtractionMetadata,
}

impl MentionSet {
    pub fn empty(model: impl Into<String>) -> Self {
        Self {
            mentions: Vec::new(),
            source_review_ids: BTreeSet::new(),
            metadata: ExtractionMetadata::new(model),
        }
    }

    /// Mentions whose review id is in `review_ids`, order preserved.
    pub fn restrict<'a, I>(&self, review_ids: I) -> MentionSet
    where
        I: IntoIterator<Item = &'a str>,
    {
        let ids: BTreeSet<String> = review_ids
            .into_iter()
            .filter(|id| self.source_review_ids.contains(*id))
            .map(str::to_string)
            .collect();
        MentionSet {
            mentions: self
                .mentions
                .iter()
                .filter(|m| ids.contains(&m.review_id))
                .cloned()
                .collect(),
            source_review_ids: ids,
            metadata: self.metadata.clone(),
        }
    }
}
