//! Expectation-based review summarization.
//!
//! Reviews are turned into (aspect, sentiment) mentions, pooled into a
//! per-domain reference distribution and compared against each
//! accommodation with a Jensen-Shannon decomposition. The largest positive
//! and negative contributions drive the prompt given to the summarizer.

pub mod absa;
pub mod client;
pub mod corpus;
mod error;
pub mod evalstats;
pub mod expectation;
pub mod generation;
pub mod lvs;
pub mod prompting;

pub use absa::{AspectMention, MentionCache, MentionSet};
pub use client::{ChatClient, ChatRequest, HttpChatClient, MockClient, RetryPolicy};
pub use corpus::{FeatureKey, Review, Sentiment, Taxonomy, Vocabulary};
pub use error::{Error, Result};
pub use expectation::{DomainReference, FeatureDistribution};
pub use lvs::{DivergenceProfile, TopicSelection};
pub use prompting::{PromptBundle, TopicEntry, Variant};
