//! Topic taxonomy, feature vocabulary and review ingestion.

mod review;
mod taxonomy;

pub use review::{
    group_by_accommodation, load_reviews, parse_reviews, Ingestion, LoadedReviews, Review,
    SkippedLine, BEACH, CITY_CENTER, SKI,
};
pub use taxonomy::{feature_vocabulary, FeatureKey, Sentiment, Taxonomy, Vocabulary};
