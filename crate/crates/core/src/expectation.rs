//! Per-accommodation feature distributions and pooled domain references.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::absa::AspectMention;
use crate::corpus::{FeatureKey, Sentiment, Vocabulary};
use crate::error::{Error, Result};

/// Pseudo-count added to every feature of a reference.
pub const DEFAULT_EPSILON: f64 = 1e-9;

const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over a vocabulary, with the counts behind it.
///
/// A distribution with `support_count == 0` is the all-zero vector: it is
/// left unnormalized and callers are expected to flag it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDistribution {
    vocabulary: Arc<Vocabulary>,
    probabilities: Vec<f64>,
    counts: Vec<u64>,
    support_count: u64,
}

impl FeatureDistribution {
    /// Normalizes `counts + epsilon` per feature. With `epsilon == 0` and no
    /// counts the result is the all-zero vector.
    pub fn from_counts(vocabulary: Arc<Vocabulary>, counts: Vec<u64>, epsilon: f64) -> Result<Self> {
        if counts.len() != vocabulary.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} counts for {} features",
                counts.len(),
                vocabulary.len()
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let support_count: u64 = counts.iter().sum();
        let total = support_count as f64 + epsilon * counts.len() as f64;
        let probabilities = if total > 0.0 {
            counts.iter().map(|&c| (c as f64 + epsilon) / total).collect()
        } else {
            vec![0.0; counts.len()]
        };
        Ok(Self {
            vocabulary,
            probabilities,
            counts,
            support_count,
        })
    }

    /// Wraps an explicit probability vector (counts are zero).
    pub fn from_probabilities(vocabulary: Arc<Vocabulary>, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != vocabulary.len() {
            return Err(Error::VocabularyMismatch(format!(
                "{} probabilities for {} features",
                probabilities.len(),
                vocabulary.len()
            )));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidDistribution("negative or non-finite probability".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        let n = probabilities.len();
        Ok(Self {
            vocabulary,
            probabilities,
            counts: vec![0; n],
            support_count: 0,
        })
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn support_count(&self) -> u64 {
        self.support_count
    }

    /// True when the vector is all zero (no mentions, no smoothing).
    pub fn is_empty_support(&self) -> bool {
        self.probabilities.iter().all(|p| *p == 0.0)
    }

    pub fn probability(&self, key: &FeatureKey) -> Option<f64> {
        self.vocabulary.index_of(key).map(|i| self.probabilities[i])
    }
}

/// Counts mentions per feature of `vocabulary`.
pub fn count_features<'a>(
    mentions: impl IntoIterator<Item = &'a AspectMention>,
    vocabulary: &Vocabulary,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; vocabulary.len()];
    for m in mentions {
        let key = m.feature();
        let i = vocabulary.index_of(&key).ok_or_else(|| Error::UnknownFeature {
            leaf: key.leaf.clone(),
            sentiment: key.sentiment.to_string(),
        })?;
        counts[i] += 1;
    }
    Ok(counts)
}

/// Normalized feature frequencies of one accommodation's mentions.
pub fn accommodation_distribution(
    mentions: &[AspectMention],
    vocabulary: &Arc<Vocabulary>,
) -> Result<FeatureDistribution> {
    let counts = count_features(mentions, vocabulary)?;
    FeatureDistribution::from_counts(Arc::clone(vocabulary), counts, 0.0)
}

/// The pooled feature distribution of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainReference {
    pub domain: String,
    pub distribution: FeatureDistribution,
    pub smoothing_epsilon: f64,
    pub accommodation_count: usize,
}

/// Pools every mention of the domain into one reference distribution,
/// adding `epsilon` to each feature count before normalizing.
pub fn domain_reference(
    domain: &str,
    mentions: &[AspectMention],
    accommodation_count: usize,
    vocabulary: &Arc<Vocabulary>,
    epsilon: f64,
) -> Result<DomainReference> {
    let counts = count_features(mentions, vocabulary)?;
    DomainReference::from_counts(domain, counts, accommodation_count, vocabulary, epsilon)
}

impl DomainReference {
    pub fn from_counts(
        domain: &str,
        counts: Vec<u64>,
        accommodation_count: usize,
        vocabulary: &Arc<Vocabulary>,
        epsilon: f64,
    ) -> Result<Self> {
        if counts.iter().all(|c| *c == 0) {
            return Err(Error::EmptyDomain(domain.to_string()));
        }
        Ok(Self {
            domain: domain.to_string(),
            distribution: FeatureDistribution::from_counts(Arc::clone(vocabulary), counts, epsilon)?,
            smoothing_epsilon: epsilon,
            accommodation_count,
        })
    }

    /// The same reference with `focal`'s mentions removed from the pool.
    pub fn leave_one_out(&self, focal: &FeatureDistribution) -> Result<Self> {
        let vocab = self.distribution.vocabulary();
        if focal.vocabulary() != vocab {
            return Err(Error::VocabularyMismatch("focal distribution".into()));
        }
        let counts = self
            .distribution
            .counts()
            .iter()
            .zip(focal.counts())
            .map(|(total, own)| {
                total.checked_sub(*own).ok_or_else(|| {
                    Error::InvalidInput("focal counts exceed the pooled counts".into())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_counts(
            &self.domain,
            counts,
            self.accommodation_count.saturating_sub(1),
            vocab,
            self.smoothing_epsilon,
        )
    }

    pub fn to_file(&self) -> ReferenceFile {
        let dist = &self.distribution;
        ReferenceFile {
            domain: self.domain.clone(),
            epsilon: self.smoothing_epsilon,
            accommodation_count: self.accommodation_count,
            features: dist
                .vocabulary()
                .keys()
                .iter()
                .zip(dist.probabilities())
                .zip(dist.counts())
                .map(|((k, p), c)| ReferenceFeature {
                    leaf: k.leaf.clone(),
                    sentiment: k.sentiment,
                    p: *p,
                    count: *c,
                })
                .collect(),
        }
    }

    /// Rebuilds a reference from its file form; the features must follow
    /// `vocabulary` order exactly.
    pub fn from_file(file: &ReferenceFile, vocabulary: &Arc<Vocabulary>) -> Result<Self> {
        let keys = vocabulary.keys();
        if file.features.len() != keys.len()
            || file
                .features
                .iter()
                .zip(keys)
                .any(|(f, k)| f.leaf != k.leaf || f.sentiment != k.sentiment)
        {
            return Err(Error::VocabularyMismatch(format!(
                "reference for {:?} does not follow the active vocabulary",
                file.domain
            )));
        }
        Self::from_counts(
            &file.domain,
            file.features.iter().map(|f| f.count).collect(),
            file.accommodation_count,
            vocabulary,
            file.epsilon,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFeature {
    pub leaf: String,
    pub sentiment: Sentiment,
    pub p: f64,
    pub count: u64,
}

/// On-disk reference: features in vocabulary order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub domain: String,
    pub epsilon: f64,
    pub accommodation_count: usize,
    pub features: Vec<ReferenceFeature>,
}
