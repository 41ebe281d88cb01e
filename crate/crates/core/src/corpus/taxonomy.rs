use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const DEFAULT_TAXONOMY: &str = include_str!("../../data/taxonomy.json");

/// Sentiment polarity attached to an aspect mention.
///
/// The declaration order (positive < negative < neutral) is the canonical
/// ordering used inside the feature vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(Sentiment::Positive),
            "negative" => Ok(Sentiment::Negative),
            "neutral" => Ok(Sentiment::Neutral),
            other => Err(Error::InvalidInput(format!("unknown sentiment {other:?}"))),
        }
    }
}

/// One (leaf, sentiment) coordinate of the feature space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureKey {
    pub leaf: String,
    pub sentiment: Sentiment,
}

impl FeatureKey {
    pub fn new(leaf: impl Into<String>, sentiment: Sentiment) -> Self {
        Self {
            leaf: leaf.into(),
            sentiment,
        }
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.leaf, self.sentiment)
    }
}

#[derive(Deserialize, Serialize)]
struct TaxonomyDocument {
    parents: IndexMap<String, Vec<String>>,
}

/// Two-level topic hierarchy: parent categories with uniquely named leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    parents: Vec<String>,
    leaves: IndexMap<String, String>,
}

impl Taxonomy {
    /// The bundled accommodation taxonomy (138 leaves under 21 parents).
    pub fn bundled() -> Self {
        Self::from_json_str(DEFAULT_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: TaxonomyDocument = serde_json::from_str(text)
            .map_err(|e| Error::Taxonomy(format!("malformed document: {e}")))?;
        Self::from_groups(doc.parents)
    }

    /// Builds a taxonomy from `(parent, leaves)` groups in order.
    pub fn from_groups<P, L, I>(groups: impl IntoIterator<Item = (P, I)>) -> Result<Self>
    where
        P: Into<String>,
        L: Into<String>,
        I: IntoIterator<Item = L>,
    {
        let mut parents = Vec::new();
        let mut leaves: IndexMap<String, String> = IndexMap::new();
        for (parent, group) in groups {
            let parent = parent.into();
            if parent.trim().is_empty() {
                return Err(Error::Taxonomy("empty parent name".into()));
            }
            if parents.contains(&parent) {
                return Err(Error::Taxonomy(format!("duplicate parent {parent:?}")));
            }
            for leaf in group {
                let leaf = leaf.into();
                if leaf.trim().is_empty() {
                    return Err(Error::Taxonomy(format!("empty leaf under {parent:?}")));
                }
                if let Some(previous) = leaves.get(&leaf) {
                    return Err(Error::Taxonomy(format!(
                        "duplicate leaf {leaf:?} under {previous:?} and {parent:?}"
                    )));
                }
                leaves.insert(leaf, parent.clone());
            }
            parents.push(parent);
        }
        if leaves.is_empty() {
            return Err(Error::Taxonomy("document defines no leaves".into()));
        }
        Ok(Self { parents, leaves })
    }

    /// Builds from an explicit leaf → parent mapping; every parent must be listed.
    pub fn from_leaf_map(
        parents: Vec<String>,
        leaf_parents: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let mut groups: IndexMap<String, Vec<String>> =
            parents.iter().map(|p| (p.clone(), Vec::new())).collect();
        for (leaf, parent) in leaf_parents {
            match groups.get_mut(&parent) {
                Some(group) => group.push(leaf),
                None => {
                    return Err(Error::Taxonomy(format!(
                        "leaf {leaf:?} references unknown parent {parent:?}"
                    )))
                }
            }
        }
        Self::from_groups(groups)
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Leaves in document order.
    pub fn leaves(&self) -> impl Iterator<Item = &str> {
        self.leaves.keys().map(String::as_str)
    }

    pub fn contains_leaf(&self, leaf: &str) -> bool {
        self.leaves.contains_key(leaf)
    }

    pub fn parent_of(&self, leaf: &str) -> Option<&str> {
        self.leaves.get(leaf).map(String::as_str)
    }

    pub fn leaves_of<'a>(&'a self, parent: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.leaves
            .iter()
            .filter(move |(_, p)| p.as_str() == parent)
            .map(|(l, _)| l.as_str())
    }

    /// Parent → leaves grouping in document order.
    pub fn groups(&self) -> IndexMap<&str, Vec<&str>> {
        let mut out: IndexMap<&str, Vec<&str>> =
            self.parents.iter().map(|p| (p.as_str(), Vec::new())).collect();
        for (leaf, parent) in &self.leaves {
            out[parent.as_str()].push(leaf.as_str());
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        let parents = self
            .groups()
            .into_iter()
            .map(|(p, ls)| (p.to_string(), ls.into_iter().map(str::to_string).collect()))
            .collect();
        serde_json::to_string_pretty(&TaxonomyDocument { parents }).expect("serializable")
    }
}

/// The ordered leaf × sentiment feature space.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    keys: Vec<FeatureKey>,
    index: HashMap<FeatureKey, usize>,
    fingerprint: String,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint && self.keys == other.keys
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary keys; they are sorted and deduplicated.
    pub fn from_keys(keys: impl IntoIterator<Item = FeatureKey>) -> Self {
        let mut keys: Vec<FeatureKey> = keys.into_iter().collect();
        keys.sort();
        keys.dedup();
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let mut hasher = Sha256::new();
        for key in &keys {
            hasher.update(key.leaf.as_bytes());
            hasher.update(b"\t");
            hasher.update(key.sentiment.as_str().as_bytes());
            hasher.update(b"\n");
        }
        let fingerprint = hex::encode(hasher.finalize());
        Self {
            keys,
            index,
            fingerprint,
        }
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of(&self, key: &FeatureKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Hex SHA-256 over the ordered keys.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

/// Materializes the feature space of `taxonomy`: leaves sorted
/// lexicographically, each expanded to positive, negative, neutral.
pub fn feature_vocabulary(taxonomy: &Taxonomy) -> Vocabulary {
    Vocabulary::from_keys(
        taxonomy
            .leaves()
            .flat_map(|leaf| Sentiment::ALL.map(|s| FeatureKey::new(leaf, s))),
    )
}
