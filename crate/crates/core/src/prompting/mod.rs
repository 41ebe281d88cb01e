//! Structured per-topic entries and the absence-aware / baseline prompt
//! bundles built from them.

mod templates;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::absa::AspectMention;
use crate::client::ChatRequest;
use crate::corpus::{FeatureKey, Sentiment};
use crate::error::{Error, Result};
use crate::lvs::TopicSelection;

pub use templates::*;

pub const SNIPPET_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Disco,
    Baseline,
    Extraction,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Disco => "disco",
            Variant::Baseline => "baseline",
            Variant::Extraction => "extraction",
        }
    }
}

/// A system + user prompt pair, as written to prompt files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub accommodation_id: String,
    pub variant: Variant,
    pub system: String,
    pub user: String,
    pub seed: Option<u64>,
}

impl PromptBundle {
    /// Hex SHA-256 of the bundle's JSON form.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("serializable");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn to_request(&self) -> ChatRequest {
        ChatRequest {
            system: self.system.clone(),
            user: self.user.clone(),
            options: Map::new(),
        }
    }
}

/// Aggregated data for one topic (leaf) of one accommodation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub topic: String,
    pub positive: u64,
    pub negative: u64,
    pub neutral: u64,
    pub total: u64,
    pub mentioned_more_often: bool,
    pub missing_but_common: bool,
    pub snippets: Vec<String>,
}

impl TopicEntry {
    /// The seven-key object placed in prompts.
    pub fn rendered(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("positive".into(), self.positive.into());
        obj.insert("negative".into(), self.negative.into());
        obj.insert("neutral".into(), self.neutral.into());
        obj.insert("total".into(), self.total.into());
        obj.insert("mentioned_more_often".into(), self.mentioned_more_often.into());
        obj.insert("missing_but_common".into(), self.missing_but_common.into());
        obj.insert(
            "snippets".into(),
            Value::Array(self.snippets.iter().cloned().map(Value::String).collect()),
        );
        Value::Object(obj)
    }
}

fn is_multi_word(snippet: &str) -> bool {
    snippet.split_whitespace().nth(1).is_some()
}

/// Up to `limit` multi-word snippets. When more survive the single-word
/// filter, a seeded uniform sample without replacement is taken; the chosen
/// snippets keep their original relative order.
pub fn sample_snippets<S: AsRef<str>>(snippets: &[S], limit: usize, seed: u64) -> Vec<String> {
    let eligible: Vec<&str> = snippets
        .iter()
        .map(|s| s.as_ref().trim())
        .filter(|s| is_multi_word(s))
        .collect();
    if eligible.len() <= limit {
        return eligible.into_iter().map(str::to_string).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, eligible.len(), limit).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| eligible[i].to_string()).collect()
}

/// Per-topic seed so that topics sample independently of each other.
fn topic_seed(seed: u64, topic: &str) -> u64 {
    let digest = Sha256::digest(topic.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

fn leaves_in_order<'a>(keys: impl IntoIterator<Item = &'a FeatureKey>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for k in keys {
        if !out.contains(&k.leaf.as_str()) {
            out.push(&k.leaf);
        }
    }
    out
}

/// One entry per distinct leaf of the selection, in selection order
/// (most mentioned, then over-represented, then missing).
pub fn build_topic_entries(
    selection: &TopicSelection,
    mentions: &[AspectMention],
    seed: u64,
) -> Vec<TopicEntry> {
    let over: BTreeSet<&str> = selection.over_represented.iter().map(|k| k.leaf.as_str()).collect();
    let missing: BTreeSet<&str> = selection.missing_common.iter().map(|k| k.leaf.as_str()).collect();
    let leaves = leaves_in_order(
        selection
            .most_mentioned
            .iter()
            .chain(&selection.over_represented)
            .chain(&selection.missing_common),
    );
    leaves
        .into_iter()
        .map(|leaf| {
            let own: Vec<&AspectMention> = mentions.iter().filter(|m| m.aspect_leaf == leaf).collect();
            let tally = |s: Sentiment| own.iter().filter(|m| m.sentiment == s).count() as u64;
            let (positive, negative, neutral) =
                (tally(Sentiment::Positive), tally(Sentiment::Negative), tally(Sentiment::Neutral));
            let snippets: Vec<&str> = own.iter().map(|m| m.snippet.as_str()).collect();
            let mentioned_more_often = over.contains(leaf);
            TopicEntry {
                topic: leaf.to_string(),
                positive,
                negative,
                neutral,
                total: positive + negative + neutral,
                mentioned_more_often,
                missing_but_common: !mentioned_more_often && missing.contains(leaf),
                snippets: sample_snippets(&snippets, SNIPPET_LIMIT, topic_seed(seed, leaf)),
            }
        })
        .collect()
}

/// Renders entries as a topic-keyed JSON object with 2-space indentation.
pub fn render_section<'a>(entries: impl IntoIterator<Item = &'a TopicEntry>) -> String {
    let map: IndexMap<&str, Value> = entries
        .into_iter()
        .map(|e| (e.topic.as_str(), e.rendered()))
        .collect();
    serde_json::to_string_pretty(&map).expect("serializable")
}

fn pick<'a>(entries: &'a [TopicEntry], leaves: &[&str]) -> Vec<&'a TopicEntry> {
    leaves
        .iter()
        .filter_map(|leaf| entries.iter().find(|e| e.topic == *leaf))
        .collect()
}

fn missing_with(selection: &TopicSelection, sentiment: Sentiment) -> Vec<&str> {
    leaves_in_order(selection.missing_common.iter().filter(|k| k.sentiment == sentiment))
}

/// The absence-aware prompt: most-mentioned, over-represented and
/// missing-but-common topics split by the sentiment they usually carry.
pub fn build_disco_prompt(
    accommodation_id: &str,
    entries: &[TopicEntry],
    selection: &TopicSelection,
    seed: u64,
) -> Result<PromptBundle> {
    if entries.is_empty() {
        return Err(Error::InvalidInput(format!("no topic entries for {accommodation_id}")));
    }
    let most = pick(entries, &leaves_in_order(&selection.most_mentioned));
    let over = pick(entries, &leaves_in_order(&selection.over_represented));
    let absent = |s| {
        pick(entries, &missing_with(selection, s))
            .into_iter()
            .filter(|e| e.missing_but_common)
    };
    let user = DISCO_USER_TEMPLATE
        .replace("{most_mentioned_topics}", &render_section(most))
        .replace("{mentioned_more_often}", &render_section(over))
        .replace("{missing_but_common_positives}", &render_section(absent(Sentiment::Positive)))
        .replace("{missing_but_common_negatives}", &render_section(absent(Sentiment::Negative)));
    Ok(PromptBundle {
        accommodation_id: accommodation_id.to_string(),
        variant: Variant::Disco,
        system: DISCO_SYSTEM_PROMPT.to_string(),
        user,
        seed: Some(seed),
    })
}

/// The presence-only control: most-mentioned topics only, both comparison
/// flags cleared.
pub fn build_baseline_prompt(
    accommodation_id: &str,
    entries: &[TopicEntry],
    selection: &TopicSelection,
    seed: u64,
) -> Result<PromptBundle> {
    let most: Vec<TopicEntry> = pick(entries, &leaves_in_order(&selection.most_mentioned))
        .into_iter()
        .map(|e| TopicEntry {
            mentioned_more_often: false,
            missing_but_common: false,
            ..e.clone()
        })
        .collect();
    if most.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no most-mentioned topics for {accommodation_id}"
        )));
    }
    Ok(PromptBundle {
        accommodation_id: accommodation_id.to_string(),
        variant: Variant::Baseline,
        system: BASELINE_SYSTEM_PROMPT.to_string(),
        user: BASELINE_USER_TEMPLATE.replace("{most_mentioned_topics}", &render_section(&most)),
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mention(leaf: &str, s: Sentiment, snippet: &str) -> AspectMention {
        AspectMention {
            review_id: "r".into(),
            aspect_parent: "P".into(),
            aspect_leaf: leaf.into(),
            sentiment: s,
            snippet: snippet.into(),
        }
    }

    fn key(leaf: &str, s: Sentiment) -> FeatureKey {
        FeatureKey::new(leaf, s)
    }

    fn selection() -> TopicSelection {
        TopicSelection {
            k: 7,
            most_mentioned: vec![key("views", Sentiment::Positive), key("cleanliness", Sentiment::Positive)],
            over_represented: vec![key("views", Sentiment::Positive)],
            missing_common: vec![
                key("breakfast_quality", Sentiment::Positive),
                key("noise_levels", Sentiment::Neutral),
            ],
        }
    }

    fn mentions() -> Vec<AspectMention> {
        vec![
            mention("views", Sentiment::Positive, "amazing sea view"),
            mention("views", Sentiment::Positive, "wow"),
            mention("views", Sentiment::Positive, "view from the balcony"),
            mention("views", Sentiment::Negative, "view of a wall"),
            mention("cleanliness", Sentiment::Positive, "very clean room"),
        ]
    }

    #[test]
    fn snippet_filter_and_cap() {
        assert_eq!(sample_snippets(&["great", "great breakfast"], 20, 1), ["great breakfast"]);
        let five: Vec<String> = (0..5).map(|i| format!("snippet number {i}")).collect();
        assert_eq!(sample_snippets(&five, 20, 1), five);
        let many: Vec<String> = (0..100).map(|i| format!("snippet number {i}")).collect();
        let a = sample_snippets(&many, 20, 42);
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_snippets(&many, 20, 42));
        assert_ne!(a, sample_snippets(&many, 20, 43));
        let positions: Vec<usize> = a.iter().map(|s| many.iter().position(|m| m == s).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn entries_tally_and_flags() {
        let entries = build_topic_entries(&selection(), &mentions(), 7);
        let topics: Vec<&str> = entries.iter().map(|e| e.topic.as_str()).collect();
        assert_eq!(topics, ["views", "cleanliness", "breakfast_quality", "noise_levels"]);

        let views = &entries[0];
        assert_eq!((views.positive, views.negative, views.neutral, views.total), (3, 1, 0, 4));
        assert!(views.mentioned_more_often && !views.missing_but_common);
        assert_eq!(views.snippets.len(), 3);
        assert!(!views.snippets.contains(&"wow".to_string()));

        let breakfast = &entries[2];
        assert_eq!((breakfast.positive, breakfast.negative, breakfast.neutral, breakfast.total), (0, 0, 0, 0));
        assert!(breakfast.missing_but_common && !breakfast.mentioned_more_often);
        assert!(breakfast.snippets.is_empty());
    }

    #[test]
    fn over_represented_wins_over_missing() {
        let mut sel = selection();
        sel.missing_common.push(key("views", Sentiment::Neutral));
        let entries = build_topic_entries(&sel, &mentions(), 7);
        let views = entries.iter().find(|e| e.topic == "views").unwrap();
        assert!(views.mentioned_more_often && !views.missing_but_common);
        assert_eq!(entries.iter().filter(|e| e.topic == "views").count(), 1);
    }

    #[test]
    fn rendered_entry_shape() {
        let entries = build_topic_entries(&selection(), &mentions(), 7);
        let rendered = entries[2].rendered();
        let keys: Vec<&String> = rendered.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            ["positive", "negative", "neutral", "total", "mentioned_more_often", "missing_but_common", "snippets"]
        );
        let section = render_section(&entries[2..3]);
        assert!(section.starts_with("{\n  \"breakfast_quality\": {\n    \"positive\": 0,"), "{section}");
    }

    #[test]
    fn disco_prompt_sections() {
        let sel = selection();
        let entries = build_topic_entries(&sel, &mentions(), 7);
        let bundle = build_disco_prompt("acc", &entries, &sel, 7).unwrap();
        assert_eq!(bundle.system, DISCO_SYSTEM_PROMPT);
        assert!(bundle.system.contains("Reference group for comparison"));
        assert!(bundle.system.ends_with("Single cohesive paragraph (max 120 words)"));

        let pos_start = bundle.user.find(MISSING_POSITIVE_HEADER).unwrap();
        let neg_start = bundle.user.find(MISSING_NEGATIVE_HEADER).unwrap();
        let positives = &bundle.user[pos_start..neg_start];
        assert!(positives.contains("\"breakfast_quality\""));
        // the neutral missing feature lands in neither sentiment section
        assert!(!bundle.user.contains("noise_levels"));
        assert!(bundle.user.ends_with("this accommodation:\n{}"));
    }

    #[test]
    fn baseline_prompt_is_presence_only() {
        let sel = selection();
        let entries = build_topic_entries(&sel, &mentions(), 7);
        let disco = build_disco_prompt("acc", &entries, &sel, 7).unwrap();
        let baseline = build_baseline_prompt("acc", &entries, &sel, 7).unwrap();
        assert_eq!(baseline.variant, Variant::Baseline);
        for header in [OVER_REPRESENTED_HEADER, MISSING_POSITIVE_HEADER, MISSING_NEGATIVE_HEADER] {
            assert!(!baseline.user.contains(header));
            assert!(disco.user.contains(header));
        }
        assert!(!baseline.user.contains("\"missing_but_common\": true"));
        assert!(baseline.user.contains(MOST_MENTIONED_HEADER));
        assert!(!baseline.user.contains("\"mentioned_more_often\": true"));
        assert!(!baseline.system.contains("mentioned_more_often"));
        assert!(!baseline.system.contains("missing_but_common"));
    }

    #[test]
    fn baseline_lines_come_from_disco_prompt() {
        let strip_number = |l: &str| {
            let t = l.trim_start_matches(|c: char| c.is_ascii_digit());
            t.strip_prefix(". ").map(str::to_string).unwrap_or_else(|| l.to_string())
        };
        let disco: Vec<String> = DISCO_SYSTEM_PROMPT.lines().map(strip_number).collect();
        let mut cursor = 0;
        for line in BASELINE_SYSTEM_PROMPT.lines().map(strip_number) {
            let found = disco[cursor..].iter().position(|d| *d == line);
            assert!(found.is_some(), "line not in disco prompt order: {line:?}");
            cursor += found.unwrap() + 1;
        }
    }

    #[test]
    fn empty_entries_rejected() {
        assert!(build_disco_prompt("acc", &[], &selection(), 1).is_err());
        assert!(build_baseline_prompt("acc", &[], &selection(), 1).is_err());
    }

    #[test]
    fn bundles_are_deterministic() {
        let sel = selection();
        let a = build_disco_prompt("acc", &build_topic_entries(&sel, &mentions(), 9), &sel, 9).unwrap();
        let b = build_disco_prompt("acc", &build_topic_entries(&sel, &mentions(), 9), &sel, 9).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
