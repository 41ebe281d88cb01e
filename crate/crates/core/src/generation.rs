//! Summary generation through a [`ChatClient`] and light output checks.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::client::{ChatClient, MockClient, RetryPolicy};
use crate::error::{Error, Result};
use crate::prompting::{
    PromptBundle, Variant, MISSING_NEGATIVE_HEADER, MISSING_POSITIVE_HEADER,
    MOST_MENTIONED_HEADER, OVER_REPRESENTED_HEADER,
};

pub const MAX_WORDS: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub accommodation_id: String,
    pub variant: Variant,
    pub text: String,
    pub model: String,
    pub word_count: usize,
    pub created_at: DateTime<Utc>,
    pub prompt_fingerprint: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub options: Map<String, Value>,
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Sends `bundle` to `client`, retrying transport failures and empty output.
pub fn generate_summary(
    bundle: &PromptBundle,
    client: &dyn ChatClient,
    retry: &RetryPolicy,
    options: &Map<String, Value>,
) -> Result<SummaryRecord> {
    let mut request = bundle.to_request();
    request.options = options.clone();
    let text = retry.run(|_| {
        let text = client
            .complete(&request)
            .map_err(|e| Error::Client(e.to_string()))?;
        let text = text.trim().to_string();
        if text.is_empty() {
            Err(Error::EmptyOutput)
        } else {
            Ok(text)
        }
    })?;
    Ok(SummaryRecord {
        accommodation_id: bundle.accommodation_id.clone(),
        variant: bundle.variant,
        word_count: word_count(&text),
        text,
        model: client.model().to_string(),
        created_at: Utc::now(),
        prompt_fingerprint: bundle.fingerprint(),
        options: options.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub over_length: bool,
    pub multiple_paragraphs: bool,
    pub raw_numbers: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        !(self.over_length || self.multiple_paragraphs || self.raw_numbers)
    }

    pub fn warnings(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.over_length {
            out.push("longer than 120 words");
        }
        if self.multiple_paragraphs {
            out.push("more than one paragraph");
        }
        if self.raw_numbers {
            out.push("contains raw percentages");
        }
        out
    }
}

fn has_percentage(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    chars.iter().enumerate().any(|(i, c)| {
        *c == '%'
            && chars[..i]
                .iter()
                .rev()
                .find(|c| !c.is_whitespace())
                .is_some_and(char::is_ascii_digit)
    })
}

fn paragraph_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_paragraph = false;
    for line in text.lines() {
        if line.trim().is_empty() {
            in_paragraph = false;
        } else if !in_paragraph {
            in_paragraph = true;
            count += 1;
        }
    }
    count
}

/// Soft checks against the generation guidelines. Never rejects.
pub fn validate_summary(record: &SummaryRecord) -> ValidationReport {
    let text = &record.text;
    ValidationReport {
        over_length: word_count(text) > MAX_WORDS,
        multiple_paragraphs: paragraph_count(text) > 1,
        raw_numbers: has_percentage(text),
    }
}

/// Topic names listed in the section starting with `header`.
fn section_topics(user: &str, header: &str) -> Vec<String> {
    let Some(start) = user.find(header) else {
        return Vec::new();
    };
    let body = &user[start + header.len()..];
    let end = body.find("\n### ").unwrap_or(body.len());
    body[..end]
        .lines()
        .filter_map(|l| l.strip_prefix("  \"")?.split_once("\": {").map(|(t, _)| t.replace('_', " ")))
        .collect()
}

fn join_topics(topics: &[String]) -> String {
    match topics {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Offline summarizer: a deterministic paragraph naming the topics the
/// prompt's sections list.
pub fn mock_summary_client() -> MockClient {
    MockClient::new("mock-summarizer", |request, _| {
        let user = &request.user;
        let most = section_topics(user, MOST_MENTIONED_HEADER);
        let mut text = if most.is_empty() {
            "Guests share little detail about this stay.".to_string()
        } else {
            format!("Guests most often talk about {}.", join_topics(&most))
        };
        let over = section_topics(user, OVER_REPRESENTED_HEADER);
        if !over.is_empty() {
            text.push_str(&format!(
                " Compared with other accommodations in the area, {} draws far more comment.",
                join_topics(&over)
            ));
        }
        let absent: Vec<String> = section_topics(user, MISSING_POSITIVE_HEADER)
            .into_iter()
            .chain(section_topics(user, MISSING_NEGATIVE_HEADER))
            .collect();
        if !absent.is_empty() {
            text.push_str(&format!(
                " Unlike nearby hotels, reviews rarely mention {}.",
                join_topics(&absent)
            ));
        }
        Ok(text)
    })
}
