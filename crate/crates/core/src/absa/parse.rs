use serde_json::Value;

use super::AspectMention;
use crate::corpus::{Sentiment, Taxonomy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedResponse {
    pub mentions: Vec<AspectMention>,
    pub warnings: Vec<String>,
}

fn normalize_parent(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Finds the answer array in raw model output.
///
/// The extraction prompt asks for a checklist before the answer, so the text
/// may contain prose or code fences around the array. The last top-level JSON
/// array in the text is taken as the answer.
fn locate_array(text: &str) -> Option<Vec<Value>> {
    if let Ok(Value::Array(items)) = serde_json::from_str::<Value>(text.trim()) {
        return Some(items);
    }
    let mut found = None;
    let mut pos = 0;
    while let Some(offset) = text[pos..].find('[') {
        let start = pos + offset;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Array(items))) => {
                pos = start + stream.byte_offset();
                found = Some(items);
            }
            _ => pos = start + 1,
        }
    }
    found
}

/// Validates a raw extraction response against the taxonomy.
///
/// Elements with unknown leaves, invalid sentiments or empty snippets are
/// dropped with one warning each. A known leaf filed under the wrong parent
/// is kept and re-parented. Surviving mentions keep their response order.
pub fn parse_extraction_response(
    text: &str,
    taxonomy: &Taxonomy,
    review_id: &str,
) -> Result<ParsedResponse> {
    let items = locate_array(text).ok_or_else(|| {
        let preview: String = text.chars().take(80).collect();
        Error::UnparseableResponse(format!("review {review_id}: no JSON array in {preview:?}"))
    })?;
    let mut out = ParsedResponse::default();
    for (i, item) in items.iter().enumerate() {
        let field = |k: &str| item.get(k).and_then(Value::as_str);
        let Some(leaf) = field("aspect_leaf").map(str::trim) else {
            out.warnings.push(format!("{review_id}[{i}]: missing aspect_leaf"));
            continue;
        };
        let Some(parent) = taxonomy.parent_of(leaf) else {
            out.warnings.push(format!("{review_id}[{i}]: unknown aspect_leaf {leaf:?}"));
            continue;
        };
        let sentiment = match field("sentiment").map(str::parse::<Sentiment>) {
            Some(Ok(s)) => s,
            _ => {
                out.warnings.push(format!(
                    "{review_id}[{i}]: invalid sentiment {:?}",
                    item.get("sentiment")
                ));
                continue;
            }
        };
        let snippet = field("snippet").map(str::trim).unwrap_or_default();
        if snippet.is_empty() {
            out.warnings.push(format!("{review_id}[{i}]: empty snippet"));
            continue;
        }
        match field("aspect_parent") {
            Some(p) if normalize_parent(p) == normalize_parent(parent) => {}
            other => out.warnings.push(format!(
                "{review_id}[{i}]: aspect_parent {other:?} corrected to {parent:?} for {leaf:?}"
            )),
        }
        out.mentions.push(AspectMention {
            review_id: review_id.to_string(),
            aspect_parent: parent.to_string(),
            aspect_leaf: leaf.to_string(),
            sentiment,
            snippet: snippet.to_string(),
        });
    }
    Ok(out)
}
