use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde_json::{Map, Value};

use super::{
    build_extraction_prompt, parse_extraction_response, CacheEntry, CacheKey, ExtractionMetadata,
    MentionCache, MentionSet,
};
use crate::client::{ChatClient, RetryPolicy};
use crate::corpus::{feature_vocabulary, Review, Taxonomy};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub concurrency_limit: usize,
    pub retry: RetryPolicy,
    pub decoding: Map<String, Value>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            concurrency_limit: 4,
            retry: RetryPolicy::default(),
            decoding: Map::new(),
        }
    }
}

struct Outcome {
    index: usize,
    entry: CacheEntry,
    warnings: Vec<String>,
    calls: usize,
    hit: bool,
}

fn extract_one(
    review: &Review,
    taxonomy: &Taxonomy,
    taxonomy_fp: &str,
    client: &dyn ChatClient,
    cache: &MentionCache,
    opts: &ExtractOptions,
) -> (CacheEntry, Vec<String>, usize, bool) {
    let key = CacheKey {
        review_id: review.review_id.clone(),
        taxonomy_fp: taxonomy_fp.to_string(),
        model: client.model().to_string(),
    };
    if let Some(entry) = cache.get(&key).filter(|e| !e.failed) {
        return (entry, Vec::new(), 0, true);
    }
    let mut request = build_extraction_prompt(review, taxonomy).to_request();
    request.options = opts.decoding.clone();
    let mut calls = 0;
    let result = opts.retry.run(|_| {
        calls += 1;
        let text = client
            .complete(&request)
            .map_err(|e| Error::Client(e.to_string()))?;
        parse_extraction_response(&text, taxonomy, &review.review_id)
    });
    let (mentions, warnings, failed) = match result {
        Ok(parsed) => (parsed.mentions, parsed.warnings, false),
        Err(e) => {
            log::warn!("extraction failed for {}: {e}", review.review_id);
            (Vec::new(), vec![format!("{}: {e}", review.review_id)], true)
        }
    };
    let entry = CacheEntry {
        review_id: key.review_id,
        taxonomy_fp: key.taxonomy_fp,
        model: key.model,
        mentions,
        failed,
    };
    cache.insert(entry.clone());
    (entry, warnings, calls, false)
}

/// Extracts mentions for every review through `client`, consulting and
/// filling `cache`. Up to `concurrency_limit` requests run at once.
///
/// Reviews still failing after the retry budget are listed in
/// `metadata.failed`. The cache is saved before returning.
pub fn extract_aspects(
    reviews: &[Review],
    taxonomy: &Taxonomy,
    client: &dyn ChatClient,
    cache: &MentionCache,
    opts: &ExtractOptions,
) -> Result<MentionSet> {
    if opts.concurrency_limit == 0 {
        return Err(Error::InvalidInput("concurrency_limit must be positive".into()));
    }
    let vocab = feature_vocabulary(taxonomy);
    let fp = vocab.fingerprint();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Outcome>();
    let workers = opts.concurrency_limit.min(reviews.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(review) = reviews.get(index) else {
                    break;
                };
                let (entry, warnings, calls, hit) =
                    extract_one(review, taxonomy, fp, client, cache, opts);
                if tx.send(Outcome { index, entry, warnings, calls, hit }).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut outcomes: Vec<Outcome> = rx.into_iter().collect();
    outcomes.sort_by_key(|o| o.index);

    let mut set = MentionSet {
        mentions: Vec::new(),
        source_review_ids: BTreeSet::new(),
        metadata: ExtractionMetadata::new(client.model()),
    };
    for outcome in outcomes {
        set.source_review_ids.insert(outcome.entry.review_id.clone());
        set.metadata.client_calls += outcome.calls;
        if outcome.hit {
            set.metadata.cache_hits += 1;
        }
        if outcome.entry.failed {
            set.metadata.failed.push(outcome.entry.review_id.clone());
        }
        set.metadata.warnings.extend(outcome.warnings);
        set.mentions.extend(outcome.entry.mentions);
    }
    cache.save()?;
    Ok(set)
}
