use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::AspectMention;
use crate::corpus::{Sentiment, Taxonomy};
use crate::error::{Error, Result};

/// The (review, leaf) decision space agreement is measured over.
#[derive(Debug, Clone)]
pub struct AgreementUniverse {
    pub review_ids: BTreeSet<String>,
    pub leaves: BTreeSet<String>,
}

impl AgreementUniverse {
    pub fn new(review_ids: impl IntoIterator<Item = String>, taxonomy: &Taxonomy) -> Self {
        Self {
            review_ids: review_ids.into_iter().collect(),
            leaves: taxonomy.leaves().map(str::to_string).collect(),
        }
    }

    fn decisions(&self) -> usize {
        self.review_ids.len() * self.leaves.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub micro_f1: f64,
    pub kappa: f64,
    pub sentiment_accuracy: f64,
}

type Presence<'a> = BTreeMap<(&'a str, &'a str), BTreeSet<Sentiment>>;

fn presence<'a>(mentions: &'a [AspectMention], universe: &AgreementUniverse) -> Result<Presence<'a>> {
    let mut out: Presence = BTreeMap::new();
    for m in mentions {
        if !universe.review_ids.contains(&m.review_id) {
            return Err(Error::InvalidInput(format!(
                "mention of review {:?} outside the evaluated review set",
                m.review_id
            )));
        }
        if !universe.leaves.contains(&m.aspect_leaf) {
            return Err(Error::InvalidInput(format!("unknown leaf {:?}", m.aspect_leaf)));
        }
        out.entry((m.review_id.as_str(), m.aspect_leaf.as_str()))
            .or_default()
            .insert(m.sentiment);
    }
    Ok(out)
}

/// Extraction agreement between predicted and reference annotations.
///
/// Aspect identification is scored on (review, leaf) presence: micro-F1 over
/// the presence sets, and Cohen's kappa over the binary presence decision for
/// every (review, leaf) cell of the universe. Sentiment accuracy covers the
/// cells both sides mark present; a cell counts as correct when both sides
/// assign the same set of sentiments.
pub fn agreement_metrics(
    pred: &[AspectMention],
    gold: &[AspectMention],
    universe: &AgreementUniverse,
) -> Result<Agreement> {
    if universe.review_ids.is_empty() {
        return Err(Error::InvalidInput("empty review set".into()));
    }
    let p = presence(pred, universe)?;
    let g = presence(gold, universe)?;
    let tp = p.keys().filter(|k| g.contains_key(*k)).count();
    let fp = p.len() - tp;
    let fn_ = g.len() - tp;
    let n = universe.decisions();
    let tn = n - tp - fp - fn_;

    let micro_f1 = if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };

    let nf = n as f64;
    let observed = (tp + tn) as f64 / nf;
    let expected = ((tp + fp) as f64 * (tp + fn_) as f64 + (fn_ + tn) as f64 * (fp + tn) as f64)
        / (nf * nf);
    let kappa = if (1.0 - expected).abs() < f64::EPSILON {
        if observed >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (observed - expected) / (1.0 - expected)
    };

    let common: Vec<_> = p.iter().filter_map(|(k, s)| g.get(k).map(|t| s == t)).collect();
    let sentiment_accuracy = if common.is_empty() {
        1.0
    } else {
        common.iter().filter(|ok| **ok).count() as f64 / common.len() as f64
    };

    Ok(Agreement {
        micro_f1,
        kappa,
        sentiment_accuracy,
    })
}
