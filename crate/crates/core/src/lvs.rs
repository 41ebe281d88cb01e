//! Jensen–Shannon divergence with an exact per-feature decomposition,
//! signed surplus/deficit scores and top-k topic selection.
//!
//! Logarithms are base 2, so the total divergence lies in [0, 1].

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::FeatureKey;
use crate::error::{Error, Result};
use crate::expectation::{DomainReference, FeatureDistribution};

const SUM_TOLERANCE: f64 = 1e-9;

/// `x * log2(x / m)` with `0 * log(0 / m) = 0`.
fn xlog_ratio(x: f64, m: f64) -> f64 {
    if x > 0.0 {
        x * (x / m).log2()
    } else {
        0.0
    }
}

fn kl_to_midpoint(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| xlog_ratio(x, 0.5 * (x + y)))
        .sum()
}

fn check_lengths(p: &[f64], r: &[f64]) -> Result<()> {
    if p.len() != r.len() {
        return Err(Error::VocabularyMismatch(format!(
            "lengths {} and {}",
            p.len(),
            r.len()
        )));
    }
    Ok(())
}

/// `½ KL(p‖m) + ½ KL(r‖m)` with `m = (p + r) / 2`, over raw vectors.
pub fn jsd_slices(p: &[f64], r: &[f64]) -> Result<f64> {
    check_lengths(p, r)?;
    let value = 0.5 * kl_to_midpoint(p, r) + 0.5 * kl_to_midpoint(r, p);
    Ok(value.clamp(0.0, 1.0))
}

/// Per-feature terms of the divergence; they sum to [`jsd_slices`].
pub fn contributions_slices(p: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    check_lengths(p, r)?;
    Ok(p.iter()
        .zip(r)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            (0.5 * xlog_ratio(a, m) + 0.5 * xlog_ratio(b, m)).max(0.0)
        })
        .collect())
}

fn check_pair(p: &FeatureDistribution, r: &FeatureDistribution) -> Result<()> {
    if p.vocabulary() != r.vocabulary() {
        return Err(Error::VocabularyMismatch(format!(
            "{} vs {}",
            p.vocabulary().fingerprint(),
            r.vocabulary().fingerprint()
        )));
    }
    for d in [p, r] {
        let sum: f64 = d.probabilities().iter().sum();
        if !d.is_empty_support() && (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
    }
    Ok(())
}

pub fn jsd(p: &FeatureDistribution, r: &FeatureDistribution) -> Result<f64> {
    check_pair(p, r)?;
    jsd_slices(p.probabilities(), r.probabilities())
}

pub fn feature_contributions(p: &FeatureDistribution, r: &FeatureDistribution) -> Result<Vec<f64>> {
    check_pair(p, r)?;
    contributions_slices(p.probabilities(), r.probabilities())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    #[serde(flatten)]
    pub feature: FeatureKey,
    pub p: f64,
    pub r: f64,
    /// Raw `p - r`, kept for inspection.
    pub difference: f64,
    pub contribution: f64,
    pub signed_score: f64,
    /// Mentions of this feature at the accommodation.
    pub count: u64,
}

/// How one accommodation deviates from its domain reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub accommodation_id: String,
    pub domain: String,
    pub total_jsd: f64,
    pub support_count: u64,
    #[serde(rename = "features")]
    pub entries: Vec<ProfileEntry>,
}

fn signed(p: f64, r: f64, contribution: f64) -> f64 {
    match p.partial_cmp(&r) {
        Some(Ordering::Greater) => contribution,
        Some(Ordering::Less) => -contribution,
        _ => 0.0,
    }
}

/// Decomposes the divergence of `p` from `reference` feature by feature.
///
/// Each feature's signed score is its contribution, negated when the
/// accommodation under-represents the feature.
pub fn divergence_profile(
    accommodation_id: &str,
    p: &FeatureDistribution,
    reference: &DomainReference,
) -> Result<DivergenceProfile> {
    let r = &reference.distribution;
    let contributions = feature_contributions(p, r)?;
    let total_jsd = jsd(p, r)?;
    let entries = p
        .vocabulary()
        .keys()
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let (pf, rf) = (p.probabilities()[i], r.probabilities()[i]);
            ProfileEntry {
                feature: key.clone(),
                p: pf,
                r: rf,
                difference: pf - rf,
                contribution: contributions[i],
                signed_score: signed(pf, rf, contributions[i]),
                count: p.counts()[i],
            }
        })
        .collect();
    Ok(DivergenceProfile {
        accommodation_id: accommodation_id.to_string(),
        domain: reference.domain.clone(),
        total_jsd,
        support_count: p.support_count(),
        entries,
    })
}

/// Features chosen to drive prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicSelection {
    pub k: usize,
    pub most_mentioned: Vec<FeatureKey>,
    pub over_represented: Vec<FeatureKey>,
    pub missing_common: Vec<FeatureKey>,
}

fn top_k<'a>(
    profile: &'a DivergenceProfile,
    k: usize,
    keep: impl Fn(&ProfileEntry) -> bool,
    order: impl Fn(&ProfileEntry, &ProfileEntry) -> Ordering,
) -> Vec<FeatureKey> {
    let mut candidates: Vec<&'a ProfileEntry> = profile.entries.iter().filter(|e| keep(e)).collect();
    candidates.sort_by(|a, b| order(a, b).then_with(|| a.feature.cmp(&b.feature)));
    candidates.into_iter().take(k).map(|e| e.feature.clone()).collect()
}

/// Top-k most mentioned, most over-represented and most missing features.
/// Ties break on the feature key; lists run short when candidates do.
pub fn select_topics(profile: &DivergenceProfile, k: usize) -> TopicSelection {
    let by = |x: f64, y: f64| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    TopicSelection {
        k,
        most_mentioned: top_k(profile, k, |e| e.count > 0, |a, b| b.count.cmp(&a.count)),
        over_represented: top_k(
            profile,
            k,
            |e| e.signed_score > 0.0,
            |a, b| by(b.signed_score, a.signed_score),
        ),
        missing_common: top_k(
            profile,
            k,
            |e| e.signed_score < 0.0,
            |a, b| by(a.signed_score, b.signed_score),
        ),
    }
}

pub const CHART_HEADER: [&str; 6] = ["feature", "leaf", "sentiment", "p", "r", "signed_score"];

/// Bar-chart rows sorted by signed score, largest surplus first.
pub fn deviation_chart_csv(profile: &DivergenceProfile) -> Result<String> {
    let mut rows: Vec<&ProfileEntry> = profile.entries.iter().collect();
    rows.sort_by(|a, b| {
        b.signed_score
            .partial_cmp(&a.signed_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    writer.write_record(CHART_HEADER).map_err(csv_err)?;
    for e in rows {
        writer
            .write_record([
                e.feature.to_string(),
                e.feature.leaf.clone(),
                e.feature.sentiment.to_string(),
                e.p.to_string(),
                e.r.to_string(),
                e.signed_score.to_string(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn export_deviation_chart(profile: &DivergenceProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, deviation_chart_csv(profile)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentiment, Vocabulary};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    // 40-digit evaluation of the definition for p = (0.5, 0.5), r = (1, 0).
    const JSD_HALF_VS_POINT: f64 = 0.311_278_124_459_132_8;
    const C1_HALF_VS_POINT: f64 = 0.061_278_124_459_132_84;

    fn two_vocab() -> Arc<Vocabulary> {
        Arc::new(Vocabulary::from_keys([
            FeatureKey::new("a", Sentiment::Positive),
            FeatureKey::new("b", Sentiment::Positive),
        ]))
    }

    fn dist(v: &Arc<Vocabulary>, p: &[f64]) -> FeatureDistribution {
        FeatureDistribution::from_probabilities(Arc::clone(v), p.to_vec()).unwrap()
    }

    fn reference(v: &Arc<Vocabulary>, counts: Vec<u64>) -> DomainReference {
        DomainReference::from_counts("d", counts, 1, v, 0.0).unwrap()
    }

    #[test]
    fn identity_and_disjoint() {
        let v = two_vocab();
        assert_eq!(jsd(&dist(&v, &[0.3, 0.7]), &dist(&v, &[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(jsd(&dist(&v, &[1.0, 0.0]), &dist(&v, &[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn half_vs_point() {
        let v = two_vocab();
        let p = dist(&v, &[0.5, 0.5]);
        let r = dist(&v, &[1.0, 0.0]);
        assert_abs_diff_eq!(jsd(&p, &r).unwrap(), JSD_HALF_VS_POINT, epsilon = 1e-15);
        let c = feature_contributions(&p, &r).unwrap();
        assert_abs_diff_eq!(c[0], C1_HALF_VS_POINT, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c[0] + c[1], JSD_HALF_VS_POINT, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_vocabularies() {
        let v = two_vocab();
        let w = Arc::new(Vocabulary::from_keys([
            FeatureKey::new("a", Sentiment::Positive),
            FeatureKey::new("c", Sentiment::Positive),
        ]));
        assert!(matches!(
            jsd(&dist(&v, &[0.5, 0.5]), &dist(&w, &[0.5, 0.5])),
            Err(Error::VocabularyMismatch(_))
        ));
        assert!(jsd_slices(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn signed_scores() {
        let v = two_vocab();
        let p = dist(&v, &[0.5, 0.5]);
        let profile = divergence_profile("acc", &p, &reference(&v, vec![1, 0])).unwrap();
        assert_abs_diff_eq!(profile.entries[0].signed_score, -C1_HALF_VS_POINT, epsilon = 1e-15);
        assert_abs_diff_eq!(profile.entries[1].signed_score, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(profile.entries[0].difference, -0.5);

        let same = divergence_profile("acc", &dist(&v, &[0.5, 0.5]), &reference(&v, vec![1, 1])).unwrap();
        assert_eq!(same.total_jsd, 0.0);
        assert!(same.entries.iter().all(|e| e.signed_score == 0.0));
    }

    #[test]
    fn absent_feature_scores_negative() {
        let v = two_vocab();
        let p = FeatureDistribution::from_counts(Arc::clone(&v), vec![0, 5], 0.0).unwrap();
        let profile = divergence_profile("acc", &p, &reference(&v, vec![3, 3])).unwrap();
        assert!(profile.entries[0].signed_score < 0.0);
    }

    #[test]
    fn empty_support_profile() {
        let v = two_vocab();
        let p = FeatureDistribution::from_counts(Arc::clone(&v), vec![0, 0], 0.0).unwrap();
        let profile = divergence_profile("acc", &p, &reference(&v, vec![1, 3])).unwrap();
        assert_abs_diff_eq!(profile.total_jsd, 0.5, epsilon = 1e-15);
        let csv = deviation_chart_csv(&profile).unwrap();
        let rows: Vec<&str> = csv.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("0")));
    }

    #[test]
    fn chart_layout() {
        let v = two_vocab();
        let profile = divergence_profile("acc", &dist(&v, &[0.5, 0.5]), &reference(&v, vec![1, 0])).unwrap();
        let csv = deviation_chart_csv(&profile).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "feature,leaf,sentiment,p,r,signed_score");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("b positive,b,positive,0.5,0,0.25"));
        assert!(lines[2].starts_with("a positive,a,positive,0.5,1,-0.0612"));
    }

    fn synthetic_profile(rows: &[(&str, u64, f64)]) -> DivergenceProfile {
        DivergenceProfile {
            accommodation_id: "x".into(),
            domain: "d".into(),
            total_jsd: rows.iter().map(|r| r.2.abs()).sum(),
            support_count: rows.iter().map(|r| r.1).sum(),
            entries: rows
                .iter()
                .map(|(leaf, count, score)| ProfileEntry {
                    feature: FeatureKey::new(*leaf, Sentiment::Positive),
                    p: 0.0,
                    r: 0.0,
                    difference: *score,
                    contribution: score.abs(),
                    signed_score: *score,
                    count: *count,
                })
                .collect(),
        }
    }

    #[test]
    fn candidate_exhaustion() {
        let profile = synthetic_profile(&[
            ("a", 1, 0.1),
            ("b", 1, 0.2),
            ("c", 1, 0.3),
            ("d", 0, -0.1),
            ("e", 0, 0.0),
        ]);
        let s = select_topics(&profile, 7);
        assert_eq!(s.over_represented.len(), 3);
        assert_eq!(s.over_represented[0].leaf, "c");
        assert_eq!(s.missing_common.len(), 1);
        assert_eq!(s.most_mentioned.len(), 3);
    }

    #[test]
    fn tie_breaks_on_key() {
        let profile = synthetic_profile(&[("zeta", 4, 0.1), ("alpha", 2, 0.1), ("beta", 2, 0.1)]);
        let s = select_topics(&profile, 2);
        let leaves = |v: &[FeatureKey]| v.iter().map(|k| k.leaf.clone()).collect::<Vec<_>>();
        assert_eq!(leaves(&s.most_mentioned), ["zeta", "alpha"]);
        assert_eq!(leaves(&s.over_represented), ["alpha", "beta"]);
    }

    #[test]
    fn selection_matches_exhaustive_sort() {
        let rows = [
            ("f1", 5, 0.02),
            ("f2", 0, -0.2),
            ("f3", 3, 0.15),
            ("f4", 3, -0.01),
            ("f5", 1, 0.15),
            ("f6", 0, -0.05),
        ];
        let s = select_topics(&synthetic_profile(&rows), 2);
        // Brute force: enumerate all ordered pairs, keep the lexicographically
        // best under each criterion.
        let best_pair = |score: &dyn Fn(usize) -> Option<(i64, &'static str)>| {
            let mut best: Option<((i64, &str), (i64, &str), [&str; 2])> = None;
            for i in 0..rows.len() {
                for j in 0..rows.len() {
                    if i == j {
                        continue;
                    }
                    let (Some(a), Some(b)) = (score(i), score(j)) else { continue };
                    if a > b {
                        continue;
                    }
                    let cand = (a, b, [rows[i].0, rows[j].0]);
                    if best.as_ref().is_none_or(|x| (cand.0, cand.1) < (x.0, x.1)) {
                        best = Some(cand);
                    }
                }
            }
            best.unwrap().2.to_vec()
        };
        let leaves = |v: &[FeatureKey]| v.iter().map(|k| k.leaf.clone()).collect::<Vec<_>>();
        let scaled = |x: f64| (x * 1e6).round() as i64;
        assert_eq!(
            leaves(&s.most_mentioned),
            best_pair(&|i| (rows[i].1 > 0).then(|| (-(rows[i].1 as i64), rows[i].0)))
        );
        assert_eq!(
            leaves(&s.over_represented),
            best_pair(&|i| (rows[i].2 > 0.0).then(|| (-scaled(rows[i].2), rows[i].0)))
        );
        assert_eq!(
            leaves(&s.missing_common),
            best_pair(&|i| (rows[i].2 < 0.0).then(|| (scaled(rows[i].2), rows[i].0)))
        );
    }

    fn random_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n),
                proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n),
            )
        })
    }

    fn normalize(v: &mut [f64]) -> bool {
        let s: f64 = v.iter().sum();
        if s <= 0.0 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= s);
        true
    }

    proptest! {
        #[test]
        fn decomposition_is_exact_and_symmetric((mut p, mut r) in random_pair()) {
            prop_assume!(normalize(&mut p) && normalize(&mut r));
            let total = jsd_slices(&p, &r).unwrap();
            let c = contributions_slices(&p, &r).unwrap();
            prop_assert!((c.iter().sum::<f64>() - total).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&total));
            prop_assert!((total - jsd_slices(&r, &p).unwrap()).abs() < 1e-15);
            prop_assert_eq!(c, contributions_slices(&r, &p).unwrap());
        }

        #[test]
        fn sign_follows_difference((mut p, mut r) in random_pair()) {
            prop_assume!(normalize(&mut p) && normalize(&mut r));
            let keys: Vec<FeatureKey> = (0..p.len()).map(|i| FeatureKey::new(format!("f{i:03}"), Sentiment::Neutral)).collect();
            let v = Arc::new(Vocabulary::from_keys(keys));
            let pd = FeatureDistribution::from_probabilities(Arc::clone(&v), p.clone()).unwrap();
            let rd = DomainReference {
                domain: "d".into(),
                distribution: FeatureDistribution::from_probabilities(Arc::clone(&v), r.clone()).unwrap(),
                smoothing_epsilon: 0.0,
                accommodation_count: 1,
            };
            let profile = divergence_profile("a", &pd, &rd).unwrap();
            for e in &profile.entries {
                if e.contribution > 0.0 {
                    prop_assert_eq!(e.signed_score > 0.0, e.p > e.r);
                }
            }
        }

        #[test]
        fn scaling_counts_leaves_selection_unchanged(
            counts in proptest::collection::vec(0u64..6, 6),
            reference_counts in proptest::collection::vec(1u64..6, 6),
            factor in 2u64..50,
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let keys: Vec<FeatureKey> = (0..6).map(|i| FeatureKey::new(format!("f{i}"), Sentiment::Positive)).collect();
            let v = Arc::new(Vocabulary::from_keys(keys));
            let r = DomainReference::from_counts("d", reference_counts, 3, &v, 1e-9).unwrap();
            let base = FeatureDistribution::from_counts(Arc::clone(&v), counts.clone(), 0.0).unwrap();
            let scaled = FeatureDistribution::from_counts(Arc::clone(&v), counts.iter().map(|c| c * factor).collect(), 0.0).unwrap();
            prop_assert_eq!(base.probabilities(), scaled.probabilities());
            let pa = divergence_profile("a", &base, &r).unwrap();
            let pb = divergence_profile("a", &scaled, &r).unwrap();
            prop_assert_eq!(pa.total_jsd, pb.total_jsd);
            prop_assert_eq!(select_topics(&pa, 3), select_topics(&pb, 3));
        }
    }
}
