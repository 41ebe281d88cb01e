use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hypothesis::{
    chi_square_independence, cohens_d, exact_binomial_test, paired_t_test, significance_stars,
    EffectSize, TestResult,
};
use crate::error::{Error, Result};
use crate::prompting::Variant;

pub const RATINGS_HEADER: &str = "participant_id,domain,accommodation_id,variant,relevance,detail,helpfulness,decision_support,ease,preferred";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Relevance,
    Detail,
    Helpfulness,
    DecisionSupport,
    Ease,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Relevance,
        Dimension::Detail,
        Dimension::Helpfulness,
        Dimension::DecisionSupport,
        Dimension::Ease,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Relevance => "Relevance",
            Dimension::Detail => "Detail and Specificity",
            Dimension::Helpfulness => "Helpfulness",
            Dimension::DecisionSupport => "Decision Support",
            Dimension::Ease => "Ease of Understanding",
        }
    }
}

/// One participant's ratings of one summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingsRecord {
    pub participant_id: String,
    pub domain: String,
    pub accommodation_id: String,
    pub variant: Variant,
    pub relevance: u8,
    pub detail: u8,
    pub helpfulness: u8,
    pub decision_support: u8,
    pub ease: u8,
    pub preferred: bool,
}

impl RatingsRecord {
    pub fn score(&self, d: Dimension) -> u8 {
        match d {
            Dimension::Relevance => self.relevance,
            Dimension::Detail => self.detail,
            Dimension::Helpfulness => self.helpfulness,
            Dimension::DecisionSupport => self.decision_support,
            Dimension::Ease => self.ease,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !matches!(self.variant, Variant::Baseline | Variant::Disco) {
            return Err(format!("variant must be baseline or disco, got {:?}", self.variant));
        }
        for d in Dimension::ALL {
            let s = self.score(d);
            if !(1..=5).contains(&s) {
                return Err(format!("{} score {s} outside 1..=5", d.label()));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawRecord {
    participant_id: String,
    domain: String,
    accommodation_id: String,
    variant: Variant,
    relevance: u8,
    detail: u8,
    helpfulness: u8,
    decision_support: u8,
    ease: u8,
    preferred: String,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Parses ratings CSV text; malformed rows become line-numbered warnings.
pub fn parse_ratings(text: &str) -> Result<(Vec<RatingsRecord>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("ratings header: {e}")))?
        .clone();
    let expected: Vec<&str> = RATINGS_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidInput(format!(
            "ratings header must be `{RATINGS_HEADER}`"
        )));
    }
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                warnings.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = row
            .deserialize::<RawRecord>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|raw| {
                let preferred = parse_bool(&raw.preferred)
                    .ok_or_else(|| format!("preferred {:?} is not a boolean", raw.preferred))?;
                let rec = RatingsRecord {
                    participant_id: raw.participant_id,
                    domain: raw.domain,
                    accommodation_id: raw.accommodation_id,
                    variant: raw.variant,
                    relevance: raw.relevance,
                    detail: raw.detail,
                    helpfulness: raw.helpfulness,
                    decision_support: raw.decision_support,
                    ease: raw.ease,
                    preferred,
                };
                rec.validate().map(|_| rec)
            });
        match parsed {
            Ok(rec) => records.push(rec),
            Err(message) => warnings.push(format!("line {line}: {message}")),
        }
    }
    Ok((records, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRow {
    pub dimension: Dimension,
    pub baseline_mean: f64,
    pub disco_mean: f64,
    pub test: Option<TestResult>,
    pub d_pooled: Option<f64>,
    pub d_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainTable {
    pub domain: String,
    pub n: usize,
    pub rows: Vec<DimensionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRow {
    pub domain: String,
    pub n: usize,
    pub baseline_preferred: u64,
    pub disco_preferred: u64,
    pub binomial: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceTable {
    pub rows: Vec<PreferenceRow>,
    /// Independence of preference and domain; absent with fewer than two
    /// domains or a zero marginal.
    pub chi_square: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsReport {
    pub domains: Vec<DomainTable>,
    pub pooled: Option<DomainTable>,
    pub preference: PreferenceTable,
    pub warnings: Vec<String>,
}

struct Pair<'a> {
    baseline: &'a RatingsRecord,
    disco: &'a RatingsRecord,
}

fn dimension_row(pairs: &[&Pair], d: Dimension) -> DimensionRow {
    let mut values: Vec<(f64, f64)> = pairs
        .iter()
        .map(|p| (p.baseline.score(d) as f64, p.disco.score(d) as f64))
        .collect();
    // order-independent summation
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let (x, y): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    let n = x.len() as f64;
    DimensionRow {
        dimension: d,
        baseline_mean: x.iter().sum::<f64>() / n,
        disco_mean: y.iter().sum::<f64>() / n,
        test: paired_t_test(&x, &y).ok(),
        d_pooled: cohens_d(&x, &y, EffectSize::Pooled).ok(),
        d_z: cohens_d(&x, &y, EffectSize::PairedDz).ok(),
    }
}

fn domain_table(domain: &str, pairs: &[&Pair]) -> DomainTable {
    DomainTable {
        domain: domain.to_string(),
        n: pairs.len(),
        rows: Dimension::ALL.iter().map(|d| dimension_row(pairs, *d)).collect(),
    }
}

/// Pairs baseline/disco ratings per (participant, accommodation) and builds
/// per-domain and pooled tables plus the preference table.
pub fn analyze_records(records: &[RatingsRecord], mut warnings: Vec<String>) -> Result<RatingsReport> {
    type Key<'a> = (&'a str, &'a str);
    let mut grouped: BTreeMap<Key, Vec<&RatingsRecord>> = BTreeMap::new();
    for r in records {
        grouped
            .entry((r.participant_id.as_str(), r.accommodation_id.as_str()))
            .or_default()
            .push(r);
    }
    let mut by_domain: BTreeMap<&str, Vec<Pair>> = BTreeMap::new();
    for ((participant, accommodation), recs) in &grouped {
        let find = |v: Variant| {
            let found: Vec<&&RatingsRecord> = recs.iter().filter(|r| r.variant == v).collect();
            (found.len() == 1).then(|| *found[0])
        };
        let (Some(baseline), Some(disco)) = (find(Variant::Baseline), find(Variant::Disco)) else {
            warnings.push(format!(
                "participant {participant} / accommodation {accommodation}: needs exactly one baseline and one disco row; excluded"
            ));
            continue;
        };
        if recs.len() != 2 || baseline.domain != disco.domain {
            warnings.push(format!(
                "participant {participant} / accommodation {accommodation}: inconsistent rows; excluded"
            ));
            continue;
        }
        by_domain.entry(baseline.domain.as_str()).or_default().push(Pair { baseline, disco });
        if baseline.preferred == disco.preferred {
            warnings.push(format!(
                "participant {participant} / accommodation {accommodation}: exactly one variant must be preferred; excluded from preference counts"
            ));
        }
    }
    if by_domain.is_empty() {
        return Err(Error::InvalidInput("no complete baseline/disco pairs".into()));
    }

    let domains: Vec<DomainTable> = by_domain
        .iter()
        .map(|(domain, pairs)| domain_table(domain, &pairs.iter().collect::<Vec<_>>()))
        .collect();
    let all: Vec<&Pair> = by_domain.values().flatten().collect();
    let pooled = (by_domain.len() > 1).then(|| domain_table("all", &all));

    let mut rows = Vec::new();
    for (domain, pairs) in &by_domain {
        let valid: Vec<&Pair> = pairs.iter().filter(|p| p.baseline.preferred != p.disco.preferred).collect();
        let disco_preferred = valid.iter().filter(|p| p.disco.preferred).count() as u64;
        let n = valid.len() as u64;
        if n == 0 {
            continue;
        }
        rows.push(PreferenceRow {
            domain: domain.to_string(),
            n: n as usize,
            baseline_preferred: n - disco_preferred,
            disco_preferred,
            binomial: exact_binomial_test(disco_preferred, n, 0.5)?,
        });
    }
    let chi_square = (rows.len() > 1)
        .then(|| {
            chi_square_independence(&[
                rows.iter().map(|r| r.baseline_preferred).collect(),
                rows.iter().map(|r| r.disco_preferred).collect(),
            ])
            .ok()
        })
        .flatten();

    Ok(RatingsReport {
        domains,
        pooled,
        preference: PreferenceTable { rows, chi_square },
        warnings,
    })
}

pub fn analyze_ratings(path: impl AsRef<Path>) -> Result<RatingsReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (records, warnings) = parse_ratings(&text)?;
    analyze_records(&records, warnings)
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

fn write_table(out: &mut String, table: &DomainTable) {
    let _ = writeln!(out, "## {} (n = {})\n", table.domain, table.n);
    out.push_str("| Dimension | Baseline (M) | Disco (M) | t | p | d (pooled) | d_z |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for row in &table.rows {
        let (t, p) = match &row.test {
            Some(t) => (
                format!("{:.2}{}", t.statistic, significance_stars(t.p_value)),
                fmt_p(t.p_value),
            ),
            None => ("n/a".into(), "n/a".into()),
        };
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {t} | {p} | {} | {} |",
            row.dimension.label(),
            row.baseline_mean,
            row.disco_mean,
            fmt_opt(row.d_pooled),
            fmt_opt(row.d_z),
        );
    }
    out.push('\n');
}

impl RatingsReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Ratings analysis\n\n");
        for table in self.domains.iter().chain(&self.pooled) {
            write_table(&mut out, table);
        }
        out.push_str("## Preference\n\n");
        out.push_str("| Domain | Baseline (%) | Disco (%) | Binomial p |\n|---|---|---|---|\n");
        for row in &self.preference.rows {
            let pct = |k: u64| (100.0 * k as f64 / row.n as f64).round();
            let p = row.binomial.p_value;
            let p = if p < 0.001 { "<.001".to_string() } else { format!("{p:.2}") };
            let _ = writeln!(
                out,
                "| {} | {}% ({}) | {}% ({}) | {p} |",
                row.domain,
                pct(row.baseline_preferred),
                row.baseline_preferred,
                pct(row.disco_preferred),
                row.disco_preferred,
            );
        }
        if let Some(chi) = &self.preference.chi_square {
            let _ = writeln!(
                out,
                "\nPearson chi-square test of independence (preference x domain): chi2({}) = {:.2}, p = {}",
                chi.df,
                chi.statistic,
                fmt_p(chi.p_value)
            );
        }
        if !self.warnings.is_empty() {
            out.push_str("\n## Warnings\n\n");
            for w in &self.warnings {
                let _ = writeln!(out, "- {w}");
            }
        }
        out
    }
}
