use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use disco_core::absa::{extract_aspects, lexicon_client, AspectMention, ExtractOptions, Lexicon, MentionCache};
use disco_core::client::{ChatClient, HttpChatClient, RetryPolicy};
use disco_core::corpus::{feature_vocabulary, load_reviews, parse_reviews, Ingestion, Review, SkippedLine, Taxonomy, Vocabulary};
use disco_core::evalstats::analyze_ratings;
use disco_core::expectation::{accommodation_distribution, domain_reference, ReferenceFile};
use disco_core::generation::{generate_summary, mock_summary_client, validate_summary, SummaryRecord};
use disco_core::lvs::{deviation_chart_csv, divergence_profile, select_topics, DivergenceProfile};
use disco_core::prompting::{build_baseline_prompt, build_disco_prompt, build_topic_entries, PromptBundle, Variant};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};

const BUNDLED_REVIEWS: &str = include_str!("../data/reviews.jsonl");
const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.json");
const VARIANTS: [Variant; 2] = [Variant::Disco, Variant::Baseline];

/// Inputs shared by every stage.
struct Inputs {
    taxonomy: Taxonomy,
    vocabulary: Arc<Vocabulary>,
    reviews: Vec<Review>,
    skipped: Vec<SkippedLine>,
}

impl Inputs {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let taxonomy = match &cfg.taxonomy {
            Some(p) => Taxonomy::from_path(p)?,
            None => Taxonomy::bundled(),
        };
        let mode = if cfg.strict { Ingestion::Strict } else { Ingestion::Lenient };
        let loaded = match &cfg.reviews {
            Some(p) => load_reviews(p, mode)?,
            None => parse_reviews(BUNDLED_REVIEWS, Path::new("<bundled reviews>"), mode)?,
        };
        let mut reviews = loaded.reviews;
        if let Some(domain) = &cfg.domain {
            reviews.retain(|r| &r.domain == domain);
        }
        let vocabulary = Arc::new(feature_vocabulary(&taxonomy));
        Ok(Self { taxonomy, vocabulary, reviews, skipped: loaded.skipped })
    }

    /// domain → accommodation → reviews, both levels sorted.
    fn layout(&self) -> BTreeMap<&str, BTreeMap<&str, Vec<&Review>>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, Vec<&Review>>> = BTreeMap::new();
        for r in &self.reviews {
            out.entry(r.domain.as_str())
                .or_default()
                .entry(r.accommodation_id.as_str())
                .or_default()
                .push(r);
        }
        out
    }
}

/// Extraction output handed to later stages.
#[derive(Debug, Serialize, Deserialize)]
pub struct MentionsFile {
    pub model: String,
    pub review_count: usize,
    pub failed: Vec<String>,
    pub warnings: Vec<String>,
    pub mentions: Vec<AspectMention>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    command: &'a str,
    seed: u64,
    taxonomy_fingerprint: &'a str,
    feature_count: usize,
    config: &'a RunConfig,
}

fn path(cfg: &RunConfig, rel: &str) -> PathBuf {
    cfg.out.join(rel)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| disco_core::Error::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(disco_core::Error::from).with_context(|| path.display().to_string())
}

fn write_manifest(cfg: &RunConfig, command: &str, ctx: &Inputs) -> Result<()> {
    write_json(
        &path(cfg, "manifest.json"),
        &Manifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: cfg.seed,
            taxonomy_fingerprint: ctx.vocabulary.fingerprint(),
            feature_count: ctx.vocabulary.len(),
            config: cfg,
        },
    )
}

fn setup(cfg: &RunConfig, command: &str) -> Result<Inputs> {
    cfg.validate()?;
    let ctx = Inputs::load(cfg)?;
    write_manifest(cfg, command, &ctx)?;
    Ok(ctx)
}

fn live_client(cfg: &RunConfig) -> Result<HttpChatClient> {
    HttpChatClient::from_env(cfg.client_config()).map_err(|e| ConfigError(e.to_string()).into())
}

fn retry(cfg: &RunConfig) -> RetryPolicy {
    if cfg.mock {
        RetryPolicy::immediate(cfg.attempts)
    } else {
        RetryPolicy { attempts: cfg.attempts, ..RetryPolicy::default() }
    }
}

fn log_lines(cfg: &RunConfig, name: &str, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    write(&path(cfg, name), text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractStats {
    pub reviews: usize,
    pub mentions: usize,
    pub client_calls: usize,
    pub cache_hits: usize,
    pub failed: usize,
}

pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractStats> {
    let ctx = setup(cfg, "extract")?;
    if !ctx.skipped.is_empty() {
        log::warn!("{} malformed review lines skipped", ctx.skipped.len());
    }
    write_json(&path(cfg, "skip_report.json"), &ctx.skipped)?;

    let client: Box<dyn ChatClient> = if cfg.mock {
        let lexicon = match &cfg.lexicon {
            Some(p) => Lexicon::from_path(p)?,
            None => serde_json::from_str(BUNDLED_LEXICON).context("bundled lexicon")?,
        };
        Box::new(lexicon_client(lexicon, ctx.taxonomy.clone())?)
    } else {
        Box::new(live_client(cfg)?)
    };
    let cache = MentionCache::open(path(cfg, "mentions.jsonl"))?;
    let opts = ExtractOptions {
        concurrency_limit: cfg.concurrency,
        retry: retry(cfg),
        decoding: cfg.decoding.clone(),
    };
    let set = extract_aspects(&ctx.reviews, &ctx.taxonomy, client.as_ref(), &cache, &opts)?;
    let meta = &set.metadata;
    let stats = ExtractStats {
        reviews: ctx.reviews.len(),
        mentions: set.mentions.len(),
        client_calls: meta.client_calls,
        cache_hits: meta.cache_hits,
        failed: meta.failed.len(),
    };
    let mut lines = vec![
        format!("{} reviews, {} mentions", stats.reviews, stats.mentions),
        format!("{} client calls, {} cache hits", stats.client_calls, stats.cache_hits),
    ];
    lines.extend(meta.failed.iter().map(|id| format!("failed: {id}")));
    lines.extend(meta.warnings.iter().map(|w| format!("warning: {w}")));
    for line in &lines {
        log::info!("{line}");
    }
    log_lines(cfg, "extract.log", &lines)?;
    write_json(
        &path(cfg, "mentions.json"),
        &MentionsFile {
            model: meta.model.clone(),
            review_count: ctx.reviews.len(),
            failed: meta.failed.clone(),
            warnings: meta.warnings.clone(),
            mentions: set.mentions,
        },
    )?;
    Ok(stats)
}

fn load_mentions(cfg: &RunConfig) -> Result<MentionsFile> {
    read_json(&path(cfg, "mentions.json")).context("run `extract` first")
}

fn mentions_by_accommodation<'a>(
    ctx: &'a Inputs,
    mentions: &'a [AspectMention],
) -> BTreeMap<&'a str, Vec<AspectMention>> {
    let owner: BTreeMap<&str, &str> = ctx
        .reviews
        .iter()
        .map(|r| (r.review_id.as_str(), r.accommodation_id.as_str()))
        .collect();
    let mut out: BTreeMap<&str, Vec<AspectMention>> = BTreeMap::new();
    for m in mentions {
        if let Some(acc) = owner.get(m.review_id.as_str()) {
            out.entry(acc).or_default().push(m.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnalyzeStats {
    pub references: usize,
    pub profiles: usize,
    pub flagged: Vec<String>,
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeStats> {
    let ctx = setup(cfg, "analyze")?;
    let file = load_mentions(cfg)?;
    let by_acc = mentions_by_accommodation(&ctx, &file.mentions);
    let mut stats = AnalyzeStats::default();
    let mut lines = Vec::new();
    for (domain, accommodations) in ctx.layout() {
        let pooled: Vec<AspectMention> = accommodations
            .keys()
            .flat_map(|acc| by_acc.get(acc).into_iter().flatten().cloned())
            .collect();
        let reference = match domain_reference(domain, &pooled, accommodations.len(), &ctx.vocabulary, cfg.epsilon) {
            Ok(r) => r,
            Err(disco_core::Error::EmptyDomain(_)) => {
                lines.push(format!("domain {domain}: no mentions; skipped"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        write_json(&path(cfg, &format!("references/{domain}.json")), &reference.to_file())?;
        stats.references += 1;
        lines.push(format!("domain {domain}: {} accommodations, {} mentions", accommodations.len(), pooled.len()));

        for acc in accommodations.keys() {
            let own = by_acc.get(acc).map(Vec::as_slice).unwrap_or_default();
            let p = accommodation_distribution(own, &ctx.vocabulary)?;
            if p.is_empty_support() {
                lines.push(format!("accommodation {acc}: zero mentions; no profile emitted"));
                stats.flagged.push(acc.to_string());
                continue;
            }
            let profile = if cfg.leave_one_out {
                match reference.leave_one_out(&p) {
                    Ok(r) => divergence_profile(acc, &p, &r)?,
                    Err(disco_core::Error::EmptyDomain(_)) => {
                        lines.push(format!("accommodation {acc}: nothing left after leave-one-out; no profile emitted"));
                        stats.flagged.push(acc.to_string());
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                divergence_profile(acc, &p, &reference)?
            };
            write_json(&path(cfg, &format!("profiles/{acc}.json")), &profile)?;
            write(&path(cfg, &format!("charts/{acc}.csv")), deviation_chart_csv(&profile)?)?;
            lines.push(format!("accommodation {acc}: {} mentions, jsd {:.6}", profile.support_count, profile.total_jsd));
            stats.profiles += 1;
        }
    }
    for line in &lines {
        log::info!("{line}");
    }
    log_lines(cfg, "analyze.log", &lines)?;
    Ok(stats)
}

fn profile_path(cfg: &RunConfig, acc: &str) -> PathBuf {
    path(cfg, &format!("profiles/{acc}.json"))
}

fn prompt_path(cfg: &RunConfig, acc: &str, variant: Variant) -> PathBuf {
    path(cfg, &format!("prompts/{acc}.{}.json", variant.as_str()))
}

/// Accommodations in scope that have a profile on disk.
fn profiled(cfg: &RunConfig, ctx: &Inputs) -> Vec<String> {
    ctx.layout()
        .values()
        .flat_map(|accs| accs.keys())
        .filter(|acc| profile_path(cfg, acc).is_file())
        .map(|acc| acc.to_string())
        .collect()
}

/// Writes disco and baseline prompts; returns the number of files.
pub fn cmd_prompts(cfg: &RunConfig) -> Result<usize> {
    let ctx = setup(cfg, "prompts")?;
    let file = load_mentions(cfg)?;
    let by_acc = mentions_by_accommodation(&ctx, &file.mentions);
    let mut written = 0;
    for acc in profiled(cfg, &ctx) {
        let profile: DivergenceProfile = read_json(&profile_path(cfg, &acc))?;
        let selection = select_topics(&profile, cfg.k);
        let own = by_acc.get(acc.as_str()).map(Vec::as_slice).unwrap_or_default();
        let entries = build_topic_entries(&selection, own, cfg.seed);
        let disco = build_disco_prompt(&acc, &entries, &selection, cfg.seed)?;
        let baseline = build_baseline_prompt(&acc, &entries, &selection, cfg.seed)?;
        for bundle in [disco, baseline] {
            write_json(&prompt_path(cfg, &acc, bundle.variant), &bundle)?;
            written += 1;
        }
    }
    log::info!("{written} prompt files written");
    Ok(written)
}

#[derive(Serialize)]
struct AuditEntry {
    accommodation_id: String,
    variant: Variant,
    attempts: usize,
    word_count: usize,
    warnings: Vec<&'static str>,
}

/// Generates one summary per prompt file; returns the records in file order.
pub fn cmd_summarize(cfg: &RunConfig) -> Result<Vec<SummaryRecord>> {
    let ctx = setup(cfg, "summarize")?;
    let client: Box<dyn ChatClient> = if cfg.mock {
        Box::new(mock_summary_client())
    } else {
        Box::new(live_client(cfg)?)
    };
    let policy = retry(cfg);
    let mut records = Vec::new();
    let mut audit = Vec::new();
    for acc in profiled(cfg, &ctx) {
        for variant in VARIANTS {
            let p = prompt_path(cfg, &acc, variant);
            if !p.is_file() {
                continue;
            }
            let bundle: PromptBundle = read_json(&p)?;
            let mut attempts = 1;
            let mut record = generate_summary(&bundle, client.as_ref(), &policy, &cfg.decoding)?;
            let mut report = validate_summary(&record);
            if !report.is_clean() && cfg.regenerate_on_warning {
                attempts += 1;
                record = generate_summary(&bundle, client.as_ref(), &policy, &cfg.decoding)?;
                report = validate_summary(&record);
            }
            for w in report.warnings() {
                log::warn!("{acc} {}: {w}", variant.as_str());
            }
            audit.push(AuditEntry {
                accommodation_id: acc.clone(),
                variant,
                attempts,
                word_count: record.word_count,
                warnings: report.warnings(),
            });
            records.push(record);
        }
    }
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write(&path(cfg, "summaries.jsonl"), text)?;
    write_json(&path(cfg, "summary_audit.json"), &audit)?;
    log::info!("{} summaries written", records.len());
    Ok(records)
}

fn load_summaries(cfg: &RunConfig) -> Result<Vec<SummaryRecord>> {
    let p = path(cfg, "summaries.jsonl");
    if !p.is_file() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&p).with_context(|| p.display().to_string())?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str::<SummaryRecord>(l).map_err(disco_core::Error::from)?))
        .collect()
}

fn md_cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// Markdown report: domain expectation profiles, one deviation section per
/// profiled accommodation and the summaries side by side.
pub fn cmd_report(cfg: &RunConfig) -> Result<PathBuf> {
    let ctx = setup(cfg, "report")?;
    let summaries = load_summaries(cfg)?;
    let mut out = String::from("# Run report\n\n");
    let _ = writeln!(
        out,
        "Seed {}, k = {}, epsilon = {:e}, leave-one-out {}, taxonomy {} ({} features).\n",
        cfg.seed,
        cfg.k,
        cfg.epsilon,
        cfg.leave_one_out,
        &ctx.vocabulary.fingerprint()[..12],
        ctx.vocabulary.len()
    );
    let profiled: BTreeSet<String> = profiled(cfg, &ctx).into_iter().collect();
    for (domain, accommodations) in ctx.layout() {
        let _ = writeln!(out, "## Domain: {domain}\n");
        let ref_path = path(cfg, &format!("references/{domain}.json"));
        if ref_path.is_file() {
            let reference: ReferenceFile = read_json(&ref_path)?;
            let mut top: Vec<_> = reference.features.iter().filter(|f| f.count > 0).collect();
            top.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| (&a.leaf, a.sentiment).cmp(&(&b.leaf, b.sentiment))));
            let _ = writeln!(out, "### Expectation profile\n\n| Feature | Share | Mentions |\n|---|---|---|");
            for f in top.iter().take(10) {
                let _ = writeln!(out, "| {} {} | {:.3} | {} |", f.leaf, f.sentiment, f.p, f.count);
            }
            out.push('\n');
        }
        for acc in accommodations.keys() {
            if !profiled.contains(*acc) {
                let _ = writeln!(out, "### Deviation: {acc}\n\nNo mentions extracted; no profile.\n");
                continue;
            }
            let profile: DivergenceProfile = read_json(&profile_path(cfg, acc))?;
            let selection = select_topics(&profile, cfg.k);
            let _ = writeln!(
                out,
                "### Deviation: {acc}\n\nJSD from the domain reference: {:.4} over {} mentions. Chart data: `charts/{acc}.csv`.\n",
                profile.total_jsd, profile.support_count
            );
            out.push_str("| Over-represented | Score | Missing but common | Score |\n|---|---|---|---|\n");
            let score = |key: &disco_core::FeatureKey| {
                profile
                    .entries
                    .iter()
                    .find(|e| &e.feature == key)
                    .map_or(0.0, |e| e.signed_score)
            };
            let rows = selection.over_represented.len().max(selection.missing_common.len());
            for i in 0..rows {
                let cell = |list: &[disco_core::FeatureKey]| match list.get(i) {
                    Some(k) => (k.to_string(), format!("{:+.4}", score(k))),
                    None => (String::new(), String::new()),
                };
                let (o, os) = cell(&selection.over_represented);
                let (m, ms) = cell(&selection.missing_common);
                let _ = writeln!(out, "| {o} | {os} | {m} | {ms} |");
            }
            out.push('\n');
            let text = |v: Variant| {
                summaries
                    .iter()
                    .find(|s| s.accommodation_id == *acc && s.variant == v)
                    .map_or_else(|| "(not generated)".to_string(), |s| md_cell(&s.text))
            };
            let _ = writeln!(
                out,
                "| Baseline summary | Disco summary |\n|---|---|\n| {} | {} |\n",
                text(Variant::Baseline),
                text(Variant::Disco)
            );
        }
    }
    let p = path(cfg, "report.md");
    write(&p, out)?;
    Ok(p)
}

pub fn cmd_stats(cfg: &RunConfig, ratings: &Path) -> Result<String> {
    cfg.validate()?;
    let report = analyze_ratings(ratings)?;
    let markdown = report.to_markdown();
    write(&path(cfg, "stats/report.md"), &markdown)?;
    write_json(&path(cfg, "stats/report.json"), &report)?;
    Ok(markdown)
}

pub fn cmd_all(cfg: &RunConfig) -> Result<PathBuf> {
    cmd_extract(cfg)?;
    cmd_analyze(cfg)?;
    cmd_prompts(cfg)?;
    cmd_summarize(cfg)?;
    cmd_report(cfg)
}
