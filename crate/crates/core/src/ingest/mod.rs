//! Raw event ingestion: parsing, keyword canonicalization, registrable-domain
//! extraction and the relevance / domain-quality filters.

mod domain;
mod events;
mod filter;
mod normalize;
mod translit;

use std::collections::HashSet;

pub use domain::extract_domain;
pub use events::{parse_events, write_events, write_rejections, ParseOutcome, RawEvent, Rejection};
pub use filter::{
    cpc_observable, filter_domains, filter_relevant, DomainStats, DEFAULT_MAX_MISSING,
    DEFAULT_MIN_MENTIONS,
};
pub use normalize::{normalize_keyword, tokens, EmptyCanonical};

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub max_missing: u64,
    pub min_mentions: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            max_missing: DEFAULT_MAX_MISSING,
            min_mentions: DEFAULT_MIN_MENTIONS,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub parsed: usize,
    pub duplicates: usize,
    pub empty_keywords: usize,
    pub irrelevant: usize,
    pub domain_excluded: usize,
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    /// Events with canonical keyword and query text.
    pub events: Vec<RawEvent>,
    pub rejections: Vec<Rejection>,
    pub domains: Vec<DomainStats>,
    pub report: IngestReport,
}

/// Full ingest stage: exact-duplicate drop, canonicalization, relevance
/// filter, domain-quality filter.
pub fn run(parsed: ParseOutcome, cfg: &IngestConfig) -> IngestOutput {
    let mut report = IngestReport {
        parsed: parsed.events.len(),
        ..Default::default()
    };

    let mut seen = HashSet::new();
    let mut events = Vec::with_capacity(parsed.events.len());
    for ev in parsed.events {
        let key = serde_json::to_string(&ev).expect("event serializes");
        if seen.insert(key) {
            events.push(ev);
        } else {
            report.duplicates += 1;
        }
    }

    let mut canonical = Vec::with_capacity(events.len());
    for mut ev in events {
        match normalize_keyword(&ev.keyword) {
            Ok(k) => ev.keyword = k,
            Err(EmptyCanonical) => {
                report.empty_keywords += 1;
                continue;
            }
        }
        ev.query = normalize_keyword(&ev.query).unwrap_or_default();
        canonical.push(ev);
    }

    let before = canonical.len();
    let relevant = filter_relevant(canonical);
    report.irrelevant = before - relevant.len();

    let before = relevant.len();
    let (kept, domains) = filter_domains(relevant, cfg.max_missing, cfg.min_mentions);
    report.domain_excluded = before - kept.len();
    report.kept = kept.len();

    IngestOutput {
        events: kept,
        rejections: parsed.rejections,
        domains,
        report,
    }
}
