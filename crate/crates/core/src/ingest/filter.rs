use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::domain::extract_domain;
use super::events::RawEvent;
use super::normalize::tokens;

pub const DEFAULT_MAX_MISSING: u64 = 15;
pub const DEFAULT_MIN_MENTIONS: u64 = 1000;

/// Audit row for the domain-quality filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainStats {
    pub domain: String,
    pub total_mentions: u64,
    /// Calendar days in the global observed date range with no event for
    /// this domain.
    pub missing_dates: u64,
    pub excluded: bool,
}

fn has_intent(text: &str) -> bool {
    let mut car = false;
    let mut rental = false;
    for t in tokens(text) {
        car |= t == "car";
        rental |= t == "rental";
    }
    car && rental
}

/// Whether an event's CPC can be observed at all.
pub fn cpc_observable(ev: &RawEvent) -> bool {
    ev.clicks.is_some() && ev.cost.is_some()
}

/// Keep events whose canonical keyword or canonical query carries both the
/// `car` and `rental` tokens and whose clicks and cost are both present.
pub fn filter_relevant(events: Vec<RawEvent>) -> Vec<RawEvent> {
    events
        .into_iter()
        .filter(|ev| cpc_observable(ev) && (has_intent(&ev.keyword) || has_intent(&ev.query)))
        .collect()
}

/// Domain-quality filter. A domain is excluded when it has more than
/// `max_missing` missing dates *and* fewer than `min_mentions` events.
/// Missing dates are counted per day over the min..=max date range of the
/// input. Events whose URL has no registrable domain are not subject to the
/// filter and pass through.
pub fn filter_domains(
    events: Vec<RawEvent>,
    max_missing: u64,
    min_mentions: u64,
) -> (Vec<RawEvent>, Vec<DomainStats>) {
    let domains: Vec<Option<String>> = events.iter().map(|e| extract_domain(&e.url)).collect();
    let stats = domain_stats(&events, &domains, max_missing, min_mentions);
    let excluded: BTreeSet<&str> = stats
        .iter()
        .filter(|s| s.excluded)
        .map(|s| s.domain.as_str())
        .collect();
    let kept = events
        .into_iter()
        .zip(&domains)
        .filter(|(_, d)| d.as_deref().is_none_or(|d| !excluded.contains(d)))
        .map(|(e, _)| e)
        .collect();
    (kept, stats)
}

fn domain_stats(
    events: &[RawEvent],
    domains: &[Option<String>],
    max_missing: u64,
    min_mentions: u64,
) -> Vec<DomainStats> {
    let (Some(first), Some(last)) = (
        events.iter().map(|e| e.date).min(),
        events.iter().map(|e| e.date).max(),
    ) else {
        return Vec::new();
    };
    let span = (last - first).num_days() as u64 + 1;

    let mut per_domain: BTreeMap<&str, (u64, BTreeSet<chrono::NaiveDate>)> = BTreeMap::new();
    for (ev, dom) in events.iter().zip(domains) {
        if let Some(d) = dom {
            let entry = per_domain.entry(d.as_str()).or_default();
            entry.0 += 1;
            entry.1.insert(ev.date);
        }
    }
    per_domain
        .into_iter()
        .map(|(domain, (mentions, dates))| {
            let missing = span - dates.len() as u64;
            DomainStats {
                domain: domain.to_string(),
                total_mentions: mentions,
                missing_dates: missing,
                excluded: missing > max_missing && mentions < min_mentions,
            }
        })
        .collect()
}
