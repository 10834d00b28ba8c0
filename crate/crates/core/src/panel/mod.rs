//! Keyword × ISO-week panel: aggregation, keyword selection, gap imputation
//! and descriptive statistics.

mod grid;
mod io;
mod stats;
mod week;

use std::collections::{BTreeMap, HashMap};

pub use grid::Grid;
pub use io::{read_panel, write_panel};
pub use stats::{compute_stats, percentile, skewness, KeywordStats, PanelStats, PooledStats, MIN_CELLS_FOR_CV};
pub use week::IsoWeek;

use crate::error::{Error, Result};
use crate::ingest::RawEvent;

pub const DEFAULT_MIN_WEEKS: usize = 110;
pub const DEFAULT_WINDOW: usize = 127;

pub type LabelCounts = BTreeMap<String, u64>;

/// Weekly panel. Keyword ids are row indices into `keywords`; week ids are
/// column indices into the contiguous `weeks` list.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyPanel {
    pub keywords: Vec<String>,
    pub weeks: Vec<IsoWeek>,
    pub impressions: Grid<u64>,
    pub clicks: Grid<u64>,
    pub cost: Grid<f64>,
    /// `cost / clicks` where clicks > 0; after imputation also holds the
    /// filled values flagged in `imputed`.
    pub cpc: Grid<Option<f64>>,
    pub device_counts: Grid<LabelCounts>,
    pub searchtype_counts: Grid<LabelCounts>,
    /// Any event contributed to the cell.
    pub observed: Grid<bool>,
    /// CPC value was filled by `impute_gaps`.
    pub imputed: Grid<bool>,
}

impl WeeklyPanel {
    pub fn empty() -> Self {
        Self::with_shape(Vec::new(), Vec::new())
    }

    /// Fully observed panel from per-keyword CPC and click series starting at
    /// `first_week`. Cost is `cpc * clicks`; impressions equal clicks.
    pub fn from_series(keywords: Vec<String>, first_week: IsoWeek, cpc: &[Vec<f64>], clicks: &[Vec<u64>]) -> Result<Self> {
        let t = cpc.first().map_or(0, Vec::len);
        if cpc.len() != keywords.len() || clicks.len() != keywords.len() {
            return Err(Error::Shape("series count does not match keywords".into()));
        }
        if cpc.iter().any(|r| r.len() != t) || clicks.iter().any(|r| r.len() != t) {
            return Err(Error::Shape("series lengths differ".into()));
        }
        let mut weeks = Vec::with_capacity(t);
        let mut w = first_week;
        for _ in 0..t {
            weeks.push(w);
            w = w.succ();
        }
        let mut p = Self::with_shape(keywords, weeks);
        for k in 0..cpc.len() {
            for i in 0..t {
                p.clicks.set(k, i, clicks[k][i]);
                p.impressions.set(k, i, clicks[k][i]);
                p.cost.set(k, i, cpc[k][i] * clicks[k][i] as f64);
                p.cpc.set(k, i, Some(cpc[k][i]));
                p.observed.set(k, i, true);
            }
        }
        Ok(p)
    }

    fn with_shape(keywords: Vec<String>, weeks: Vec<IsoWeek>) -> Self {
        let (n, t) = (keywords.len(), weeks.len());
        Self {
            keywords,
            weeks,
            impressions: Grid::filled(n, t, 0),
            clicks: Grid::filled(n, t, 0),
            cost: Grid::filled(n, t, 0.0),
            cpc: Grid::filled(n, t, None),
            device_counts: Grid::filled(n, t, LabelCounts::new()),
            searchtype_counts: Grid::filled(n, t, LabelCounts::new()),
            observed: Grid::filled(n, t, false),
            imputed: Grid::filled(n, t, false),
        }
    }

    pub fn n_keywords(&self) -> usize {
        self.keywords.len()
    }

    pub fn n_weeks(&self) -> usize {
        self.weeks.len()
    }

    pub fn week_index(&self, week: IsoWeek) -> Option<usize> {
        self.weeks.binary_search(&week).ok()
    }

    /// CPC value usable as a model input (observed or imputed).
    pub fn cpc_value(&self, k: usize, t: usize) -> Option<f64> {
        self.cpc.at(k, t)
    }

    /// CPC value that may be used as a scoring or training target: defined
    /// and not produced by imputation.
    pub fn target(&self, k: usize, t: usize) -> Option<f64> {
        if self.imputed.at(k, t) {
            None
        } else {
            self.cpc.at(k, t)
        }
    }

    /// Dense CPC row; fails if any cell is undefined (panel not imputed).
    pub fn cpc_row(&self, k: usize) -> Result<Vec<f64>> {
        self.cpc
            .row(k)
            .iter()
            .enumerate()
            .map(|(t, v)| {
                v.ok_or_else(|| {
                    Error::Data(format!(
                        "keyword {:?} has no CPC at {}; impute gaps first",
                        self.keywords[k], self.weeks[t]
                    ))
                })
            })
            .collect()
    }

    pub fn is_gap_free(&self) -> bool {
        self.cpc.iter().all(Option::is_some)
    }

    /// Sub-panel with the given keyword rows and week columns.
    pub fn select(&self, rows: &[usize], cols: std::ops::Range<usize>) -> Self {
        Self {
            keywords: rows.iter().map(|&r| self.keywords[r].clone()).collect(),
            weeks: self.weeks[cols.clone()].to_vec(),
            impressions: self.impressions.select(rows, cols.clone()),
            clicks: self.clicks.select(rows, cols.clone()),
            cost: self.cost.select(rows, cols.clone()),
            cpc: self.cpc.select(rows, cols.clone()),
            device_counts: self.device_counts.select(rows, cols.clone()),
            searchtype_counts: self.searchtype_counts.select(rows, cols.clone()),
            observed: self.observed.select(rows, cols.clone()),
            imputed: self.imputed.select(rows, cols),
        }
    }

    pub(crate) fn recompute_cpc(&mut self) {
        for k in 0..self.n_keywords() {
            for t in 0..self.n_weeks() {
                let clicks = self.clicks.at(k, t);
                let v = (clicks > 0).then(|| self.cost.at(k, t) / clicks as f64);
                self.cpc.set(k, t, v);
            }
        }
    }
}

/// Aggregate events to the keyword × ISO-week grid. The week axis is the
/// contiguous range between the first and last observed week. Cost sums are
/// reduced in sorted order so the result does not depend on event order.
pub fn aggregate_weekly(events: &[RawEvent]) -> WeeklyPanel {
    if events.is_empty() {
        return WeeklyPanel::empty();
    }
    let mut keywords: Vec<String> = events.iter().map(|e| e.keyword.clone()).collect();
    keywords.sort();
    keywords.dedup();
    let kw_index: HashMap<&str, usize> = keywords
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();

    let first = events.iter().map(|e| e.date).min().expect("non-empty");
    let last = events.iter().map(|e| e.date).max().expect("non-empty");
    let weeks = IsoWeek::range_inclusive(IsoWeek::from_date(first), IsoWeek::from_date(last));
    let week0 = weeks[0];

    let mut panel = WeeklyPanel::with_shape(keywords.clone(), weeks);
    let mut costs: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for ev in events {
        let k = kw_index[ev.keyword.as_str()];
        let t = week0.weeks_until(IsoWeek::from_date(ev.date)) as usize;
        *panel.impressions.get_mut(k, t) += ev.impressions;
        *panel.clicks.get_mut(k, t) += ev.clicks.unwrap_or(0);
        if let Some(c) = ev.cost {
            costs.entry((k, t)).or_default().push(c);
        }
        *panel
            .device_counts
            .get_mut(k, t)
            .entry(ev.device.clone())
            .or_default() += 1;
        *panel
            .searchtype_counts
            .get_mut(k, t)
            .entry(ev.search_type.clone())
            .or_default() += 1;
        panel.observed.set(k, t, true);
    }
    for ((k, t), mut v) in costs {
        v.sort_by(f64::total_cmp);
        panel.cost.set(k, t, v.iter().sum());
    }
    panel.recompute_cpc();
    panel
}

/// Keep keywords observed in at least `min_weeks` of the trailing `window`
/// weeks, and trim the panel to that window.
pub fn select_keywords(panel: &WeeklyPanel, min_weeks: usize, window: usize) -> Result<WeeklyPanel> {
    let t = panel.n_weeks();
    if window > t {
        return Err(Error::Config(format!(
            "selection window of {window} weeks exceeds the panel length of {t} weeks"
        )));
    }
    if window == 0 {
        return Err(Error::Config("selection window must be positive".into()));
    }
    let cols = t - window..t;
    let rows: Vec<usize> = (0..panel.n_keywords())
        .filter(|&k| panel.observed.row(k)[cols.clone()].iter().filter(|&&o| o).count() >= min_weeks)
        .collect();
    Ok(panel.select(&rows, cols))
}

#[derive(Debug, Clone)]
pub struct ImputeOutcome {
    pub panel: WeeklyPanel,
    /// Keywords removed because they had no observed CPC at all.
    pub dropped: Vec<String>,
}

/// Longest gap filled by linear interpolation; longer interior gaps carry
/// the last observation forward.
pub const MAX_INTERPOLATED_GAP: usize = 2;

/// Fill CPC gaps. Leading gaps take the first observed value, interior gaps
/// of at most two weeks are linearly interpolated, longer interior gaps and
/// trailing gaps carry the last observation forward. Volume fields are left
/// untouched. Filled cells are flagged in `panel.imputed`.
pub fn impute_gaps(panel: &WeeklyPanel) -> ImputeOutcome {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for k in 0..panel.n_keywords() {
        if panel.cpc.row(k).iter().any(Option::is_some) {
            keep.push(k);
        } else {
            log::warn!("dropping keyword {:?}: no observed CPC", panel.keywords[k]);
            dropped.push(panel.keywords[k].clone());
        }
    }
    let mut out = panel.select(&keep, 0..panel.n_weeks());
    for k in 0..out.n_keywords() {
        let (filled, flags) = fill_series(out.cpc.row(k));
        for (t, (v, f)) in filled.into_iter().zip(flags).enumerate() {
            if f {
                out.cpc.set(k, t, Some(v));
                out.imputed.set(k, t, true);
            }
        }
    }
    ImputeOutcome {
        panel: out,
        dropped,
    }
}

/// Fill a series with at least one defined value; returns values and the
/// filled-cell flags.
fn fill_series(series: &[Option<f64>]) -> (Vec<f64>, Vec<bool>) {
    let n = series.len();
    let mut vals = vec![0.0; n];
    let mut flags = vec![false; n];
    let observed: Vec<usize> = (0..n).filter(|&t| series[t].is_some()).collect();
    let first = observed[0];
    let last = *observed.last().expect("at least one observation");

    for t in 0..n {
        if let Some(v) = series[t] {
            vals[t] = v;
        }
    }
    for t in 0..first {
        vals[t] = vals[first];
        flags[t] = true;
    }
    for w in observed.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gap = b - a - 1;
        if gap == 0 {
            continue;
        }
        for t in a + 1..b {
            vals[t] = if gap <= MAX_INTERPOLATED_GAP {
                let frac = (t - a) as f64 / (b - a) as f64;
                vals[a] + frac * (vals[b] - vals[a])
            } else {
                vals[a]
            };
            flags[t] = true;
        }
    }
    for t in last + 1..n {
        vals[t] = vals[last];
        flags[t] = true;
    }
    (vals, flags)
}
