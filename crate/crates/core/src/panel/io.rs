//! Panel persistence: one wide CSV per metric (rows = keywords, columns =
//! ISO weeks) plus a `panel.json` manifest holding the keyword list, week
//! range, masks and categorical count maps.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Grid, IsoWeek, LabelCounts, WeeklyPanel};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "panel.json";

#[derive(Serialize, Deserialize)]
struct PanelManifest {
    keywords: Vec<String>,
    first_week: Option<IsoWeek>,
    last_week: Option<IsoWeek>,
    n_weeks: usize,
    /// One '0'/'1' string per keyword.
    observed: Vec<String>,
    imputed: Vec<String>,
    device_counts: Vec<Vec<LabelCounts>>,
    searchtype_counts: Vec<Vec<LabelCounts>>,
}

fn mask_strings(g: &Grid<bool>) -> Vec<String> {
    (0..g.rows())
        .map(|r| g.row(r).iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect()
}

fn parse_mask(rows: &[String], n: usize, t: usize) -> Result<Grid<bool>> {
    if rows.len() != n {
        return Err(Error::Parse("mask row count does not match keywords".into()));
    }
    let mut data = Vec::with_capacity(n * t);
    for r in rows {
        if r.len() != t {
            return Err(Error::Parse("mask row length does not match weeks".into()));
        }
        data.extend(r.bytes().map(|b| b == b'1'));
    }
    Ok(Grid::from_vec(n, t, data))
}

fn write_metric<T>(path: &Path, p: &WeeklyPanel, g: &Grid<T>, cell: impl Fn(&T) -> String) -> Result<()> {
    let mut out = String::from("keyword");
    for w in &p.weeks {
        out.push(',');
        out.push_str(&w.to_string());
    }
    out.push('\n');
    for (k, kw) in p.keywords.iter().enumerate() {
        out.push_str(kw);
        for v in g.row(k) {
            out.push(',');
            out.push_str(&cell(v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_metric<T>(
    path: &Path,
    keywords: &[String],
    weeks: &[IsoWeek],
    cell: impl Fn(&str) -> Option<T>,
) -> Result<Grid<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse(format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').skip(1).collect();
    if cols.len() != weeks.len() || cols.iter().zip(weeks).any(|(c, w)| *c != w.to_string()) {
        return Err(Error::Parse(format!("{}: week header mismatch", path.display())));
    }
    let mut data = Vec::with_capacity(keywords.len() * weeks.len());
    let mut rows = 0;
    for (line, kw) in lines.zip(keywords) {
        let mut fields = line.split(',');
        if fields.next() != Some(kw.as_str()) {
            return Err(Error::Parse(format!("{}: keyword order mismatch", path.display())));
        }
        for f in fields {
            data.push(cell(f).ok_or_else(|| Error::Parse(format!("{}: bad cell {f:?}", path.display())))?);
        }
        rows += 1;
    }
    if rows != keywords.len() || data.len() != keywords.len() * weeks.len() {
        return Err(Error::Parse(format!("{}: shape mismatch", path.display())));
    }
    Ok(Grid::from_vec(keywords.len(), weeks.len(), data))
}

fn parse_num<T: FromStr>(s: &str) -> Option<T> {
    s.parse().ok()
}

fn show<T: Display>(v: &T) -> String {
    v.to_string()
}

pub fn write_panel(dir: &Path, p: &WeeklyPanel) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metric(&dir.join("impressions.csv"), p, &p.impressions, show)?;
    write_metric(&dir.join("clicks.csv"), p, &p.clicks, show)?;
    write_metric(&dir.join("cost.csv"), p, &p.cost, show)?;
    write_metric(&dir.join("cpc.csv"), p, &p.cpc, |v| v.map(|x| x.to_string()).unwrap_or_default())?;

    let rows = |g: &Grid<LabelCounts>| -> Vec<Vec<LabelCounts>> { (0..g.rows()).map(|r| g.row(r).to_vec()).collect() };
    let manifest = PanelManifest {
        keywords: p.keywords.clone(),
        first_week: p.weeks.first().copied(),
        last_week: p.weeks.last().copied(),
        n_weeks: p.n_weeks(),
        observed: mask_strings(&p.observed),
        imputed: mask_strings(&p.imputed),
        device_counts: rows(&p.device_counts),
        searchtype_counts: rows(&p.searchtype_counts),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string(&manifest)?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn read_panel(dir: &Path) -> Result<WeeklyPanel> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: PanelManifest = serde_json::from_str(&text)?;
    let weeks = match (m.first_week, m.last_week) {
        (Some(a), Some(b)) => IsoWeek::range_inclusive(a, b),
        _ => Vec::new(),
    };
    if weeks.len() != m.n_weeks {
        return Err(Error::Parse("panel manifest week range is inconsistent".into()));
    }
    let (n, t) = (m.keywords.len(), weeks.len());
    let counts = |rows: Vec<Vec<LabelCounts>>| -> Result<Grid<LabelCounts>> {
        if rows.len() != n || rows.iter().any(|r| r.len() != t) {
            return Err(Error::Parse("count map shape mismatch".into()));
        }
        Ok(Grid::from_vec(n, t, rows.into_iter().flatten().collect()))
    };
    Ok(WeeklyPanel {
        impressions: read_metric(&dir.join("impressions.csv"), &m.keywords, &weeks, parse_num)?,
        clicks: read_metric(&dir.join("clicks.csv"), &m.keywords, &weeks, parse_num)?,
        cost: read_metric(&dir.join("cost.csv"), &m.keywords, &weeks, parse_num)?,
        cpc: read_metric(&dir.join("cpc.csv"), &m.keywords, &weeks, |s| {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        })?,
        observed: parse_mask(&m.observed, n, t)?,
        imputed: parse_mask(&m.imputed, n, t)?,
        device_counts: counts(m.device_counts)?,
        searchtype_counts: counts(m.searchtype_counts)?,
        keywords: m.keywords,
        weeks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RawEvent;
    use chrono::{Duration, NaiveDate};

    #[test]
    fn write_read_round_trip() {
        let d0 = NaiveDate::from_ymd_opt(2020, 12, 21).unwrap();
        let events: Vec<RawEvent> = (0..30)
            .map(|i| RawEvent {
                keyword: format!("car rental {}", ["faro", "porto"][i % 2]),
                query: String::new(),
                url: String::new(),
                device: ["mobile", "desktop", "tablet"][i % 3].into(),
                search_type: "search".into(),
                impressions: 7 * i as u64,
                clicks: Some((i % 4) as u64),
                cost: Some(0.1 * i as f64 + 1.0 / 3.0),
                date: d0 + Duration::days(3 * i as i64),
            })
            .collect();
        let p = crate::panel::impute_gaps(&crate::panel::aggregate_weekly(&events)).panel;
        let dir = tempfile::tempdir().unwrap();
        write_panel(dir.path(), &p).unwrap();
        let back = read_panel(dir.path()).unwrap();
        assert_eq!(back, p);
        assert!(fs::read_to_string(dir.path().join("cpc.csv")).unwrap().starts_with("keyword,2020-W52,2020-W53,2021-W01"));
    }
}
