use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::frontier::{FrontierSegmentation, Quadrant};
use super::metrics::{rmse, smape, Aggregate};
use super::SplitSpec;
use crate::error::{Error, Result};
use crate::models::ForecastSet;
use crate::panel::WeeklyPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordScore {
    pub keyword: usize,
    pub name: String,
    pub quadrant: Option<Quadrant>,
    pub n_pairs: usize,
    pub smape: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantAggregate {
    pub quadrant: Quadrant,
    pub smape: Aggregate,
    pub rmse: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub model: String,
    pub horizon: usize,
    /// Keywords with at least one scored pair, in keyword order.
    pub keywords: Vec<KeywordScore>,
    pub smape: Aggregate,
    pub rmse: Aggregate,
    pub quadrants: Vec<QuadrantAggregate>,
    pub scored_pairs: usize,
    /// Keywords with no scored pair at this horizon.
    pub excluded: Vec<usize>,
}

impl HorizonReport {
    pub fn quadrant(&self, q: Quadrant) -> Option<&QuadrantAggregate> {
        self.quadrants.iter().find(|a| a.quadrant == q)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub horizons: Vec<HorizonReport>,
}

/// Score `forecasts` on the test range: per keyword over its scored pairs
/// (test origins whose target is a non-imputed test week), then mean and
/// sample std across keywords, overall and per frontier quadrant.
pub fn evaluate(
    forecasts: &ForecastSet,
    panel: &WeeklyPanel,
    split: &SplitSpec,
    segmentation: Option<&FrontierSegmentation>,
) -> Result<EvalReport> {
    let n = panel.n_keywords();
    if split.test.end != panel.n_weeks() {
        return Err(Error::Shape(format!(
            "split covers {} weeks, panel has {}",
            split.test.end,
            panel.n_weeks()
        )));
    }
    if let Some(seg) = segmentation {
        if seg.quadrants.len() != n {
            return Err(Error::Shape("segmentation does not match the panel keywords".into()));
        }
    }
    let mut lookup: HashMap<(usize, usize, usize), f64> = HashMap::with_capacity(forecasts.entries.len());
    for e in &forecasts.entries {
        if e.keyword >= n || e.origin + e.horizon >= panel.n_weeks() {
            return Err(Error::Shape(format!(
                "forecast for keyword {} at origin {} horizon {} falls outside the panel",
                e.keyword, e.origin, e.horizon
            )));
        }
        if lookup.insert((e.keyword, e.origin, e.horizon), e.prediction).is_some() {
            return Err(Error::Shape(format!(
                "duplicate forecast for keyword {} at origin {} horizon {}",
                e.keyword, e.origin, e.horizon
            )));
        }
    }
    let mut out = EvalReport::default();
    for h in forecasts.horizons() {
        let origins = split.test_origins(h);
        let mut keywords = Vec::new();
        let mut excluded = Vec::new();
        let mut scored_pairs = 0;
        for k in 0..n {
            let mut actual = Vec::new();
            let mut pred = Vec::new();
            for &t in &origins {
                let p = *lookup.get(&(k, t, h)).ok_or_else(|| {
                    Error::Shape(format!(
                        "no forecast for keyword {:?} at test origin {} horizon {h}",
                        panel.keywords[k], panel.weeks[t]
                    ))
                })?;
                if let Some(a) = panel.target(k, t + h) {
                    actual.push(a);
                    pred.push(p);
                }
            }
            if actual.is_empty() {
                excluded.push(k);
                continue;
            }
            scored_pairs += actual.len();
            keywords.push(KeywordScore {
                keyword: k,
                name: panel.keywords[k].clone(),
                quadrant: segmentation.and_then(|s| s.quadrants[k]),
                n_pairs: actual.len(),
                smape: smape(&actual, &pred)?,
                rmse: rmse(&actual, &pred)?,
            });
        }
        let agg = |f: &dyn Fn(&KeywordScore) -> bool| {
            let sel: Vec<&KeywordScore> = keywords.iter().filter(|s| f(s)).collect();
            (
                Aggregate::of(&sel.iter().map(|s| s.smape).collect::<Vec<_>>()),
                Aggregate::of(&sel.iter().map(|s| s.rmse).collect::<Vec<_>>()),
            )
        };
        let (smape_all, rmse_all) = agg(&|_| true);
        let quadrants = if segmentation.is_some() {
            Quadrant::ALL
                .iter()
                .map(|&q| {
                    let (s, r) = agg(&|x| x.quadrant == Some(q));
                    QuadrantAggregate {
                        quadrant: q,
                        smape: s,
                        rmse: r,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        out.horizons.push(HorizonReport {
            model: forecasts.model_id.clone(),
            horizon: h,
            keywords,
            smape: smape_all,
            rmse: rmse_all,
            quadrants,
            scored_pairs,
            excluded,
        });
    }
    Ok(out)
}

impl EvalReport {
    pub fn merge(&mut self, other: EvalReport) {
        self.horizons.extend(other.horizons);
    }

    pub fn get(&self, model: &str, horizon: usize) -> Option<&HorizonReport> {
        self.horizons.iter().find(|r| r.model == model && r.horizon == horizon)
    }

    /// One row per (model, horizon, keyword).
    pub fn write_keyword_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,horizon,keyword_id,keyword,quadrant,n_pairs,smape,rmse")?;
        for r in &self.horizons {
            for s in &r.keywords {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    r.model,
                    r.horizon,
                    s.keyword,
                    s.name,
                    s.quadrant.map_or("none", Quadrant::label),
                    s.n_pairs,
                    s.smape,
                    s.rmse
                )?;
            }
        }
        Ok(())
    }

    /// Mean, sample std and keyword count per (model, horizon, metric,
    /// quadrant); quadrant `all` is the whole panel.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,horizon,metric,quadrant,mean,std,n")?;
        for r in &self.horizons {
            let mut rows = vec![("all", r.smape, r.rmse)];
            rows.extend(r.quadrants.iter().map(|q| (q.quadrant.label(), q.smape, q.rmse)));
            for (metric, pick) in [("smape", 0), ("rmse", 1)] {
                for (q, s, e) in &rows {
                    let a = if pick == 0 { s } else { e };
                    writeln!(w, "{},{},{metric},{q},{},{},{}", r.model, r.horizon, a.mean, a.std, a.n)?;
                }
            }
        }
        Ok(())
    }

    /// Long format for charting: one metric value per row.
    pub fn write_long_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,horizon,keyword,quadrant,metric,value")?;
        for r in &self.horizons {
            for s in &r.keywords {
                let q = s.quadrant.map_or("none", Quadrant::label);
                writeln!(w, "{},{},{},{q},smape,{}", r.model, r.horizon, s.name, s.smape)?;
                writeln!(w, "{},{},{},{q},rmse,{}", r.model, r.horizon, s.name, s.rmse)?;
            }
        }
        Ok(())
    }

    /// Compact human-readable table of overall scores.
    pub fn table(&self) -> String {
        let mut s = format!("{:<24} {:>3} {:>16} {:>16}\n", "model", "h", "sMAPE", "RMSE");
        for r in &self.horizons {
            s.push_str(&format!(
                "{:<24} {:>3} {:>8.3} ± {:<6.3} {:>8.4} ± {:<6.4}\n",
                r.model, r.horizon, r.smape.mean, r.smape.std, r.rmse.mean, r.rmse.std
            ));
        }
        s
    }
}
