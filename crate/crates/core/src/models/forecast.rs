use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{IsoWeek, WeeklyPanel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastEntry {
    pub keyword: usize,
    pub origin: usize,
    pub horizon: usize,
    pub prediction: f64,
}

impl ForecastEntry {
    /// Entry with the prediction clamped at zero.
    pub fn new(keyword: usize, origin: usize, horizon: usize, raw: f64) -> Self {
        Self {
            keyword,
            origin,
            horizon,
            prediction: raw.max(0.0),
        }
    }

    pub fn target_week(&self) -> usize {
        self.origin + self.horizon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub model_id: String,
    pub config_hash: String,
    pub entries: Vec<ForecastEntry>,
}

const HEADER: &str = "model,config_hash,keyword_id,keyword,origin,origin_week,horizon,prediction";

impl ForecastSet {
    pub fn new(model_id: String, config_hash: String, entries: Vec<ForecastEntry>) -> Self {
        Self {
            model_id,
            config_hash,
            entries,
        }
    }

    pub fn horizons(&self) -> Vec<usize> {
        let mut h: Vec<usize> = self.entries.iter().map(|e| e.horizon).collect();
        h.sort_unstable();
        h.dedup();
        h
    }

    pub fn write_csv<W: Write>(&self, mut sink: W, panel: &WeeklyPanel) -> std::io::Result<()> {
        writeln!(sink, "{HEADER}")?;
        for e in &self.entries {
            writeln!(
                sink,
                "{},{},{},{},{},{},{},{}",
                self.model_id,
                self.config_hash,
                e.keyword,
                panel.keywords[e.keyword],
                e.origin,
                panel.weeks[e.origin],
                e.horizon,
                e.prediction
            )?;
        }
        Ok(())
    }

    /// Read a forecast CSV, checking keyword names and origin weeks against
    /// `panel`.
    pub fn read_csv<R: BufRead>(source: R, panel: &WeeklyPanel) -> Result<Self> {
        let mut set = ForecastSet::new(String::new(), String::new(), Vec::new());
        for (i, line) in source.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<forecasts>", e))?;
            if i == 0 {
                if line.trim() != HEADER {
                    return Err(Error::Parse(format!("unexpected forecast header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("forecast line {}: {what}", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let keyword: usize = f[2].parse().map_err(|_| bad("keyword_id"))?;
            let origin: usize = f[4].parse().map_err(|_| bad("origin"))?;
            let week: IsoWeek = f[5].parse().map_err(|_| bad("origin_week"))?;
            let horizon: usize = f[6].parse().map_err(|_| bad("horizon"))?;
            let prediction: f64 = f[7].parse().map_err(|_| bad("prediction"))?;
            if panel.keywords.get(keyword).map(String::as_str) != Some(f[3]) || panel.weeks.get(origin) != Some(&week) {
                return Err(Error::Shape(format!(
                    "forecast line {} does not align with the panel ({} at {})",
                    i + 1,
                    f[3],
                    week
                )));
            }
            if !prediction.is_finite() || prediction < 0.0 {
                return Err(bad("prediction must be finite and non-negative"));
            }
            set.model_id = f[0].to_string();
            set.config_hash = f[1].to_string();
            set.entries.push(ForecastEntry {
                keyword,
                origin,
                horizon,
                prediction,
            });
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_contract() {
        assert_eq!(ForecastEntry::new(0, 0, 1, -0.3).prediction, 0.0);
        assert_eq!(ForecastEntry::new(0, 0, 1, 0.7).prediction, 0.7);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cpc = vec![vec![1.0; 5], vec![2.0; 5]];
        let clicks = vec![vec![1; 5]; 2];
        let p = WeeklyPanel::from_series(
            vec!["a b".into(), "c".into()],
            IsoWeek::new(2020, 52).unwrap(),
            &cpc,
            &clicks,
        )
        .unwrap();
        let set = ForecastSet::new(
            "ridge".into(),
            "abc".into(),
            vec![ForecastEntry::new(1, 3, 1, 0.1 + 0.2), ForecastEntry::new(0, 2, 2, 1.0 / 3.0)],
        );
        let mut buf = Vec::new();
        set.write_csv(&mut buf, &p).unwrap();
        assert_eq!(ForecastSet::read_csv(&buf[..], &p).unwrap(), set);
        let tampered = String::from_utf8(buf).unwrap().replace(",c,", ",zz,");
        assert!(matches!(ForecastSet::read_csv(tampered.as_bytes(), &p), Err(Error::Shape(_))));
    }
}
