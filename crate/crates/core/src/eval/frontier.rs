use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::PanelStats;

/// Value (mean CPC) then volatility (CV) side of the median splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    #[serde(rename = "low/low")]
    LowLow,
    #[serde(rename = "low/high")]
    LowHigh,
    #[serde(rename = "high/low")]
    HighLow,
    #[serde(rename = "high/high")]
    HighHigh,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::LowLow, Quadrant::LowHigh, Quadrant::HighLow, Quadrant::HighHigh];

    pub fn of(high_value: bool, high_volatility: bool) -> Self {
        match (high_value, high_volatility) {
            (false, false) => Quadrant::LowLow,
            (false, true) => Quadrant::LowHigh,
            (true, false) => Quadrant::HighLow,
            (true, true) => Quadrant::HighHigh,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quadrant::LowLow => "low/low",
            Quadrant::LowHigh => "low/high",
            Quadrant::HighLow => "high/low",
            Quadrant::HighHigh => "high/high",
        }
    }
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSegmentation {
    pub mean_median: f64,
    pub cv_median: f64,
    /// Per keyword; `None` for keywords without a defined CV.
    pub quadrants: Vec<Option<Quadrant>>,
    pub excluded: Vec<usize>,
}

impl FrontierSegmentation {
    pub fn count(&self, q: Quadrant) -> usize {
        self.quadrants.iter().filter(|x| **x == Some(q)).count()
    }
}

/// Median of a non-empty slice; even lengths average the middle pair.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub const MIN_FRONTIER_KEYWORDS: usize = 4;

/// Median splits on training-range mean CPC and CV; values equal to a
/// median go to the low side.
pub fn frontier_segment(stats: &PanelStats) -> Result<FrontierSegmentation> {
    let defined: Vec<usize> = (0..stats.keywords.len()).filter(|&k| stats.keywords[k].cv_defined).collect();
    if defined.len() < MIN_FRONTIER_KEYWORDS {
        return Err(Error::Data(format!(
            "frontier needs at least {MIN_FRONTIER_KEYWORDS} keywords with defined statistics, got {}",
            defined.len()
        )));
    }
    let means: Vec<f64> = defined.iter().map(|&k| stats.keywords[k].mean).collect();
    let cvs: Vec<f64> = defined.iter().map(|&k| stats.keywords[k].cv).collect();
    let (mm, cm) = (median(&means), median(&cvs));
    let mut quadrants = vec![None; stats.keywords.len()];
    for &k in &defined {
        let s = &stats.keywords[k];
        quadrants[k] = Some(Quadrant::of(s.mean > mm, s.cv > cm));
    }
    let excluded = (0..stats.keywords.len()).filter(|&k| !stats.keywords[k].cv_defined).collect();
    Ok(FrontierSegmentation {
        mean_median: mm,
        cv_median: cm,
        quadrants,
        excluded,
    })
}
