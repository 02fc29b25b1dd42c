use std::fmt;

use serde::{Deserialize, Serialize};

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Before,
    After,
    Baseline,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Before => "before",
            Phase::After => "after",
            Phase::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A binomial proportion with its Wilson score 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub hits: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
}

impl RateEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        assert!(hits <= trials, "hits ({hits}) exceed trials ({trials})");
        if trials == 0 {
            return RateEstimate {
                hits,
                trials,
                rate: 0.0,
                ci95: (0.0, 1.0),
            };
        }
        let t = trials as f64;
        let p = hits as f64 / t;
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / t;
        let centre = (p + z2 / (2.0 * t)) / denom;
        let half = Z95 * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
        RateEstimate {
            hits,
            trials,
            rate: p,
            ci95: ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p)),
        }
    }

    /// True when the two 95% intervals do not overlap and `self` is higher.
    pub fn clearly_above(&self, other: &RateEstimate) -> bool {
        self.ci95.0 > other.ci95.1
    }
}

/// Mean of absolute errors with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean_abs_error: f64,
    pub ci95: (f64, f64),
    pub phase: Phase,
    pub count: u64,
}

impl ErrorSummary {
    pub fn from_values(values: &[f64], phase: Phase) -> Self {
        let k = values.len();
        if k == 0 {
            return ErrorSummary {
                mean_abs_error: 0.0,
                ci95: (0.0, 0.0),
                phase,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let half = if k > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k as f64 - 1.0);
            Z95 * (var / k as f64).sqrt()
        } else {
            0.0
        };
        ErrorSummary {
            mean_abs_error: mean,
            ci95: (mean - half, mean + half),
            phase,
            count: k as u64,
        }
    }

    pub fn clearly_above(&self, other: &ErrorSummary) -> bool {
        self.ci95.0 > other.ci95.1
    }
}
