//! Univariate outlier detection and correction.
//!
//! Removal methods (`Sigma2`, `Sigma3`, `Iqr`, `Mad`, `Grubbs`) drop flagged
//! points; accommodation methods (`AccommodationSigma2`, `Winsorize`) keep the
//! sample length and pull flagged points back to a bound.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::distributions::{mean, median_sorted, quantile_sorted, sort_f64, variance, Sample};
use crate::error::{Error, Result};
use crate::special::student_t_upper_quantile;

pub use crate::distributions::StdDivisor;

/// Scale factor turning a raw MAD into a consistent estimate of the normal
/// standard deviation, `1 / Phi^-1(3/4)`.
pub const MAD_SCALE: f64 = 1.482_602_218_505_602;

pub const DEFAULT_MAD_THRESHOLD: f64 = 2.24;
pub const DEFAULT_WINSORIZE_LIMIT: f64 = 0.05;
pub const DEFAULT_GRUBBS_ALPHA: f64 = 0.05;
pub const IQR_FENCE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Sigma2,
    Sigma3,
    AccommodationSigma2,
    Iqr,
    Mad,
    Grubbs,
    Winsorize,
}

impl MethodId {
    pub const ALL: [MethodId; 7] = [
        MethodId::Sigma2,
        MethodId::Sigma3,
        MethodId::AccommodationSigma2,
        MethodId::Iqr,
        MethodId::Mad,
        MethodId::Grubbs,
        MethodId::Winsorize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Sigma2 => "sigma2",
            MethodId::Sigma3 => "sigma3",
            MethodId::AccommodationSigma2 => "acc_sigma2",
            MethodId::Iqr => "iqr",
            MethodId::Mad => "mad",
            MethodId::Grubbs => "grubbs",
            MethodId::Winsorize => "winsorize",
        }
    }

    pub fn is_accommodation(self) -> bool {
        matches!(self, MethodId::AccommodationSigma2 | MethodId::Winsorize)
    }

    pub fn min_len(self) -> usize {
        match self {
            MethodId::Grubbs => 3,
            _ => 2,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            MethodId::Sigma2 => "remove points beyond mean +/- 2 SD",
            MethodId::Sigma3 => "remove points beyond mean +/- 3 SD",
            MethodId::AccommodationSigma2 => "clamp points beyond mean +/- 2 SD to the bound",
            MethodId::Iqr => "remove points outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]",
            MethodId::Mad => "remove points whose robust z-score |x - median| / MAD* exceeds the threshold",
            MethodId::Grubbs => "iterative two-sided Grubbs test, removing one extreme point per rejection",
            MethodId::Winsorize => "replace the k = floor(limit * n) extreme values per tail with the nearest kept order statistic",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s.trim().to_ascii_lowercase().as_str() {
            "sigma2" | "sigma_2" => MethodId::Sigma2,
            "sigma3" | "sigma_3" => MethodId::Sigma3,
            "acc_sigma2" | "accommodation_sigma2" | "accommodation_sigma_2" => MethodId::AccommodationSigma2,
            "iqr" => MethodId::Iqr,
            "mad" => MethodId::Mad,
            "grubbs" => MethodId::Grubbs,
            "winsorize" | "winsorizing" => MethodId::Winsorize,
            other => return Err(Error::invalid(format!("unknown method '{other}'"))),
        };
        Ok(id)
    }
}

/// A method plus its tuning parameters. Parameters that do not apply to
/// `id` are carried but ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub id: MethodId,
    pub mad_threshold: f64,
    pub winsorize_limit: f64,
    pub grubbs_alpha: f64,
    pub std_divisor: StdDivisor,
}

impl MethodSpec {
    pub fn new(id: MethodId) -> Self {
        MethodSpec {
            id,
            mad_threshold: DEFAULT_MAD_THRESHOLD,
            winsorize_limit: DEFAULT_WINSORIZE_LIMIT,
            grubbs_alpha: DEFAULT_GRUBBS_ALPHA,
            std_divisor: StdDivisor::NMinusOne,
        }
    }

    pub fn mad(threshold: f64) -> Self {
        MethodSpec {
            mad_threshold: threshold,
            ..Self::new(MethodId::Mad)
        }
    }

    pub fn winsorize(limit: f64) -> Self {
        MethodSpec {
            winsorize_limit: limit,
            ..Self::new(MethodId::Winsorize)
        }
    }

    pub fn grubbs(alpha: f64) -> Self {
        MethodSpec {
            grubbs_alpha: alpha,
            ..Self::new(MethodId::Grubbs)
        }
    }

    pub fn with_std_divisor(self, std_divisor: StdDivisor) -> Self {
        MethodSpec { std_divisor, ..self }
    }

    /// The seven methods with default parameters.
    pub fn all_defaults() -> Vec<MethodSpec> {
        MethodId::ALL.iter().map(|&id| MethodSpec::new(id)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mad_threshold > 0.0 && self.mad_threshold.is_finite()) {
            return Err(Error::invalid(format!("mad_threshold must be > 0, got {}", self.mad_threshold)));
        }
        if !(0.0..0.5).contains(&self.winsorize_limit) {
            return Err(Error::invalid(format!(
                "winsorize_limit must be in [0, 0.5), got {}",
                self.winsorize_limit
            )));
        }
        if !(self.grubbs_alpha > 0.0 && self.grubbs_alpha < 1.0) {
            return Err(Error::invalid(format!("grubbs_alpha must be in (0, 1), got {}", self.grubbs_alpha)));
        }
        Ok(())
    }

    /// Stable identifier: the method id, suffixed with the active parameter
    /// when it differs from the default (`mad:3`, `winsorize:0.1`, ...).
    /// False when no sample of `n` values can contain a flagged point: the
    /// largest attainable |z| is `(n - 1) / sqrt(n)` (or `sqrt(n - 1)` with
    /// the `n` divisor), winsorizing clips nothing when `floor(limit * n) = 0`,
    /// and Tukey fences cannot be crossed with fewer than four values.
    pub fn can_flag(&self, n: usize) -> bool {
        if n < self.id.min_len().max(2) {
            return false;
        }
        let nf = n as f64;
        let max_z = match self.std_divisor {
            StdDivisor::NMinusOne => (nf - 1.0) / nf.sqrt(),
            StdDivisor::N => (nf - 1.0).sqrt(),
        };
        match self.id {
            MethodId::Sigma2 | MethodId::AccommodationSigma2 => max_z > 2.0,
            MethodId::Sigma3 => max_z > 3.0,
            MethodId::Winsorize => winsorize_count(self.winsorize_limit, n) > 0,
            MethodId::Iqr => n >= 4,
            MethodId::Mad | MethodId::Grubbs => true,
        }
    }

    pub fn label(&self) -> String {
        let mut label = match self.id {
            MethodId::Mad if self.mad_threshold != DEFAULT_MAD_THRESHOLD => {
                format!("mad:{}", self.mad_threshold)
            }
            MethodId::Winsorize if self.winsorize_limit != DEFAULT_WINSORIZE_LIMIT => {
                format!("winsorize:{}", self.winsorize_limit)
            }
            MethodId::Grubbs if self.grubbs_alpha != DEFAULT_GRUBBS_ALPHA => {
                format!("grubbs:{}", self.grubbs_alpha)
            }
            id => id.as_str().to_string(),
        };
        let uses_sd = matches!(
            self.id,
            MethodId::Sigma2 | MethodId::Sigma3 | MethodId::AccommodationSigma2
        );
        if uses_sd && self.std_divisor == StdDivisor::N {
            label.push_str(":n");
        }
        label
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// Parses the output of [`MethodSpec::label`].
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let id: MethodId = parts.next().unwrap_or_default().parse()?;
        let mut spec = MethodSpec::new(id);
        if let Some(param) = parts.next() {
            if param == "n" {
                spec.std_divisor = StdDivisor::N;
            } else {
                let value: f64 = param
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad parameter '{param}' in method '{s}'")))?;
                match id {
                    MethodId::Mad => spec.mad_threshold = value,
                    MethodId::Winsorize => spec.winsorize_limit = value,
                    MethodId::Grubbs => spec.grubbs_alpha = value,
                    _ => return Err(Error::invalid(format!("method '{id}' takes no numeric parameter"))),
                }
            }
        }
        if parts.next().is_some() {
            return Err(Error::invalid(format!("too many ':' parameters in method '{s}'")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionOutcome {
    /// Indices into the input sample, ascending.
    pub flagged: Vec<usize>,
    pub corrected: Sample,
    pub n_removed: usize,
    pub n_modified: usize,
}

impl CorrectionOutcome {
    pub fn any_flagged(&self) -> bool {
        !self.flagged.is_empty()
    }
}

/// Applies `method` to `sample`; the input is left untouched.
pub fn detect_and_correct(sample: &Sample, method: &MethodSpec) -> Result<CorrectionOutcome> {
    method.validate()?;
    let xs = sample.values();
    if xs.len() < method.id.min_len() {
        return Err(Error::invalid(format!(
            "{} needs at least {} values, got {}",
            method.id,
            method.id.min_len(),
            xs.len()
        )));
    }
    let outcome = match method.id {
        MethodId::Sigma2 => remove_flagged(xs, sigma_flags(xs, 2.0, method.std_divisor)),
        MethodId::Sigma3 => remove_flagged(xs, sigma_flags(xs, 3.0, method.std_divisor)),
        MethodId::AccommodationSigma2 => accommodate_sigma(xs, 2.0, method.std_divisor),
        MethodId::Iqr => remove_flagged(xs, iqr_flags(xs)),
        MethodId::Mad => remove_flagged(xs, mad_flags(xs, method.mad_threshold)),
        MethodId::Grubbs => remove_flagged(xs, grubbs_flags(xs, method.grubbs_alpha)),
        MethodId::Winsorize => winsorize(xs, method.winsorize_limit),
    };
    Ok(outcome)
}

fn remove_flagged(xs: &[f64], flagged: Vec<usize>) -> CorrectionOutcome {
    let corrected = if flagged.is_empty() {
        xs.to_vec()
    } else {
        let mut drop = vec![false; xs.len()];
        for &i in &flagged {
            drop[i] = true;
        }
        xs.iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(&x, _)| x)
            .collect()
    };
    CorrectionOutcome {
        n_removed: flagged.len(),
        n_modified: 0,
        flagged,
        corrected: Sample::from_vec_unchecked(corrected),
    }
}

fn sigma_flags(xs: &[f64], k: f64, divisor: StdDivisor) -> Vec<usize> {
    let m = mean(xs);
    let bound = k * variance(xs, divisor).sqrt();
    (0..xs.len()).filter(|&i| (xs[i] - m).abs() > bound).collect()
}

fn accommodate_sigma(xs: &[f64], k: f64, divisor: StdDivisor) -> CorrectionOutcome {
    let m = mean(xs);
    let bound = k * variance(xs, divisor).sqrt();
    let mut flagged = Vec::new();
    let corrected: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let dev = x - m;
            if dev.abs() > bound {
                flagged.push(i);
                if dev > 0.0 {
                    m + bound
                } else {
                    m - bound
                }
            } else {
                x
            }
        })
        .collect();
    CorrectionOutcome {
        n_removed: 0,
        n_modified: flagged.len(),
        flagged,
        corrected: Sample::from_vec_unchecked(corrected),
    }
}

fn iqr_flags(xs: &[f64]) -> Vec<usize> {
    let mut sorted = xs.to_vec();
    sort_f64(&mut sorted);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let spread = IQR_FENCE * (q3 - q1);
    let (lo, hi) = (q1 - spread, q3 + spread);
    (0..xs.len()).filter(|&i| xs[i] < lo || xs[i] > hi).collect()
}

/// Robust z-scores `|x - median| / (MAD_SCALE * MAD)`; infinite for points
/// off the median when the MAD is zero.
pub fn robust_z_scores(xs: &[f64]) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sort_f64(&mut sorted);
    let med = median_sorted(&sorted);
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - med).abs()).collect();
    sort_f64(&mut dev);
    let scale = MAD_SCALE * median_sorted(&dev);
    xs.iter()
        .map(|x| {
            let d = (x - med).abs();
            if d == 0.0 {
                0.0
            } else if scale == 0.0 {
                f64::INFINITY
            } else {
                d / scale
            }
        })
        .collect()
}

fn mad_flags(xs: &[f64], threshold: f64) -> Vec<usize> {
    robust_z_scores(xs)
        .into_iter()
        .enumerate()
        .filter(|(_, z)| *z > threshold)
        .map(|(i, _)| i)
        .collect()
}

fn grubbs_flags(xs: &[f64], alpha: f64) -> Vec<usize> {
    let mut vals = xs.to_vec();
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    let mut flagged = Vec::new();
    while vals.len() >= 3 {
        let m = mean(&vals);
        let s = variance(&vals, StdDivisor::NMinusOne).sqrt();
        if s == 0.0 {
            break;
        }
        let (j, dev) = vals
            .iter()
            .map(|v| (v - m).abs())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best });
        if dev / s > cached_grubbs_critical(vals.len(), alpha) {
            flagged.push(idx.remove(j));
            vals.remove(j);
        } else {
            break;
        }
    }
    flagged.sort_unstable();
    flagged
}

fn winsorize_count(limit: f64, n: usize) -> usize {
    (limit * n as f64).floor() as usize
}

fn winsorize(xs: &[f64], limit: f64) -> CorrectionOutcome {
    let n = xs.len();
    let k = winsorize_count(limit, n);
    if k == 0 {
        return CorrectionOutcome {
            flagged: Vec::new(),
            corrected: Sample::from_vec_unchecked(xs.to_vec()),
            n_removed: 0,
            n_modified: 0,
        };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let low = xs[order[k]];
    let high = xs[order[n - k - 1]];
    let mut corrected = xs.to_vec();
    for &i in &order[..k] {
        corrected[i] = low;
    }
    for &i in &order[n - k..] {
        corrected[i] = high;
    }
    let flagged: Vec<usize> = (0..n).filter(|&i| corrected[i] != xs[i]).collect();
    CorrectionOutcome {
        n_removed: 0,
        n_modified: flagged.len(),
        flagged,
        corrected: Sample::from_vec_unchecked(corrected),
    }
}

/// Two-sided Grubbs critical value
/// `G = (n-1)/sqrt(n) * sqrt(t^2 / (n - 2 + t^2))`, `t` the upper
/// `alpha / (2n)` quantile of Student's t with `n - 2` degrees of freedom.
pub fn grubbs_critical(n: usize, alpha: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid(format!("Grubbs critical value needs n >= 3, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    Ok(cached_grubbs_critical(n, alpha))
}

fn compute_grubbs_critical(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let df = nf - 2.0;
    let t = student_t_upper_quantile(alpha / (2.0 * nf), df);
    let t2 = t * t;
    (nf - 1.0) / nf.sqrt() * (t2 / (df + t2)).sqrt()
}

fn cached_grubbs_critical(n: usize, alpha: f64) -> f64 {
    static CACHE: OnceLock<RwLock<HashMap<(u64, usize), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (alpha.to_bits(), n);
    if let Some(&g) = cache.read().unwrap().get(&key) {
        return g;
    }
    let g = compute_grubbs_critical(n, alpha);
    cache.write().unwrap().insert(key, g);
    g
}
