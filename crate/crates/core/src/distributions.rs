//! Source populations and the [`Sample`] container.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationKind {
    Normal,
    LogNormal,
    UniformInterval,
}

impl PopulationKind {
    pub fn label(self) -> &'static str {
        match self {
            PopulationKind::Normal => "normal",
            PopulationKind::LogNormal => "lognormal",
            PopulationKind::UniformInterval => "uniform",
        }
    }
}

/// A sampling distribution.
///
/// Log-normal populations are parameterised by the location and scale of the
/// underlying normal; [`PopulationSpec::true_params`] converts to the mean and
/// standard deviation of the observations themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub kind: PopulationKind,
    pub mu: f64,
    pub sigma: f64,
    #[serde(default)]
    pub lo: f64,
    #[serde(default)]
    pub hi: f64,
}

impl PopulationSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new_gaussian(PopulationKind::Normal, mu, sigma)
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new_gaussian(PopulationKind::LogNormal, mu, sigma)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("uniform interval needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(PopulationSpec {
            kind: PopulationKind::UniformInterval,
            mu: 0.0,
            sigma: 1.0,
            lo,
            hi,
        })
    }

    /// Standard member of a family: `mu = 0`, `sigma = 1`.
    pub fn standard(kind: PopulationKind) -> Self {
        match kind {
            PopulationKind::UniformInterval => Self::uniform(0.0, 1.0).unwrap(),
            _ => Self::new_gaussian(kind, 0.0, 1.0).unwrap(),
        }
    }

    /// Same family and scale, with the (underlying) location moved to `mu`.
    pub fn with_mu(&self, mu: f64) -> Self {
        PopulationSpec { mu, ..*self }
    }

    fn new_gaussian(kind: PopulationKind, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::invalid(format!("need finite mu and sigma > 0, got mu={mu}, sigma={sigma}")));
        }
        Ok(PopulationSpec {
            kind,
            mu,
            sigma,
            lo: 0.0,
            hi: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PopulationKind::UniformInterval => Self::uniform(self.lo, self.hi).map(|_| ()),
            kind => Self::new_gaussian(kind, self.mu, self.sigma).map(|_| ()),
        }
    }

    /// Observation-space `(mean, std)`.
    pub fn true_params(&self) -> (f64, f64) {
        match self.kind {
            PopulationKind::Normal => (self.mu, self.sigma),
            PopulationKind::LogNormal => {
                let s2 = self.sigma * self.sigma;
                let mean = (self.mu + 0.5 * s2).exp();
                let var = s2.exp_m1() * (2.0 * self.mu + s2).exp();
                (mean, var.sqrt())
            }
            PopulationKind::UniformInterval => {
                let width = self.hi - self.lo;
                (0.5 * (self.lo + self.hi), width / 12f64.sqrt())
            }
        }
    }

    pub fn true_mean(&self) -> f64 {
        self.true_params().0
    }

    pub fn true_std(&self) -> f64 {
        self.true_params().1
    }

    #[inline]
    pub(crate) fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            PopulationKind::Normal => {
                let z: f64 = StandardNormal.sample(rng);
                self.mu + self.sigma * z
            }
            PopulationKind::LogNormal => {
                let z: f64 = StandardNormal.sample(rng);
                (self.mu + self.sigma * z).exp()
            }
            PopulationKind::UniformInterval => rng.random_range(self.lo..=self.hi),
        }
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>, n: usize) {
        out.clear();
        out.extend((0..n).map(|_| self.draw_one(rng)));
    }
}

/// `n` i.i.d. draws from `spec`, fully determined by `stream`.
pub fn draw_sample(spec: &PopulationSpec, n: usize, stream: &RngStream) -> Result<Sample> {
    if n < 2 {
        return Err(Error::invalid(format!("sample size must be at least 2, got {n}")));
    }
    spec.validate()?;
    let mut rng = stream.rng();
    let mut values = Vec::with_capacity(n);
    spec.fill(&mut rng, &mut values, n);
    Ok(Sample { values })
}

/// Observation-space `(mean, std)` of a population.
pub fn true_params(spec: &PopulationSpec) -> (f64, f64) {
    spec.true_params()
}

/// Variance divisor convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdDivisor {
    /// Population convention, divide by `n`.
    N,
    /// Sample convention, divide by `n - 1`.
    #[default]
    NMinusOne,
}

/// An ordered collection of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Wraps `values`; requires at least two finite observations.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!("a sample needs at least 2 values, got {}", values.len())));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation {bad}")));
        }
        Ok(Sample { values })
    }

    /// Corrections may shrink a sample below two points; such samples are
    /// still representable, and the tests reject them.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Sample { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn variance(&self, divisor: StdDivisor) -> f64 {
        variance(&self.values, divisor)
    }

    pub fn std(&self, divisor: StdDivisor) -> f64 {
        self.variance(divisor).sqrt()
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.values.clone();
        sort_f64(&mut sorted);
        median_sorted(&sorted)
    }

    /// Type-7 (linear interpolation) quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut sorted = self.values.clone();
        sort_f64(&mut sorted);
        quantile_sorted(&sorted, p)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn variance(xs: &[f64], divisor: StdDivisor) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    match divisor {
        StdDivisor::N => ss / n as f64,
        StdDivisor::NMinusOne => ss / (n as f64 - 1.0),
    }
}

pub(crate) fn sort_f64(xs: &mut [f64]) {
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.5)
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
