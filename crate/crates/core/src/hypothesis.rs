//! Two-sample tests with two-sided p-values.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{mean, Sample};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{normal_sf, student_t_two_sided};

pub const DEFAULT_PERMUTATIONS: usize = 600;
pub const DEFAULT_EXACT_MW_MAX_N: usize = 8;

/// Largest number of labelings for which the exact Mann-Whitney null is
/// tabulated; beyond it the normal approximation is used.
const EXACT_MW_MAX_LABELINGS: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Ttest,
    MannWhitney,
    Permutation,
}

impl TestId {
    pub const ALL: [TestId; 3] = [TestId::Ttest, TestId::MannWhitney, TestId::Permutation];

    pub fn as_str(self) -> &'static str {
        match self {
            TestId::Ttest => "ttest",
            TestId::MannWhitney => "mann_whitney",
            TestId::Permutation => "permutation",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TestId::Ttest => "Student t-test, pooled equal-variance, two-sided",
            TestId::MannWhitney => "Mann-Whitney U, exact for small tie-free samples, else normal approximation with tie and continuity corrections",
            TestId::Permutation => "difference-of-means permutation test, add-one Monte Carlo p-value (exhaustive when cheaper)",
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ttest" | "t_test" | "t" => Ok(TestId::Ttest),
            "mann_whitney" | "mannwhitney" | "mw" => Ok(TestId::MannWhitney),
            "permutation" | "perm" => Ok(TestId::Permutation),
            other => Err(Error::invalid(format!("unknown test '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestSpec {
    pub id: TestId,
    pub n_permutations: usize,
    pub exact_mw_max_n: usize,
}

impl TestSpec {
    pub fn new(id: TestId) -> Self {
        TestSpec {
            id,
            n_permutations: DEFAULT_PERMUTATIONS,
            exact_mw_max_n: DEFAULT_EXACT_MW_MAX_N,
        }
    }

    pub fn ttest() -> Self {
        Self::new(TestId::Ttest)
    }

    pub fn mann_whitney() -> Self {
        Self::new(TestId::MannWhitney)
    }

    pub fn permutation(n_permutations: usize) -> Self {
        TestSpec {
            n_permutations,
            ..Self::new(TestId::Permutation)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_permutations == 0 {
            return Err(Error::invalid("n_permutations must be at least 1"));
        }
        Ok(())
    }

    /// `ttest`, `mann_whitney`, `permutation`, or `permutation:<count>` for a
    /// non-default permutation count.
    pub fn label(&self) -> String {
        match self.id {
            TestId::Permutation if self.n_permutations != DEFAULT_PERMUTATIONS => {
                format!("permutation:{}", self.n_permutations)
            }
            id => id.as_str().to_string(),
        }
    }

    /// Runs the test. Only the permutation test consumes `stream`.
    pub fn run(&self, a: &Sample, b: &Sample, stream: &RngStream) -> Result<TestOutcome> {
        match self.id {
            TestId::Ttest => t_test(a, b),
            TestId::MannWhitney => mann_whitney_with(a, b, self.exact_mw_max_n),
            TestId::Permutation => permutation_test(a, b, stream, self),
        }
    }
}

impl FromStr for TestSpec {
    type Err = Error;

    /// Parses the output of [`TestSpec::label`].
    fn from_str(s: &str) -> Result<Self> {
        let (id, param) = match s.split_once(':') {
            Some((id, param)) => (id, Some(param)),
            None => (s, None),
        };
        let mut spec = TestSpec::new(id.parse()?);
        if let Some(param) = param {
            if spec.id != TestId::Permutation {
                return Err(Error::invalid(format!("test '{}' takes no parameter", spec.id)));
            }
            spec.n_permutations = param
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad permutation count in '{s}'")))?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

fn check_sizes(a: &Sample, b: &Sample) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid(format!(
            "two-sample tests need at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Equal-variance Student t-test.
pub fn t_test(a: &Sample, b: &Sample) -> Result<TestOutcome> {
    check_sizes(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (a.mean(), b.mean());
    let ssa: f64 = a.values().iter().map(|x| (x - ma) * (x - ma)).sum();
    let ssb: f64 = b.values().iter().map(|x| (x - mb) * (x - mb)).sum();
    let df = na + nb - 2.0;
    let pooled = (ssa + ssb) / df;
    if pooled <= 0.0 {
        return Err(Error::DegenerateSample("pooled variance is zero".into()));
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TestOutcome {
        statistic: t,
        p_value: student_t_two_sided(t, df),
    })
}

/// Mann-Whitney U test with the default exact-path cutoff.
pub fn mann_whitney(a: &Sample, b: &Sample) -> Result<TestOutcome> {
    mann_whitney_with(a, b, DEFAULT_EXACT_MW_MAX_N)
}

/// Midranks of the pooled sample `a ++ b`, plus the sum of `t^3 - t` over
/// tie groups.
pub(crate) fn pooled_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    (ranks, tie_term)
}

pub fn mann_whitney_with(a: &Sample, b: &Sample, exact_max_n: usize) -> Result<TestOutcome> {
    check_sizes(a, b)?;
    let (na, nb) = (a.len(), b.len());
    let (ranks, tie_term) = pooled_ranks(a.values(), b.values());
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let mn = (na * nb) as f64;

    let exact_ok = na.min(nb) <= exact_max_n
        && tie_term == 0.0
        && ln_choose(na + nb, na.min(nb)) < EXACT_MW_MAX_LABELINGS.ln();
    let p = if exact_ok {
        let dist = exact_u_cdf(na, nb);
        let lower = u.min(mn - u).round() as usize;
        (2.0 * dist[lower]).min(1.0)
    } else {
        let big_n = (na + nb) as f64;
        let var = mn / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mn / 2.0).abs() - 0.5) / var.sqrt();
            (2.0 * normal_sf(z)).min(1.0)
        }
    };
    Ok(TestOutcome {
        statistic: u,
        p_value: p,
    })
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

type CdfCache = RwLock<HashMap<(usize, usize), Arc<Vec<f64>>>>;

/// `P(U <= u)` for `u = 0..=m*n` under the tie-free null.
fn exact_u_cdf(m: usize, n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<CdfCache> = OnceLock::new();
    let key = (m.min(n), m.max(n));
    let cache = CACHE.get_or_init(Default::default);
    if let Some(d) = cache.read().unwrap().get(&key) {
        return Arc::clone(d);
    }
    let counts = u_null_counts(key.0, key.1);
    let total: i128 = counts.iter().sum();
    let mut acc: i128 = 0;
    let cdf: Vec<f64> = counts
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / total as f64
        })
        .collect();
    let cdf = Arc::new(cdf);
    cache.write().unwrap().insert(key, Arc::clone(&cdf));
    cdf
}

/// Number of labelings giving each value of U: the coefficients of the
/// Gaussian binomial `[m + n choose m]_q`, built as
/// `prod_{i=1..m} (1 - q^(n+i)) / (1 - q^i)`.
pub(crate) fn u_null_counts(m: usize, n: usize) -> Vec<i128> {
    let len = m * n + 1;
    let mut poly = vec![0i128; len + n + m + 1];
    poly[0] = 1;
    for i in 1..=m {
        let shift = n + i;
        for k in (shift..poly.len()).rev() {
            poly[k] -= poly[k - shift];
        }
        for k in i..poly.len() {
            poly[k] += poly[k - i];
        }
    }
    poly.truncate(len);
    poly
}

/// Difference-of-means permutation test.
///
/// When the number of distinct relabelings is at most `spec.n_permutations`,
/// every relabeling is enumerated and the p-value is exact. Otherwise
/// `n_permutations` random relabelings are drawn from `stream` and
/// `p = (1 + #{|T_perm| >= |T_obs|}) / (n_permutations + 1)`.
pub fn permutation_test(a: &Sample, b: &Sample, stream: &RngStream, spec: &TestSpec) -> Result<TestOutcome> {
    check_sizes(a, b)?;
    spec.validate()?;
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
    let total: f64 = pooled.iter().sum();
    let stat = |sum_a: f64| sum_a / na as f64 - (total - sum_a) / nb as f64;
    let observed = mean(a.values()) - mean(b.values());
    let obs_from_sum = stat(a.values().iter().sum());
    let scale = pooled.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let threshold = obs_from_sum.abs() - 1e-10 * scale.max(f64::MIN_POSITIVE);

    let labelings = ln_choose(na + nb, na).exp();
    let p = if labelings <= spec.n_permutations as f64 + 0.5 {
        let mut hits = 0u64;
        let mut count = 0u64;
        for_each_subset_sum(&pooled, na, &mut |s| {
            count += 1;
            if stat(s).abs() >= threshold {
                hits += 1;
            }
        });
        hits as f64 / count as f64
    } else {
        let mut rng = stream.rng();
        let mut work = pooled.clone();
        let big_n = work.len() as u32;
        let mut hits = 0u64;
        for _ in 0..spec.n_permutations {
            let mut s = 0.0;
            for i in 0..na {
                let j = rng.random_range(i as u32..big_n) as usize;
                work.swap(i, j);
                s += work[i];
            }
            if stat(s).abs() >= threshold {
                hits += 1;
            }
        }
        (1 + hits) as f64 / (spec.n_permutations + 1) as f64
    };
    Ok(TestOutcome {
        statistic: observed,
        p_value: p,
    })
}

/// Calls `f` with the sum of every size-`k` subset of `xs`.
fn for_each_subset_sum(xs: &[f64], k: usize, f: &mut impl FnMut(f64)) {
    fn rec(xs: &[f64], start: usize, left: usize, acc: f64, f: &mut impl FnMut(f64)) {
        if left == 0 {
            f(acc);
            return;
        }
        for i in start..=xs.len() - left {
            rec(xs, i + 1, left - 1, acc + xs[i], f);
        }
    }
    rec(xs, 0, k, 0.0, f);
}
