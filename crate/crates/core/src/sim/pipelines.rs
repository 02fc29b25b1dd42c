//! The simulation pipelines.

use rand::Rng;
use serde::Serialize;

use crate::distributions::{PopulationSpec, Sample, StdDivisor};
use crate::error::{Error, Result};
use crate::hypothesis::{TestId, TestSpec};
use crate::methods::{detect_and_correct, CorrectionOutcome, MethodSpec};
use crate::par::map_indices;
use crate::rng::RngStream;

use super::aggregate::{ErrorSummary, Phase, RateEstimate};
use super::config::{ExperimentConfig, ExperimentKind, InjectionSpec};
use super::engine::{scan_all, scan_selected, Draws, Replicate};
use super::SIGNIFICANCE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestRate {
    pub test: TestId,
    pub estimate: RateEstimate,
}

/// Result for one method. Selection-based runs can fail per method (draw
/// budget exhausted) without invalidating the other methods.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun<T> {
    pub method: MethodSpec,
    pub outcome: Result<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationErrors {
    /// `|mean - mu| / sigma`
    pub mean: ErrorSummary,
    /// `|s - sigma| / sigma`, `s` with divisor `n - 1`
    pub std: ErrorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEstimation {
    pub selection: RateEstimate,
    pub before: EstimationErrors,
    pub after: EstimationErrors,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    /// Uncorrected errors over the first `reps` draws, without selection.
    pub baseline: EstimationErrors,
    pub methods: Vec<MethodRun<MethodEstimation>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodErrorRates {
    /// Detection probability: accepted / attempted for selection runs,
    /// flagged / analysed otherwise.
    pub selection: RateEstimate,
    pub before: Vec<TestRate>,
    pub after: Vec<TestRate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRateReport {
    pub baseline: Vec<TestRate>,
    pub methods: Vec<MethodRun<MethodErrorRates>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEffectError {
    pub selection: RateEstimate,
    pub before: ErrorSummary,
    pub after: ErrorSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectErrorReport {
    pub baseline: ErrorSummary,
    pub methods: Vec<MethodRun<MethodEffectError>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PHackReport {
    /// Rejections by the uncorrected comparison alone.
    pub plain: RateEstimate,
    /// Rejections by the uncorrected comparison or any corrected one.
    pub dredged: RateEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationLevel<T> {
    pub count: usize,
    pub report: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub n_sampling: usize,
    pub repetitions: usize,
    pub mean_rate: f64,
    /// Standard deviation of the repeated estimates.
    pub std_rate: f64,
    /// Fraction of estimates inside [4.6%, 5.4%].
    pub within_band: f64,
    pub estimates: Vec<f64>,
}

fn expect_kind(cfg: &ExperimentConfig, kinds: &[ExperimentKind]) -> Result<()> {
    if !kinds.contains(&cfg.experiment) {
        return Err(Error::invalid(format!(
            "configuration is for '{}', expected one of {:?}",
            cfg.experiment,
            kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>()
        )));
    }
    cfg.validate()
}

fn rejects(p: f64) -> bool {
    p < SIGNIFICANCE
}

fn misses(p: f64) -> bool {
    !rejects(p)
}

pub(super) fn p_values(tests: &[TestSpec], a: &Sample, b: &Sample, stream: &RngStream) -> Result<Vec<f64>> {
    tests
        .iter()
        .enumerate()
        .map(|(k, t)| t.run(a, b, &stream.derive("test").derive(k)).map(|o| o.p_value))
        .collect()
}

fn rates(tests: &[TestSpec], hits: &[u64], trials: u64) -> Vec<TestRate> {
    tests
        .iter()
        .zip(hits)
        .map(|(t, &h)| TestRate {
            test: t.id,
            estimate: RateEstimate::from_counts(h, trials),
        })
        .collect()
}

fn add_hits(acc: &mut [u64], flags: &[bool]) {
    for (a, &f) in acc.iter_mut().zip(flags) {
        *a += f as u64;
    }
}

/// Replaces the first `spec.count` values of `sample` with
/// `mean + U(lo_sigma, hi_sigma) * sd` of `population`.
pub fn inject_outliers(
    sample: &Sample,
    spec: &InjectionSpec,
    population: &PopulationSpec,
    stream: &RngStream,
) -> Result<Sample> {
    spec.validate()?;
    if spec.count > sample.len() {
        return Err(Error::invalid(format!(
            "cannot inject {} outliers into a sample of {}",
            spec.count,
            sample.len()
        )));
    }
    let mut values = sample.values().to_vec();
    if spec.count > 0 {
        let (mu, sd) = population.true_params();
        let mut rng = stream.rng();
        for v in values.iter_mut().take(spec.count) {
            *v = mu + rng.random_range(spec.lo_sigma..spec.hi_sigma) * sd;
        }
    }
    Ok(Sample::from_vec_unchecked(values))
}

fn injected(draws: &Draws, rep: Replicate, injection: Option<&InjectionSpec>) -> Result<Replicate> {
    match injection {
        Some(spec) if spec.count > 0 => {
            let a = inject_outliers(&rep.a, spec, draws.first_population(), &rep.stream.derive("inject"))?;
            Ok(Replicate { a, ..rep })
        }
        _ => Ok(rep),
    }
}

fn correct_pair(rep: &Replicate, method: &MethodSpec) -> Result<(CorrectionOutcome, CorrectionOutcome)> {
    Ok((detect_and_correct(&rep.a, method)?, detect_and_correct(&rep.b, method)?))
}

/// Selected (first `reps` flagged replicates) or unselected (first `reps`
/// replicates) collection. `eval` returns `(flagged, value)`, and may return
/// `None` for unflagged replicates when selecting.
fn collect<T, F>(cfg: &ExperimentConfig, method: &MethodSpec, eval: F) -> Result<(RateEstimate, Vec<T>)>
where
    T: Send,
    F: Fn(usize) -> Result<Option<(bool, T)>> + Sync + Send,
{
    if cfg.select_rso && !method.can_flag(cfg.n) {
        // no draw could ever be accepted
        return Err(Error::IncompleteRun {
            accepted: 0,
            requested: cfg.reps as u64,
            attempts: 0,
        });
    }
    if cfg.select_rso {
        let scan = scan_selected(cfg.reps, cfg.max_draws, |i| Ok(eval(i)?.map(|(_, v)| v)))?;
        let selection = RateEstimate::from_counts(scan.retained.len() as u64, scan.attempts);
        Ok((selection, scan.retained))
    } else {
        let scan = scan_all(cfg.reps, |i| {
            eval(i)?.ok_or_else(|| Error::invalid("unselected replicate was dropped"))
        })?;
        let flagged = scan.retained.iter().filter(|(f, _)| *f).count() as u64;
        let values = scan.retained.into_iter().map(|(_, v)| v).collect();
        Ok((RateEstimate::from_counts(flagged, scan.attempts), values))
    }
}

/// Probability that a sample holds at least one flagged point, per method.
pub fn run_rso_probability(cfg: &ExperimentConfig) -> Result<Vec<(MethodSpec, RateEstimate)>> {
    expect_kind(cfg, &[ExperimentKind::RsoProbability])?;
    let draws = Draws::single(cfg.master_seed, cfg.distribution, cfg.n);
    let scan = scan_all(cfg.reps, |i| {
        let (_, s) = draws.sample(i);
        cfg.methods
            .iter()
            .map(|m| detect_and_correct(&s, m).map(|o| o.any_flagged()))
            .collect::<Result<Vec<bool>>>()
    })?;
    let mut hits = vec![0u64; cfg.methods.len()];
    for flags in &scan.retained {
        add_hits(&mut hits, flags);
    }
    Ok(cfg
        .methods
        .iter()
        .zip(hits)
        .map(|(m, h)| (*m, RateEstimate::from_counts(h, scan.attempts)))
        .collect())
}

fn estimation_error(sample: &Sample, mu: f64, sd: f64) -> Result<(f64, f64)> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample(format!("{} values left after correction", sample.len())));
    }
    let mean_err = (sample.mean() - mu).abs() / sd;
    let std_err = (sample.std(StdDivisor::NMinusOne) - sd).abs() / sd;
    Ok((mean_err, std_err))
}

fn summarize_estimation(errs: &[(f64, f64)], phase: Phase) -> EstimationErrors {
    let means: Vec<f64> = errs.iter().map(|e| e.0).collect();
    let stds: Vec<f64> = errs.iter().map(|e| e.1).collect();
    EstimationErrors {
        mean: ErrorSummary::from_values(&means, phase),
        std: ErrorSummary::from_values(&stds, phase),
    }
}

fn estimation(cfg: &ExperimentConfig, draws: &Draws, injection: Option<&InjectionSpec>) -> Result<EstimationReport> {
    let (mu, sd) = draws.first_population().true_params();
    let sample = |i: usize| -> Result<Sample> {
        let (stream, s) = draws.sample(i);
        match injection {
            Some(spec) if spec.count > 0 => {
                inject_outliers(&s, spec, draws.first_population(), &stream.derive("inject"))
            }
            _ => Ok(s),
        }
    };
    let baseline = scan_all(cfg.reps, |i| estimation_error(&sample(i)?, mu, sd))?;
    let baseline = summarize_estimation(&baseline.retained, Phase::Baseline);

    let methods = cfg
        .methods
        .iter()
        .map(|method| {
            let outcome = collect(cfg, method, |i| {
                let s = sample(i)?;
                let out = detect_and_correct(&s, method)?;
                let flagged = out.any_flagged();
                if cfg.select_rso && !flagged {
                    return Ok(None);
                }
                let before = estimation_error(&s, mu, sd)?;
                let after = estimation_error(&out.corrected, mu, sd)?;
                Ok(Some((flagged, (before, after))))
            })
            .map(|(selection, pairs)| {
                let before: Vec<_> = pairs.iter().map(|p| p.0).collect();
                let after: Vec<_> = pairs.iter().map(|p| p.1).collect();
                MethodEstimation {
                    selection,
                    before: summarize_estimation(&before, Phase::Before),
                    after: summarize_estimation(&after, Phase::After),
                }
            });
            MethodRun {
                method: *method,
                outcome,
            }
        })
        .collect();
    Ok(EstimationReport { baseline, methods })
}

/// Error on the population mean and SD before and after correction.
pub fn run_param_estimation(cfg: &ExperimentConfig) -> Result<EstimationReport> {
    expect_kind(cfg, &[ExperimentKind::ParamEstimation])?;
    let draws = Draws::single(cfg.master_seed, cfg.distribution, cfg.n);
    estimation(cfg, &draws, None)
}

fn error_rates(
    cfg: &ExperimentConfig,
    draws: &Draws,
    injection: Option<&InjectionSpec>,
    hit: fn(f64) -> bool,
) -> Result<ErrorRateReport> {
    let tests = &cfg.tests;
    let replicate = |i: usize| injected(draws, draws.pair(i), injection);

    if !cfg.select_rso {
        // one pass: uncorrected once, every method on the same pair
        let scan = scan_all(cfg.reps, |i| {
            let rep = replicate(i)?;
            let before: Vec<bool> = p_values(tests, &rep.a, &rep.b, &rep.stream)?.into_iter().map(hit).collect();
            let per_method = cfg
                .methods
                .iter()
                .map(|m| {
                    let (ca, cb) = correct_pair(&rep, m)?;
                    let flagged = ca.any_flagged() || cb.any_flagged();
                    let after = if flagged {
                        p_values(tests, &ca.corrected, &cb.corrected, &rep.stream)?
                            .into_iter()
                            .map(hit)
                            .collect()
                    } else {
                        before.clone()
                    };
                    Ok((flagged, after))
                })
                .collect::<Result<Vec<(bool, Vec<bool>)>>>()?;
            Ok((before, per_method))
        })?;
        let trials = scan.attempts;
        let mut before_hits = vec![0u64; tests.len()];
        let mut flagged = vec![0u64; cfg.methods.len()];
        let mut after_hits = vec![vec![0u64; tests.len()]; cfg.methods.len()];
        for (before, per_method) in &scan.retained {
            add_hits(&mut before_hits, before);
            for (k, (f, after)) in per_method.iter().enumerate() {
                flagged[k] += *f as u64;
                add_hits(&mut after_hits[k], after);
            }
        }
        let baseline = rates(tests, &before_hits, trials);
        let methods = cfg
            .methods
            .iter()
            .enumerate()
            .map(|(k, m)| MethodRun {
                method: *m,
                outcome: Ok(MethodErrorRates {
                    selection: RateEstimate::from_counts(flagged[k], trials),
                    before: baseline.clone(),
                    after: rates(tests, &after_hits[k], trials),
                }),
            })
            .collect();
        return Ok(ErrorRateReport { baseline, methods });
    }

    let baseline_scan = scan_all(cfg.reps, |i| {
        let rep = replicate(i)?;
        Ok(p_values(tests, &rep.a, &rep.b, &rep.stream)?.into_iter().map(hit).collect::<Vec<bool>>())
    })?;
    let mut baseline_hits = vec![0u64; tests.len()];
    for flags in &baseline_scan.retained {
        add_hits(&mut baseline_hits, flags);
    }
    let baseline = rates(tests, &baseline_hits, baseline_scan.attempts);

    let methods = cfg
        .methods
        .iter()
        .map(|method| {
            let outcome = collect(cfg, method, |i| {
                let rep = replicate(i)?;
                let (ca, cb) = correct_pair(&rep, method)?;
                let flagged = ca.any_flagged() || cb.any_flagged();
                if !flagged {
                    return Ok(None);
                }
                let before: Vec<bool> =
                    p_values(tests, &rep.a, &rep.b, &rep.stream)?.into_iter().map(hit).collect();
                let after: Vec<bool> = p_values(tests, &ca.corrected, &cb.corrected, &rep.stream)?
                    .into_iter()
                    .map(hit)
                    .collect();
                Ok(Some((flagged, (before, after))))
            })
            .map(|(selection, reps)| {
                let mut before_hits = vec![0u64; tests.len()];
                let mut after_hits = vec![0u64; tests.len()];
                for (b, a) in &reps {
                    add_hits(&mut before_hits, b);
                    add_hits(&mut after_hits, a);
                }
                let trials = reps.len() as u64;
                MethodErrorRates {
                    selection,
                    before: rates(tests, &before_hits, trials),
                    after: rates(tests, &after_hits, trials),
                }
            });
            MethodRun {
                method: *method,
                outcome,
            }
        })
        .collect();
    Ok(ErrorRateReport { baseline, methods })
}

/// False positive rate on same-population pairs, before and after correction.
pub fn run_type1(cfg: &ExperimentConfig) -> Result<ErrorRateReport> {
    expect_kind(cfg, &[ExperimentKind::Type1])?;
    let draws = Draws::null_pairs(cfg.master_seed, cfg.distribution, cfg.n);
    error_rates(cfg, &draws, None, rejects)
}

/// False negative rate on shifted pairs, before and after correction.
pub fn run_type2(cfg: &ExperimentConfig) -> Result<ErrorRateReport> {
    expect_kind(cfg, &[ExperimentKind::Type2])?;
    let draws = Draws::shifted_pairs(cfg.master_seed, cfg.distribution, cfg.resolved_mu2()?, cfg.n);
    error_rates(cfg, &draws, None, misses)
}

/// `|(mu1 - mu2) - (xbar1 - xbar2)|`
pub fn effect_estimation_error(mu1: f64, mu2: f64, xbar1: f64, xbar2: f64) -> f64 {
    ((mu1 - mu2) - (xbar1 - xbar2)).abs()
}

/// Error on the mean difference as a percentage of the true difference.
pub fn run_effect_error(cfg: &ExperimentConfig) -> Result<EffectErrorReport> {
    expect_kind(cfg, &[ExperimentKind::EffectError])?;
    let draws = Draws::shifted_pairs(cfg.master_seed, cfg.distribution, cfg.resolved_mu2()?, cfg.n);
    let mu1 = draws.first_population().true_mean();
    let mu2 = draws.second_population().true_mean();
    let effect = (mu1 - mu2).abs();
    let pct = |a: &Sample, b: &Sample| -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::DegenerateSample("empty sample after correction".into()));
        }
        Ok(100.0 * effect_estimation_error(mu1, mu2, a.mean(), b.mean()) / effect)
    };

    let baseline = scan_all(cfg.reps, |i| {
        let rep = draws.pair(i);
        pct(&rep.a, &rep.b)
    })?;
    let baseline = ErrorSummary::from_values(&baseline.retained, Phase::Baseline);

    let methods = cfg
        .methods
        .iter()
        .map(|method| {
            let outcome = collect(cfg, method, |i| {
                let rep = draws.pair(i);
                let (ca, cb) = correct_pair(&rep, method)?;
                let flagged = ca.any_flagged() || cb.any_flagged();
                if cfg.select_rso && !flagged {
                    return Ok(None);
                }
                Ok(Some((flagged, (pct(&rep.a, &rep.b)?, pct(&ca.corrected, &cb.corrected)?))))
            })
            .map(|(selection, errs)| {
                let before: Vec<f64> = errs.iter().map(|e| e.0).collect();
                let after: Vec<f64> = errs.iter().map(|e| e.1).collect();
                MethodEffectError {
                    selection,
                    before: ErrorSummary::from_values(&before, Phase::Before),
                    after: ErrorSummary::from_values(&after, Phase::After),
                }
            });
            MethodRun {
                method: *method,
                outcome,
            }
        })
        .collect();
    Ok(EffectErrorReport { baseline, methods })
}

/// Data dredging: a pair counts as a false positive when the uncorrected
/// comparison or any method's corrected comparison rejects, with any of the
/// configured tests.
pub fn run_phack(cfg: &ExperimentConfig) -> Result<PHackReport> {
    expect_kind(cfg, &[ExperimentKind::PHack])?;
    let draws = Draws::null_pairs(cfg.master_seed, cfg.distribution, cfg.n);
    let scan = scan_all(cfg.reps, |i| {
        let rep = draws.pair(i);
        let plain = p_values(&cfg.tests, &rep.a, &rep.b, &rep.stream)?.into_iter().any(rejects);
        if plain {
            return Ok((true, true));
        }
        for method in &cfg.methods {
            let (ca, cb) = correct_pair(&rep, method)?;
            if !(ca.any_flagged() || cb.any_flagged()) {
                continue;
            }
            if p_values(&cfg.tests, &ca.corrected, &cb.corrected, &rep.stream)?
                .into_iter()
                .any(rejects)
            {
                return Ok((false, true));
            }
        }
        Ok((false, false))
    })?;
    let plain = scan.retained.iter().filter(|r| r.0).count() as u64;
    let dredged = scan.retained.iter().filter(|r| r.1).count() as u64;
    Ok(PHackReport {
        plain: RateEstimate::from_counts(plain, scan.attempts),
        dredged: RateEstimate::from_counts(dredged, scan.attempts),
    })
}

fn sweep<T>(
    cfg: &ExperimentConfig,
    mut level: impl FnMut(&InjectionSpec) -> Result<T>,
) -> Result<Vec<ContaminationLevel<T>>> {
    let sweep = cfg.injection.as_ref().expect("validated");
    sweep
        .counts
        .iter()
        .map(|&count| {
            Ok(ContaminationLevel {
                count,
                report: level(&sweep.at(count))?,
            })
        })
        .collect()
}

/// Mean/SD estimation error with `count` outliers injected, per count.
pub fn run_contaminated_estimation(cfg: &ExperimentConfig) -> Result<Vec<ContaminationLevel<EstimationReport>>> {
    expect_kind(cfg, &[ExperimentKind::ContamEstimation])?;
    let draws = Draws::single(cfg.master_seed, cfg.distribution, cfg.n);
    sweep(cfg, |inj| estimation(cfg, &draws, Some(inj)))
}

/// Type I error with outliers injected into sample 1, per count.
pub fn run_contaminated_type1(cfg: &ExperimentConfig) -> Result<Vec<ContaminationLevel<ErrorRateReport>>> {
    expect_kind(cfg, &[ExperimentKind::ContamType1])?;
    let draws = Draws::null_pairs(cfg.master_seed, cfg.distribution, cfg.n);
    sweep(cfg, |inj| error_rates(cfg, &draws, Some(inj), rejects))
}

/// Type II error with outliers injected into the `mu = 0` sample, per count.
pub fn run_contaminated_type2(cfg: &ExperimentConfig) -> Result<Vec<ContaminationLevel<ErrorRateReport>>> {
    expect_kind(cfg, &[ExperimentKind::ContamType2])?;
    let draws = Draws::shifted_pairs(cfg.master_seed, cfg.distribution, cfg.resolved_mu2()?, cfg.n);
    sweep(cfg, |inj| error_rates(cfg, &draws, Some(inj), misses))
}

/// Spread of the plain Type I estimate (first configured test, no selection,
/// no correction) over repeated runs of each sampling count.
pub fn calibrate_sampling_count(cfg: &ExperimentConfig) -> Result<Vec<CalibrationRow>> {
    expect_kind(cfg, &[ExperimentKind::CalibrateSampling])?;
    let test = [cfg.tests[0]];
    let spec = cfg.distribution;
    let root = RngStream::new(cfg.master_seed)
        .derive("calibration")
        .derive(spec.kind.label())
        .derive(cfg.n);
    cfg.calibration
        .sampling_counts
        .iter()
        .map(|&count| {
            let reps = cfg.calibration.repetitions;
            let estimates = map_indices(0, reps, |r| -> Result<f64> {
                let draws = Draws::with_root(root.derive(count).derive(r), spec, spec, cfg.n);
                let mut hits = 0u64;
                for i in 0..count {
                    let rep = draws.pair(i);
                    hits += rejects(p_values(&test, &rep.a, &rep.b, &rep.stream)?[0]) as u64;
                }
                Ok(hits as f64 / count as f64)
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            let k = estimates.len() as f64;
            let mean_rate = estimates.iter().sum::<f64>() / k;
            let var = estimates.iter().map(|e| (e - mean_rate).powi(2)).sum::<f64>() / (k - 1.0);
            let within_band =
                estimates.iter().filter(|&&e| (0.046..=0.054).contains(&e)).count() as f64 / k;
            Ok(CalibrationRow {
                n_sampling: count,
                repetitions: reps,
                mean_rate,
                std_rate: var.sqrt(),
                within_band,
                estimates,
            })
        })
        .collect()
}

/// Empirical power of `test` on unselected, uncorrected pairs drawn from
/// `distribution` and `distribution.with_mu(mu2)`.
pub fn verify_power(
    n: usize,
    mu2: f64,
    distribution: &PopulationSpec,
    test: &TestSpec,
    reps: usize,
    seed: u64,
) -> Result<RateEstimate> {
    distribution.validate()?;
    test.validate()?;
    if n < 2 || reps == 0 {
        return Err(Error::invalid("verify_power needs n >= 2 and reps >= 1"));
    }
    let draws = Draws::shifted_pairs(seed, *distribution, mu2, n);
    let tests = [*test];
    let scan = scan_all(reps, |i| {
        let rep = draws.pair(i);
        Ok(rejects(p_values(&tests, &rep.a, &rep.b, &rep.stream)?[0]))
    })?;
    let hits = scan.retained.iter().filter(|&&r| r).count() as u64;
    Ok(RateEstimate::from_counts(hits, scan.attempts))
}
