//! Single annotated pair: the data behind one before/after comparison.

use serde::Serialize;

use crate::distributions::PopulationSpec;
use crate::error::Result;
use crate::hypothesis::{TestId, TestSpec};
use crate::methods::{detect_and_correct, MethodSpec};

use super::engine::Draws;
use super::pipelines::p_values;
use super::SIGNIFICANCE;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatedSample {
    pub values: Vec<f64>,
    pub flagged: Vec<usize>,
    pub flagged_values: Vec<f64>,
    pub corrected: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparedTest {
    pub test: TestId,
    pub p_before: f64,
    pub p_after: f64,
}

impl ComparedTest {
    /// Not significant before correction, significant after.
    pub fn flips(&self) -> bool {
        self.p_before >= SIGNIFICANCE && self.p_after < SIGNIFICANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkedExample {
    pub method: String,
    pub distribution: &'static str,
    pub n: usize,
    pub seed: u64,
    pub population_mean: f64,
    pub population_sd: f64,
    pub samples: [AnnotatedSample; 2],
    pub tests: Vec<ComparedTest>,
}

impl WorkedExample {
    pub fn flips(&self) -> bool {
        self.tests.iter().any(ComparedTest::flips)
    }
}

/// Draws one same-population pair, corrects each sample with `method` and
/// runs all three tests before and after.
pub fn worked_example(method: &MethodSpec, population: &PopulationSpec, n: usize, seed: u64) -> Result<WorkedExample> {
    method.validate()?;
    population.validate()?;
    if n < method.id.min_len().max(2) {
        return Err(crate::error::Error::invalid(format!("{} needs n >= {}", method.id, method.id.min_len().max(2))));
    }
    let tests = [TestSpec::ttest(), TestSpec::mann_whitney(), TestSpec::permutation(2000)];
    let rep = Draws::null_pairs(seed, *population, n).pair(0);
    let ca = detect_and_correct(&rep.a, method)?;
    let cb = detect_and_correct(&rep.b, method)?;
    let before = p_values(&tests, &rep.a, &rep.b, &rep.stream)?;
    let after = p_values(&tests, &ca.corrected, &cb.corrected, &rep.stream)?;
    let annotate = |s: &crate::Sample, c: crate::CorrectionOutcome| AnnotatedSample {
        values: s.values().to_vec(),
        flagged_values: c.flagged.iter().map(|&i| s.values()[i]).collect(),
        flagged: c.flagged,
        corrected: c.corrected.into_values(),
    };
    let (mean, sd) = population.true_params();
    Ok(WorkedExample {
        method: method.label(),
        distribution: population.kind.label(),
        n,
        seed,
        population_mean: mean,
        population_sd: sd,
        samples: [annotate(&rep.a, ca), annotate(&rep.b, cb)],
        tests: tests
            .iter()
            .zip(before.iter().zip(&after))
            .map(|(t, (&p_before, &p_after))| ComparedTest {
                test: t.id,
                p_before,
                p_after,
            })
            .collect(),
    })
}

/// First seed in `start..start + count` whose example flips a test.
pub fn find_flip(
    method: &MethodSpec,
    population: &PopulationSpec,
    n: usize,
    start: u64,
    count: u64,
) -> Result<Option<WorkedExample>> {
    for seed in start..start.saturating_add(count) {
        let ex = worked_example(method, population, n, seed)?;
        if ex.flips() {
            return Ok(Some(ex));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::PopulationKind;
    use crate::methods::MethodId;

    #[test]
    fn unflagged_pair_is_unchanged() {
        let normal = PopulationSpec::standard(PopulationKind::Normal);
        let sigma3 = MethodSpec::new(MethodId::Sigma3);
        let ex = worked_example(&sigma3, &normal, 6, 11).unwrap();
        for s in &ex.samples {
            assert!(s.flagged.is_empty());
            assert_eq!(s.values, s.corrected);
        }
        for t in &ex.tests {
            assert_eq!(t.p_before, t.p_after);
        }
    }

    #[test]
    fn sigma2_flip_exists_within_population_range() {
        let normal = PopulationSpec::standard(PopulationKind::Normal);
        let ex = find_flip(&MethodSpec::new(MethodId::Sigma2), &normal, 6, 0, 500)
            .unwrap()
            .expect("a flipping seed");
        assert!(ex.flips());
        let flagged: Vec<f64> = ex.samples.iter().flat_map(|s| s.flagged_values.clone()).collect();
        assert!(!flagged.is_empty());
        assert!(flagged.iter().all(|v| v.abs() < 3.0), "{flagged:?}");
    }
}
