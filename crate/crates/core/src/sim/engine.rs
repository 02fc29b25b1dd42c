//! Replicate scheduling.
//!
//! Replicate `i` is a pure function of its index, so chunks can be evaluated
//! in parallel and the retained set is always the first `reps` accepted
//! indices, whatever the chunking or thread count.

use crate::distributions::{PopulationSpec, Sample};
use crate::error::{Error, Result};
use crate::par::map_indices;
use crate::rng::RngStream;

const MAX_CHUNK: usize = 1 << 20;

pub(crate) struct Scan<T> {
    pub retained: Vec<T>,
    pub attempts: u64,
}

/// Evaluates replicates `0..reps`; `eval` must return a value for each.
pub(crate) fn scan_all<T, F>(reps: usize, eval: F) -> Result<Scan<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let retained = map_indices(0, reps, eval).into_iter().collect::<Result<Vec<T>>>()?;
    Ok(Scan {
        retained,
        attempts: reps as u64,
    })
}

/// Walks replicate indices in order, keeping those for which `eval` returns
/// `Some`, until `reps` are kept or `max_draws` indices have been tried.
pub(crate) fn scan_selected<T, F>(reps: usize, max_draws: u64, eval: F) -> Result<Scan<T>>
where
    T: Send,
    F: Fn(usize) -> Result<Option<T>> + Sync + Send,
{
    let max_draws = usize::try_from(max_draws).unwrap_or(usize::MAX);
    let mut retained = Vec::with_capacity(reps);
    let mut next = 0usize;
    while retained.len() < reps {
        let budget = max_draws.saturating_sub(next);
        if budget == 0 {
            return Err(Error::IncompleteRun {
                accepted: retained.len() as u64,
                requested: reps as u64,
                attempts: next as u64,
            });
        }
        let missing = reps - retained.len();
        let chunk = if next == 0 {
            reps
        } else if retained.is_empty() {
            next.saturating_mul(4)
        } else {
            let per_hit = next as f64 / retained.len() as f64;
            (missing as f64 * per_hit * 1.1) as usize + 64
        };
        let chunk = chunk.clamp(1, MAX_CHUNK).min(budget);
        let results = map_indices(next, next + chunk, &eval);
        for (offset, r) in results.into_iter().enumerate() {
            if let Some(v) = r? {
                retained.push(v);
                if retained.len() == reps {
                    return Ok(Scan {
                        retained,
                        attempts: (next + offset + 1) as u64,
                    });
                }
            }
        }
        next += chunk;
    }
    Ok(Scan {
        retained,
        attempts: next as u64,
    })
}

/// Draws for one condition. Streams do not depend on the method under test.
#[derive(Debug, Clone)]
pub(crate) struct Draws {
    root: RngStream,
    first: PopulationSpec,
    second: PopulationSpec,
    n: usize,
}

pub(crate) struct Replicate {
    pub stream: RngStream,
    pub a: Sample,
    pub b: Sample,
}

impl Draws {
    /// Single samples from `population`.
    pub fn single(seed: u64, population: PopulationSpec, n: usize) -> Self {
        let root = family_root(seed, "single", &population, n);
        Draws {
            root,
            first: population,
            second: population,
            n,
        }
    }

    /// Pairs from one population.
    pub fn null_pairs(seed: u64, population: PopulationSpec, n: usize) -> Self {
        Self::with_root(family_root(seed, "null-pair", &population, n), population, population, n)
    }

    /// Pairs where the second sample comes from `population.with_mu(mu2)`.
    pub fn shifted_pairs(seed: u64, population: PopulationSpec, mu2: f64, n: usize) -> Self {
        let root = family_root(seed, "shifted-pair", &population, n).derive(mu2.to_bits());
        Self::with_root(root, population, population.with_mu(mu2), n)
    }

    pub fn with_root(root: RngStream, first: PopulationSpec, second: PopulationSpec, n: usize) -> Self {
        Draws { root, first, second, n }
    }

    pub fn first_population(&self) -> &PopulationSpec {
        &self.first
    }

    pub fn second_population(&self) -> &PopulationSpec {
        &self.second
    }

    fn draw(&self, spec: &PopulationSpec, stream: &RngStream) -> Sample {
        let mut rng = stream.rng();
        let mut values = Vec::with_capacity(self.n);
        spec.fill(&mut rng, &mut values, self.n);
        Sample::from_vec_unchecked(values)
    }

    pub fn sample(&self, i: usize) -> (RngStream, Sample) {
        let stream = self.root.derive(i);
        let a = self.draw(&self.first, &stream.derive("s1"));
        (stream, a)
    }

    pub fn pair(&self, i: usize) -> Replicate {
        let stream = self.root.derive(i);
        let a = self.draw(&self.first, &stream.derive("s1"));
        let b = self.draw(&self.second, &stream.derive("s2"));
        Replicate { stream, a, b }
    }
}

fn family_root(seed: u64, family: &str, population: &PopulationSpec, n: usize) -> RngStream {
    RngStream::new(seed)
        .derive(family)
        .derive(population.kind.label())
        .derive(population.mu.to_bits())
        .derive(population.sigma.to_bits())
        .derive(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_keeps_first_accepted_indices() {
        let scan = scan_selected(5, 1000, |i| Ok((i % 7 == 3).then_some(i))).unwrap();
        assert_eq!(scan.retained, vec![3, 10, 17, 24, 31]);
        assert_eq!(scan.attempts, 32);
    }

    #[test]
    fn selection_reports_partial_counts() {
        let err = scan_selected(5, 100, |i| Ok((i % 50 == 0).then_some(i))).err().unwrap();
        assert_eq!(
            err,
            Error::IncompleteRun {
                accepted: 2,
                requested: 5,
                attempts: 100
            }
        );
    }

    #[test]
    fn selection_with_zero_acceptance_terminates() {
        let err = scan_selected::<usize, _>(3, 10_000, |_| Ok(None)).err().unwrap();
        assert!(matches!(err, Error::IncompleteRun { accepted: 0, attempts: 10_000, .. }));
    }

    #[test]
    fn errors_propagate() {
        let r = scan_all(10, |i| if i == 4 { Err(Error::invalid("boom")) } else { Ok(i) });
        assert!(r.is_err());
    }
}
