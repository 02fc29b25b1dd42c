//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rsosim_core::sim::{run_type1, worked_example, ExperimentConfig, ExperimentKind};
use rsosim_core::{methods, MethodSpec, PopulationKind, PopulationSpec, Sample, TestSpec};

/// Upper bound on replicates per call so the page stays responsive.
pub const MAX_REPS: usize = 20_000;

fn population(name: &str) -> Result<PopulationSpec, String> {
    match name.trim().to_ascii_lowercase().as_str() {
        "normal" => Ok(PopulationSpec::standard(PopulationKind::Normal)),
        "lognormal" | "log-normal" => Ok(PopulationSpec::standard(PopulationKind::LogNormal)),
        other => Err(format!("unknown distribution '{other}'")),
    }
}

fn method(label: &str) -> Result<MethodSpec, String> {
    label.trim().parse::<MethodSpec>().map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

#[derive(Serialize)]
struct Detection {
    method: String,
    values: Vec<f64>,
    flagged: Vec<usize>,
    corrected: Vec<f64>,
    n_removed: usize,
    n_modified: usize,
    mean_before: f64,
    mean_after: f64,
}

/// Flags and corrects `values` (separated by commas, spaces or newlines).
pub fn detect(values: &str, method_label: &str) -> Result<String, String> {
    let xs = values
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect::<Result<Vec<f64>, String>>()?;
    let spec = method(method_label)?;
    let sample = Sample::new(xs).map_err(|e| e.to_string())?;
    let out = methods::detect_and_correct(&sample, &spec).map_err(|e| e.to_string())?;
    Ok(to_json(&Detection {
        method: spec.label(),
        values: sample.values().to_vec(),
        mean_before: sample.mean(),
        mean_after: out.corrected.mean(),
        flagged: out.flagged,
        n_removed: out.n_removed,
        n_modified: out.n_modified,
        corrected: out.corrected.into_values(),
    }))
}

/// One same-population pair with flags and before/after p-values.
pub fn example(method_label: &str, distribution: &str, n: usize, seed: u64) -> Result<String, String> {
    let ex = worked_example(&method(method_label)?, &population(distribution)?, n, seed).map_err(|e| e.to_string())?;
    Ok(to_json(&ex))
}

#[derive(Serialize)]
struct Inflation {
    test: &'static str,
    before: f64,
    after: f64,
    after_ci: (f64, f64),
}

#[derive(Serialize)]
struct InflationReport {
    method: String,
    distribution: &'static str,
    n: usize,
    reps: u64,
    selection_rate: f64,
    rates: Vec<Inflation>,
}

/// Type I error before and after correction on pairs with a flagged point.
pub fn inflation(method_label: &str, distribution: &str, n: usize, reps: usize, seed: u64) -> Result<String, String> {
    let spec = method(method_label)?;
    let pop = population(distribution)?;
    let cfg = ExperimentConfig::new(ExperimentKind::Type1, pop, n)
        .with_methods(vec![spec])
        .with_tests(vec![TestSpec::ttest(), TestSpec::mann_whitney()])
        .with_reps(reps.clamp(1, MAX_REPS))
        .with_max_draws(50 * MAX_REPS as u64)
        .with_seed(seed);
    let report = run_type1(&cfg).map_err(|e| e.to_string())?;
    let run = report.methods.into_iter().next().expect("one method");
    let rates = run.outcome.map_err(|e| match e {
        rsosim_core::Error::IncompleteRun { accepted, attempts, .. } => {
            format!("only {accepted} of {attempts} pairs had a flagged point; try a larger n")
        }
        other => other.to_string(),
    })?;
    Ok(to_json(&InflationReport {
        method: spec.label(),
        distribution: pop.kind.label(),
        n,
        reps: rates.before[0].estimate.trials,
        selection_rate: rates.selection.rate,
        rates: rates
            .before
            .iter()
            .zip(&rates.after)
            .map(|(b, a)| Inflation {
                test: b.test.as_str(),
                before: b.estimate.rate,
                after: a.estimate.rate,
                after_ci: a.estimate.ci95,
            })
            .collect(),
    }))
}

#[wasm_bindgen]
pub fn detect_outliers(values: &str, method: &str) -> Result<String, JsError> {
    detect(values, method).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sample_pair(method: &str, distribution: &str, n: usize, seed: u64) -> Result<String, JsError> {
    example(method, distribution, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn type1_inflation(method: &str, distribution: &str, n: usize, reps: usize, seed: u64) -> Result<String, JsError> {
    inflation(method, distribution, n, reps, seed).map_err(|e| JsError::new(&e))
}
