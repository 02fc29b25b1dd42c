use rsosim_web::{detect, example, inflation};
use serde_json::Value;

#[test]
fn detect_flags_the_far_point() {
    let out: Value = serde_json::from_str(&detect("1, 2, 3, 2, 1, 2, 3, 2, 40", "iqr").unwrap()).unwrap();
    assert_eq!(out["flagged"], serde_json::json!([8]));
    assert_eq!(out["n_removed"], 1);
    assert_eq!(out["corrected"].as_array().unwrap().len(), 8);

    let out: Value = serde_json::from_str(&detect("1\n2\n3\n2\n1\n2\n3\n2\n40", "acc_sigma2").unwrap()).unwrap();
    assert_eq!(out["n_modified"], 1);
}

#[test]
fn detect_reports_bad_input() {
    assert!(detect("1, two, 3", "mad").unwrap_err().contains("two"));
    assert!(detect("1, 2, 3", "tukey").is_err());
    assert!(detect("1", "mad").is_err());
}

#[test]
fn example_is_deterministic() {
    let a = example("sigma2", "normal", 8, 3).unwrap();
    assert_eq!(a, example("sigma2", "normal", 8, 3).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 2);
    assert_eq!(v["tests"].as_array().unwrap().len(), 3);
}

#[test]
fn inflation_shows_mad_effect() {
    let v: Value = serde_json::from_str(&inflation("mad", "normal", 20, 3000, 1).unwrap()).unwrap();
    let ttest = &v["rates"][0];
    assert!(ttest["after"].as_f64().unwrap() > ttest["before"].as_f64().unwrap());
    assert_eq!(v["reps"], 3000);
    assert!(inflation("sigma3", "normal", 8, 100, 1).unwrap_err().contains("flagged"));
}
