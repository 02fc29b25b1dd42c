//! End-to-end checks through the public API. Expected values come from scipy.

use approx::assert_relative_eq;
use rsosim_core::distributions::draw_sample;
use rsosim_core::hypothesis::{mann_whitney, t_test};
use rsosim_core::methods::detect_and_correct;
use rsosim_core::{MethodId, MethodSpec, PopulationKind, PopulationSpec, RngStream, Sample, TestSpec};

fn a() -> Sample {
    Sample::new(vec![2.1, 3.4, 1.9, 5.6, 4.2, 3.3, 2.8, 9.7]).unwrap()
}

fn b() -> Sample {
    Sample::new(vec![4.5, 6.1, 5.2, 3.9, 7.4, 5.8, 6.6]).unwrap()
}

#[test]
fn tests_match_scipy() {
    assert_relative_eq!(t_test(&a(), &b()).unwrap().p_value, 0.17399022005703907, max_relative = 1e-9);
    assert_relative_eq!(mann_whitney(&a(), &b()).unwrap().p_value, 0.054079254079254076, max_relative = 1e-12);
}

#[test]
fn every_rejection_method_drops_the_far_point() {
    for id in [MethodId::Sigma2, MethodId::Iqr, MethodId::Mad, MethodId::Grubbs] {
        let out = detect_and_correct(&a(), &MethodSpec::new(id)).unwrap();
        assert_eq!(out.flagged, vec![7], "{id:?}");
        assert_eq!(out.n_removed, 1);
    }
}

#[test]
fn removal_turns_a_null_result_significant() {
    let out = detect_and_correct(&a(), &MethodSpec::new(MethodId::Mad)).unwrap();
    assert_relative_eq!(t_test(&out.corrected, &b()).unwrap().p_value, 0.004512369497010406, max_relative = 1e-9);
    assert_relative_eq!(mann_whitney(&out.corrected, &b()).unwrap().p_value, 0.006993006993006993, max_relative = 1e-12);
}

#[test]
fn winsorize_matches_mstats() {
    let mut xs: Vec<f64> = (1..=20).map(f64::from).collect();
    xs[19] = 100.0;
    let out = detect_and_correct(&Sample::new(xs).unwrap(), &MethodSpec::winsorize(0.05)).unwrap();
    let mut expected: Vec<f64> = (1..=20).map(f64::from).collect();
    expected[0] = 2.0;
    expected[19] = 19.0;
    assert_eq!(out.corrected.values(), &expected[..]);
    assert_eq!(out.n_modified, 2);
}

#[test]
fn lognormal_moments() {
    let (mean, sd) = PopulationSpec::standard(PopulationKind::LogNormal).true_params();
    assert_relative_eq!(mean, 1.6487212707001282, max_relative = 1e-14);
    assert_relative_eq!(sd, 2.1611974158950877, max_relative = 1e-14);
}

#[test]
fn labels_parse_back() {
    for spec in MethodSpec::all_defaults() {
        assert_eq!(spec.label().parse::<MethodSpec>().unwrap(), spec);
    }
    assert_eq!("permutation:2000".parse::<TestSpec>().unwrap(), TestSpec::permutation(2000));
}

#[test]
fn draws_depend_only_on_the_stream_path() {
    let pop = PopulationSpec::standard(PopulationKind::Normal);
    let s = RngStream::new(7).derive("x");
    let first = draw_sample(&pop, 30, &s).unwrap();
    assert_eq!(first, draw_sample(&pop, 30, &RngStream::new(7).derive("x")).unwrap());
    assert_ne!(first, draw_sample(&pop, 30, &RngStream::new(7).derive("y")).unwrap());
}
