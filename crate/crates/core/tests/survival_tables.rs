//! Kaplan–Meier and log-rank against tables worked out by hand.
//!
//! The log-rank table is the classic leukaemia remission data (placebo vs
//! 6-mercaptopurine); its observed/expected counts and variance were summed
//! over the 17 distinct event times independently of this crate.

use graphrel::analysis::{chi_square_sf, km_estimate, logrank_test};
use graphrel::data::SurvivalRecord;
use serde::Deserialize;

const TOL: f64 = 1e-6;

#[derive(Deserialize)]
struct Tables {
    kaplan_meier: KmTable,
    logrank: LogRankTable,
    chi_square_anchors: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct KmTable {
    records: Vec<(f64, u8)>,
    times: Vec<f64>,
    at_risk: Vec<usize>,
    events: Vec<usize>,
    survival: Vec<f64>,
}

#[derive(Deserialize)]
struct LogRankTable {
    group_a: Vec<(f64, u8)>,
    group_b: Vec<(f64, u8)>,
    observed_a: f64,
    expected_a: f64,
    variance: f64,
    statistic: f64,
    p_value: f64,
}

fn tables() -> Tables {
    serde_json::from_str(include_str!("fixtures/survival_tables.json")).unwrap()
}

fn records(raw: &[(f64, u8)]) -> Vec<SurvivalRecord> {
    raw.iter()
        .map(|&(time, e)| SurvivalRecord { time, event: e == 1 })
        .collect()
}

#[test]
fn kaplan_meier_five_subjects() {
    let t = tables().kaplan_meier;
    let km = km_estimate(&records(&t.records)).unwrap();
    assert_eq!(km.times, t.times);
    assert_eq!(km.at_risk, t.at_risk);
    assert_eq!(km.events, t.events);
    for (a, b) in km.survival.iter().zip(&t.survival) {
        assert!((a - b).abs() < TOL, "{a} vs {b}");
    }
    assert_eq!(km.survival_at(0.0), 1.0);
    assert!((km.survival_at(4.0) - 0.8).abs() < TOL);
    assert!((km.survival_at(100.0) - t.survival[1]).abs() < TOL);
}

#[test]
fn logrank_leukaemia_remission() {
    let t = tables().logrank;
    let r = logrank_test(&records(&t.group_a), &records(&t.group_b)).unwrap();
    assert!((r.observed_a - t.observed_a).abs() < TOL);
    assert!((r.expected_a - t.expected_a).abs() < TOL);
    assert!((r.variance - t.variance).abs() < TOL);
    assert!((r.statistic - t.statistic).abs() < TOL);
    assert!((r.p_value - t.p_value).abs() < TOL);
}

#[test]
fn chi_square_table_anchors() {
    for (x, p) in tables().chi_square_anchors {
        let got = chi_square_sf(x, 1.0);
        assert!((got - p).abs() < 1e-4, "sf({x}) = {got}, table {p}");
    }
}
