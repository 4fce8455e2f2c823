mod common;

use casemix_core::assess::*;
use casemix_core::domain::{MssTemplate, ProjectBundle, SessionAssignment};
use casemix_core::fileio::{load_project, ParseOptions};
use common::fixture;

fn scenario() -> ProjectBundle {
    load_project(fixture("scenario_1_full.project"), ParseOptions::default()).unwrap()
}

// Surgery, postop and ICU hours per sub-type, typed in from the patient file.
const SURGERY: [[f64; 3]; 5] = [[1.2, 1.25, 0.0], [2.4, 0.0, 0.0], [6.5, 4.56, 7.6], [3.4, 0.0, 0.0], [4.1, 0.0, 0.0]];
const POSTOP: [[f64; 3]; 5] = [[17.86, 8.35, 0.0], [16.31, 0.0, 0.0], [12.94, 12.39, 5.54], [18.99, 0.0, 0.0], [22.81, 0.0, 0.0]];
const SUB_MIX: [[f64; 3]; 5] = [[0.7, 0.3, 0.0], [1.0, 0.0, 0.0], [0.25, 0.40, 0.35], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];

#[test]
fn method_one_by_theatre() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let sessions = b.sessions.clone().unwrap();
    assert_eq!(sessions.sessions, vec![12.0, 25.0, 34.0, 10.0, 19.0]);
    let r = basic_by_theatre(&b, &sessions, &b.mix.as_ref().unwrap().sub_mix, &mss).unwrap();
    let expect = [39.5062, 41.6667, 22.2622, 11.7647, 18.5366];
    for g in 0..5 {
        let hours: f64 = (0..3).map(|p| SUB_MIX[g][p] * SURGERY[g][p]).sum();
        let oracle = sessions.sessions[g] * 4.0 / hours;
        assert!((r.types[g] - oracle).abs() < 1e-9);
        assert!((r.types[g] - expect[g]).abs() < 1e-4, "{} vs {}", r.types[g], expect[g]);
    }
    assert!((r.total - 133.736).abs() < 1e-3);
    let ot = r.report.theatre();
    assert!((ot.percent_used.unwrap() - 100.0).abs() < 1e-9);
    assert!(r.warnings.is_empty());
}

#[test]
fn method_two_by_beds() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let r = basic_by_beds(&b, &b.mix.as_ref().unwrap().sub_mix, &mss).unwrap();
    // Every type in this scenario sends all sub-types to one first-choice ward.
    let first_ward_beds = [2.0, 5.0, 10.0, 14.0, 3.0];
    for g in 0..5 {
        let load: f64 = (0..3).map(|p| SUB_MIX[g][p] * (SURGERY[g][p] + POSTOP[g][p])).sum();
        let oracle = 168.0 * first_ward_beds[g] / load;
        assert!((r.types[g] - oracle).abs() < 1e-9, "type {g}");
    }
}

#[test]
fn allocation_evaluation_flags_theatre_and_ward_5() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let r = utilization_of(&b, b.allocation.as_ref().unwrap(), &mss);
    // (count, surgery, ward hours) by ward.
    let w1 = 5.26 * (1.2 + 17.86) + 2.42 * (1.25 + 8.35);
    let w2 = 22.88 * (2.4 + 16.31);
    let w3 = 6.11 * (6.5 + 12.94) + 9.17 * (4.56 + 12.39) + 8.15 * (7.6 + 5.54);
    let w4 = 11.22 * (3.4 + 18.99) + 29.38 * (4.1 + 22.81);
    let w5 = 27.94 * (2.4 + 16.31);
    let ot = 5.26 * 1.2 + 2.42 * 1.25 + (22.88 + 27.94) * 2.4 + 6.11 * 6.5 + 9.17 * 4.56 + 8.15 * 7.6 + 11.22 * 3.4 + 29.38 * 4.1;
    assert!((r.theatre().used_hours - ot).abs() < 1e-9);
    assert!((r.theatre().used_hours - 433.38).abs() < 0.01);
    assert!((r.theatre().percent_used.unwrap() - 108.3).abs() < 0.05);
    let w = r.wards();
    for (u, oracle) in w.iter().zip([w1, w2, w3, w4, w5]) {
        assert!((u.used_hours - oracle).abs() < 1e-9, "{}", u.name);
    }
    assert!((w[4].used_hours - 522.76).abs() < 0.01);
    assert!((w[4].percent_used.unwrap() - 103.7).abs() < 0.05);
    let flagged: Vec<&str> = r.bottlenecks().map(|u| u.name.as_str()).collect();
    assert_eq!(flagged, ["OT", "Ward 5"]);
    let icu = 6.0 * 2.42 + 12.0 * 29.38;
    assert!((r.icu().used_hours - icu).abs() < 1e-9);
    assert!((r.all_wards().used_hours - (w1 + w2 + w3 + w4 + w5)).abs() < 1e-9);
}

#[test]
fn sessions_required_inverts_method_one() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let mix = b.mix.clone().unwrap();
    let sessions = b.sessions.clone().unwrap();
    let r = basic_by_theatre(&b, &sessions, &mix.sub_mix, &mss).unwrap();
    let back = sessions_for_type_targets(&r.types, &mix.sub_mix, &b.catalog, mss.session_hours);
    for (a, s) in back.iter().zip(&sessions.sessions) {
        assert!((a - s).abs() < 1e-9);
    }
    let back = sessions_for_sub_type_targets(&r.sub_types, &b.catalog, mss.session_hours);
    for (a, s) in back.iter().zip(&sessions.sessions) {
        assert!((a - s).abs() < 1e-9);
    }
}

#[test]
fn unassigned_sessions_warn() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let s = SessionAssignment { sessions: vec![10.0, 10.0, 10.0, 10.0, 10.0] };
    let r = basic_by_theatre(&b, &s, &b.mix.as_ref().unwrap().sub_mix, &mss).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("50 sessions are unassigned")), "{:?}", r.warnings);
}

#[test]
fn bad_sub_mix_is_refused() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let mut mix = b.mix.clone().unwrap();
    mix.sub_mix[0] = vec![60.0, 30.0];
    let err = basic_by_beds(&b, &mix.sub_mix, &mss).unwrap_err();
    assert_eq!(err.to_string(), "sub mix of type 1 sums to 90%, must be 100%");
}

#[test]
fn revenue_is_count_times_price() {
    let b = scenario();
    let subs = b.allocation.as_ref().unwrap().sub_type_counts(&b.catalog);
    let (rev, warnings) = revenue_of(&subs, &b.catalog);
    assert!(warnings.is_empty());
    let oracle = 5.26 * 1000.0 + 2.42 * 1500.0 + 50.82 * 600.0 + 6.11 * 2500.0 + 9.17 * 6000.0 + 8.15 * 3700.0 + 11.22 * 10000.0 + 29.38 * 5500.0;
    assert!((rev.total - oracle).abs() < 1e-6);
}

#[test]
fn utilization_is_linear_in_counts() {
    let b = scenario();
    let mss = MssTemplate::standard(&b.config, 1);
    let a = b.allocation.clone().unwrap();
    let one = utilization_of(&b, &a, &mss);
    let two = utilization_of(&b, &a.scaled(2.0), &mss);
    for (x, y) in one.rows.iter().zip(&two.rows) {
        assert!((2.0 * x.used_hours - y.used_hours).abs() < 1e-9);
        assert!((2.0 * x.patients_treated - y.patients_treated).abs() < 1e-9);
    }
}
