mod common;

use casemix_core::domain::ProjectBundle;
use casemix_core::fileio::{load_project, ParseOptions};
use casemix_core::models::{TargetFitSpec, TargetOption, Viewpoint};
use casemix_core::tasks::*;
use common::fixture;

fn scenario() -> ProjectBundle {
    load_project(fixture("scenario_1_full.project"), ParseOptions::default()).unwrap()
}

#[test]
fn every_kind_runs_on_the_scenario() {
    let b = scenario();
    for kind in TaskKind::ALL {
        let r = run_task(&b, &TaskRequest::new(kind)).unwrap();
        assert_eq!(r.params.kind, kind);
        let again = run_task(&b, &TaskRequest::new(kind)).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
        let back: TaskResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_text(&b).is_empty());
        assert!(r.to_csv(&b).starts_with("resource,"));
    }
}

#[test]
fn advanced_text_shows_capacity_and_flags() {
    let b = scenario();
    let r = run_task(&b, &TaskRequest::new(TaskKind::Advanced)).unwrap();
    let text = r.to_text(&b);
    assert!(text.contains("CAPACITY 113.5277"), "{text}");
    let ward2 = text.lines().find(|l| l.starts_with("Ward 2 ")).unwrap();
    assert!(ward2.contains("100.0000 [!]"), "{ward2}");
    assert_eq!(r.params.viewpoint, Some(Viewpoint::WholeCohort));
}

#[test]
fn evaluation_is_negative() {
    let b = scenario();
    let r = run_task(&b, &TaskRequest::new(TaskKind::EvaluateAllocation)).unwrap();
    assert!(r.is_negative());
    let flagged: Vec<_> = r.cohort().report.bottlenecks().map(|u| u.name.clone()).collect();
    assert_eq!(flagged, ["OT", "Ward 5"]);
}

#[test]
fn params_echo_overrides() {
    let b = scenario();
    let mut req = TaskRequest::new(TaskKind::BestFit);
    req.weeks = Some(2);
    req.fit = Some(TargetFitSpec {
        option: TargetOption::SubTypes,
        ..TargetFitSpec::default()
    });
    let r = run_task(&b, &req).unwrap();
    assert_eq!(r.params.mss.weeks, 2);
    assert_eq!(r.params.fit.unwrap().option, TargetOption::SubTypes);
    assert_eq!(r.params.targets, b.targets);
}

#[test]
fn bad_mix_is_a_field_error() {
    let b = scenario();
    let mut req = TaskRequest::new(TaskKind::Advanced);
    let mut mix = b.mix.clone().unwrap();
    mix.sub_mix[0] = vec![60.0, 30.0];
    req.mix = Some(mix);
    let err = run_task(&b, &req).unwrap_err();
    let f = err.fields();
    assert_eq!(f[0].field, "mix.subMix[0]");
    assert_eq!(f[0].message, "sub mix of type 1 sums to 90%, must be 100%");
}

#[test]
fn missing_inputs_are_reported() {
    let mut b = scenario();
    b.allocation = None;
    let err = run_task(&b, &TaskRequest::new(TaskKind::EvaluateAllocation)).unwrap_err();
    assert_eq!(err.fields()[0].field, "allocation");
    let err = run_task(&b, &TaskRequest::default()).unwrap_err();
    assert_eq!(err.fields()[0].field, "kind");
}

#[test]
fn request_json_is_camel_case() {
    let req: TaskRequest =
        serde_json::from_str(r#"{"kind":"bestFit","weeks":3,"fit":{"option":"to2","norm":"two","segments":8}}"#).unwrap();
    assert_eq!(req.kind, Some(TaskKind::BestFit));
    let fit = req.fit.unwrap();
    assert_eq!(fit.segments, 8);
    assert!(serde_json::from_str::<TaskRequest>(r#"{"kind":"advanced","wekks":3}"#).is_err());
}
