mod common;

use std::fs;

use casemix_core::domain::*;
use casemix_core::fileio::*;
use common::fixture;
use common::scenario::*;
use proptest::prelude::*;

const STRICT: ParseOptions = ParseOptions { lenient: false };

fn text(name: &str) -> String {
    fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn concrete_files_parse_to_expected_structures() {
    let config = parse_config("c", &text("scenario_1.config"), STRICT).unwrap();
    assert_eq!(config, expected_config());

    let catalog = parse_patient("p", &text("scenario_1.patient"), Some(&config), STRICT).unwrap();
    assert_eq!(catalog, expected_catalog());

    let mix = parse_mix("m", &text("scenario_1.mix"), &catalog, STRICT).unwrap();
    assert_eq!(
        mix,
        Mix {
            case_mix: vec![5.0, 43.0, 18.0, 9.0, 25.0],
            sub_mix: vec![
                vec![70.0, 30.0],
                vec![100.0],
                vec![25.0, 40.0, 35.0],
                vec![100.0],
                vec![100.0]
            ],
        }
    );

    let sessions = parse_sessions("s", &text("scenario_1.session"), &catalog, STRICT).unwrap();
    assert_eq!(sessions.sessions, vec![12.0, 25.0, 34.0, 10.0, 19.0]);

    let targets = parse_targets("t", &text("scenario_1.target"), &catalog, STRICT).unwrap();
    assert_eq!(targets.types, Some(vec![10.0, 55.0, 65.0, 35.0, 53.0]));
    assert_eq!(
        targets.sub_types,
        Some(vec![
            vec![5.0, 5.0],
            vec![55.0],
            vec![16.0, 20.0, 29.0],
            vec![35.0],
            vec![53.0]
        ])
    );

    let alloc = parse_allocation("a", &text("scenario_1.alloc"), &catalog, STRICT).unwrap();
    assert_eq!(
        alloc.entries,
        vec![
            alloc_entry(1, 1, 1, "Ward 1", 5.26),
            alloc_entry(1, 2, 1, "Ward 1", 2.42),
            alloc_entry(2, 1, 1, "Ward 2", 22.88),
            alloc_entry(2, 1, 2, "Ward 1", 0.0),
            alloc_entry(2, 1, 3, "Ward 5", 27.94),
            alloc_entry(3, 1, 1, "Ward 3", 6.11),
            alloc_entry(3, 2, 1, "Ward 3", 9.17),
            alloc_entry(3, 3, 1, "Ward 3", 8.15),
            alloc_entry(4, 1, 1, "Ward 4", 11.22),
            alloc_entry(5, 1, 1, "Ward 5", 0.0),
            alloc_entry(5, 1, 2, "Ward 4", 29.38),
        ]
    );
}

#[test]
fn emitted_files_match_the_originals_byte_for_byte() {
    let bundle = load_project(fixture("scenario_1_full.project"), STRICT).unwrap();
    for (kind, name) in [
        (ComponentKind::Config, "scenario_1.config"),
        (ComponentKind::Patient, "scenario_1.patient"),
        (ComponentKind::Mix, "scenario_1.mix"),
        (ComponentKind::Sessions, "scenario_1.session"),
        (ComponentKind::Targets, "scenario_1.target"),
        (ComponentKind::Allocation, "scenario_1.alloc"),
    ] {
        assert_eq!(emit_component(&bundle, kind).unwrap(), text(name), "{name}");
    }
    let pf = parse_project("p", &text("scenario_1.project"), STRICT).unwrap();
    assert_eq!(emit_project(&pf), text("scenario_1.project"));
}

#[test]
fn minimal_project_has_no_optional_components() {
    let bundle = load_project(fixture("scenario_1.project"), STRICT).unwrap();
    assert_eq!(bundle.project_name, "scenario_1");
    assert_eq!(bundle.config, expected_config());
    assert!(bundle.mix.is_none() && bundle.sessions.is_none());
    assert!(bundle.targets.is_none() && bundle.allocation.is_none());
}

#[test]
fn saved_project_loads_back_identically() {
    let bundle = load_project(fixture("scenario_1_full.project"), STRICT).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = save_project(&bundle, dir.path()).unwrap();
    assert_eq!(load_project(&path, STRICT).unwrap(), bundle);

    let json = serde_json::to_string(&bundle).unwrap();
    assert!(json.contains("\"icuBeds\":5"));
    assert!(json.contains("\"wardOptions\""));
    let back: ProjectBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(back, bundle);
}

#[test]
fn crlf_input_is_accepted() {
    let crlf = text("scenario_1.config").replace('\n', "\r\n");
    assert_eq!(parse_config("c", &crlf, STRICT).unwrap(), expected_config());
}

#[test]
fn dangling_ward_reference_is_located() {
    let config = expected_config();
    let bad = text("scenario_1.patient").replace("[4][1],0,3.4,18.99,Ward 4", "[4][1],0,3.4,18.99,Ward 9");
    let e = parse_patient("scenario_1.patient", &bad, Some(&config), STRICT).unwrap_err();
    assert_eq!(e.location.file_name, "scenario_1.patient");
    assert_eq!(e.location.line_number, 24);
    assert_eq!(e.location.column_hint, 20);
    assert!(e.message.contains("Ward 9"));
}

#[test]
fn missing_component_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.project");
    fs::write(
        &p,
        "Project Name,x\nHospital Configuration,nope.config\nPatient Information,nope.patient\n",
    )
    .unwrap();
    assert!(matches!(load_project(&p, STRICT), Err(FileError::Io { .. })));
}

#[test]
fn save_rejects_names_with_commas() {
    let mut bundle = load_project(fixture("scenario_1.project"), STRICT).unwrap();
    bundle.config.wards[0].name = "Ward, One".into();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(save_project(&bundle, dir.path()), Err(FileError::Invalid(_))));
}

// ---------------------------------------------------------------------------
// Randomised round trips

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_of_save_is_identity(b in bundle()) {
        let c = &b.catalog;
        let config = parse_config("c", &emit_config(&b.config), STRICT).unwrap();
        prop_assert_eq!(&config, &b.config);
        let catalog = parse_patient("p", &emit_patient(c), Some(&config), STRICT).unwrap();
        prop_assert_eq!(&catalog, c);
        if let Some(m) = &b.mix {
            prop_assert_eq!(&parse_mix("m", &emit_mix(m), c, STRICT).unwrap(), m);
        }
        if let Some(s) = &b.sessions {
            prop_assert_eq!(&parse_sessions("s", &emit_sessions(s, c), c, STRICT).unwrap(), s);
        }
        if let Some(t) = &b.targets {
            prop_assert_eq!(&parse_targets("t", &emit_targets(t, c), c, STRICT).unwrap(), t);
        }
        if let Some(a) = &b.allocation {
            prop_assert_eq!(&parse_allocation("a", &emit_allocation(a, c), c, STRICT).unwrap(), a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn whole_project_round_trips_through_disk(b in bundle()) {
        let dir = tempfile::tempdir().unwrap();
        let path = save_project(&b, dir.path()).unwrap();
        prop_assert_eq!(load_project(&path, STRICT).unwrap(), b);
    }
}

fn mutate(src: &str, edits: &[(usize, u8)]) -> String {
    let mut bytes = src.as_bytes().to_vec();
    for &(pos, b) in edits {
        let i = pos % (bytes.len() + 1);
        match b % 3 {
            0 if i < bytes.len() => {
                bytes.remove(i);
            }
            1 => bytes.insert(i, b"[],0123456789.-\nabc"[(b as usize) % 19]),
            _ if i < bytes.len() => bytes[i] = b"[],0123456789.-\nabc"[(b as usize) % 19],
            _ => {}
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parsing_never_panics(edits in prop::collection::vec((any::<usize>(), any::<u8>()), 1..8)) {
        let catalog = expected_catalog();
        let config = expected_config();
        let _ = parse_config("c", &mutate(&text("scenario_1.config"), &edits), STRICT);
        let _ = parse_patient("p", &mutate(&text("scenario_1.patient"), &edits), Some(&config), STRICT);
        let _ = parse_mix("m", &mutate(&text("scenario_1.mix"), &edits), &catalog, STRICT);
        let _ = parse_sessions("s", &mutate(&text("scenario_1.session"), &edits), &catalog, STRICT);
        let _ = parse_targets("t", &mutate(&text("scenario_1.target"), &edits), &catalog, STRICT);
        let _ = parse_allocation("a", &mutate(&text("scenario_1.alloc"), &edits), &catalog, ParseOptions { lenient: true });
        let _ = parse_project("x", &mutate(&text("scenario_1_full.project"), &edits), STRICT);
    }

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,200}") {
        let catalog = expected_catalog();
        let _ = parse_config("c", &s, STRICT);
        let _ = parse_patient("p", &s, None, STRICT);
        let _ = parse_mix("m", &s, &catalog, STRICT);
        let _ = parse_targets("t", &s, &catalog, STRICT);
        let _ = parse_allocation("a", &s, &catalog, STRICT);
    }
}
