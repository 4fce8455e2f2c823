//! Hand-typed scenario structures and a random project strategy.

use casemix_core::domain::*;
use proptest::prelude::*;

pub fn profile(icu: f64, surgery: f64, postop: f64, wards: &[&str]) -> Profile {
    Profile {
        t_surgery: surgery,
        t_postop: postop,
        t_icu: icu,
        ward_options: wards.iter().map(|w| w.to_string()).collect(),
    }
}

pub fn expected_config() -> HospitalConfig {
    HospitalConfig {
        icu_beds: 5,
        theatres: 10,
        wards: [2, 5, 10, 14, 3]
            .iter()
            .enumerate()
            .map(|(i, &beds)| Ward {
                name: format!("Ward {}", i + 1),
                beds,
            })
            .collect(),
    }
}

pub fn expected_catalog() -> PatientCatalog {
    let st = |name: &str, p: Profile, rev: f64| SubType {
        name: name.into(),
        profile: p,
        revenue: Some(rev),
    };
    let ty = |name: &str, subs: Vec<SubType>| PatientType {
        name: name.into(),
        sub_types: subs,
    };
    PatientCatalog {
        types: vec![
            ty(
                "Specialty 1",
                vec![
                    st("Specialty 1-1", profile(0.0, 1.2, 17.86, &["Ward 1"]), 1000.0),
                    st("Specialty 1-2", profile(6.0, 1.25, 8.35, &["Ward 1"]), 1500.0),
                ],
            ),
            ty(
                "Specialty 2",
                vec![st(
                    "Specialty 2-1",
                    profile(0.0, 2.4, 16.31, &["Ward 2", "Ward 1", "Ward 5"]),
                    600.0,
                )],
            ),
            ty(
                "Specialty 3",
                vec![
                    st("Specialty 3-1", profile(0.0, 6.5, 12.94, &["Ward 3"]), 2500.0),
                    st("Specialty 3-2", profile(0.0, 4.56, 12.39, &["Ward 3"]), 6000.0),
                    st("Specialty 3-3", profile(0.0, 7.6, 5.54, &["Ward 3"]), 3700.0),
                ],
            ),
            ty(
                "Specialty 4",
                vec![st("Specialty 4-1", profile(0.0, 3.4, 18.99, &["Ward 4"]), 10000.0)],
            ),
            ty(
                "Specialty 5",
                vec![st(
                    "Specialty 5-1",
                    profile(12.0, 4.1, 22.81, &["Ward 5", "Ward 4"]),
                    5500.0,
                )],
            ),
        ],
    }
}

pub fn alloc_entry(g: usize, p: usize, k: usize, ward: &str, count: f64) -> AllocationEntry {
    AllocationEntry {
        type_id: g,
        sub_type_id: p,
        option: k,
        ward: ward.into(),
        count,
    }
}

pub fn name() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ._()-]{0,12}"
}

pub fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..1000).prop_map(f64::from),
        0.0..1e4f64,
        (0u32..100_000).prop_map(|v| v as f64 / 100.0),
    ]
}

pub fn bundle() -> impl Strategy<Value = ProjectBundle> {
    let wards = prop::collection::vec((name(), 0u32..50), 1..6);
    let shape = prop::collection::vec(1usize..4, 1..5);
    (wards, shape, name(), 0u32..20, 0u32..30).prop_flat_map(|(wards, shape, project, icu, theatres)| {
        let n_wards = wards.len();
        let subs: usize = shape.iter().sum();
        let profiles = prop::collection::vec(
            (
                value(),
                value(),
                value(),
                prop::collection::vec(0..n_wards, 1..=n_wards.min(3)),
                prop::option::of(-100.0..1e5f64),
                name(),
            ),
            subs,
        );
        let types = prop::collection::vec(name(), shape.len());
        let case_mix = prop::collection::vec(0.0..100.0f64, shape.len());
        let sub_mix = prop::collection::vec(0.0..100.0f64, subs);
        let flat = prop::collection::vec(value(), subs);
        let type_targets = prop::option::of(prop::collection::vec(value(), shape.len()));
        let has = prop::collection::vec(any::<bool>(), 5);
        (
            Just((wards, shape, project, icu, theatres)),
            profiles,
            types,
            (case_mix, sub_mix),
            (flat, type_targets, prop::collection::vec(value(), subs)),
            has,
        )
            .prop_map(|((wards, shape, project, icu, theatres), profiles, types, (cm, sm), (sess_t, tt, alloc_v), has)| {
                let config = HospitalConfig {
                    icu_beds: icu,
                    theatres,
                    wards: wards
                        .into_iter()
                        .enumerate()
                        .map(|(i, (n, beds))| Ward {
                            name: format!("{n}#{i}"),
                            beds,
                        })
                        .collect(),
                };
                let mut it = profiles.into_iter();
                let catalog = PatientCatalog {
                    types: types
                        .into_iter()
                        .zip(&shape)
                        .map(|(tn, &n)| PatientType {
                            name: tn,
                            sub_types: (0..n)
                                .map(|_| {
                                    let (icu, sur, post, opts, rev, sn) = it.next().unwrap();
                                    let mut opts: Vec<usize> = opts;
                                    opts.dedup();
                                    SubType {
                                        name: sn,
                                        profile: Profile {
                                            t_surgery: sur,
                                            t_postop: post,
                                            t_icu: icu,
                                            ward_options: opts
                                                .iter()
                                                .map(|&w| config.wards[w].name.clone())
                                                .collect(),
                                        },
                                        revenue: rev,
                                    }
                                })
                                .collect(),
                        })
                        .collect(),
                };
                let split = |flat: &[f64]| {
                    let mut at = 0;
                    shape
                        .iter()
                        .map(|&n| {
                            at += n;
                            flat[at - n..at].to_vec()
                        })
                        .collect::<Vec<_>>()
                };
                let mix = Mix {
                    case_mix: cm,
                    sub_mix: split(&sm),
                };
                let sessions = SessionAssignment {
                    sessions: sess_t[..shape.len()].to_vec(),
                };
                let targets = TargetSet {
                    types: tt,
                    sub_types: has[4].then(|| split(&sess_t)),
                    weights: Vec::new(),
                };
                let allocation = Allocation {
                    entries: catalog
                        .iter_sub_types()
                        .zip(&alloc_v)
                        .map(|((g, p, st), &v)| AllocationEntry {
                            type_id: g + 1,
                            sub_type_id: p + 1,
                            option: st.profile.ward_options.len(),
                            ward: st.profile.ward_options.last().unwrap().clone(),
                            count: v,
                        })
                        .collect(),
                };
                ProjectBundle {
                    project_name: project,
                    config,
                    catalog,
                    mix: has[0].then_some(mix),
                    sessions: has[1].then_some(sessions),
                    targets: has[2].then_some(targets),
                    allocation: has[3].then_some(allocation),
                }
            })
    })
}
