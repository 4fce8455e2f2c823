//! Seeded synthetic hospitals.
//!
//! Durations and revenues are drawn from ranges of the same magnitude as
//! the small worked scenario: surgery 0.5 to 12 h, ward stay 5 to 23 h, and
//! for one sub-type in five an ICU stay of 1 to 8 h. All values are rounded
//! to two decimals so they survive the text formats unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    normalize_mix, Allocation, AllocationEntry, DomainError, HospitalConfig, Mix, MssTemplate,
    PatientCatalog, PatientType, Profile, ProjectBundle, SessionAssignment, SubType, TargetSet,
    Ward,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scale {
    pub types: usize,
    pub min_sub_types: usize,
    pub max_sub_types: usize,
    pub wards: usize,
    pub min_beds: u32,
    pub max_beds: u32,
}

impl Scale {
    /// A large teaching hospital: 21 specialties, about 300 sub-types.
    pub fn large() -> Self {
        Scale {
            types: 21,
            min_sub_types: 2,
            max_sub_types: 30,
            wards: 30,
            min_beds: 10,
            max_beds: 40,
        }
    }

    pub fn small() -> Self {
        Scale {
            types: 5,
            min_sub_types: 1,
            max_sub_types: 3,
            wards: 5,
            min_beds: 2,
            max_beds: 14,
        }
    }

    fn check(&self) -> Result<(), DomainError> {
        if self.types == 0 {
            return Err(DomainError::Invalid("scale needs at least one patient type".into()));
        }
        if self.wards == 0 {
            return Err(DomainError::Invalid("scale needs at least one ward".into()));
        }
        if self.min_sub_types == 0 || self.min_sub_types > self.max_sub_types {
            return Err(DomainError::Invalid(format!(
                "sub-type range {}..={} is empty or starts at zero",
                self.min_sub_types, self.max_sub_types
            )));
        }
        if self.min_beds > self.max_beds {
            return Err(DomainError::Invalid("bed range is empty".into()));
        }
        Ok(())
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn percentages(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1..=100) as f64).collect();
    normalize_mix(&raw).expect("positive entries").1
}

/// Builds a complete bundle (all optional components present) from `seed`.
pub fn generate_instance(seed: u64, scale: &Scale) -> Result<ProjectBundle, DomainError> {
    scale.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let wards: Vec<Ward> = (1..=scale.wards)
        .map(|w| Ward {
            name: format!("Ward {w}"),
            beds: rng.random_range(scale.min_beds..=scale.max_beds),
        })
        .collect();
    let config = HospitalConfig {
        icu_beds: rng.random_range(2..=(2 + scale.types as u32)),
        theatres: scale.types as u32,
        wards,
    };

    let mut types = Vec::with_capacity(scale.types);
    for g in 1..=scale.types {
        let n = rng.random_range(scale.min_sub_types..=scale.max_sub_types);
        let home = rng.random_range(0..scale.wards);
        let sub_types = (1..=n)
            .map(|p| {
                let extra = rng.random_range(0..=2usize).min(scale.wards - 1);
                let mut options = vec![home];
                while options.len() < 1 + extra {
                    let w = rng.random_range(0..scale.wards);
                    if !options.contains(&w) {
                        options.push(w);
                    }
                }
                let t_icu = if rng.random_bool(0.2) {
                    round2(rng.random_range(1.0..=8.0))
                } else {
                    0.0
                };
                SubType {
                    name: format!("Specialty {g}-{p}"),
                    profile: Profile {
                        t_surgery: round2(rng.random_range(0.5..=12.0)),
                        t_postop: round2(rng.random_range(5.0..=23.0)),
                        t_icu,
                        ward_options: options.iter().map(|&w| format!("Ward {}", w + 1)).collect(),
                    },
                    revenue: Some(rng.random_range(5..=100) as f64 * 100.0),
                }
            })
            .collect();
        types.push(PatientType {
            name: format!("Specialty {g}"),
            sub_types,
        });
    }
    let catalog = PatientCatalog { types };

    let shape = catalog.shape();
    let mix = Mix {
        case_mix: percentages(&mut rng, shape.len()),
        sub_mix: shape.iter().map(|&n| percentages(&mut rng, n)).collect(),
    };
    let mss = MssTemplate::standard(&config, 1);
    let sessions = SessionAssignment::even(shape.len(), mss.sessions());
    let sub_targets: Vec<Vec<f64>> = shape
        .iter()
        .map(|&n| (0..n).map(|_| rng.random_range(0..=20) as f64).collect())
        .collect();
    let targets = TargetSet {
        types: Some(sub_targets.iter().map(|r| r.iter().sum()).collect()),
        sub_types: Some(sub_targets),
        weights: Vec::new(),
    };
    let allocation = Allocation {
        entries: catalog
            .iter_sub_types()
            .flat_map(|(g, p, st)| {
                st.profile
                    .ward_options
                    .iter()
                    .enumerate()
                    .map(move |(k, w)| (g, p, k, w.clone()))
            })
            .map(|(g, p, k, ward)| AllocationEntry {
                type_id: g + 1,
                sub_type_id: p + 1,
                option: k + 1,
                ward,
                count: round2(rng.random_range(0.0..=5.0)),
            })
            .collect(),
    };

    Ok(ProjectBundle {
        project_name: format!("synthetic_{seed}"),
        config,
        catalog,
        mix: Some(mix),
        sessions: Some(sessions),
        targets: Some(targets),
        allocation: Some(allocation),
    })
}
