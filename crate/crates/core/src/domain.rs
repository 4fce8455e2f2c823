//! Hospital, patient and schedule data.
//!
//! Indices follow the file formats where they are visible to users: types,
//! sub-types, wards and ward options are numbered from 1 in allocation
//! entries. Everything stored positionally (mix, sessions, targets) is
//! indexed from 0 in code.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bed hours available per bed per week.
pub const HOURS_PER_WEEK: f64 = 168.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("degenerate mix: all entries are zero")]
    DegenerateMix,
    #[error("negative {what}: {value}")]
    Negative { what: String, value: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Ward {
    pub name: String,
    pub beds: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HospitalConfig {
    pub icu_beds: u32,
    pub theatres: u32,
    pub wards: Vec<Ward>,
}

impl HospitalConfig {
    pub fn ward_index(&self, name: &str) -> Option<usize> {
        self.wards.iter().position(|w| w.name == name)
    }

    pub fn total_beds(&self) -> u32 {
        self.wards.iter().map(|w| w.beds).sum()
    }
}

/// Hours of each resource one patient of a sub-type consumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Profile {
    pub t_surgery: f64,
    pub t_postop: f64,
    pub t_icu: f64,
    /// Candidate recovery wards, most preferred first.
    pub ward_options: Vec<String>,
}

impl Profile {
    /// Bed hours charged to the recovery ward: the bed is held during surgery.
    pub fn ward_hours(&self) -> f64 {
        self.t_surgery + self.t_postop
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubType {
    pub name: String,
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revenue: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatientType {
    pub name: String,
    pub sub_types: Vec<SubType>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatientCatalog {
    pub types: Vec<PatientType>,
}

impl PatientCatalog {
    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn sub_type_count(&self) -> usize {
        self.types.iter().map(|t| t.sub_types.len()).sum()
    }

    /// Sub-type counts per type, the shape of every per-sub-type table.
    pub fn shape(&self) -> Vec<usize> {
        self.types.iter().map(|t| t.sub_types.len()).collect()
    }

    pub fn sub_type(&self, g: usize, p: usize) -> &SubType {
        &self.types[g].sub_types[p]
    }

    /// `(g, p, sub-type)` for every sub-type in file order (0-based).
    pub fn iter_sub_types(&self) -> impl Iterator<Item = (usize, usize, &SubType)> {
        self.types
            .iter()
            .enumerate()
            .flat_map(|(g, t)| t.sub_types.iter().enumerate().map(move |(p, s)| (g, p, s)))
    }

    /// Display name used in allocation descriptions, e.g. `Specialty 2-1@Ward 5`.
    pub fn allocation_descr(&self, g: usize, p: usize, ward: &str) -> String {
        format!("{}@{}", self.sub_type(g, p).name, ward)
    }
}

/// Master surgical schedule template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MssTemplate {
    pub weeks: u32,
    pub days_per_week: u32,
    pub sessions_per_day: u32,
    pub session_hours: f64,
    pub theatres: u32,
}

impl MssTemplate {
    /// Five days, two four hour sessions a day, all configured theatres.
    pub fn standard(config: &HospitalConfig, weeks: u32) -> Self {
        MssTemplate {
            weeks,
            days_per_week: 5,
            sessions_per_day: 2,
            session_hours: 4.0,
            theatres: config.theatres,
        }
    }

    /// Total number of theatre sessions `M`.
    pub fn sessions(&self) -> u64 {
        self.weeks as u64
            * self.days_per_week as u64
            * self.sessions_per_day as u64
            * self.theatres as u64
    }

    pub fn theatre_hours(&self) -> f64 {
        self.sessions() as f64 * self.session_hours
    }

    /// Hours one bed is available over the planning horizon.
    pub fn hours_per_bed(&self) -> f64 {
        HOURS_PER_WEEK * self.weeks as f64
    }

    pub fn ward_hours(&self, beds: u32) -> f64 {
        self.hours_per_bed() * beds as f64
    }
}

/// Percentages, stored 0 to 100.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Mix {
    pub case_mix: Vec<f64>,
    pub sub_mix: Vec<Vec<f64>>,
}

/// Tolerance on a mix sum before it counts as unnormalized.
pub const MIX_TOL: f64 = 1e-6;

impl Mix {
    /// Every type weighted equally, every sub mix split evenly.
    pub fn even(catalog: &PatientCatalog) -> Self {
        let shape = catalog.shape();
        Mix {
            case_mix: even_split(shape.len()),
            sub_mix: shape.iter().map(|&n| even_split(n)).collect(),
        }
    }

    pub fn case_error(&self) -> f64 {
        mix_error(&self.case_mix)
    }

    pub fn sub_error(&self, g: usize) -> f64 {
        mix_error(&self.sub_mix[g])
    }

    /// First sub mix whose percentages do not sum to 100.
    pub fn first_bad_sub_mix(&self) -> Option<(usize, f64)> {
        self.sub_mix
            .iter()
            .enumerate()
            .map(|(g, s)| (g, mix_sum(s)))
            .find(|&(_, sum)| (sum - 100.0).abs() > MIX_TOL)
    }

    /// Case mix share of type `g` as a fraction.
    pub fn case_fraction(&self, g: usize) -> f64 {
        self.case_mix[g] / 100.0
    }

    pub fn sub_fraction(&self, g: usize, p: usize) -> f64 {
        self.sub_mix[g][p] / 100.0
    }
}

fn mix_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `|sum - 100|`.
pub fn mix_error(values: &[f64]) -> f64 {
    (mix_sum(values) - 100.0).abs()
}

/// Splits 100 evenly over `n` entries at two decimals.
pub fn even_split(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    normalize_mix(&vec![1.0; n]).expect("non-zero").1
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Rescales percentages to sum to 100, returning the original error too.
///
/// Rescaled entries are rounded to two decimals and the rounding residual
/// is absorbed by the largest entry. A list already summing to 100 is
/// returned untouched.
pub fn normalize_mix(values: &[f64]) -> Result<(f64, Vec<f64>), DomainError> {
    if let Some(&v) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
        return Err(DomainError::Negative {
            what: "mix percentage".into(),
            value: v,
        });
    }
    let sum = mix_sum(values);
    if sum <= 0.0 {
        return Err(DomainError::DegenerateMix);
    }
    let error = (sum - 100.0).abs();
    if error <= 1e-9 {
        return Ok((error, values.to_vec()));
    }
    let mut out: Vec<f64> = values.iter().map(|&v| round2(100.0 * v / sum)).collect();
    let residual = 100.0 - mix_sum(&out);
    let largest = (0..out.len())
        .max_by(|&a, &b| out[a].total_cmp(&out[b]).then(b.cmp(&a)))
        .expect("non-empty");
    out[largest] = round2(out[largest] + residual);
    Ok((error, out))
}

/// Theatre sessions assigned to each patient type. Fractions are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionAssignment {
    pub sessions: Vec<f64>,
}

impl SessionAssignment {
    pub fn total(&self) -> f64 {
        self.sessions.iter().sum()
    }

    /// Sessions left unassigned out of `available`, never negative.
    pub fn unassigned(&self, available: u64) -> f64 {
        (available as f64 - self.total()).max(0.0)
    }

    /// Splits `available` sessions as evenly as possible in whole sessions,
    /// earlier types taking the remainder.
    pub fn even(types: usize, available: u64) -> Self {
        if types == 0 {
            return SessionAssignment { sessions: Vec::new() };
        }
        let base = available / types as u64;
        let extra = (available % types as u64) as usize;
        SessionAssignment {
            sessions: (0..types)
                .map(|g| (base + u64::from(g < extra)) as f64)
                .collect(),
        }
    }

    /// Sessions implied by a case mix: `m_g = mu_g * M`.
    pub fn from_case_mix(mix: &Mix, available: u64) -> Self {
        SessionAssignment {
            sessions: (0..mix.case_mix.len())
                .map(|g| mix.case_fraction(g) * available as f64)
                .collect(),
        }
    }
}

/// Planner targets at type and/or sub-type level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_types: Option<Vec<Vec<f64>>>,
    /// Per-type weights; missing entries are one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
}

impl TargetSet {
    pub fn weight(&self, g: usize) -> f64 {
        self.weights.get(g).copied().unwrap_or(1.0)
    }

    /// Raises each type target to at least the sum of its sub-type targets.
    pub fn consistency_update(&mut self) {
        if let (Some(types), Some(subs)) = (&mut self.types, &self.sub_types) {
            for (t, s) in types.iter_mut().zip(subs) {
                *t = t.max(s.iter().sum());
            }
        }
    }

    pub fn consistent(&self) -> TargetSet {
        let mut t = self.clone();
        t.consistency_update();
        t
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let all = self
            .types
            .iter()
            .flatten()
            .chain(self.sub_types.iter().flatten().flatten());
        for &v in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(DomainError::Negative {
                    what: "target".into(),
                    value: v,
                });
            }
        }
        for &w in &self.weights {
            if !(w > 0.0 && w.is_finite()) {
                return Err(DomainError::Invalid(format!("weight must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Count of one sub-type's recovery stays placed on one of its ward options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AllocationEntry {
    /// 1-based patient type.
    pub type_id: usize,
    /// 1-based sub-type within the type.
    pub sub_type_id: usize,
    /// 1-based position in the sub-type's ward options.
    pub option: usize,
    pub ward: String,
    pub count: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Allocation {
    pub entries: Vec<AllocationEntry>,
}

impl Allocation {
    /// Patients per sub-type implied by the allocation.
    pub fn sub_type_counts(&self, catalog: &PatientCatalog) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = catalog.shape().iter().map(|&n| vec![0.0; n]).collect();
        for e in &self.entries {
            if let Some(c) = out
                .get_mut(e.type_id.wrapping_sub(1))
                .and_then(|row| row.get_mut(e.sub_type_id.wrapping_sub(1)))
            {
                *c += e.count;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Allocation {
        Allocation {
            entries: self
                .entries
                .iter()
                .map(|e| AllocationEntry {
                    count: e.count * factor,
                    ..e.clone()
                })
                .collect(),
        }
    }

    /// Checks indices, ward names and counts against the catalog.
    pub fn validate(&self, catalog: &PatientCatalog) -> Result<(), DomainError> {
        for e in &self.entries {
            let tag = format!("[{}][{}][{}]", e.type_id, e.sub_type_id, e.option);
            let sub = catalog
                .types
                .get(e.type_id.wrapping_sub(1))
                .and_then(|t| t.sub_types.get(e.sub_type_id.wrapping_sub(1)))
                .ok_or_else(|| DomainError::Invalid(format!("{tag}: unknown sub-type")))?;
            let listed = sub.profile.ward_options.get(e.option.wrapping_sub(1));
            if listed != Some(&e.ward) {
                return Err(DomainError::Invalid(format!(
                    "{tag}: `{}` is not ward option {} of {}",
                    e.ward, e.option, sub.name
                )));
            }
            if !(e.count >= 0.0 && e.count.is_finite()) {
                return Err(DomainError::Negative {
                    what: format!("allocation count at {tag}"),
                    value: e.count,
                });
            }
        }
        Ok(())
    }
}

/// Everything a project file refers to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectBundle {
    pub project_name: String,
    pub config: HospitalConfig,
    pub catalog: PatientCatalog,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<Mix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<SessionAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
}

impl ProjectBundle {
    /// Structural checks shared by every entry point. Returns one message
    /// per problem, prefixed with the offending field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for w in &self.config.wards {
            if !seen.insert(w.name.as_str()) {
                out.push(format!("config.wards: duplicate ward `{}`", w.name));
            }
        }
        let shape = self.catalog.shape();
        for (g, p, s) in self.catalog.iter_sub_types() {
            let tag = format!("catalog[{}][{}]", g + 1, p + 1);
            let pr = &s.profile;
            for (what, v) in [("surgery", pr.t_surgery), ("postop", pr.t_postop), ("icu", pr.t_icu)] {
                if !(v >= 0.0 && v.is_finite()) {
                    out.push(format!("{tag}: {what} duration must be non-negative, got {v}"));
                }
            }
            if pr.t_postop > 0.0 && pr.ward_options.is_empty() {
                out.push(format!("{tag}: postop time but no ward option"));
            }
            for w in &pr.ward_options {
                if self.config.ward_index(w).is_none() {
                    out.push(format!("{tag}: unknown ward `{w}`"));
                }
            }
        }
        if let Some(mix) = &self.mix {
            if mix.case_mix.len() != shape.len()
                || mix.sub_mix.iter().map(Vec::len).ne(shape.iter().copied())
            {
                out.push("mix: shape does not match the patient catalog".into());
            } else if mix.case_mix.iter().chain(mix.sub_mix.iter().flatten()).any(|v| !(0.0..=100.0).contains(v)) {
                out.push("mix: percentages must lie in [0, 100]".into());
            }
        }
        if let Some(s) = &self.sessions {
            if s.sessions.len() != shape.len() {
                out.push("sessions: one entry per patient type expected".into());
            } else if s.sessions.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                out.push("sessions: counts must be non-negative".into());
            }
        }
        if let Some(t) = &self.targets {
            if t.types.as_ref().is_some_and(|v| v.len() != shape.len())
                || t.sub_types
                    .as_ref()
                    .is_some_and(|v| v.iter().map(Vec::len).ne(shape.iter().copied()))
            {
                out.push("targets: shape does not match the patient catalog".into());
            }
            if let Err(e) = t.validate() {
                out.push(format!("targets: {e}"));
            }
        }
        if let Some(a) = &self.allocation {
            if let Err(e) = a.validate(&self.catalog) {
                out.push(format!("allocation: {e}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        match self.problems().into_iter().next() {
            None => Ok(()),
            Some(p) => Err(DomainError::Invalid(p)),
        }
    }
}

/// One step of a clinical pathway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwayStep {
    pub activity: String,
    pub area: String,
    pub hours: f64,
}

impl PathwayStep {
    pub fn new(activity: &str, area: &str, hours: f64) -> Self {
        PathwayStep {
            activity: activity.into(),
            area: area.into(),
            hours,
        }
    }
}

/// Total hours per area, in order of first appearance.
pub fn pathway_to_profile(pathway: &[PathwayStep]) -> Result<Vec<(String, f64)>, DomainError> {
    let mut out: Vec<(String, f64)> = Vec::new();
    for step in pathway {
        if !(step.hours >= 0.0) {
            return Err(DomainError::Negative {
                what: format!("duration of `{}` in {}", step.activity, step.area),
                value: step.hours,
            });
        }
        match out.iter_mut().find(|(a, _)| *a == step.area) {
            Some((_, h)) => *h += step.hours,
            None => out.push((step.area.clone(), step.hours)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> HospitalConfig {
        HospitalConfig {
            icu_beds: 5,
            theatres: 10,
            wards: vec![Ward { name: "Ward 1".into(), beds: 2 }],
        }
    }

    #[test]
    fn session_counts() {
        let mut mss = MssTemplate::standard(&config(), 1);
        assert_eq!(mss.sessions(), 100);
        assert_eq!(mss.theatre_hours(), 400.0);
        mss.weeks = 4;
        mss.theatres = 21;
        assert_eq!(mss.sessions(), 840);
        mss.weeks = 0;
        assert_eq!(mss.sessions(), 0);
        assert_eq!(MssTemplate::standard(&config(), 1).ward_hours(5), 840.0);
    }

    #[test]
    fn normalize_examples() {
        let (e, v) = normalize_mix(&[5.0, 43.0, 18.0, 9.0, 25.0]).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(v, vec![5.0, 43.0, 18.0, 9.0, 25.0]);
        let (e, v) = normalize_mix(&[50.0, 30.0]).unwrap();
        assert_eq!(e, 20.0);
        assert_eq!(v, vec![62.5, 37.5]);
        let (e, v) = normalize_mix(&[60.0, 30.0]).unwrap();
        assert_eq!(e, 10.0);
        assert_eq!(v, vec![66.67, 33.33]);
        assert_eq!(normalize_mix(&[0.0, 0.0]), Err(DomainError::DegenerateMix));
        assert!(normalize_mix(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn residual_goes_to_the_largest_entry() {
        let (_, v) = normalize_mix(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, vec![33.34, 33.33, 33.33]);
        let (_, v) = normalize_mix(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap();
        assert!((v.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn even_sessions_use_whole_sessions() {
        let s = SessionAssignment::even(3, 100);
        assert_eq!(s.sessions, vec![34.0, 33.0, 33.0]);
        assert_eq!(s.unassigned(100), 0.0);
        assert_eq!(SessionAssignment { sessions: vec![10.0] }.unassigned(4), 0.0);
    }

    #[test]
    fn consistency_update_raises_type_targets() {
        let mut t = TargetSet {
            types: Some(vec![10.0, 5.0]),
            sub_types: Some(vec![vec![4.0, 4.0], vec![3.0, 4.0]]),
            weights: vec![],
        };
        t.consistency_update();
        assert_eq!(t.types, Some(vec![10.0, 7.0]));
    }

    #[test]
    fn pathway_aggregation() {
        let p = [
            PathwayStep::new("preop", "sca", 1.0),
            PathwayStep::new("sur", "ot", 2.0),
            PathwayStep::new("ic", "icu", 3.0),
            PathwayStep::new("postop", "ward", 4.0),
            PathwayStep::new("preop", "ward", 5.0),
            PathwayStep::new("sur", "ot", 6.0),
            PathwayStep::new("pac", "sca", 7.0),
            PathwayStep::new("postop", "ward", 8.0),
        ];
        let mut prof = pathway_to_profile(&p).unwrap();
        assert_eq!(prof[2].0, "icu");
        // As a set the result is {(sca, t1+t7), (ot, t2+t6), (ward, t4+t5+t8), (icu, t3)}.
        prof.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            prof,
            vec![
                ("icu".to_string(), 3.0),
                ("ot".to_string(), 8.0),
                ("sca".to_string(), 8.0),
                ("ward".to_string(), 17.0),
            ]
        );
        let prof = pathway_to_profile(&[
            PathwayStep::new("postop", "w1", 1.0),
            PathwayStep::new("postop", "w1", 2.0),
            PathwayStep::new("postop", "w2", 3.0),
        ])
        .unwrap();
        assert_eq!(prof, vec![("w1".to_string(), 3.0), ("w2".to_string(), 3.0)]);
        assert!(pathway_to_profile(&[PathwayStep::new("sur", "ot", -1.0)]).is_err());
    }
}
