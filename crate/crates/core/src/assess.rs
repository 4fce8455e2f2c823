//! Static capacity estimates and utilization accounting.
//!
//! Theatre time charges surgery hours, ICU charges ICU hours, and the
//! recovery ward charges surgery plus postop hours because the bed is held
//! while the patient is in theatre.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Allocation, MssTemplate, PatientCatalog, ProjectBundle, SessionAssignment, MIX_TOL};

/// A resource at or above this percentage is a bottleneck.
pub const BOTTLENECK_PERCENT: f64 = 100.0 - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssessError {
    #[error("sub mix of type {type_id} sums to {sum}%, must be 100%")]
    UnnormalizedSubMix { type_id: usize, sum: f64 },
    #[error("case mix sums to {sum}%, must be 100%")]
    UnnormalizedCaseMix { sum: f64 },
    #[error("{0}")]
    Shape(String),
    #[error("project has no {0}")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ResourceKind {
    Theatre,
    Icu,
    Ward,
    AllWards,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceUsage {
    pub name: String,
    pub kind: ResourceKind,
    /// Theatres, ICU beds or ward beds.
    pub spaces: u32,
    pub used_hours: f64,
    pub available_hours: f64,
    /// `None` when nothing is available.
    pub percent_used: Option<f64>,
    pub patients_treated: f64,
    pub bottleneck: bool,
}

impl ResourceUsage {
    fn new(name: &str, kind: ResourceKind, spaces: u32, used: f64, available: f64, treated: f64) -> Self {
        let percent_used = (available > 0.0).then(|| 100.0 * used / available);
        let bottleneck = match percent_used {
            Some(p) => p >= BOTTLENECK_PERCENT,
            None => used > 0.0,
        };
        ResourceUsage {
            name: name.to_string(),
            kind,
            spaces,
            used_hours: used,
            available_hours: available,
            percent_used,
            patients_treated: treated,
            bottleneck,
        }
    }

    /// Hours used beyond availability, zero when within capacity.
    pub fn excess_hours(&self) -> f64 {
        (self.used_hours - self.available_hours).max(0.0)
    }
}

/// Rows in display order: theatres, ICU, each ward, all wards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UtilizationReport {
    pub rows: Vec<ResourceUsage>,
}

impl UtilizationReport {
    pub fn row(&self, name: &str) -> Option<&ResourceUsage> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn theatre(&self) -> &ResourceUsage {
        &self.rows[0]
    }

    pub fn icu(&self) -> &ResourceUsage {
        &self.rows[1]
    }

    pub fn wards(&self) -> &[ResourceUsage] {
        &self.rows[2..self.rows.len() - 1]
    }

    pub fn all_wards(&self) -> &ResourceUsage {
        self.rows.last().expect("report always has an all-wards row")
    }

    pub fn bottlenecks(&self) -> impl Iterator<Item = &ResourceUsage> {
        self.rows.iter().filter(|r| r.bottleneck)
    }

    /// Resources used beyond availability by more than `tol` relative hours.
    /// The aggregate row is left out: it can only exceed if a ward does.
    pub fn overused(&self, tol: f64) -> impl Iterator<Item = &ResourceUsage> {
        self.rows.iter().filter(move |r| {
            r.kind != ResourceKind::AllWards && r.used_hours > r.available_hours + tol * (1.0 + r.available_hours)
        })
    }
}

/// Patients of sub-type `(g, p)` recovering in ward option `k`, indexed
/// `[g][p][k]` from zero.
pub type WardSplit = Vec<Vec<Vec<f64>>>;

pub fn empty_split(catalog: &PatientCatalog) -> WardSplit {
    catalog
        .types
        .iter()
        .map(|t| t.sub_types.iter().map(|s| vec![0.0; s.profile.ward_options.len()]).collect())
        .collect()
}

/// All patients of each sub-type in its first ward option.
pub fn first_option_split(catalog: &PatientCatalog, sub_types: &[Vec<f64>]) -> WardSplit {
    let mut split = empty_split(catalog);
    for (g, p, _) in catalog.iter_sub_types() {
        if let Some(first) = split[g][p].first_mut() {
            *first = sub_types[g][p];
        }
    }
    split
}

pub fn split_of(catalog: &PatientCatalog, allocation: &Allocation) -> WardSplit {
    let mut split = empty_split(catalog);
    for e in &allocation.entries {
        if let Some(slot) = split
            .get_mut(e.type_id.wrapping_sub(1))
            .and_then(|t| t.get_mut(e.sub_type_id.wrapping_sub(1)))
            .and_then(|s| s.get_mut(e.option.wrapping_sub(1)))
        {
            *slot += e.count;
        }
    }
    split
}

/// Allocation entries for every ward option, zeros included.
pub fn allocation_of(catalog: &PatientCatalog, split: &WardSplit) -> Allocation {
    let mut entries = Vec::new();
    for (g, p, st) in catalog.iter_sub_types() {
        for (k, ward) in st.profile.ward_options.iter().enumerate() {
            entries.push(crate::domain::AllocationEntry {
                type_id: g + 1,
                sub_type_id: p + 1,
                option: k + 1,
                ward: ward.clone(),
                count: split[g][p][k],
            });
        }
    }
    Allocation { entries }
}

/// Resource usage of a cohort whose recovery stays are placed by `split`.
/// Theatre and ICU load follow the sub-type counts; ward load follows the
/// split.
pub fn utilization(bundle: &ProjectBundle, mss: &MssTemplate, sub_types: &[Vec<f64>], split: &WardSplit) -> UtilizationReport {
    let config = &bundle.config;
    let catalog = &bundle.catalog;
    let mut ot_used = 0.0;
    let mut ot_treated = 0.0;
    let mut icu_used = 0.0;
    let mut icu_treated = 0.0;
    let mut ward_used = vec![0.0; config.wards.len()];
    let mut ward_treated = vec![0.0; config.wards.len()];
    for (g, p, st) in catalog.iter_sub_types() {
        let pr = &st.profile;
        let n = sub_types[g][p];
        ot_used += n * pr.t_surgery;
        if pr.t_surgery > 0.0 {
            ot_treated += n;
        }
        icu_used += n * pr.t_icu;
        if pr.t_icu > 0.0 {
            icu_treated += n;
        }
        for (k, ward) in pr.ward_options.iter().enumerate() {
            if let Some(w) = config.ward_index(ward) {
                let beta = split[g][p][k];
                ward_used[w] += beta * pr.ward_hours();
                ward_treated[w] += beta;
            }
        }
    }

    let mut rows = vec![
        ResourceUsage::new("OT", ResourceKind::Theatre, mss.theatres, ot_used, mss.theatre_hours(), ot_treated),
        ResourceUsage::new(
            "ICU",
            ResourceKind::Icu,
            config.icu_beds,
            icu_used,
            mss.ward_hours(config.icu_beds),
            icu_treated,
        ),
    ];
    for (w, ward) in config.wards.iter().enumerate() {
        rows.push(ResourceUsage::new(
            &ward.name,
            ResourceKind::Ward,
            ward.beds,
            ward_used[w],
            mss.ward_hours(ward.beds),
            ward_treated[w],
        ));
    }
    rows.push(ResourceUsage::new(
        "ALL WARDS",
        ResourceKind::AllWards,
        config.total_beds(),
        ward_used.iter().sum(),
        mss.ward_hours(config.total_beds()),
        ward_treated.iter().sum(),
    ));
    UtilizationReport { rows }
}

/// Usage implied by an explicit allocation. Over-use is reported, not
/// rejected.
pub fn utilization_of(bundle: &ProjectBundle, allocation: &Allocation, mss: &MssTemplate) -> UtilizationReport {
    let split = split_of(&bundle.catalog, allocation);
    let subs = sub_type_totals(&split);
    utilization(bundle, mss, &subs, &split)
}

/// Patients per sub-type in a split.
pub fn sub_type_totals(split: &WardSplit) -> Vec<Vec<f64>> {
    split
        .iter()
        .map(|t| t.iter().map(|s| s.iter().sum()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Revenue {
    pub per_type: Vec<f64>,
    pub total: f64,
}

/// Revenue of a cohort. Sub-types without a revenue count as zero and are
/// named in the returned warnings.
pub fn revenue_of(sub_types: &[Vec<f64>], catalog: &PatientCatalog) -> (Revenue, Vec<String>) {
    let mut warnings = Vec::new();
    let mut per_type = vec![0.0; catalog.types.len()];
    for (g, p, st) in catalog.iter_sub_types() {
        let n = sub_types.get(g).and_then(|r| r.get(p)).copied().unwrap_or(0.0);
        match st.revenue {
            Some(r) => per_type[g] += n * r,
            None => warnings.push(format!("no revenue for {} [{}][{}], counted as 0", st.name, g + 1, p + 1)),
        }
    }
    let total = per_type.iter().sum();
    (Revenue { per_type, total }, warnings)
}

/// A patient cohort with the resources it uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CohortResult {
    pub total: f64,
    pub types: Vec<f64>,
    pub sub_types: Vec<Vec<f64>>,
    pub allocation: Allocation,
    pub report: UtilizationReport,
    pub revenue: Revenue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CohortResult {
    pub fn build(
        bundle: &ProjectBundle,
        mss: &MssTemplate,
        sub_types: Vec<Vec<f64>>,
        split: &WardSplit,
        mut warnings: Vec<String>,
    ) -> Self {
        let types: Vec<f64> = sub_types.iter().map(|r| r.iter().sum()).collect();
        let report = utilization(bundle, mss, &sub_types, split);
        let (revenue, rw) = revenue_of(&sub_types, &bundle.catalog);
        warnings.extend(rw);
        CohortResult {
            total: types.iter().sum(),
            types,
            allocation: allocation_of(&bundle.catalog, split),
            sub_types,
            report,
            revenue,
            warnings,
        }
    }
}

fn check_sub_mix(catalog: &PatientCatalog, sub_mix: &[Vec<f64>]) -> Result<(), AssessError> {
    if sub_mix.len() != catalog.types.len()
        || sub_mix.iter().map(Vec::len).ne(catalog.types.iter().map(|t| t.sub_types.len()))
    {
        return Err(AssessError::Shape("sub mix does not match the patient catalog".into()));
    }
    for (g, row) in sub_mix.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 100.0).abs() > MIX_TOL {
            return Err(AssessError::UnnormalizedSubMix { type_id: g + 1, sum });
        }
    }
    Ok(())
}

/// Sub-type hours weighted by the sub mix, `sum_p mu_gp * f(profile)`.
fn weighted(catalog: &PatientCatalog, sub_mix: &[Vec<f64>], g: usize, f: impl Fn(&crate::domain::Profile) -> f64) -> f64 {
    catalog.types[g]
        .sub_types
        .iter()
        .zip(&sub_mix[g])
        .map(|(s, mu)| mu / 100.0 * f(&s.profile))
        .sum()
}

fn split_by_mix(sub_mix: &[Vec<f64>], types: &[f64]) -> Vec<Vec<f64>> {
    sub_mix
        .iter()
        .zip(types)
        .map(|(row, n)| row.iter().map(|mu| mu / 100.0 * n).collect())
        .collect()
}

/// Patients treatable when each type fills exactly its assigned sessions.
pub fn basic_by_theatre(
    bundle: &ProjectBundle,
    sessions: &SessionAssignment,
    sub_mix: &[Vec<f64>],
    mss: &MssTemplate,
) -> Result<CohortResult, AssessError> {
    let catalog = &bundle.catalog;
    check_sub_mix(catalog, sub_mix)?;
    if sessions.sessions.len() != catalog.types.len() {
        return Err(AssessError::Shape("one session count per patient type expected".into()));
    }
    let mut warnings = Vec::new();
    let types: Vec<f64> = (0..catalog.types.len())
        .map(|g| {
            let m = sessions.sessions[g];
            let hours = weighted(catalog, sub_mix, g, |p| p.t_surgery);
            if m <= 0.0 {
                0.0
            } else if hours <= 0.0 {
                warnings.push(format!(
                    "{} needs no theatre time and is unbounded by theatre; excluded",
                    catalog.types[g].name
                ));
                0.0
            } else {
                m * mss.session_hours / hours
            }
        })
        .collect();
    let unassigned = sessions.unassigned(mss.sessions());
    if unassigned > 0.0 {
        warnings.push(format!("{unassigned} sessions are unassigned"));
    }
    let subs = split_by_mix(sub_mix, &types);
    let split = first_option_split(catalog, &subs);
    Ok(CohortResult::build(bundle, mss, subs, &split, warnings))
}

/// Patients treatable when each type, on its own, fills the first-choice
/// wards of its sub-types. The tightest ward decides.
pub fn basic_by_beds(bundle: &ProjectBundle, sub_mix: &[Vec<f64>], mss: &MssTemplate) -> Result<CohortResult, AssessError> {
    let catalog = &bundle.catalog;
    let config = &bundle.config;
    check_sub_mix(catalog, sub_mix)?;
    let mut warnings = Vec::new();
    let mut types = Vec::with_capacity(catalog.types.len());
    for (g, t) in catalog.types.iter().enumerate() {
        let mut load = vec![0.0; config.wards.len()];
        for (st, mu) in t.sub_types.iter().zip(&sub_mix[g]) {
            if let Some(w) = st.profile.ward_options.first().and_then(|w| config.ward_index(w)) {
                load[w] += mu / 100.0 * st.profile.ward_hours();
            }
        }
        let mut bound = f64::INFINITY;
        for (w, &l) in load.iter().enumerate() {
            if l <= 0.0 {
                continue;
            }
            let avail = mss.ward_hours(config.wards[w].beds);
            if avail <= 0.0 {
                warnings.push(format!("{} has no beds but hosts {}; type set to 0", config.wards[w].name, t.name));
            }
            bound = bound.min(avail / l);
        }
        if bound.is_infinite() {
            warnings.push(format!("{} uses no ward time and is unbounded by beds; excluded", t.name));
            bound = 0.0;
        }
        types.push(bound);
    }
    let subs = split_by_mix(sub_mix, &types);
    let split = first_option_split(catalog, &subs);
    Ok(CohortResult::build(bundle, mss, subs, &split, warnings))
}

/// Sessions needed to treat type-level targets split by the sub mix.
pub fn sessions_for_type_targets(targets: &[f64], sub_mix: &[Vec<f64>], catalog: &PatientCatalog, session_hours: f64) -> Vec<f64> {
    targets
        .iter()
        .enumerate()
        .map(|(g, n)| n * weighted(catalog, sub_mix, g, |p| p.t_surgery) / session_hours)
        .collect()
}

/// Sessions needed to treat sub-type targets.
pub fn sessions_for_sub_type_targets(targets: &[Vec<f64>], catalog: &PatientCatalog, session_hours: f64) -> Vec<f64> {
    catalog
        .types
        .iter()
        .zip(targets)
        .map(|(t, row)| {
            t.sub_types
                .iter()
                .zip(row)
                .map(|(s, n)| n * s.profile.t_surgery)
                .sum::<f64>()
                / session_hours
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottleneck_threshold() {
        let r = ResourceUsage::new("x", ResourceKind::Ward, 1, 99.9999995, 100.0, 1.0);
        assert!(r.bottleneck);
        let r = ResourceUsage::new("x", ResourceKind::Ward, 1, 99.99, 100.0, 1.0);
        assert!(!r.bottleneck);
        let r = ResourceUsage::new("x", ResourceKind::Ward, 0, 1.0, 0.0, 1.0);
        assert!(r.bottleneck && r.percent_used.is_none());
        let r = ResourceUsage::new("x", ResourceKind::Ward, 0, 0.0, 0.0, 0.0);
        assert!(!r.bottleneck);
    }
}
