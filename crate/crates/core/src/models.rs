//! Capacity, feasibility and best-fit models.
//!
//! Every model shares one core: a count `n_gp` per sub-type, a count `n_g`
//! per type equal to the sum of its sub-types, and a count `beta_gpk` per
//! ward option of each sub-type that places the recovery stay. Theatres and
//! ICU are pooled; each ward is its own resource.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assess::{self, AssessError, CohortResult, ResourceKind, ResourceUsage, WardSplit};
use crate::domain::{Allocation, Mix, MssTemplate, ProjectBundle, TargetSet, MIX_TOL};
use crate::norms::{norm_distance, Cohort, Level, Norm};
use crate::quadratic::{piecewise_linearize, PwlError};
use crate::solver::{self, Model, ModelError, Objective, Relation, RowId, Sense, Solution, Status, VarId};

/// Absolute tolerance used when classifying solver output.
pub const TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelsError {
    #[error("cannot build model: {0}")]
    Build(String),
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error("model is infeasible: {0}")]
    Infeasible(String),
    #[error("throughput is unbounded; these types consume no limited resource: {}", .types.join(", "))]
    Unbounded { types: Vec<String> },
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
}

impl ModelsError {
    /// True for outcomes that describe the instance rather than a fault.
    pub fn is_infeasible_outcome(&self) -> bool {
        matches!(self, ModelsError::Infeasible(_) | ModelsError::Unbounded { .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WardOptionPolicy {
    FirstOnly,
    #[default]
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Viewpoint {
    /// Case mix fixes each type's share of the whole cohort.
    #[default]
    WholeCohort,
    /// Case mix splits theatre sessions between types.
    SessionPartition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssessmentSpec {
    pub viewpoint: Viewpoint,
    pub ward_options: WardOptionPolicy,
    pub mss: MssTemplate,
    pub mix: Mix,
    /// Per-type lower bounds on patient counts; missing entries are zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub minimums: Vec<f64>,
}

/// The variables and rows of a built model, for reading solutions back.
#[derive(Clone, Debug)]
pub struct CapacityModel {
    pub model: Model<f64>,
    pub total: Option<VarId>,
    pub types: Vec<VarId>,
    pub sub_types: Vec<Vec<VarId>>,
    /// `beta[g][p][k]`, `None` for options the policy leaves out.
    pub beta: Vec<Vec<Vec<Option<VarId>>>>,
    pub theatre_rows: Vec<RowId>,
    pub icu_row: RowId,
    pub ward_rows: Vec<RowId>,
}

impl CapacityModel {
    fn sub_values(&self, sol: &Solution<f64>) -> Vec<Vec<f64>> {
        self.sub_types
            .iter()
            .map(|r| r.iter().map(|&v| sol.value(v).max(0.0)).collect())
            .collect()
    }

    fn split(&self, sol: &Solution<f64>) -> WardSplit {
        self.beta
            .iter()
            .map(|t| {
                t.iter()
                    .map(|s| s.iter().map(|b| b.map_or(0.0, |v| sol.value(v).max(0.0))).collect())
                    .collect()
            })
            .collect()
    }

    /// Secondary objective: fill earlier ward options first.
    fn prefer_early_options(&self) -> Objective<f64> {
        let mut terms = Vec::new();
        for t in &self.beta {
            for s in t {
                for (k, b) in s.iter().enumerate() {
                    if let (Some(v), true) = (b, k > 0) {
                        terms.push((*v, k as f64));
                    }
                }
            }
        }
        Objective::with_terms(Sense::Minimize, terms)
    }

    fn throughput(&self) -> Objective<f64> {
        Objective::with_terms(Sense::Maximize, self.types.iter().map(|&v| (v, 1.0)).collect())
    }
}

/// Which resource rows the core carries. Elastic rows get an excess
/// variable so they can never make the model infeasible.
#[derive(Clone, Copy, PartialEq)]
enum Rows {
    Hard,
    Elastic,
}

fn check_buildable(bundle: &ProjectBundle) -> Result<(), ModelsError> {
    if let Some(p) = bundle.problems().into_iter().next() {
        return Err(ModelsError::Build(p));
    }
    Ok(())
}

/// Sub-type counts, type sums, ward placement, and ICU and ward capacity.
/// Theatre rows are left to the caller.
fn core_model(
    bundle: &ProjectBundle,
    mss: &MssTemplate,
    policy: WardOptionPolicy,
    sense: Sense,
    rows: Rows,
) -> Result<(CapacityModel, Vec<VarId>), ModelsError> {
    check_buildable(bundle)?;
    let config = &bundle.config;
    let catalog = &bundle.catalog;
    let mut m = Model::new(sense);
    let mut types = Vec::new();
    let mut sub_types = Vec::new();
    let mut beta = Vec::new();
    for (g, t) in catalog.types.iter().enumerate() {
        types.push(m.add_nonneg(format!("n[{}]", g + 1)));
        let mut subs = Vec::new();
        let mut betas = Vec::new();
        for (p, st) in t.sub_types.iter().enumerate() {
            subs.push(m.add_nonneg(format!("n[{}][{}]", g + 1, p + 1)));
            let opts = &st.profile.ward_options;
            if st.profile.t_postop > 0.0 && opts.is_empty() {
                return Err(ModelsError::Build(format!("{} has postop time but no ward option", st.name)));
            }
            let used = match policy {
                WardOptionPolicy::All => opts.len(),
                WardOptionPolicy::FirstOnly => opts.len().min(1),
            };
            betas.push(
                (0..opts.len())
                    .map(|k| (k < used).then(|| m.add_nonneg(format!("b[{}][{}]@{}", g + 1, p + 1, opts[k]))))
                    .collect::<Vec<_>>(),
            );
        }
        sub_types.push(subs);
        beta.push(betas);
    }

    for (g, t) in catalog.types.iter().enumerate() {
        let mut coeffs = vec![(types[g], 1.0)];
        coeffs.extend(sub_types[g].iter().map(|&v| (v, -1.0)));
        m.add_constraint(format!("type[{}]", g + 1), coeffs, Relation::Eq, 0.0);
        for (p, _) in t.sub_types.iter().enumerate() {
            let bs: Vec<VarId> = beta[g][p].iter().flatten().copied().collect();
            if beta[g][p].is_empty() {
                continue;
            }
            let mut coeffs = vec![(sub_types[g][p], 1.0)];
            coeffs.extend(bs.iter().map(|&b| (b, -1.0)));
            m.add_constraint(format!("balance[{}][{}]", g + 1, p + 1), coeffs, Relation::Eq, 0.0);
        }
    }

    let mut excess = Vec::new();
    let mut resource_row = |m: &mut Model<f64>, name: String, mut coeffs: Vec<(VarId, f64)>, cap: f64| {
        if rows == Rows::Elastic {
            let e = m.add_nonneg(format!("excess[{name}]"));
            coeffs.push((e, -1.0));
            excess.push(e);
        }
        m.add_constraint(name, coeffs, Relation::Le, cap)
    };

    let icu: Vec<(VarId, f64)> = catalog
        .iter_sub_types()
        .filter(|(_, _, st)| st.profile.t_icu > 0.0)
        .map(|(g, p, st)| (sub_types[g][p], st.profile.t_icu))
        .collect();
    let icu_row = resource_row(&mut m, "ICU".into(), icu, mss.ward_hours(config.icu_beds));

    let mut ward_coeffs: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); config.wards.len()];
    for (g, p, st) in catalog.iter_sub_types() {
        for (k, ward) in st.profile.ward_options.iter().enumerate() {
            if let Some(b) = beta[g][p][k] {
                let w = config.ward_index(ward).expect("validated");
                ward_coeffs[w].push((b, st.profile.ward_hours()));
            }
        }
    }
    let ward_rows = ward_coeffs
        .into_iter()
        .zip(&config.wards)
        .map(|(c, w)| resource_row(&mut m, w.name.clone(), c, mss.ward_hours(w.beds)))
        .collect();

    Ok((
        CapacityModel {
            model: m,
            total: None,
            types,
            sub_types,
            beta,
            theatre_rows: Vec::new(),
            icu_row,
            ward_rows,
        },
        excess,
    ))
}

fn theatre_coeffs(bundle: &ProjectBundle, cm: &CapacityModel, g: Option<usize>) -> Vec<(VarId, f64)> {
    bundle
        .catalog
        .iter_sub_types()
        .filter(|&(h, _, st)| g.is_none_or(|g| g == h) && st.profile.t_surgery > 0.0)
        .map(|(h, p, st)| (cm.sub_types[h][p], st.profile.t_surgery))
        .collect()
}

fn check_mix(bundle: &ProjectBundle, mix: &Mix) -> Result<(), AssessError> {
    let shape = bundle.catalog.shape();
    if mix.case_mix.len() != shape.len() || mix.sub_mix.iter().map(Vec::len).ne(shape.iter().copied()) {
        return Err(AssessError::Shape("mix does not match the patient catalog".into()));
    }
    let sum: f64 = mix.case_mix.iter().sum();
    if (sum - 100.0).abs() > MIX_TOL {
        return Err(AssessError::UnnormalizedCaseMix { sum });
    }
    check_sub_mix(mix)
}

fn check_sub_mix(mix: &Mix) -> Result<(), AssessError> {
    match mix.first_bad_sub_mix() {
        Some((g, sum)) => Err(AssessError::UnnormalizedSubMix { type_id: g + 1, sum }),
        None => Ok(()),
    }
}

/// `n_gp >= mu_gp * n_g` for every sub-type.
fn add_sub_mix_rows(m: &mut Model<f64>, cm_types: &[VarId], cm_subs: &[Vec<VarId>], mix: &Mix) {
    for (g, subs) in cm_subs.iter().enumerate() {
        for (p, &v) in subs.iter().enumerate() {
            m.add_constraint(
                format!("submix[{}][{}]", g + 1, p + 1),
                vec![(v, 1.0), (cm_types[g], -mix.sub_fraction(g, p))],
                Relation::Ge,
                0.0,
            );
        }
    }
}

/// Builds the throughput model for `spec`.
pub fn build_advanced_model(bundle: &ProjectBundle, spec: &AssessmentSpec) -> Result<CapacityModel, ModelsError> {
    check_mix(bundle, &spec.mix)?;
    let (mut cm, _) = core_model(bundle, &spec.mss, spec.ward_options, Sense::Maximize, Rows::Hard)?;
    let mss = &spec.mss;
    let mix = &spec.mix;
    let types = cm.types.clone();
    let subs = cm.sub_types.clone();
    let m = &mut cm.model;

    match spec.viewpoint {
        Viewpoint::WholeCohort => {
            let n = m.add_nonneg("N");
            cm.total = Some(n);
            m.add_objective_term(n, 1.0);
            let mut coeffs = vec![(n, 1.0)];
            coeffs.extend(types.iter().map(|&v| (v, -1.0)));
            m.add_constraint("total", coeffs, Relation::Eq, 0.0);
            for (g, &v) in types.iter().enumerate() {
                m.add_constraint(
                    format!("casemix[{}]", g + 1),
                    vec![(v, 1.0), (n, -mix.case_fraction(g))],
                    Relation::Ge,
                    0.0,
                );
            }
            let coeffs = theatre_coeffs(bundle, &cm, None);
            let row = cm.model.add_constraint("OT", coeffs, Relation::Le, mss.theatre_hours());
            cm.theatre_rows.push(row);
        }
        Viewpoint::SessionPartition => {
            for &v in &types {
                m.add_objective_term(v, 1.0);
            }
            for g in 0..types.len() {
                let coeffs = theatre_coeffs(bundle, &cm, Some(g));
                let rhs = mix.case_fraction(g) * mss.theatre_hours();
                let row = cm.model.add_constraint(format!("OT[{}]", g + 1), coeffs, Relation::Le, rhs);
                cm.theatre_rows.push(row);
            }
        }
    }
    add_sub_mix_rows(&mut cm.model, &types, &subs, mix);
    for (g, &min) in spec.minimums.iter().enumerate() {
        if let Some(&v) = cm.types.get(g) {
            if min > 0.0 {
                cm.model.set_lower(v, min);
            }
        }
    }
    Ok(cm)
}

/// Result of a capacity assessment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CapacityAssessment {
    pub capacity: f64,
    pub cohort: CohortResult,
    /// Theatre time per type under the session partition viewpoint.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub group_theatre: Vec<ResourceUsage>,
    pub iterations: usize,
}

/// Types whose sub-types can grow without touching any limited resource.
fn free_types(bundle: &ProjectBundle) -> Vec<String> {
    bundle
        .catalog
        .types
        .iter()
        .filter(|t| {
            t.sub_types.iter().any(|s| {
                let p = &s.profile;
                p.t_surgery <= 0.0 && p.t_icu <= 0.0 && (p.ward_options.is_empty() || p.ward_hours() <= 0.0)
            })
        })
        .map(|t| t.name.clone())
        .collect()
}

fn require_optimal(bundle: &ProjectBundle, sol: &Solution<f64>, what: &str) -> Result<(), ModelsError> {
    match sol.status {
        Status::Optimal => Ok(()),
        Status::Infeasible => Err(ModelsError::Infeasible(what.to_string())),
        Status::Unbounded => Err(ModelsError::Unbounded { types: free_types(bundle) }),
        s => Err(ModelsError::Solver(s)),
    }
}

/// Maximises throughput under `spec`.
pub fn assess_capacity(bundle: &ProjectBundle, spec: &AssessmentSpec) -> Result<CapacityAssessment, ModelsError> {
    let cm = build_advanced_model(bundle, spec)?;
    let sol = solver::solve_lexicographic(&cm.model, &[cm.prefer_early_options()])?;
    require_optimal(bundle, &sol, "the minimum patient counts cannot be met")?;

    let subs = cm.sub_values(&sol);
    let split = cm.split(&sol);
    let cohort = CohortResult::build(bundle, &spec.mss, subs, &split, Vec::new());
    let group_theatre = match spec.viewpoint {
        Viewpoint::WholeCohort => Vec::new(),
        Viewpoint::SessionPartition => cm
            .theatre_rows
            .iter()
            .enumerate()
            .map(|(g, &row)| {
                let avail = cm.model.constraints[row.0].rhs;
                let used = sol.activity(row);
                ResourceUsage {
                    name: format!("OT[{}]", g + 1),
                    kind: ResourceKind::Theatre,
                    spaces: spec.mss.theatres,
                    used_hours: used,
                    available_hours: avail,
                    percent_used: (avail > 0.0).then(|| 100.0 * used / avail),
                    patients_treated: cohort.types[g],
                    bottleneck: if avail > 0.0 {
                        100.0 * used / avail >= assess::BOTTLENECK_PERCENT
                    } else {
                        used > 0.0
                    },
                }
            })
            .collect(),
    };
    Ok(CapacityAssessment {
        capacity: sol.objective_value,
        cohort,
        group_theatre,
        iterations: sol.iterations,
    })
}

// ---------------------------------------------------------------------------
// Feasibility

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub resource: String,
    pub excess_hours: f64,
}

/// An allocation that does not add up to a pinned target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetMismatch {
    pub type_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_type_id: Option<usize>,
    pub target: f64,
    pub allocated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// The resource with the largest excess, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failing: Option<String>,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<TargetMismatch>,
    /// The cohort that was checked, with the resources it uses.
    pub cohort: CohortResult,
}

fn violations_of(report: &assess::UtilizationReport) -> Vec<Violation> {
    report
        .overused(TOL)
        .map(|r| Violation {
            resource: r.name.clone(),
            excess_hours: r.excess_hours(),
        })
        .collect()
}

fn worst(violations: &[Violation]) -> Option<String> {
    violations
        .iter()
        .fold(None::<&Violation>, |best, v| match best {
            Some(b) if b.excess_hours >= v.excess_hours => Some(b),
            _ => Some(v),
        })
        .map(|v| v.resource.clone())
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

/// Rejects targets whose two levels disagree.
fn check_target_levels(targets: &TargetSet) -> Result<(), ModelsError> {
    targets.validate().map_err(|e| ModelsError::Build(e.to_string()))?;
    if let (Some(types), Some(subs)) = (&targets.types, &targets.sub_types) {
        for (g, (t, row)) in types.iter().zip(subs).enumerate() {
            let sum: f64 = row.iter().sum();
            if !near(*t, sum) {
                return Err(ModelsError::Build(format!(
                    "type {} target {t} differs from the sum of its sub-type targets {sum}",
                    g + 1
                )));
            }
        }
    }
    Ok(())
}

fn check_target_shape(bundle: &ProjectBundle, targets: &TargetSet) -> Result<(), ModelsError> {
    let shape = bundle.catalog.shape();
    if targets.types.as_ref().is_some_and(|t| t.len() != shape.len())
        || targets
            .sub_types
            .as_ref()
            .is_some_and(|s| s.iter().map(Vec::len).ne(shape.iter().copied()))
    {
        return Err(ModelsError::Build("targets do not match the patient catalog".into()));
    }
    Ok(())
}

/// Checks whether targets and/or an allocation fit the hospital.
///
/// An allocation alone is evaluated directly. Targets alone are pinned in
/// the capacity model whose resource rows are made elastic; the smallest
/// total over-use is reported per resource. With both, the allocation is
/// evaluated and must also add up to every target. When only type targets
/// are given and the project has a mix, sub-types follow its sub mix.
pub fn check_feasibility(
    bundle: &ProjectBundle,
    mss: &MssTemplate,
    targets: Option<&TargetSet>,
    allocation: Option<&Allocation>,
) -> Result<FeasibilityVerdict, ModelsError> {
    check_buildable(bundle)?;
    if let Some(t) = targets {
        check_target_shape(bundle, t)?;
        check_target_levels(t)?;
    }
    match (targets, allocation) {
        (None, None) => Err(ModelsError::Build("nothing to check: give targets or an allocation".into())),
        (t, Some(alloc)) => {
            alloc
                .validate(&bundle.catalog)
                .map_err(|e| ModelsError::Build(e.to_string()))?;
            let split = assess::split_of(&bundle.catalog, alloc);
            let subs = assess::sub_type_totals(&split);
            let cohort = CohortResult::build(bundle, mss, subs.clone(), &split, Vec::new());
            let mut mismatches = Vec::new();
            if let Some(t) = t {
                if let Some(types) = &t.types {
                    for (g, &target) in types.iter().enumerate() {
                        if !near(target, cohort.types[g]) {
                            mismatches.push(TargetMismatch {
                                type_id: g + 1,
                                sub_type_id: None,
                                target,
                                allocated: cohort.types[g],
                            });
                        }
                    }
                }
                if let Some(st) = &t.sub_types {
                    for (g, row) in st.iter().enumerate() {
                        for (p, &target) in row.iter().enumerate() {
                            if !near(target, subs[g][p]) {
                                mismatches.push(TargetMismatch {
                                    type_id: g + 1,
                                    sub_type_id: Some(p + 1),
                                    target,
                                    allocated: subs[g][p],
                                });
                            }
                        }
                    }
                }
            }
            let violations = violations_of(&cohort.report);
            Ok(FeasibilityVerdict {
                feasible: violations.is_empty() && mismatches.is_empty(),
                first_failing: worst(&violations),
                violations,
                mismatches,
                cohort,
            })
        }
        (Some(t), None) => {
            let (mut cm, excess) = core_model(bundle, mss, WardOptionPolicy::All, Sense::Minimize, Rows::Elastic)?;
            let coeffs = theatre_coeffs(bundle, &cm, None);
            let e = cm.model.add_nonneg("excess[OT]");
            let mut c = coeffs;
            c.push((e, -1.0));
            let row = cm.model.add_constraint("OT", c, Relation::Le, mss.theatre_hours());
            cm.theatre_rows.push(row);
            for &x in excess.iter().chain([&e]) {
                cm.model.add_objective_term(x, 1.0);
            }
            if let Some(types) = &t.types {
                for (g, &v) in types.iter().enumerate() {
                    cm.model
                        .add_constraint(format!("pin[{}]", g + 1), vec![(cm.types[g], 1.0)], Relation::Eq, v);
                }
                if t.sub_types.is_none() {
                    if let Some(mix) = &bundle.mix {
                        check_sub_mix(mix)?;
                        let (types, subs) = (cm.types.clone(), cm.sub_types.clone());
                        add_sub_mix_rows(&mut cm.model, &types, &subs, mix);
                    }
                }
            }
            if let Some(st) = &t.sub_types {
                for (g, row) in st.iter().enumerate() {
                    for (p, &v) in row.iter().enumerate() {
                        let name = format!("pin[{}][{}]", g + 1, p + 1);
                        cm.model.add_constraint(name, vec![(cm.sub_types[g][p], 1.0)], Relation::Eq, v);
                    }
                }
            }
            let sol = solver::solve_lexicographic(&cm.model, &[cm.prefer_early_options()])?;
            require_optimal(bundle, &sol, "targets cannot be pinned")?;
            let subs = cm.sub_values(&sol);
            let split = cm.split(&sol);
            let cohort = CohortResult::build(bundle, mss, subs, &split, Vec::new());
            let violations = violations_of(&cohort.report);
            Ok(FeasibilityVerdict {
                feasible: violations.is_empty(),
                first_failing: worst(&violations),
                violations,
                mismatches: Vec::new(),
                cohort,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Best fit

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetOption {
    /// Type-level targets.
    #[default]
    #[serde(rename = "to1")]
    Types,
    /// Sub-type-level targets.
    #[serde(rename = "to2")]
    SubTypes,
    /// Both levels, distances added.
    #[serde(rename = "to3")]
    Both,
}

pub const DEFAULT_SEGMENTS: usize = 16;

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetFitSpec {
    pub option: TargetOption,
    pub norm: Norm,
    /// Per-type weights; when empty the target set's weights are used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    /// Divide each 1-norm deviation by its target.
    #[serde(default)]
    pub relative: bool,
    /// When every target is met, maximise throughput above the targets.
    #[serde(default)]
    pub post_optimize_throughput: bool,
    #[serde(default)]
    pub ward_options: WardOptionPolicy,
}

impl Default for TargetFitSpec {
    fn default() -> Self {
        TargetFitSpec {
            option: TargetOption::Types,
            norm: Norm::One,
            weights: Vec::new(),
            segments: DEFAULT_SEGMENTS,
            relative: false,
            post_optimize_throughput: false,
            ward_options: WardOptionPolicy::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BestFit {
    pub cohort: CohortResult,
    /// Optimal value of the fitted objective (sum of squares for the
    /// 2-norm, as approximated by the piecewise linear terms).
    pub objective: f64,
    /// Exact distance of the cohort to the targets under the chosen norm,
    /// summed over both levels for TO3.
    pub distance: f64,
    /// Targets after the consistency update, as used by the model.
    pub targets: TargetSet,
    /// `target - achieved` per type, when type targets were used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_deviation: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_type_deviation: Option<Vec<Vec<f64>>>,
    /// Patients short of target at the finest targeted level.
    pub unmet_total: f64,
    /// Sum of the per-term approximation bounds of the 2-norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approximation_bound: Option<f64>,
    pub post_optimized: bool,
}

/// Upper bounds on a sub-type count from the capacity of every resource
/// it uses on its own.
fn sub_type_cap(bundle: &ProjectBundle, mss: &MssTemplate, g: usize, p: usize) -> f64 {
    let pr = &bundle.catalog.sub_type(g, p).profile;
    let mut cap = f64::INFINITY;
    if pr.t_surgery > 0.0 {
        cap = cap.min(mss.theatre_hours() / pr.t_surgery);
    }
    if pr.t_icu > 0.0 {
        cap = cap.min(mss.ward_hours(bundle.config.icu_beds) / pr.t_icu);
    }
    cap
}

fn add_variable_bounds(bundle: &ProjectBundle, mss: &MssTemplate, cm: &mut CapacityModel) {
    for (g, p, st) in bundle.catalog.iter_sub_types() {
        let cap = sub_type_cap(bundle, mss, g, p);
        if cap.is_finite() {
            let v = cm.sub_types[g][p];
            let ub = cm.model.var(v).upper.min(cap);
            cm.model.set_upper(v, ub);
        }
        let wh = st.profile.ward_hours();
        for (k, ward) in st.profile.ward_options.iter().enumerate() {
            if let Some(b) = cm.beta[g][p][k] {
                let w = bundle.config.ward_index(ward).expect("validated");
                let mut ub = cap;
                if wh > 0.0 {
                    ub = ub.min(mss.ward_hours(bundle.config.wards[w].beds) / wh);
                }
                if ub.is_finite() {
                    cm.model.set_upper(b, ub);
                }
            }
        }
    }
}

/// Finds the cohort closest to `targets` that the hospital can treat,
/// never exceeding a target.
pub fn best_fit(
    bundle: &ProjectBundle,
    mss: &MssTemplate,
    targets: &TargetSet,
    spec: &TargetFitSpec,
) -> Result<BestFit, ModelsError> {
    check_buildable(bundle)?;
    check_target_shape(bundle, targets)?;
    targets.validate().map_err(|e| ModelsError::Build(e.to_string()))?;
    let mut targets = targets.clone();
    if !spec.weights.is_empty() {
        targets.weights = spec.weights.clone();
    }
    for &w in &targets.weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(ModelsError::Build(format!("weights must be positive, got {w}")));
        }
    }
    let (use_types, use_subs) = match spec.option {
        TargetOption::Types => (true, false),
        TargetOption::SubTypes => (false, true),
        TargetOption::Both => (true, true),
    };
    if use_types && targets.types.is_none() {
        return Err(ModelsError::Build("this targeting option needs type targets".into()));
    }
    if use_subs && targets.sub_types.is_none() {
        return Err(ModelsError::Build("this targeting option needs sub-type targets".into()));
    }
    if !use_types {
        targets.types = None;
    }
    if !use_subs {
        targets.sub_types = None;
    }
    targets.consistency_update();

    let (mut cm, _) = core_model(bundle, mss, spec.ward_options, Sense::Minimize, Rows::Hard)?;
    let coeffs = theatre_coeffs(bundle, &cm, None);
    let row = cm.model.add_constraint("OT", coeffs, Relation::Le, mss.theatre_hours());
    cm.theatre_rows.push(row);
    if use_types && !use_subs {
        if let Some(mix) = &bundle.mix {
            check_sub_mix(mix)?;
            let (types, subs) = (cm.types.clone(), cm.sub_types.clone());
            add_sub_mix_rows(&mut cm.model, &types, &subs, mix);
        }
    }
    add_variable_bounds(bundle, mss, &mut cm);

    // (variable, target, weight) for every targeted count.
    let mut terms: Vec<(VarId, f64, f64)> = Vec::new();
    if let Some(t) = &targets.types {
        for (g, &v) in t.iter().enumerate() {
            terms.push((cm.types[g], v, targets.weight(g)));
        }
    }
    if let Some(t) = &targets.sub_types {
        for (g, row) in t.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                terms.push((cm.sub_types[g][p], v, targets.weight(g)));
            }
        }
    }
    for &(v, target, _) in &terms {
        let ub = cm.model.var(v).upper.min(target);
        cm.model.set_upper(v, ub);
    }

    let mut approximation_bound = None;
    match spec.norm {
        Norm::One => {
            for &(v, target, w) in &terms {
                let scale = if spec.relative {
                    if target <= 0.0 {
                        continue;
                    }
                    w / target
                } else {
                    w
                };
                cm.model.add_objective_term(v, -scale);
                cm.model.objective.constant += scale * target;
            }
        }
        Norm::Two => {
            let mut bound = 0.0;
            for &(v, target, w) in &terms {
                let term = piecewise_linearize(&mut cm.model, v, target, w, target, spec.segments)?;
                for (x, c) in term.objective {
                    cm.model.add_objective_term(x, c);
                }
                cm.model.objective.constant += term.constant;
                bound += term.max_error;
            }
            approximation_bound = Some(bound);
        }
    }

    let secondary = [cm.throughput(), cm.prefer_early_options()];
    let sol = solver::solve_lexicographic(&cm.model, &secondary)?;
    require_optimal(bundle, &sol, "no cohort fits the resources")?;
    let mut objective = sol.objective_value;
    let mut subs = cm.sub_values(&sol);
    let mut split = cm.split(&sol);
    let mut post_optimized = false;

    if spec.post_optimize_throughput && objective.abs() <= 1e-6 {
        let mut pm = cm.clone();
        pm.model.objective = pm.throughput();
        for &(v, target, _) in &terms {
            pm.model.set_upper(v, f64::INFINITY);
            pm.model.set_lower(v, target);
        }
        add_variable_bounds(bundle, mss, &mut pm);
        let psol = solver::solve_lexicographic(&pm.model, &[pm.prefer_early_options()])?;
        require_optimal(bundle, &psol, "targets met but throughput model failed")?;
        subs = pm.sub_values(&psol);
        split = pm.split(&psol);
        objective = 0.0;
        post_optimized = true;
    }

    let cohort = CohortResult::build(bundle, mss, subs, &split, Vec::new());
    let achieved = Cohort::from_sub_types(cohort.sub_types.clone());
    let mut distance = 0.0;
    let mut unmet_total = 0.0;
    let type_deviation = targets.types.as_ref().map(|t| {
        let dev: Vec<f64> = t.iter().zip(&achieved.types).map(|(a, b)| a - b).collect();
        let goal = Cohort {
            types: t.clone(),
            sub_types: achieved.sub_types.clone(),
        };
        distance += norm_distance(&achieved, &goal, &targets.weights, Level::Type, spec.norm);
        unmet_total = dev.iter().map(|d| d.max(0.0)).sum();
        dev
    });
    let sub_type_deviation = targets.sub_types.as_ref().map(|t| {
        let dev: Vec<Vec<f64>> = t
            .iter()
            .zip(&achieved.sub_types)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let goal = Cohort::from_sub_types(t.clone());
        distance += norm_distance(&achieved, &goal, &targets.weights, Level::SubType, spec.norm);
        unmet_total = dev.iter().flatten().map(|d| d.max(0.0)).sum();
        dev
    });
    if post_optimized {
        distance = 0.0;
    }

    Ok(BestFit {
        cohort,
        objective,
        distance,
        targets,
        type_deviation,
        sub_type_deviation,
        unmet_total,
        approximation_bound,
        post_optimized,
    })
}
