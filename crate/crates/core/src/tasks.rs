//! Task requests shared by the command line and the HTTP service.
//!
//! A request names a task kind and optionally overrides inputs; anything
//! left out comes from the project. The result echoes every input it used,
//! so identical requests on identical projects serialize identically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assess::{self, AssessError, CohortResult};
use crate::domain::{Allocation, Mix, MssTemplate, ProjectBundle, SessionAssignment, TargetSet};
use crate::models::{
    self, AssessmentSpec, BestFit, CapacityAssessment, FeasibilityVerdict, ModelsError, TargetFitSpec, Viewpoint,
    WardOptionPolicy,
};
use crate::report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskKind {
    BasicTheatre,
    BasicBeds,
    Advanced,
    EvaluateAllocation,
    Feasibility,
    BestFit,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::BasicTheatre,
        TaskKind::BasicBeds,
        TaskKind::Advanced,
        TaskKind::EvaluateAllocation,
        TaskKind::Feasibility,
        TaskKind::BestFit,
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TaskRequest {
    pub kind: Option<TaskKind>,
    /// Full schedule template; takes precedence over `weeks`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mss: Option<MssTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weeks: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewpoint: Option<Viewpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ward_options: Option<WardOptionPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<Mix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<SessionAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimums: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<TargetFitSpec>,
}

impl TaskRequest {
    pub fn new(kind: TaskKind) -> Self {
        TaskRequest {
            kind: Some(kind),
            ..TaskRequest::default()
        }
    }
}

/// The inputs a task actually ran with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EffectiveParams {
    pub kind: TaskKind,
    pub mss: MssTemplate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewpoint: Option<Viewpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ward_options: Option<WardOptionPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<Mix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<SessionAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimums: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<TargetFitSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "type", content = "value")]
pub enum TaskOutcome {
    Cohort(CohortResult),
    Capacity(CapacityAssessment),
    Feasibility(FeasibilityVerdict),
    BestFit(BestFit),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskResult {
    pub params: EffectiveParams,
    pub outcome: TaskOutcome,
}

impl TaskResult {
    /// True when the answer is "no": an over-used allocation or targets
    /// that do not fit.
    pub fn is_negative(&self) -> bool {
        matches!(&self.outcome, TaskOutcome::Feasibility(v) if !v.feasible)
    }

    pub fn cohort(&self) -> &CohortResult {
        match &self.outcome {
            TaskOutcome::Cohort(c) => c,
            TaskOutcome::Capacity(a) => &a.cohort,
            TaskOutcome::Feasibility(v) => &v.cohort,
            TaskOutcome::BestFit(f) => &f.cohort,
        }
    }

    pub fn to_text(&self, bundle: &ProjectBundle) -> String {
        let p = &self.params;
        let mut out = format!(
            "TASK {} ({} week(s), {} sessions, {} h each)\n",
            serde_json::to_value(p.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            p.mss.weeks,
            p.mss.sessions(),
            p.mss.session_hours
        );
        match &self.outcome {
            TaskOutcome::Cohort(c) => {
                out.push('\n');
                out.push_str(&report::cohort_text(bundle, c));
            }
            TaskOutcome::Capacity(a) => {
                out.push_str(&format!("CAPACITY {:.4}\n\n", a.capacity));
                if !a.group_theatre.is_empty() {
                    out.push_str(&format!("{:<14} {:>12} {:>12} {:>9}\n", "GROUP", "OT HRS", "AVAIL HRS", "%USED"));
                    for u in &a.group_theatre {
                        out.push_str(&format!(
                            "{:<14} {:>12.4} {:>12.4} {:>9}\n",
                            u.name,
                            u.used_hours,
                            u.available_hours,
                            u.percent_used.map_or("-".into(), |x| format!("{x:.4}"))
                        ));
                    }
                    out.push('\n');
                }
                out.push_str(&report::cohort_text(bundle, &a.cohort));
            }
            TaskOutcome::Feasibility(v) => out.push_str(&report::verdict_text(bundle, v)),
            TaskOutcome::BestFit(f) => {
                out.push_str(&format!("OBJECTIVE {:.4}\nDISTANCE {:.4}\nUNMET {:.4}\n", f.objective, f.distance, f.unmet_total));
                if let Some(b) = f.approximation_bound {
                    out.push_str(&format!("APPROXIMATION BOUND {b:.4}\n"));
                }
                if f.post_optimized {
                    out.push_str("all targets met; throughput maximised above them\n");
                }
                out.push('\n');
                out.push_str(&report::cohort_text(bundle, &f.cohort));
            }
        }
        out
    }

    pub fn to_csv(&self, bundle: &ProjectBundle) -> String {
        report::cohort_csv(bundle, self.cohort())
    }
}

/// A request problem tied to the input field that caused it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("{}", .0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<FieldError>),
    #[error(transparent)]
    Models(#[from] ModelsError),
}

impl TaskError {
    fn field(field: &str, message: impl Into<String>) -> Self {
        TaskError::Invalid(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    pub fn is_infeasible_outcome(&self) -> bool {
        matches!(self, TaskError::Models(m) if m.is_infeasible_outcome())
    }

    pub fn fields(&self) -> Vec<FieldError> {
        match self {
            TaskError::Invalid(f) => f.clone(),
            TaskError::Models(ModelsError::Assess(a)) => vec![assess_field(a)],
            TaskError::Models(m) => vec![FieldError {
                field: String::new(),
                message: m.to_string(),
            }],
        }
    }
}

fn assess_field(e: &AssessError) -> FieldError {
    let field = match e {
        AssessError::UnnormalizedSubMix { type_id, .. } => format!("mix.subMix[{}]", type_id - 1),
        AssessError::UnnormalizedCaseMix { .. } => "mix.caseMix".into(),
        AssessError::Missing(what) => (*what).into(),
        _ => String::new(),
    };
    FieldError {
        field,
        message: e.to_string(),
    }
}

impl From<AssessError> for TaskError {
    fn from(e: AssessError) -> Self {
        TaskError::Invalid(vec![assess_field(&e)])
    }
}

/// Mix problems the assessments refuse to run with.
pub fn mix_errors(mix: &Mix, case_mix_needed: bool) -> Vec<FieldError> {
    let mut out = Vec::new();
    if case_mix_needed {
        let e = mix.case_error();
        if e > crate::domain::MIX_TOL {
            out.push(assess_field(&AssessError::UnnormalizedCaseMix {
                sum: mix.case_mix.iter().sum(),
            }));
        }
    }
    for (g, row) in mix.sub_mix.iter().enumerate() {
        if mix.sub_error(g) > crate::domain::MIX_TOL {
            out.push(assess_field(&AssessError::UnnormalizedSubMix {
                type_id: g + 1,
                sum: row.iter().sum(),
            }));
        }
    }
    out
}

fn need<T: Clone>(given: &Option<T>, fallback: &Option<T>, field: &str) -> Result<T, TaskError> {
    given
        .clone()
        .or_else(|| fallback.clone())
        .ok_or_else(|| TaskError::field(field, format!("no {field} given and the project has none")))
}

/// Runs `req` against `bundle`.
pub fn run_task(bundle: &ProjectBundle, req: &TaskRequest) -> Result<TaskResult, TaskError> {
    let kind = req.kind.ok_or_else(|| TaskError::field("kind", "task kind is required"))?;
    if let Some(p) = bundle.problems().into_iter().next() {
        return Err(TaskError::field("project", p));
    }
    let mss = match (&req.mss, req.weeks) {
        (Some(m), _) => m.clone(),
        (None, w) => MssTemplate::standard(&bundle.config, w.unwrap_or(1)),
    };
    if mss.weeks == 0 || mss.session_hours < 0.0 || !mss.session_hours.is_finite() {
        return Err(TaskError::field("mss", "weeks must be positive and session hours non-negative"));
    }
    let mut params = EffectiveParams {
        kind,
        mss: mss.clone(),
        viewpoint: None,
        ward_options: None,
        mix: None,
        sessions: None,
        minimums: None,
        targets: None,
        allocation: None,
        fit: None,
    };
    let outcome = match kind {
        TaskKind::BasicTheatre | TaskKind::BasicBeds => {
            let mix = need(&req.mix, &bundle.mix, "mix")?;
            let errs = mix_errors(&mix, false);
            if !errs.is_empty() {
                return Err(TaskError::Invalid(errs));
            }
            let c = if kind == TaskKind::BasicTheatre {
                let sessions = req
                    .sessions
                    .clone()
                    .or_else(|| bundle.sessions.clone())
                    .unwrap_or_else(|| SessionAssignment::from_case_mix(&mix, mss.sessions()));
                let c = assess::basic_by_theatre(bundle, &sessions, &mix.sub_mix, &mss)?;
                params.sessions = Some(sessions);
                c
            } else {
                assess::basic_by_beds(bundle, &mix.sub_mix, &mss)?
            };
            params.mix = Some(mix);
            TaskOutcome::Cohort(c)
        }
        TaskKind::Advanced => {
            let mix = need(&req.mix, &bundle.mix, "mix")?;
            let errs = mix_errors(&mix, true);
            if !errs.is_empty() {
                return Err(TaskError::Invalid(errs));
            }
            let spec = AssessmentSpec {
                viewpoint: req.viewpoint.unwrap_or_default(),
                ward_options: req.ward_options.unwrap_or_default(),
                mss: mss.clone(),
                mix,
                minimums: req.minimums.clone().unwrap_or_default(),
            };
            let a = models::assess_capacity(bundle, &spec)?;
            params.viewpoint = Some(spec.viewpoint);
            params.ward_options = Some(spec.ward_options);
            params.mix = Some(spec.mix);
            params.minimums = (!spec.minimums.is_empty()).then_some(spec.minimums);
            TaskOutcome::Capacity(a)
        }
        TaskKind::EvaluateAllocation => {
            let alloc = need(&req.allocation, &bundle.allocation, "allocation")?;
            let v = models::check_feasibility(bundle, &mss, None, Some(&alloc))?;
            params.allocation = Some(alloc);
            TaskOutcome::Feasibility(v)
        }
        TaskKind::Feasibility => {
            let (targets, alloc) = match (&req.targets, &req.allocation) {
                (None, None) => match (&bundle.targets, &bundle.allocation) {
                    (Some(t), _) => (Some(t.clone()), None),
                    (None, Some(a)) => (None, Some(a.clone())),
                    (None, None) => {
                        return Err(TaskError::field("targets", "no targets or allocation given and the project has none"))
                    }
                },
                (t, a) => (t.clone(), a.clone()),
            };
            let v = models::check_feasibility(bundle, &mss, targets.as_ref(), alloc.as_ref())?;
            if targets.is_some() && alloc.is_none() && targets.as_ref().unwrap().sub_types.is_none() {
                params.mix = bundle.mix.clone();
            }
            params.targets = targets;
            params.allocation = alloc;
            TaskOutcome::Feasibility(v)
        }
        TaskKind::BestFit => {
            let targets = need(&req.targets, &bundle.targets, "targets")?;
            let fit = req.fit.clone().unwrap_or_default();
            let f = models::best_fit(bundle, &mss, &targets, &fit)?;
            if fit.option == models::TargetOption::Types {
                params.mix = bundle.mix.clone();
            }
            params.targets = Some(targets);
            params.fit = Some(fit);
            TaskOutcome::BestFit(f)
        }
    };
    Ok(TaskResult { params, outcome })
}
