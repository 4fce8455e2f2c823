//! HTTP what-if sessions.
//!
//! A session holds a loaded project and an overlay of edits (bed and
//! theatre changes, schedule parameters, mix, sessions, targets). Tasks run
//! on the project with the overlay applied. Mutations on one session are
//! serialized by its lock; tasks only read it while they copy the inputs.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use casemix_core::domain::{
    even_split, normalize_mix, Mix, MssTemplate, ProjectBundle, SessionAssignment, TargetSet, MIX_TOL,
};
use casemix_core::tasks::{run_task, FieldError, TaskError, TaskKind, TaskRequest, TaskResult};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use uuid::Uuid;

pub const PORT_VAR: &str = "HOPLITE_PORT";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MssOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weeks: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub days_per_week: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions_per_day: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_hours: Option<f64>,
}

/// Edits layered over the loaded project.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Overlay {
    /// Bed changes by ward name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bed_deltas: BTreeMap<String, i64>,
    #[serde(default)]
    pub icu_delta: i64,
    #[serde(default)]
    pub theatre_delta: i64,
    #[serde(default)]
    pub mss: MssOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<Mix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<SessionAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetSet>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubMixEdit {
    /// 1-based.
    pub type_id: usize,
    pub values: Vec<f64>,
}

/// One PATCH. Deltas add to the current overlay; everything else replaces.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OverlayPatch {
    #[serde(default)]
    pub bed_deltas: BTreeMap<String, i64>,
    #[serde(default)]
    pub icu_delta: i64,
    #[serde(default)]
    pub theatre_delta: i64,
    #[serde(default)]
    pub mss: Option<MssOverrides>,
    #[serde(default)]
    pub case_mix: Option<Vec<f64>>,
    #[serde(default)]
    pub sub_mix: Vec<SubMixEdit>,
    #[serde(default)]
    pub sessions: Option<Vec<f64>>,
    #[serde(default)]
    pub targets: Option<TargetSet>,
}

#[derive(Debug)]
pub struct WhatIfSession {
    pub id: Uuid,
    pub base: ProjectBundle,
    pub overlay: Overlay,
    pub last_results: BTreeMap<String, TaskResult>,
}

fn field(field: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.into(),
        message: message.into(),
    }
}

fn apply_delta(base: u32, delta: i64) -> Option<u32> {
    u32::try_from(base as i64 + delta).ok()
}

impl WhatIfSession {
    pub fn new(base: ProjectBundle) -> Self {
        WhatIfSession {
            id: Uuid::new_v4(),
            base,
            overlay: Overlay::default(),
            last_results: BTreeMap::new(),
        }
    }

    /// The project with the overlay applied.
    pub fn effective(&self) -> Result<ProjectBundle, Vec<FieldError>> {
        effective_bundle(&self.base, &self.overlay)
    }

    pub fn mss(&self, bundle: &ProjectBundle) -> MssTemplate {
        let o = &self.overlay.mss;
        let mut m = MssTemplate::standard(&bundle.config, o.weeks.unwrap_or(1));
        if let Some(d) = o.days_per_week {
            m.days_per_week = d;
        }
        if let Some(s) = o.sessions_per_day {
            m.sessions_per_day = s;
        }
        if let Some(h) = o.session_hours {
            m.session_hours = h;
        }
        m
    }

    pub fn view(&self) -> Result<SessionView, Vec<FieldError>> {
        let bundle = self.effective()?;
        let mss = self.mss(&bundle);
        let mix_error = bundle.mix.as_ref().map(|m| MixError {
            case_mix: m.case_error(),
            sub_mix: (0..m.sub_mix.len()).map(|g| m.sub_error(g)).collect(),
        });
        let available = mss.sessions();
        Ok(SessionView {
            session_id: self.id,
            unassigned_sessions: bundle.sessions.as_ref().map(|s| s.unassigned(available)),
            available_sessions: available,
            mix_error,
            mss,
            overlay: self.overlay.clone(),
            bundle,
            last_results: self.last_results.clone(),
        })
    }

    /// Applies `p`, leaving the session untouched when any part is invalid.
    pub fn patch(&mut self, p: &OverlayPatch) -> Result<(), Vec<FieldError>> {
        let mut o = self.overlay.clone();
        let mut errs = Vec::new();
        for (ward, d) in &p.bed_deltas {
            if self.base.config.ward_index(ward).is_none() {
                errs.push(field(format!("bedDeltas.{ward}"), format!("no ward named `{ward}`")));
            }
            *o.bed_deltas.entry(ward.clone()).or_default() += d;
        }
        o.icu_delta += p.icu_delta;
        o.theatre_delta += p.theatre_delta;
        if let Some(m) = &p.mss {
            if m.weeks == Some(0) {
                errs.push(field("mss.weeks", "must be at least 1"));
            }
            if m.session_hours.is_some_and(|h| !(h.is_finite() && h > 0.0)) {
                errs.push(field("mss.sessionHours", "must be positive"));
            }
            let merge = |a: Option<u32>, b: Option<u32>| b.or(a);
            o.mss = MssOverrides {
                weeks: merge(o.mss.weeks, m.weeks),
                days_per_week: merge(o.mss.days_per_week, m.days_per_week),
                sessions_per_day: merge(o.mss.sessions_per_day, m.sessions_per_day),
                session_hours: m.session_hours.or(o.mss.session_hours),
            };
        }
        let shape = self.base.catalog.shape();
        if p.case_mix.is_some() || !p.sub_mix.is_empty() {
            let mut mix = o
                .mix
                .clone()
                .or_else(|| self.base.mix.clone())
                .unwrap_or_else(|| Mix::even(&self.base.catalog));
            if let Some(c) = &p.case_mix {
                if c.len() != shape.len() {
                    errs.push(field("caseMix", format!("expected {} values, got {}", shape.len(), c.len())));
                } else {
                    mix.case_mix = c.clone();
                }
            }
            for e in &p.sub_mix {
                let g = e.type_id.wrapping_sub(1);
                match shape.get(g) {
                    Some(&n) if n == e.values.len() => mix.sub_mix[g] = e.values.clone(),
                    Some(&n) => errs.push(field(
                        format!("subMix[{}]", e.type_id),
                        format!("expected {n} values, got {}", e.values.len()),
                    )),
                    None => errs.push(field(format!("subMix[{}]", e.type_id), "no such patient type")),
                }
            }
            for (name, v) in mix.case_mix.iter().map(|v| ("caseMix", v)).chain(mix.sub_mix.iter().flatten().map(|v| ("subMix", v))) {
                if !(v.is_finite() && *v >= 0.0) {
                    errs.push(field(name, format!("percentages must be non-negative, got {v}")));
                }
            }
            o.mix = Some(mix);
        }
        if let Some(s) = &p.sessions {
            if s.len() != shape.len() {
                errs.push(field("sessions", format!("expected {} values, got {}", shape.len(), s.len())));
            } else if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                errs.push(field("sessions", "session counts must be non-negative"));
            }
            o.sessions = Some(SessionAssignment { sessions: s.clone() });
        }
        if let Some(t) = &p.targets {
            if let Err(e) = t.validate() {
                errs.push(field("targets", e.to_string()));
            }
            if t.types.as_ref().is_some_and(|v| v.len() != shape.len())
                || t.sub_types.as_ref().is_some_and(|v| v.iter().map(Vec::len).ne(shape.iter().copied()))
            {
                errs.push(field("targets", "targets do not match the patient catalog"));
            }
            o.targets = Some(t.clone());
        }
        canonicalize(&self.base, &mut o);
        if errs.is_empty() {
            if let Err(e) = effective_bundle(&self.base, &o) {
                errs = e;
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        self.overlay = o;
        Ok(())
    }

    pub fn fix_mix(&mut self, req: &MixOp) -> Result<(), Vec<FieldError>> {
        let mut mix = self.current_mix();
        let fix = |values: &[f64], name: String| normalize_mix(values).map(|(_, v)| v).map_err(|e| vec![field(name, e.to_string())]);
        match req.type_id {
            Some(t) => {
                let g = self.type_index(t)?;
                mix.sub_mix[g] = fix(&mix.sub_mix[g], format!("subMix[{t}]"))?;
            }
            None => {
                if req.case_only || mix.case_error() > MIX_TOL {
                    mix.case_mix = fix(&mix.case_mix, "caseMix".into())?;
                }
                if !req.case_only {
                    for g in 0..mix.sub_mix.len() {
                        mix.sub_mix[g] = fix(&mix.sub_mix[g], format!("subMix[{}]", g + 1))?;
                    }
                }
            }
        }
        self.set_mix(mix);
        Ok(())
    }

    pub fn even_mix(&mut self, req: &MixOp) -> Result<(), Vec<FieldError>> {
        let mut mix = self.current_mix();
        match req.type_id {
            Some(t) => {
                let g = self.type_index(t)?;
                mix.sub_mix[g] = even_split(mix.sub_mix[g].len());
            }
            None => mix.case_mix = even_split(mix.case_mix.len()),
        }
        self.set_mix(mix);
        Ok(())
    }

    /// All cases of one type.
    pub fn solo_mix(&mut self, req: &MixOp) -> Result<(), Vec<FieldError>> {
        let t = req.type_id.ok_or_else(|| vec![field("typeId", "required")])?;
        let g = self.type_index(t)?;
        let mut mix = self.current_mix();
        for (h, v) in mix.case_mix.iter_mut().enumerate() {
            *v = if h == g { 100.0 } else { 0.0 };
        }
        self.set_mix(mix);
        Ok(())
    }

    pub fn even_sessions(&mut self) -> Result<(), Vec<FieldError>> {
        let bundle = self.effective()?;
        let m = self.mss(&bundle).sessions();
        self.overlay.sessions = Some(SessionAssignment::even(self.base.catalog.type_count(), m));
        canonicalize(&self.base, &mut self.overlay);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.overlay = Overlay::default();
    }

    fn type_index(&self, type_id: usize) -> Result<usize, Vec<FieldError>> {
        if type_id >= 1 && type_id <= self.base.catalog.type_count() {
            Ok(type_id - 1)
        } else {
            Err(vec![field("typeId", format!("no patient type {type_id}"))])
        }
    }

    fn current_mix(&self) -> Mix {
        self.overlay
            .mix
            .clone()
            .or_else(|| self.base.mix.clone())
            .unwrap_or_else(|| Mix::even(&self.base.catalog))
    }

    fn set_mix(&mut self, mix: Mix) {
        self.overlay.mix = Some(mix);
        canonicalize(&self.base, &mut self.overlay);
    }

    /// Runs `req` on the effective project. Unset schedule parameters come
    /// from the overlay.
    pub fn prepare(&self, mut req: TaskRequest) -> Result<(ProjectBundle, TaskRequest), Vec<FieldError>> {
        let bundle = self.effective()?;
        if req.mss.is_none() {
            let mut mss = self.mss(&bundle);
            if let Some(w) = req.weeks {
                mss.weeks = w;
            }
            req.mss = Some(mss);
        }
        Ok((bundle, req))
    }
}

/// Drops overlay entries that restate the loaded project, so undoing an
/// edit gives back an identical overlay.
fn canonicalize(base: &ProjectBundle, o: &mut Overlay) {
    o.bed_deltas.retain(|_, d| *d != 0);
    if o.mix.is_some() && o.mix == base.mix {
        o.mix = None;
    }
    if o.sessions.is_some() && o.sessions == base.sessions {
        o.sessions = None;
    }
    if o.targets.is_some() && o.targets == base.targets {
        o.targets = None;
    }
    if o.mss.weeks == Some(1) {
        o.mss.weeks = None;
    }
    if o.mss.days_per_week == Some(5) {
        o.mss.days_per_week = None;
    }
    if o.mss.sessions_per_day == Some(2) {
        o.mss.sessions_per_day = None;
    }
    if o.mss.session_hours == Some(4.0) {
        o.mss.session_hours = None;
    }
}

pub fn effective_bundle(base: &ProjectBundle, o: &Overlay) -> Result<ProjectBundle, Vec<FieldError>> {
    let mut b = base.clone();
    let mut errs = Vec::new();
    for (ward, d) in &o.bed_deltas {
        match b.config.ward_index(ward) {
            Some(w) => match apply_delta(b.config.wards[w].beds, *d) {
                Some(n) => b.config.wards[w].beds = n,
                None => errs.push(field(format!("bedDeltas.{ward}"), "bed count cannot go below zero")),
            },
            None => errs.push(field(format!("bedDeltas.{ward}"), format!("no ward named `{ward}`"))),
        }
    }
    match apply_delta(b.config.icu_beds, o.icu_delta) {
        Some(n) => b.config.icu_beds = n,
        None => errs.push(field("icuDelta", "ICU bed count cannot go below zero")),
    }
    match apply_delta(b.config.theatres, o.theatre_delta) {
        Some(n) => b.config.theatres = n,
        None => errs.push(field("theatreDelta", "theatre count cannot go below zero")),
    }
    if let Some(m) = &o.mix {
        b.mix = Some(m.clone());
    }
    if let Some(s) = &o.sessions {
        b.sessions = Some(s.clone());
    }
    if let Some(t) = &o.targets {
        b.targets = Some(t.clone());
    }
    if errs.is_empty() {
        Ok(b)
    } else {
        Err(errs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MixError {
    /// `|sum - 100|` of the case mix.
    pub case_mix: f64,
    pub sub_mix: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: Uuid,
    pub bundle: ProjectBundle,
    pub overlay: Overlay,
    pub mss: MssTemplate,
    pub available_sessions: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unassigned_sessions: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix_error: Option<MixError>,
    pub last_results: BTreeMap<String, TaskResult>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MixOp {
    /// Act on this type's sub mix (or, for `solo-mix`, this type).
    #[serde(default)]
    pub type_id: Option<usize>,
    /// For `fix-mix` without a type: only the case mix.
    #[serde(default)]
    pub case_only: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskResponse {
    pub result: TaskResult,
    /// Wall time of the solve, kept apart from the reproducible result.
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldError>,
}

pub enum ApiError {
    NotFound(Uuid),
    Invalid(Vec<FieldError>),
    Infeasible(String),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(id) => (
                StatusCode::NOT_FOUND,
                ErrorBody {
                    error: format!("no session {id}"),
                    fields: Vec::new(),
                },
            ),
            ApiError::Invalid(fields) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody {
                    error: "validation failed".into(),
                    fields,
                },
            ),
            ApiError::Infeasible(msg) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody {
                    error: "infeasible".into(),
                    fields: vec![field("", msg)],
                },
            ),
            ApiError::BadRequest(msg) => (
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    error: msg,
                    fields: Vec::new(),
                },
            ),
            ApiError::Internal(msg) => (
                StatusCode::INTERNAL_SERVER_ERROR,
                ErrorBody {
                    error: msg,
                    fields: Vec::new(),
                },
            ),
        };
        (status, Json(body)).into_response()
    }
}

impl From<Vec<FieldError>> for ApiError {
    fn from(f: Vec<FieldError>) -> Self {
        ApiError::Invalid(f)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::JsonDataError(e) => ApiError::Invalid(vec![field("", e.body_text())]),
            other => ApiError::BadRequest(other.body_text()),
        }
    }
}

impl From<TaskError> for ApiError {
    fn from(e: TaskError) -> Self {
        if e.is_infeasible_outcome() {
            ApiError::Infeasible(e.to_string())
        } else {
            ApiError::Invalid(e.fields())
        }
    }
}

type Shared = Arc<RwLock<WhatIfSession>>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<Uuid, Shared>>>,
}

impl AppState {
    async fn get(&self, id: Uuid) -> Result<Shared, ApiError> {
        self.sessions.read().await.get(&id).cloned().ok_or(ApiError::NotFound(id))
    }
}

fn parse_id(id: &str) -> Result<Uuid, ApiError> {
    Uuid::parse_str(id).map_err(|_| ApiError::NotFound(Uuid::nil()))
}

async fn create(
    State(st): State<AppState>,
    body: Result<Json<ProjectBundle>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(bundle) = body?;
    let problems = bundle.problems();
    if !problems.is_empty() {
        return Err(ApiError::Invalid(problems.into_iter().map(|p| field("bundle", p)).collect()));
    }
    let s = WhatIfSession::new(bundle);
    let view = s.view()?;
    st.sessions.write().await.insert(s.id, Arc::new(RwLock::new(s)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn show(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let s = st.get(parse_id(&id)?).await?;
    let view = s.read().await.view()?;
    Ok(Json(view))
}

async fn remove(State(st): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let id = parse_id(&id)?;
    match st.sessions.write().await.remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::NotFound(id)),
    }
}

async fn patch_overlay(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<OverlayPatch>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let s = st.get(parse_id(&id)?).await?;
    let Json(p) = body?;
    let mut s = s.write().await;
    s.patch(&p)?;
    Ok(Json(s.view()?))
}

async fn overlay_op(
    State(st): State<AppState>,
    Path((id, op)): Path<(String, String)>,
    body: Option<Json<MixOp>>,
) -> Result<Json<SessionView>, ApiError> {
    let s = st.get(parse_id(&id)?).await?;
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let mut s = s.write().await;
    match op.as_str() {
        "fix-mix" => s.fix_mix(&req)?,
        "even-mix" => s.even_mix(&req)?,
        "solo-mix" => s.solo_mix(&req)?,
        "even-sessions" => s.even_sessions()?,
        "reset" => s.reset(),
        other => return Err(ApiError::BadRequest(format!("unknown overlay operation `{other}`"))),
    }
    Ok(Json(s.view()?))
}

fn kind_key(kind: TaskKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

async fn run(
    State(st): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<TaskRequest>, JsonRejection>,
) -> Result<Json<TaskResponse>, ApiError> {
    let shared = st.get(parse_id(&id)?).await?;
    let Json(req) = body?;
    let (bundle, req) = shared.read().await.prepare(req)?;
    let started = Instant::now();
    let result = tokio::task::spawn_blocking(move || run_task(&bundle, &req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    shared
        .write()
        .await
        .last_results
        .insert(kind_key(result.params.kind), result.clone());
    Ok(Json(TaskResponse { result, elapsed_ms }))
}

pub fn app() -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show).delete(remove))
        .route("/sessions/{id}/overlay", patch(patch_overlay))
        .route("/sessions/{id}/overlay/{op}", post(overlay_op))
        .route("/sessions/{id}/tasks", post(run))
        .with_state(AppState::default())
}

pub fn port_from_env() -> u16 {
    std::env::var(PORT_VAR)
        .ok()
        .and_then(|p| p.parse().ok())
        .unwrap_or(DEFAULT_PORT)
}
