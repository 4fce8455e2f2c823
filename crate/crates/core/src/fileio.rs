//! Reading and writing the comma separated project files.
//!
//! A project file names the other component files; paths are resolved
//! relative to the project file. Every parse failure carries the file, line
//! and column it was found at. Emitted files use LF line endings and
//! parsing them back reproduces the component exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{
    Allocation, AllocationEntry, HospitalConfig, Mix, PatientCatalog, PatientType, Profile,
    ProjectBundle, SessionAssignment, SubType, TargetSet, Ward,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceLocation {
    pub file_name: String,
    pub line_number: usize,
    pub column_hint: usize,
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file_name, self.line_number, self.column_hint)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub location: SourceLocation,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid project: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Ignore surplus fields and empty ward options instead of rejecting them.
    pub lenient: bool,
}

/// Contents of a `.project` file. Optional components are `None` when the
/// line has an empty value.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectFile {
    pub name: String,
    pub config: String,
    pub patient: String,
    pub mix: Option<String>,
    pub sessions: Option<String>,
    pub targets: Option<String>,
    pub allocation: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Config,
    Patient,
    Mix,
    Sessions,
    Targets,
    Allocation,
}

impl ComponentKind {
    pub fn extension(self) -> &'static str {
        match self {
            ComponentKind::Config => "config",
            ComponentKind::Patient => "patient",
            ComponentKind::Mix => "mix",
            ComponentKind::Sessions => "session",
            ComponentKind::Targets => "target",
            ComponentKind::Allocation => "alloc",
        }
    }
}

// ---------------------------------------------------------------------------
// Line handling

struct Line<'a> {
    number: usize,
    fields: Vec<&'a str>,
    /// Byte offset of each field within the line, for column hints.
    starts: Vec<usize>,
}

struct Reader<'a> {
    file: &'a str,
    lines: Vec<Line<'a>>,
    pos: usize,
    opts: ParseOptions,
}

fn header_key(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .replace('-', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

impl<'a> Reader<'a> {
    fn new(file: &'a str, text: &'a str, opts: ParseOptions) -> Self {
        let mut lines = Vec::new();
        for (i, raw) in text.split('\n').enumerate() {
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.trim().is_empty() {
                continue;
            }
            let mut fields = Vec::new();
            let mut starts = Vec::new();
            let mut at = 0;
            for f in raw.split(',') {
                fields.push(f);
                starts.push(at);
                at += f.len() + 1;
            }
            // Trailing commas carry no data.
            while fields.len() > 1 && fields.last().is_some_and(|f| f.trim().is_empty()) {
                fields.pop();
                starts.pop();
            }
            lines.push(Line {
                number: i + 1,
                fields,
                starts,
            });
        }
        Reader {
            file,
            lines,
            pos: 0,
            opts,
        }
    }

    fn err_at(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            location: SourceLocation {
                file_name: self.file.to_string(),
                line_number: line.max(1),
                column_hint: col,
            },
            message: message.into(),
        }
    }

    fn err_field(&self, line: &Line, field: usize, message: impl Into<String>) -> ParseError {
        let col = line.starts.get(field).map_or(1, |s| s + 1);
        self.err_at(line.number, col, message)
    }

    fn err_eof(&self, message: impl Into<String>) -> ParseError {
        let last = self.lines.last().map_or(1, |l| l.number + 1);
        self.err_at(last, 1, message)
    }

    fn peek(&self) -> Option<&Line<'a>> {
        self.lines.get(self.pos)
    }

    fn is_header(&self, key: &str) -> bool {
        self.peek()
            .is_some_and(|l| header_key(l.fields[0]) == key)
    }

    fn next_is_indexed(&self) -> bool {
        self.peek()
            .is_some_and(|l| l.fields[0].trim_start().starts_with('['))
    }

    /// Consumes `Keyword,value` and returns the value (possibly empty).
    fn keyed(&mut self, keys: &[&str], label: &str) -> Result<(usize, String), ParseError> {
        let Some(line) = self.peek() else {
            return Err(self.err_eof(format!("expected `{label}`")));
        };
        if !keys.contains(&header_key(line.fields[0]).as_str()) {
            return Err(self.err_field(line, 0, format!("expected `{label}`")));
        }
        let value = line.fields.get(1).copied().unwrap_or("");
        self.check_extra(line, 2)?;
        let n = line.number;
        self.pos += 1;
        Ok((n, value.to_string()))
    }

    /// Consumes a block header such as `Profile,`.
    fn header(&mut self, keys: &[&str], label: &str) -> Result<(), ParseError> {
        let (n, value) = self.keyed(keys, label)?;
        if !value.trim().is_empty() && !self.opts.lenient {
            let col = label.len() + 2;
            return Err(self.err_at(n, col, format!("unexpected value after `{label}`")));
        }
        Ok(())
    }

    /// Rejects fields beyond the first `allowed` unless lenient.
    fn check_extra(&self, line: &Line, allowed: usize) -> Result<(), ParseError> {
        if self.opts.lenient {
            return Ok(());
        }
        if line.fields.len() > allowed {
            return Err(self.err_field(
                line,
                allowed,
                format!("expected {allowed} fields, found {}", line.fields.len()),
            ));
        }
        Ok(())
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(l) => Err(self.err_field(l, 0, format!("unexpected line `{}`", l.fields.join(",")))),
        }
    }
}

fn parse_index(r: &Reader, line: &Line, depth: usize) -> Result<Vec<usize>, ParseError> {
    let text = line.fields[0].trim();
    let mut out = Vec::with_capacity(depth);
    let mut rest = text;
    while !rest.is_empty() {
        let inner = rest
            .strip_prefix('[')
            .and_then(|s| s.split_once(']'))
            .ok_or_else(|| r.err_field(line, 0, format!("malformed index `{text}`")))?;
        let n: usize = inner
            .0
            .trim()
            .parse()
            .map_err(|_| r.err_field(line, 0, format!("malformed index `{text}`")))?;
        if n == 0 {
            return Err(r.err_field(line, 0, format!("indices start at 1 in `{text}`")));
        }
        out.push(n);
        rest = inner.1;
    }
    if out.len() != depth {
        return Err(r.err_field(
            line,
            0,
            format!("expected {depth} bracketed indices, found `{text}`"),
        ));
    }
    Ok(out)
}

fn field<'a>(r: &Reader, line: &Line<'a>, i: usize, what: &str) -> Result<&'a str, ParseError> {
    line.fields
        .get(i)
        .copied()
        .ok_or_else(|| r.err_at(line.number, line.fields.iter().map(|f| f.len() + 1).sum::<usize>(), format!("missing {what}")))
}

fn number(r: &Reader, line: &Line, i: usize, what: &str) -> Result<f64, ParseError> {
    let s = field(r, line, i, what)?.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(r.err_field(line, i, format!("{what} `{s}` is not a number"))),
    }
}

fn non_negative(r: &Reader, line: &Line, i: usize, what: &str) -> Result<f64, ParseError> {
    let v = number(r, line, i, what)?;
    if v < 0.0 {
        return Err(r.err_field(line, i, format!("{what} must be non-negative, got {v}")));
    }
    Ok(v)
}

fn count(r: &Reader, line: &Line, i: usize, what: &str) -> Result<u32, ParseError> {
    let s = field(r, line, i, what)?.trim();
    s.parse::<u32>()
        .map_err(|_| r.err_field(line, i, format!("{what} `{s}` is not a whole number")))
}

fn count_value(r: &Reader, n: usize, value: &str, what: &str) -> Result<u32, ParseError> {
    value
        .trim()
        .parse::<u32>()
        .map_err(|_| r.err_at(n, 1, format!("{what} `{}` is not a whole number", value.trim())))
}

/// Indexed lines of one block, keyed by their indices.
fn indexed_block<'a, V>(
    r: &mut Reader<'a>,
    depth: usize,
    mut parse: impl FnMut(&Reader<'a>, &Line<'a>) -> Result<V, ParseError>,
) -> Result<BTreeMap<Vec<usize>, (usize, V)>, ParseError> {
    let mut out = BTreeMap::new();
    while r.next_is_indexed() {
        let line = &r.lines[r.pos];
        let idx = parse_index(r, line, depth)?;
        if out.contains_key(&idx) {
            return Err(r.err_field(line, 0, format!("duplicate entry {}", fmt_index(&idx))));
        }
        let v = parse(r, line)?;
        out.insert(idx, (line.number, v));
        r.pos += 1;
    }
    Ok(out)
}

fn fmt_index(idx: &[usize]) -> String {
    idx.iter().map(|i| format!("[{i}]")).collect()
}

/// Checks that a block keyed by `[g]` covers exactly `1..=n`.
fn dense_types<V>(
    r: &Reader,
    block: BTreeMap<Vec<usize>, (usize, V)>,
    n: usize,
    what: &str,
) -> Result<Vec<V>, ParseError> {
    let mut out = Vec::with_capacity(n);
    for (want, (idx, (line, v))) in (1..).zip(block) {
        if idx[0] != want {
            let msg = if idx[0] > n {
                format!("{what} {} is out of range (1..={n})", fmt_index(&idx))
            } else {
                format!("{what} [{want}] is missing")
            };
            return Err(r.err_at(line, 1, msg));
        }
        out.push(v);
    }
    if out.len() != n {
        return Err(r.err_eof(format!("{what} [{}] is missing", out.len() + 1)));
    }
    Ok(out)
}

/// Checks that a block keyed by `[g][p]` covers exactly the catalog shape.
fn dense_sub_types<V>(
    r: &Reader,
    block: BTreeMap<Vec<usize>, (usize, V)>,
    shape: &[usize],
    what: &str,
) -> Result<Vec<Vec<V>>, ParseError> {
    let mut out: Vec<Vec<V>> = shape.iter().map(|&n| Vec::with_capacity(n)).collect();
    for (idx, (line, v)) in block {
        let (g, p) = (idx[0], idx[1]);
        let Some(row) = out.get_mut(g - 1).filter(|_| p <= shape[g - 1]) else {
            return Err(r.err_at(line, 1, format!("{what} {} does not exist", fmt_index(&idx))));
        };
        if row.len() + 1 != p {
            return Err(r.err_at(line, 1, format!("{what} [{g}][{}] is missing", row.len() + 1)));
        }
        row.push(v);
    }
    for (g, row) in out.iter().enumerate() {
        if row.len() != shape[g] {
            return Err(r.err_eof(format!("{what} [{}][{}] is missing", g + 1, row.len() + 1)));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsers

pub fn parse_project(file: &str, text: &str, opts: ParseOptions) -> Result<ProjectFile, ParseError> {
    let mut r = Reader::new(file, text, opts);
    let optional = |s: String| {
        let s = s.trim().to_string();
        (!s.is_empty()).then_some(s)
    };
    let (_, name) = r.keyed(&["project name"], "Project Name")?;
    let (n, config) = r.keyed(&["hospital configuration"], "Hospital Configuration")?;
    if config.trim().is_empty() {
        return Err(r.err_at(n, 1, "hospital configuration file is required"));
    }
    let (n, patient) = r.keyed(&["patient information"], "Patient Information")?;
    if patient.trim().is_empty() {
        return Err(r.err_at(n, 1, "patient information file is required"));
    }
    let mut pf = ProjectFile {
        name,
        config: config.trim().to_string(),
        patient: patient.trim().to_string(),
        mix: None,
        sessions: None,
        targets: None,
        allocation: None,
    };
    // The optional component lines may be omitted entirely.
    if r.is_header("case mix") {
        pf.mix = optional(r.keyed(&["case mix"], "Case Mix")?.1);
    }
    if r.is_header("session") {
        pf.sessions = optional(r.keyed(&["session"], "Session")?.1);
    }
    if r.is_header("targets") {
        pf.targets = optional(r.keyed(&["targets"], "Targets")?.1);
    }
    if r.is_header("allocation") {
        pf.allocation = optional(r.keyed(&["allocation"], "Allocation")?.1);
    }
    r.expect_end()?;
    Ok(pf)
}

pub fn parse_config(file: &str, text: &str, opts: ParseOptions) -> Result<HospitalConfig, ParseError> {
    let mut r = Reader::new(file, text, opts);
    let (n, v) = r.keyed(&["intensive care beds"], "Intensive Care Beds")?;
    let icu_beds = count_value(&r, n, &v, "Intensive Care Beds")?;
    let (n, v) = r.keyed(&["theatres"], "Theatres")?;
    let theatres = count_value(&r, n, &v, "Theatres")?;
    let (n, v) = r.keyed(&["wards"], "Wards")?;
    let ward_count = count_value(&r, n, &v, "Wards")? as usize;
    r.header(&["ward info", "ward information"], "Ward Info")?;
    let block = indexed_block(&mut r, 1, |r, line| {
        r.check_extra(line, 3)?;
        let name = field(r, line, 1, "ward name")?.to_string();
        let beds = count(r, line, 2, "bed count")?;
        Ok(Ward { name, beds })
    })?;
    r.expect_end()?;
    let wards = dense_types(&r, block, ward_count, "ward")?;
    let mut seen = std::collections::HashSet::new();
    for w in &wards {
        if !seen.insert(w.name.as_str()) {
            return Err(r.err_eof(format!("duplicate ward name `{}`", w.name)));
        }
    }
    Ok(HospitalConfig {
        icu_beds,
        theatres,
        wards,
    })
}

/// Parses a `.patient` file. With a `config`, ward options are checked
/// against its ward names.
pub fn parse_patient(
    file: &str,
    text: &str,
    config: Option<&HospitalConfig>,
    opts: ParseOptions,
) -> Result<PatientCatalog, ParseError> {
    let mut r = Reader::new(file, text, opts);
    let (n, v) = r.keyed(&["patient types"], "Patient Types")?;
    let type_count = count_value(&r, n, &v, "Patient Types")? as usize;
    r.header(&["patient type"], "Patient Type")?;
    let block = indexed_block(&mut r, 1, |r, line| {
        r.check_extra(line, 3)?;
        let name = field(r, line, 1, "type name")?.to_string();
        let subs = count(r, line, 2, "sub-type count")? as usize;
        Ok((name, subs))
    })?;
    let heads = dense_types(&r, block, type_count, "patient type")?;
    let shape: Vec<usize> = heads.iter().map(|h| h.1).collect();

    r.header(&["patient sub type"], "Patient Sub Type")?;
    let block = indexed_block(&mut r, 2, |r, line| {
        r.check_extra(line, 2)?;
        Ok(field(r, line, 1, "sub-type name")?.to_string())
    })?;
    let names = dense_sub_types(&r, block, &shape, "sub-type")?;

    r.header(&["profile"], "Profile")?;
    let block = indexed_block(&mut r, 2, |r, line| {
        let t_icu = non_negative(r, line, 1, "ICU hours")?;
        let t_surgery = non_negative(r, line, 2, "surgery hours")?;
        let t_postop = non_negative(r, line, 3, "ward hours")?;
        let mut ward_options = Vec::new();
        for (i, w) in line.fields.iter().enumerate().skip(4) {
            if w.trim().is_empty() {
                if r.opts.lenient {
                    continue;
                }
                return Err(r.err_field(line, i, "empty ward option"));
            }
            if let Some(cfg) = config {
                if cfg.ward_index(w).is_none() {
                    return Err(r.err_field(line, i, format!("unknown ward `{w}`")));
                }
            }
            ward_options.push(w.to_string());
        }
        if t_postop > 0.0 && ward_options.is_empty() {
            return Err(r.err_field(line, 3, "ward hours given but no ward option"));
        }
        Ok(Profile {
            t_surgery,
            t_postop,
            t_icu,
            ward_options,
        })
    })?;
    let profiles = dense_sub_types(&r, block, &shape, "profile")?;

    let mut revenues: Vec<Vec<Option<f64>>> = shape.iter().map(|&n| vec![None; n]).collect();
    if r.is_header("revenue") {
        r.header(&["revenue"], "Revenue")?;
        let block = indexed_block(&mut r, 2, |r, line| {
            r.check_extra(line, 2)?;
            number(r, line, 1, "revenue")
        })?;
        for (idx, (line, v)) in block {
            let slot = revenues
                .get_mut(idx[0] - 1)
                .and_then(|row| row.get_mut(idx[1] - 1))
                .ok_or_else(|| r.err_at(line, 1, format!("revenue {} does not exist", fmt_index(&idx))))?;
            *slot = Some(v);
        }
    }
    r.expect_end()?;

    let types = heads
        .into_iter()
        .zip(names)
        .zip(profiles)
        .zip(revenues)
        .map(|(((head, names), profiles), revenues)| PatientType {
            name: head.0,
            sub_types: names
                .into_iter()
                .zip(profiles)
                .zip(revenues)
                .map(|((name, profile), revenue)| SubType {
                    name,
                    profile,
                    revenue,
                })
                .collect(),
        })
        .collect();
    Ok(PatientCatalog { types })
}

/// Value lines are `[idx],value` or `[idx],name,value`; the name is ignored.
fn named_value(r: &Reader, line: &Line, what: &str) -> Result<f64, ParseError> {
    let i = if line.fields.len() >= 3 { 2 } else { 1 };
    r.check_extra(line, 3)?;
    non_negative(r, line, i, what)
}

pub fn parse_mix(
    file: &str,
    text: &str,
    catalog: &PatientCatalog,
    opts: ParseOptions,
) -> Result<Mix, ParseError> {
    let mut r = Reader::new(file, text, opts);
    let shape = catalog.shape();
    r.header(&["case mix"], "Case Mix")?;
    let block = indexed_block(&mut r, 1, |r, line| named_value(r, line, "percentage"))?;
    let case_mix = dense_types(&r, block, shape.len(), "case mix entry")?;
    r.header(&["sub mix"], "Sub Mix")?;
    let block = indexed_block(&mut r, 2, |r, line| named_value(r, line, "percentage"))?;
    let sub_mix = dense_sub_types(&r, block, &shape, "sub mix entry")?;
    r.expect_end()?;
    Ok(Mix { case_mix, sub_mix })
}

pub fn parse_sessions(
    file: &str,
    text: &str,
    catalog: &PatientCatalog,
    opts: ParseOptions,
) -> Result<SessionAssignment, ParseError> {
    let mut r = Reader::new(file, text, opts);
    r.header(&["patient type"], "Patient Type")?;
    let block = indexed_block(&mut r, 1, |r, line| named_value(r, line, "session count"))?;
    let sessions = dense_types(&r, block, catalog.type_count(), "patient type")?;
    r.expect_end()?;
    Ok(SessionAssignment { sessions })
}

pub fn parse_targets(
    file: &str,
    text: &str,
    catalog: &PatientCatalog,
    opts: ParseOptions,
) -> Result<TargetSet, ParseError> {
    let mut r = Reader::new(file, text, opts);
    let mut targets = TargetSet::default();
    if r.is_header("patient type") {
        r.header(&["patient type"], "Patient Type")?;
        let block = indexed_block(&mut r, 1, |r, line| named_value(r, line, "target"))?;
        targets.types = Some(dense_types(&r, block, catalog.type_count(), "patient type")?);
    }
    if r.is_header("patient sub type") {
        r.header(&["patient sub type"], "Patient Sub-Type")?;
        let block = indexed_block(&mut r, 2, |r, line| named_value(r, line, "target"))?;
        targets.sub_types = Some(dense_sub_types(&r, block, &catalog.shape(), "sub-type")?);
    }
    r.expect_end()?;
    Ok(targets)
}

/// Parses a `.alloc` file. The description field is not interpreted; the
/// ward is taken from the sub-type's ward options.
pub fn parse_allocation(
    file: &str,
    text: &str,
    catalog: &PatientCatalog,
    opts: ParseOptions,
) -> Result<Allocation, ParseError> {
    let mut r = Reader::new(file, text, opts);
    r.header(&["allocation"], "Allocation")?;
    let block = indexed_block(&mut r, 3, |r, line| {
        r.check_extra(line, 3)?;
        field(r, line, 1, "description")?;
        non_negative(r, line, 2, "allocation count")
    })?;
    r.expect_end()?;
    let mut entries = Vec::with_capacity(block.len());
    for (idx, (line, count)) in block {
        let (g, p, k) = (idx[0], idx[1], idx[2]);
        let ward = catalog
            .types
            .get(g - 1)
            .and_then(|t| t.sub_types.get(p - 1))
            .ok_or_else(|| r.err_at(line, 1, format!("sub-type [{g}][{p}] does not exist")))?
            .profile
            .ward_options
            .get(k - 1)
            .ok_or_else(|| r.err_at(line, 1, format!("[{g}][{p}] has no ward option {k}")))?;
        entries.push(AllocationEntry {
            type_id: g,
            sub_type_id: p,
            option: k,
            ward: ward.clone(),
            count,
        });
    }
    Ok(Allocation { entries })
}

// ---------------------------------------------------------------------------
// Emitters

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn emit_project(pf: &ProjectFile) -> String {
    let opt = |o: &Option<String>| o.clone().unwrap_or_default();
    format!(
        "Project Name,{}\nHospital Configuration,{}\nPatient Information,{}\nCase Mix,{}\nSession,{}\nTargets,{}\nAllocation,{}\n",
        pf.name,
        pf.config,
        pf.patient,
        opt(&pf.mix),
        opt(&pf.sessions),
        opt(&pf.targets),
        opt(&pf.allocation),
    )
}

pub fn emit_config(c: &HospitalConfig) -> String {
    let mut s = format!(
        "Intensive Care Beds,{}\nTheatres,{}\nWards,{}\nWard Info,\n",
        c.icu_beds,
        c.theatres,
        c.wards.len()
    );
    for (i, w) in c.wards.iter().enumerate() {
        s += &format!("[{}],{},{}\n", i + 1, w.name, w.beds);
    }
    s
}

pub fn emit_patient(c: &PatientCatalog) -> String {
    let mut s = format!("Patient Types,{}\nPatient Type,\n", c.types.len());
    for (g, t) in c.types.iter().enumerate() {
        s += &format!("[{}],{},{}\n", g + 1, t.name, t.sub_types.len());
    }
    s += "Patient Sub Type,\n";
    for (g, p, st) in c.iter_sub_types() {
        s += &format!("[{}][{}],{}\n", g + 1, p + 1, st.name);
    }
    s += "Profile,\n";
    for (g, p, st) in c.iter_sub_types() {
        let pr = &st.profile;
        s += &format!(
            "[{}][{}],{},{},{}",
            g + 1,
            p + 1,
            num(pr.t_icu),
            num(pr.t_surgery),
            num(pr.t_postop)
        );
        for w in &pr.ward_options {
            s += ",";
            s += w;
        }
        s += "\n";
    }
    if c.iter_sub_types().any(|(_, _, st)| st.revenue.is_some()) {
        s += "Revenue,\n";
        for (g, p, st) in c.iter_sub_types() {
            if let Some(rev) = st.revenue {
                s += &format!("[{}][{}],{:?}\n", g + 1, p + 1, rev);
            }
        }
    }
    s
}

pub fn emit_mix(m: &Mix) -> String {
    let mut s = String::from("Case Mix,\n");
    for (g, v) in m.case_mix.iter().enumerate() {
        s += &format!("[{}],{}\n", g + 1, num(*v));
    }
    s += "Sub Mix,\n";
    for (g, row) in m.sub_mix.iter().enumerate() {
        for (p, v) in row.iter().enumerate() {
            s += &format!("[{}][{}],{}\n", g + 1, p + 1, num(*v));
        }
    }
    s
}

pub fn emit_sessions(sa: &SessionAssignment, c: &PatientCatalog) -> String {
    let mut s = String::from("Patient Type,\n");
    for (g, v) in sa.sessions.iter().enumerate() {
        s += &format!("[{}],{},{}\n", g + 1, c.types[g].name, num(*v));
    }
    s
}

pub fn emit_targets(t: &TargetSet, c: &PatientCatalog) -> String {
    let mut s = String::new();
    if let Some(types) = &t.types {
        s += "Patient Type,\n";
        for (g, v) in types.iter().enumerate() {
            s += &format!("[{}],{},{}\n", g + 1, c.types[g].name, num(*v));
        }
    }
    if let Some(subs) = &t.sub_types {
        s += "Patient Sub-Type,\n";
        for (g, row) in subs.iter().enumerate() {
            for (p, v) in row.iter().enumerate() {
                s += &format!(
                    "[{}][{}],{},{}\n",
                    g + 1,
                    p + 1,
                    c.sub_type(g, p).name,
                    num(*v)
                );
            }
        }
    }
    s
}

pub fn emit_allocation(a: &Allocation, c: &PatientCatalog) -> String {
    let mut s = String::from("Allocation,\n");
    for e in &a.entries {
        s += &format!(
            "[{}][{}][{}],{},{}\n",
            e.type_id,
            e.sub_type_id,
            e.option,
            c.allocation_descr(e.type_id - 1, e.sub_type_id - 1, &e.ward),
            num(e.count)
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Files

fn read(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads a `.target` file on its own, checked against `catalog`.
pub fn load_targets(path: impl AsRef<Path>, catalog: &PatientCatalog, opts: ParseOptions) -> Result<TargetSet, FileError> {
    let path = path.as_ref();
    Ok(parse_targets(&display_name(path), &read(path)?, catalog, opts)?)
}

/// Loads an `.alloc` file on its own, checked against `catalog`.
pub fn load_allocation(
    path: impl AsRef<Path>,
    catalog: &PatientCatalog,
    opts: ParseOptions,
) -> Result<Allocation, FileError> {
    let path = path.as_ref();
    Ok(parse_allocation(&display_name(path), &read(path)?, catalog, opts)?)
}

/// Loads a project file and every component it names.
pub fn load_project(path: impl AsRef<Path>, opts: ParseOptions) -> Result<ProjectBundle, FileError> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or(Path::new("."));
    let pf = parse_project(&display_name(path), &read(path)?, opts)?;
    let load = |name: &str| {
        let p = dir.join(name);
        read(&p).map(|text| (display_name(&p), text))
    };

    let (f, text) = load(&pf.config)?;
    let config = parse_config(&f, &text, opts)?;
    let (f, text) = load(&pf.patient)?;
    let catalog = parse_patient(&f, &text, Some(&config), opts)?;

    let mut bundle = ProjectBundle {
        project_name: pf.name.clone(),
        config,
        catalog,
        mix: None,
        sessions: None,
        targets: None,
        allocation: None,
    };
    if let Some(name) = &pf.mix {
        let (f, text) = load(name)?;
        bundle.mix = Some(parse_mix(&f, &text, &bundle.catalog, opts)?);
    }
    if let Some(name) = &pf.sessions {
        let (f, text) = load(name)?;
        bundle.sessions = Some(parse_sessions(&f, &text, &bundle.catalog, opts)?);
    }
    if let Some(name) = &pf.targets {
        let (f, text) = load(name)?;
        bundle.targets = Some(parse_targets(&f, &text, &bundle.catalog, opts)?);
    }
    if let Some(name) = &pf.allocation {
        let (f, text) = load(name)?;
        bundle.allocation = Some(parse_allocation(&f, &text, &bundle.catalog, opts)?);
    }
    Ok(bundle)
}

/// Text of one component of `bundle`, or `None` when it is absent.
pub fn emit_component(bundle: &ProjectBundle, kind: ComponentKind) -> Option<String> {
    let c = &bundle.catalog;
    match kind {
        ComponentKind::Config => Some(emit_config(&bundle.config)),
        ComponentKind::Patient => Some(emit_patient(c)),
        ComponentKind::Mix => bundle.mix.as_ref().map(emit_mix),
        ComponentKind::Sessions => bundle.sessions.as_ref().map(|s| emit_sessions(s, c)),
        ComponentKind::Targets => bundle.targets.as_ref().map(|t| emit_targets(t, c)),
        ComponentKind::Allocation => bundle.allocation.as_ref().map(|a| emit_allocation(a, c)),
    }
}

/// Names that would not survive a round trip through the comma format.
fn unsafe_names(bundle: &ProjectBundle) -> Option<String> {
    let bad = |s: &str| s.contains([',', '\n', '\r']) || s.trim_start().starts_with('[');
    let mut names = vec![bundle.project_name.as_str()];
    names.extend(bundle.config.wards.iter().map(|w| w.name.as_str()));
    names.extend(bundle.catalog.types.iter().map(|t| t.name.as_str()));
    names.extend(bundle.catalog.iter_sub_types().map(|(_, _, s)| s.name.as_str()));
    names.into_iter().find(|n| bad(n)).map(str::to_string)
}

/// Writes one component to `path`.
pub fn save_component(bundle: &ProjectBundle, kind: ComponentKind, path: impl AsRef<Path>) -> Result<(), FileError> {
    if let Some(n) = unsafe_names(bundle) {
        return Err(FileError::Invalid(format!("name `{n}` cannot be written to a comma separated file")));
    }
    let text = emit_component(bundle, kind)
        .ok_or_else(|| FileError::Invalid(format!("project has no {} component", kind.extension())))?;
    write(path.as_ref(), &text)
}

/// Writes the project file and all present components into `dir`, naming
/// each `<project name>.<ext>`. Returns the project file path.
pub fn save_project(bundle: &ProjectBundle, dir: impl AsRef<Path>) -> Result<PathBuf, FileError> {
    let dir = dir.as_ref();
    if let Some(n) = unsafe_names(bundle) {
        return Err(FileError::Invalid(format!("name `{n}` cannot be written to a comma separated file")));
    }
    let stem = if bundle.project_name.trim().is_empty() {
        "project".to_string()
    } else {
        bundle.project_name.replace(['/', '\\'], "_")
    };
    let mut names = BTreeMap::new();
    for kind in [
        ComponentKind::Config,
        ComponentKind::Patient,
        ComponentKind::Mix,
        ComponentKind::Sessions,
        ComponentKind::Targets,
        ComponentKind::Allocation,
    ] {
        if let Some(text) = emit_component(bundle, kind) {
            let name = format!("{stem}.{}", kind.extension());
            write(&dir.join(&name), &text)?;
            names.insert(kind.extension(), name);
        }
    }
    let pf = ProjectFile {
        name: bundle.project_name.clone(),
        config: names["config"].clone(),
        patient: names["patient"].clone(),
        mix: names.get("mix").cloned(),
        sessions: names.get("session").cloned(),
        targets: names.get("target").cloned(),
        allocation: names.get("alloc").cloned(),
    };
    let path = dir.join(format!("{stem}.project"));
    write(&path, &emit_project(&pf))?;
    Ok(path)
}
