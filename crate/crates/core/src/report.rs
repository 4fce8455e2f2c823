//! Plain-text and CSV renderings of results. Numbers use four decimals.

use std::fmt::Write;

use crate::assess::{CohortResult, UtilizationReport};
use crate::domain::ProjectBundle;
use crate::models::{AssessmentSpec, CapacityAssessment, FeasibilityVerdict, Viewpoint};

pub const FLAG: &str = "[!]";

fn pct(p: Option<f64>) -> String {
    p.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"))
}

/// Resource table: one row per resource, flagged rows marked with `[!]`.
pub fn resource_table(report: &UtilizationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>6} {:>12} {:>12} {:>9} {:>3} {:>12}",
        "RESOURCE", "#BEDS", "USED HRS", "AVAIL HRS", "%USED", "", "#TREATED"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>12.4} {:>12.4} {:>9} {:>3} {:>12.4}",
            r.name,
            r.spaces,
            r.used_hours,
            r.available_hours,
            pct(r.percent_used),
            if r.bottleneck { FLAG } else { "" },
            r.patients_treated
        );
    }
    out
}

/// Patient counts per type and sub-type, then the resource table.
pub fn cohort_text(bundle: &ProjectBundle, c: &CohortResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:>12}", "TYPE", "#TREATED");
    for (t, n) in bundle.catalog.types.iter().zip(&c.types) {
        let _ = writeln!(out, "{:<24} {:>12.4}", t.name, n);
    }
    let _ = writeln!(out, "{:<24} {:>12.4}", "TOTAL", c.total);
    out.push('\n');
    let _ = writeln!(out, "{:<24} {:>12}", "SUB-TYPE", "#TREATED");
    for (g, p, st) in bundle.catalog.iter_sub_types() {
        let _ = writeln!(out, "{:<24} {:>12.4}", st.name, c.sub_types[g][p]);
    }
    out.push('\n');
    let placed: Vec<_> = c.allocation.entries.iter().filter(|e| e.count != 0.0).collect();
    if !placed.is_empty() {
        let _ = writeln!(out, "{:<32} {:>12}", "PLACEMENT", "#PATIENTS");
        for e in placed {
            let descr = bundle.catalog.allocation_descr(e.type_id - 1, e.sub_type_id - 1, &e.ward);
            let _ = writeln!(out, "{:<32} {:>12.4}", descr, e.count);
        }
        out.push('\n');
    }
    out.push_str(&resource_table(&c.report));
    if c.revenue.total > 0.0 {
        let _ = writeln!(out, "\nREVENUE {:.4}", c.revenue.total);
    }
    for w in &c.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

pub fn verdict_text(bundle: &ProjectBundle, v: &FeasibilityVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "FEASIBLE {}", if v.feasible { "yes" } else { "no" });
    for x in &v.violations {
        let _ = writeln!(out, "over-used {} by {:.4} h", x.resource, x.excess_hours);
    }
    for m in &v.mismatches {
        let what = match m.sub_type_id {
            Some(p) => bundle.catalog.sub_type(m.type_id - 1, p - 1).name.clone(),
            None => bundle.catalog.types[m.type_id - 1].name.clone(),
        };
        let _ = writeln!(out, "{what}: allocated {:.4}, target {:.4}", m.allocated, m.target);
    }
    out.push('\n');
    out.push_str(&cohort_text(bundle, &v.cohort));
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn resource_csv(report: &UtilizationReport) -> String {
    let mut out = String::from("resource,spaces,usedHours,availableHours,percentUsed,patientsTreated,bottleneck\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{},{:.4},{}",
            csv_field(&r.name),
            r.spaces,
            r.used_hours,
            r.available_hours,
            r.percent_used.map_or(String::new(), |p| format!("{p:.4}")),
            r.patients_treated,
            r.bottleneck
        );
    }
    out
}

/// Resource rows, a blank line, then one row per sub-type.
pub fn cohort_csv(bundle: &ProjectBundle, c: &CohortResult) -> String {
    let mut out = resource_csv(&c.report);
    out.push_str("\ntypeId,subTypeId,name,count\n");
    for (g, p, st) in bundle.catalog.iter_sub_types() {
        let _ = writeln!(out, "{},{},{},{:.4}", g + 1, p + 1, csv_field(&st.name), c.sub_types[g][p]);
    }
    out
}

/// Spreadsheet-style dump of an advanced assessment for checking by hand:
/// capacity, per-type counts against the mix, per-sub-type hours, ward
/// placements and resource rows.
pub fn worksheet(bundle: &ProjectBundle, spec: &AssessmentSpec, a: &CapacityAssessment) -> String {
    let c = &a.cohort;
    let mut out = String::new();
    let _ = writeln!(out, "CAPACITY,{:.4}", a.capacity);
    let _ = writeln!(out, "\nTYPE,#OF,CASEMIX");
    for (g, n) in c.types.iter().enumerate() {
        let _ = writeln!(out, "{},{:.4},{:.4}", g + 1, n, spec.mix.case_fraction(g));
    }
    let _ = writeln!(out, "\nTYPE,PATH,#OF,OT HRS,WARD HRS,ICU HRS,MIX,#ALLOCATED");
    for (g, p, st) in bundle.catalog.iter_sub_types() {
        let n = c.sub_types[g][p];
        let pr = &st.profile;
        let allocated: f64 = c
            .allocation
            .entries
            .iter()
            .filter(|e| e.type_id == g + 1 && e.sub_type_id == p + 1)
            .map(|e| e.count)
            .sum();
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            g + 1,
            p + 1,
            n,
            n * pr.t_surgery,
            if pr.ward_options.is_empty() { 0.0 } else { n * pr.ward_hours() },
            n * pr.t_icu,
            spec.mix.sub_fraction(g, p),
            allocated
        );
    }
    let _ = writeln!(out, "\nTYPE,SUB,#OF,WARD,WARD HRS");
    for e in &c.allocation.entries {
        let st = bundle.catalog.sub_type(e.type_id - 1, e.sub_type_id - 1);
        let _ = writeln!(
            out,
            "{},{},{:.4},{},{:.4}",
            e.type_id,
            e.sub_type_id,
            e.count,
            csv_field(&e.ward),
            e.count * st.profile.ward_hours()
        );
    }
    if spec.viewpoint == Viewpoint::SessionPartition {
        let _ = writeln!(out, "\nGROUP,OT HRS,AVAIL HRS,%USED");
        for u in &a.group_theatre {
            let _ = writeln!(
                out,
                "{},{:.4},{:.4},{}",
                u.name,
                u.used_hours,
                u.available_hours,
                pct(u.percent_used)
            );
        }
    }
    out.push('\n');
    out.push_str(&resource_csv(&c.report));
    out
}
