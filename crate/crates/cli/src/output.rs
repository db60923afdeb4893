//! CSV and JSON writers. Floats are written in their shortest round-trip
//! decimal form, so re-reading a file reproduces the in-memory values.

use std::path::Path;

use maxwell_dg::analysis::{ErrorReport, FieldErrors, FieldKind, ProbeError};
use maxwell_dg::Vec3;
use serde::{Deserialize, Serialize};

use crate::driver::{RunOutcome, SweepResult};
use crate::CliError;

/// One line of `errors_<field>.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub step: usize,
    pub t: f64,
    pub err_raw: f64,
    pub err_post: Option<f64>,
}

pub fn error_rows(report: &ErrorReport, field: FieldKind) -> Vec<ErrorRow> {
    report
        .samples
        .iter()
        .map(|s| ErrorRow {
            step: s.step,
            t: s.time,
            err_raw: s.raw.curl(field),
            err_post: s.post.map(|p| p.curl(field)),
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_error_csv(path: &Path, report: &ErrorReport, field: FieldKind) -> Result<(), CliError> {
    write_rows(path, &error_rows(report, field))
}

pub fn read_error_csv(path: &Path) -> Result<Vec<ErrorRow>, CliError> {
    read_rows(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct EnergyRow {
    step: usize,
    t: f64,
    energy: f64,
}

pub fn write_energy_csv(path: &Path, energy: &[(usize, f64, f64)]) -> Result<(), CliError> {
    let rows: Vec<EnergyRow> = energy
        .iter()
        .map(|&(step, t, energy)| EnergyRow { step, t, energy })
        .collect();
    write_rows(path, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub curl_raw: f64,
    pub curl_post: Option<f64>,
    pub l2_raw: f64,
    pub l2_post: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub degree: usize,
    pub n: Option<usize>,
    pub elements: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_final: f64,
    #[serde(rename = "E")]
    pub e: Option<FieldSummary>,
    #[serde(rename = "H")]
    pub h_field: Option<FieldSummary>,
    pub max_gradient_residual: f64,
}

fn field_summary(raw: &FieldErrors, post: Option<&FieldErrors>, field: FieldKind) -> FieldSummary {
    FieldSummary {
        curl_raw: raw.curl(field),
        curl_post: post.map(|p| p.curl(field)),
        l2_raw: raw.l2(field),
        l2_post: post.map(|p| p.l2(field)),
    }
}

pub fn summary(outcome: &RunOutcome) -> Summary {
    let last = outcome.report.final_sample();
    let field = |f| last.map(|s| field_summary(&s.raw, s.post.as_ref(), f));
    Summary {
        scenario: outcome.scenario.clone(),
        degree: outcome.degree,
        n: outcome.n,
        elements: outcome.num_elements,
        h: outcome.report.h,
        dt: outcome.report.dt,
        steps: outcome.report.steps,
        t_final: outcome.t_final,
        e: field(FieldKind::E),
        h_field: field(FieldKind::H),
        max_gradient_residual: outcome.max_gradient_residual,
    }
}

pub fn write_summary(path: &Path, outcome: &RunOutcome) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&summary(outcome))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// One line of `eoc.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EocRow {
    pub n: usize,
    pub h: f64,
    pub err_e_raw: f64,
    pub eoc_e_raw: Option<f64>,
    pub err_e_post: f64,
    pub eoc_e_post: Option<f64>,
    pub err_h_raw: f64,
    pub eoc_h_raw: Option<f64>,
    pub err_h_post: f64,
    pub eoc_h_post: Option<f64>,
}

pub fn eoc_rows(result: &SweepResult) -> Result<Vec<EocRow>, CliError> {
    let er = result.table(FieldKind::E, false)?;
    let ep = result.table(FieldKind::E, true)?;
    let hr = result.table(FieldKind::H, false)?;
    let hp = result.table(FieldKind::H, true)?;
    Ok(result
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| EocRow {
            n: e.n,
            h: e.h,
            err_e_raw: er.rows[i].error,
            eoc_e_raw: er.rows[i].eoc,
            err_e_post: ep.rows[i].error,
            eoc_e_post: ep.rows[i].eoc,
            err_h_raw: hr.rows[i].error,
            eoc_h_raw: hr.rows[i].eoc,
            err_h_post: hp.rows[i].error,
            eoc_h_post: hp.rows[i].eoc,
        })
        .collect())
}

pub fn write_eoc_csv(path: &Path, result: &SweepResult) -> Result<(), CliError> {
    write_rows(path, &eoc_rows(result)?)
}

pub fn read_eoc_csv(path: &Path) -> Result<Vec<EocRow>, CliError> {
    read_rows(path)
}

/// One line of `probe_errors.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub probe: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub field: String,
    pub err: f64,
    pub err_post: f64,
}

pub fn probe_rows(points: &[Vec3], errors: &[ProbeError]) -> Vec<ProbeRow> {
    errors
        .iter()
        .map(|e| {
            let p = points[e.probe];
            ProbeRow {
                probe: format!("A{}", e.probe + 1),
                x: p.x,
                y: p.y,
                z: p.z,
                field: e.field.name().to_string(),
                err: e.err,
                err_post: e.err_post,
            }
        })
        .collect()
}

pub fn write_probe_csv(path: &Path, points: &[Vec3], errors: &[ProbeError]) -> Result<(), CliError> {
    write_rows(path, &probe_rows(points, errors))
}

pub fn read_probe_csv(path: &Path) -> Result<Vec<ProbeRow>, CliError> {
    read_rows(path)
}
