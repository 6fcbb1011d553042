//! CSV form of a trace.
//!
//! The header lists every [`TraceField`] in its fixed order. Floats use 17
//! significant digits so they read back bit-identical; `t` and
//! `degenerate_rows` are integers, `drift_bound_ok` is `true`/`false`, and
//! fields a record does not carry are empty cells.

use std::path::Path;

use lrsense::diagnostics::{TraceField, TraceRecord};

use crate::error::{io_err, Error, Result};

fn float_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn row(rec: &TraceRecord) -> Vec<String> {
    TraceField::ALL
        .iter()
        .map(|&field| match field {
            TraceField::T => rec.t.to_string(),
            TraceField::DegenerateRows => rec.degenerate_rows.map(|c| c.to_string()).unwrap_or_default(),
            TraceField::DriftBoundOk => rec.drift_bound_ok.map(|b| b.to_string()).unwrap_or_default(),
            other => float_cell(rec.get(other)),
        })
        .collect()
}

pub fn trace_csv_string(trace: &[TraceRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = TraceField::ALL.iter().map(|f| f.name()).collect();
    w.write_record(&header).expect("in-memory write");
    for rec in trace {
        w.write_record(row(rec)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn write_trace_csv(trace: &[TraceRecord], path: &Path) -> Result<()> {
    std::fs::write(path, trace_csv_string(trace)).map_err(io_err(path))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_trace_csv(&text).map_err(|message| Error::Trace {
        path: path.to_path_buf(),
        message,
    })
}

/// Parses text produced by [`trace_csv_string`]. Columns are matched by
/// header name, so a file with columns reordered or dropped still loads as
/// long as `t` and the three loss columns are present.
pub fn parse_trace_csv(text: &str) -> std::result::Result<Vec<TraceRecord>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        columns.push(name.parse::<TraceField>().map_err(|e| e.to_string())?);
    }
    for required in [TraceField::T, TraceField::LossFro2, TraceField::LossSpec, TraceField::TrainLoss] {
        if !columns.contains(&required) {
            return Err(format!("missing column `{required}`"));
        }
    }
    let mut trace = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let at = |msg: String| format!("row {}: {msg}", line + 1);
        let mut out = TraceRecord::default();
        for (&field, cell) in columns.iter().zip(rec.iter()) {
            if cell.is_empty() {
                if matches!(field, TraceField::T | TraceField::LossFro2 | TraceField::LossSpec | TraceField::TrainLoss) {
                    return Err(at(format!("`{field}` is empty")));
                }
                continue;
            }
            let float = || cell.parse::<f64>().map_err(|e| at(format!("`{field}`: {e}")));
            let int = || cell.parse::<usize>().map_err(|e| at(format!("`{field}`: {e}")));
            match field {
                TraceField::T => out.t = int()?,
                TraceField::LossFro2 => out.loss_fro2 = float()?,
                TraceField::LossSpec => out.loss_spec = float()?,
                TraceField::TrainLoss => out.train_loss = float()?,
                TraceField::PotentialAt => out.potential_at = Some(float()?),
                TraceField::ThetaMax => out.theta_max = Some(float()?),
                TraceField::DegenerateRows => out.degenerate_rows = Some(int()?),
                TraceField::DeltaMin => out.delta_min = Some(float()?),
                TraceField::DeltaMax => out.delta_max = Some(float()?),
                TraceField::NormUvRes => out.norm_uv_res = Some(float()?),
                TraceField::NormJv => out.norm_jv = Some(float()?),
                TraceField::NormUk => out.norm_uk = Some(float()?),
                TraceField::NormJk => out.norm_jk = Some(float()?),
                TraceField::MT => out.m_t = Some(float()?),
                TraceField::PT => out.p_t = Some(float()?),
                TraceField::ST => out.s_t = Some(float()?),
                TraceField::NormK => out.norm_k = Some(float()?),
                TraceField::NormJ => out.norm_j = Some(float()?),
                TraceField::NormUmv => out.norm_umv = Some(float()?),
                TraceField::KPerp => out.k_perp = Some(float()?),
                TraceField::DriftBoundOk => {
                    out.drift_bound_ok = Some(match cell {
                        "true" => true,
                        "false" => false,
                        other => return Err(at(format!("`{field}`: expected true/false, got `{other}`"))),
                    })
                }
            }
        }
        trace.push(out);
    }
    Ok(trace)
}
