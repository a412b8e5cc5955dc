//! CSV and JSON artifacts. Floats use Rust's shortest round-trip formatting
//! (`NaN`, `inf` for non-finite values); columns are only ever appended.

use std::io::Write;

use flatqst_core::dynamics::TransferTrace;
use flatqst_core::realization::RealizationRecord;
use flatqst_core::stats::Moments;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::ensemble::{EnsembleStats, Observable, SweepPoint};
use crate::Error;

pub const RECORD_HEADER: [&str; 19] = [
    "seed_index", "W", "N", "g", "eta1", "etaN", "Lambda", "Delta", "Csr", "eps1", "eps2",
    "deltaEps", "tau", "Fmax", "tStar", "flags", "Csr_eff", "deltaEps_full", "Csr_full",
];

pub const TRACE_HEADER: [&str; 4] = ["t", "fR_abs", "fidelity", "envelope"];

pub const SCAN_HEADER: [&str; 6] = ["seed", "W", "N", "g", "Fmax", "tStar"];

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn flags_field(r: &RealizationRecord) -> String {
    r.flags.iter_names().collect::<Vec<_>>().join("|")
}

pub fn write_records<W: Write>(out: W, records: &[RealizationRecord]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.seed_index.to_string(),
            num(r.width),
            r.cells.to_string(),
            num(r.g),
            num(r.eta1),
            num(r.eta_n),
            num(r.lambda),
            num(r.delta),
            num(r.csr),
            num(r.eps1),
            num(r.eps2),
            num(r.delta_eps),
            num(r.tau),
            num(r.fmax),
            num(r.t_star),
            flags_field(r),
            num(r.csr_eff),
            num(r.delta_eps_full),
            num(r.csr_full),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &TransferTrace) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for j in 0..trace.len() {
        w.write_record([
            num(trace.times[j]),
            num(trace.fr_abs[j]),
            num(trace.fidelity[j]),
            num(trace.envelope[j]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per realization; `seed` is the realization index under the
/// master seed.
pub fn write_scan<W: Write>(out: W, records: &[RealizationRecord]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_HEADER)?;
    for r in records {
        w.write_record([
            r.seed_index.to_string(),
            num(r.width),
            r.cells.to_string(),
            num(r.g),
            num(r.fmax),
            num(r.t_star),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_header(observables: &[Observable]) -> Vec<String> {
    let mut h: Vec<String> = ["N", "W", "count", "flagged", "failed"].map(String::from).into();
    for o in observables {
        h.push(format!("{o}_mean"));
        h.push(format!("{o}_mad"));
    }
    h
}

pub fn write_sweep<W: Write>(
    out: W,
    cells: usize,
    points: &[SweepPoint],
    observables: &[Observable],
) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(observables))?;
    for p in points {
        let mut row = vec![
            cells.to_string(),
            num(p.width),
            p.stats.count.to_string(),
            p.stats.flagged.to_string(),
            p.stats.failed.to_string(),
        ];
        for o in observables {
            let m = p.stats.moments(o.name());
            row.push(num(m.map_or(f64::NAN, |m| m.mean)));
            row.push(num(m.map_or(f64::NAN, |m| m.mad)));
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Run parameters echoed into the JSON summaries.
#[derive(Debug, Clone, Serialize)]
pub struct Params {
    #[serde(rename = "N")]
    pub cells: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
    #[serde(rename = "W")]
    pub width: f64,
    pub dist: String,
    pub seed: u64,
    pub samples: u64,
    pub window: f64,
    pub bins: String,
}

fn moments_json(m: Option<Moments>) -> Value {
    match m {
        Some(m) => json!({ "count": m.count, "mean": m.mean, "mad": m.mad }),
        None => json!({ "count": 0, "mean": null, "mad": null }),
    }
}

pub fn summary_json(params: &Params, stats: &EnsembleStats) -> Value {
    let observables: Map<String, Value> = stats
        .observables
        .iter()
        .map(|(k, m)| (k.to_string(), moments_json(*m)))
        .collect();
    let histograms: Map<String, Value> = stats
        .histograms
        .iter()
        .map(|(k, h)| {
            (
                k.to_string(),
                json!({ "edges": h.edges, "density": h.density, "counts": h.counts }),
            )
        })
        .collect();
    json!({
        "params": params,
        "count": stats.count,
        "flagged": stats.flagged,
        "failed": stats.failed,
        "observables": observables,
        "histograms": histograms,
    })
}

/// Array of per-width summaries; `params.W` is the width of each entry.
pub fn sweep_json(params: &Params, points: &[SweepPoint]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| {
                let params = Params {
                    width: p.width,
                    ..params.clone()
                };
                summary_json(&params, &p.stats)
            })
            .collect(),
    )
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
