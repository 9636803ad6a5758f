//! Output files. Every file is written to a temporary sibling and renamed
//! into place.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use scorch_core::TraceRecord;
use serde::Serialize;

use crate::run::{RunSpec, SummaryRow};

/// Column order of `trace.csv`.
pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "objective",
    "smoothed_objective",
    "alpha_bar",
    "eta",
    "rel_step",
    "residual",
    "nnz",
    "wall_secs",
    "omega",
];

/// Column order of bench tables.
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "algorithm",
    "m",
    "n",
    "nnz",
    "iterations",
    "wall_secs",
    "final_objective",
    "mse",
    "status",
    "error",
];

pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            r.objective.to_string(),
            r.smoothed_objective.to_string(),
            opt(r.alpha_bar),
            opt(r.eta),
            opt(r.rel_step),
            r.residual.to_string(),
            r.nnz.to_string(),
            r.wall_secs.to_string(),
            opt(r.omega),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.m.to_string(),
            r.n.to_string(),
            r.nnz.map(|v| v.to_string()).unwrap_or_default(),
            r.iterations.to_string(),
            r.wall_secs.to_string(),
            opt(r.final_objective),
            opt(r.mse),
            r.status.clone(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_solution_csv<W: Write>(out: W, x: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value"])?;
    for (i, v) in x.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of `summary.json`.
#[derive(Debug, Serialize)]
pub struct SummaryDoc<'a> {
    pub spec: &'a RunSpec,
    pub regularization: crate::run::Regularization,
    pub dataset: &'a crate::data::DatasetMeta,
    pub summary: &'a [SummaryRow],
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> io::Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

/// Objective-versus-iteration line plot, one polyline per trace, log-scaled
/// in `ℒ − min ℒ`.
pub fn write_svg<W: Write>(mut out: W, traces: &[(&str, &[TraceRecord])]) -> io::Result<()> {
    const W_PX: f64 = 640.0;
    const H_PX: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    let best = traces
        .iter()
        .flat_map(|(_, t)| t.iter().map(|r| r.objective))
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let gap = |v: f64| (v - best).max(1e-16).log10();
    let kmax = traces.iter().filter_map(|(_, t)| t.last().map(|r| r.k)).max().unwrap_or(1).max(1) as f64;
    let (lo, hi) = traces
        .iter()
        .flat_map(|(_, t)| t.iter().map(|r| gap(r.objective)))
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W_PX}" height="{H_PX}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W_PX - 2.0 * PAD,
        H_PX - 2.0 * PAD
    )?;
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">iteration</text>"#, W_PX / 2.0, H_PX - 10.0)?;
    writeln!(out, r#"<text x="10" y="{}">log10(obj - best)</text>"#, PAD - 10.0)?;
    for (c, (name, trace)) in traces.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        let pts: Vec<String> = trace
            .iter()
            .filter(|r| r.objective.is_finite())
            .map(|r| {
                let x = PAD + (W_PX - 2.0 * PAD) * r.k as f64 / kmax;
                let y = H_PX - PAD - (H_PX - 2.0 * PAD) * (gap(r.objective) - lo) / span;
                format!("{x:.1},{y:.1}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" points="{}"/>"#,
            pts.join(" ")
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            W_PX - PAD - 110.0,
            PAD + 15.0 * (c as f64 + 1.0)
        )?;
    }
    writeln!(out, "</svg>")
}
