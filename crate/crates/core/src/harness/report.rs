//! Writing sweep reports to disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::sweep::SweepReport;
use crate::error::{Error, Result};

pub const SWEEP_CSV_HEADER: [&str; 7] = [
    "p",
    "trials",
    "errors",
    "error_rate",
    "ci_low",
    "ci_high",
    "predicted_feasible",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Csv,
    Report,
    #[default]
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "report" => Ok(Self::Report),
            "both" => Ok(Self::Both),
            other => Err(Error::Usage(format!("unknown format `{other}` (csv|report|both)"))),
        }
    }
}

pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::io("<sweep csv>", std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER).map_err(to_err)?;
    for r in &report.rows {
        w.write_record([
            r.p.to_string(),
            r.trials.to_string(),
            r.errors.to_string(),
            r.error_rate.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.predicted_feasible.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

pub fn write_summary<W: Write>(report: &SweepReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "seed = {}", report.seed)?;
    writeln!(out, "config_sha256 = {}", report.config_hash)?;
    writeln!(out, "version = {}", report.version)?;
    writeln!(out, "decoder = {}", report.decoder)?;
    writeln!(out, "capacity = {}", opt(report.capacity))?;
    writeln!(out, "predicted_p_star = {}", opt(report.predicted_threshold))?;
    writeln!(out, "bound_evaluated_at_p = {}", opt(report.bound_p))?;
    for b in &report.bounds {
        writeln!(out, "bound.n{} = {}", b.n, b.bound)?;
    }
    match &report.transition {
        Ok(t) => {
            writeln!(out, "p_hat = {}", t.p_hat)?;
            writeln!(out, "p_hat_low = {}", t.p_low)?;
            writeln!(out, "p_hat_high = {}", t.p_high)?;
        }
        Err(reason) => writeln!(out, "p_hat = none ({reason})")?,
    }
    if let (Ok(t), Some(p_star)) = (&report.transition, report.predicted_threshold) {
        writeln!(out, "p_hat_minus_p_star = {}", t.p_hat - p_star)?;
    }
    let iso = report.isotonic_curve();
    for (r, fit) in report.rows.iter().zip(iso) {
        writeln!(
            out,
            "row p={} trials={} errors={} skipped={} ties={} isotonic={}",
            r.p, r.trials, r.errors, r.skipped, r.ties, fit
        )?;
    }
    writeln!(out, "skipped_total = {}", report.skipped_total())?;
    writeln!(out, "tie_total = {}", report.tie_total())?;
    for note in &report.notes {
        writeln!(out, "note = {note}")?;
    }
    Ok(())
}

/// matplotlib script that redraws the sweep from `sweep.csv` alone.
pub fn plot_script(report: &SweepReport) -> String {
    let p_star = report.predicted_threshold.map_or("None".into(), |v| format!("{v:?}"));
    let bound = report
        .bounds
        .last()
        .filter(|b| b.bound > 0.0)
        .map_or("None".into(), |b| format!("{:?}", 1.0 / b.bound));
    format!(
        r#"#!/usr/bin/env python3
"""Error rate against observation rate, from sweep.csv next to this script."""
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

P_STAR = {p_star}
BOUND_P = {bound}

here = pathlib.Path(__file__).resolve().parent
with open(here / "sweep.csv", newline="") as fh:
    rows = list(csv.DictReader(fh))
p = [float(r["p"]) for r in rows]
err = [float(r["error_rate"]) for r in rows]
lo = [float(r["ci_low"]) for r in rows]
hi = [float(r["ci_high"]) for r in rows]

fig, ax = plt.subplots(figsize=(6, 4))
ax.fill_between(p, lo, hi, alpha=0.25, label="95% Wilson")
ax.plot(p, err, "o-", label="error rate")
if P_STAR is not None and P_STAR <= 1.0:
    ax.axvline(P_STAR, color="k", ls="--", label="predicted p*")
if BOUND_P is not None and BOUND_P <= 1.0:
    ax.axvline(BOUND_P, color="r", ls=":", label="finite-n bound")
ax.set_xlabel("observation rate p")
ax.set_ylabel("error rate")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig(here / "sweep.png", dpi=120, metadata={{"Software": None}})
"#
    )
}

/// Writes the requested files into `dir` and returns their paths.
pub fn emit_report(report: &SweepReport, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let create = |name: &str| -> Result<(PathBuf, fs::File)> {
        let path = dir.join(name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok((path, f))
    };
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let (path, f) = create("sweep.csv")?;
        write_sweep_csv(report, f).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(&path, source),
            other => other,
        })?;
        written.push(path);
        let (path, mut f) = create("plot_sweep.py")?;
        f.write_all(plot_script(report).as_bytes()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Report | OutputFormat::Both) {
        let (path, f) = create("summary.txt")?;
        write_summary(report, f).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_sweep, ExperimentConfig};

    fn report() -> SweepReport {
        let cfg = ExperimentConfig::from_json_str(
            r#"{ "model": { "type": "iid", "k": 2, "q": 2, "pmf": [0.4, 0.1, 0.1, 0.4] },
                 "n": 30, "trials": 40, "seed": 99,
                 "grid": { "p_min": 0.5, "p_max": 1.0, "steps": 4 } }"#,
        )
        .unwrap();
        run_sweep(&cfg).unwrap()
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        write_sweep_csv(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "p,trials,errors,error_rate,ci_low,ci_high,predicted_feasible"
        );
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn summary_has_reproduction_keys() {
        let r = report();
        let mut buf = Vec::new();
        write_summary(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("seed = 99"));
        assert!(text.contains(&format!("config_sha256 = {}", r.config_hash)));
        assert!(text.contains("predicted_p_star = 0.86096"));
    }

    #[test]
    fn emits_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report(), dir.path(), OutputFormat::Both).unwrap();
        assert_eq!(files.len(), 3);
        let script = fs::read_to_string(dir.path().join("plot_sweep.py")).unwrap();
        assert!(script.contains("P_STAR = 0.86"));
        let only_csv = tempfile::tempdir().unwrap();
        assert_eq!(emit_report(&report(), only_csv.path(), OutputFormat::Csv).unwrap().len(), 2);
    }

    #[test]
    fn unwritable_path_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = emit_report(&report(), &blocker.join("sub"), OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
