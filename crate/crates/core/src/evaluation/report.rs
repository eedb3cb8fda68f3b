//! Writes an [`ExperimentReport`] as CSV tables, gnuplot data blocks and
//! a JSON dump. Output is a pure function of the report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::protocol::{ExperimentReport, Method, PValueRow};
use crate::{Error, Result};

/// Files emitted for every report, independent of the SNR levels.
pub const REPORT_FILES: [&str; 9] = [
    "bac_raw.csv",
    "ranks_by_k.csv",
    "ranks_by_snr.csv",
    "pvalues_holm.csv",
    "pvalues_by_snr.csv",
    "pvalues_by_k.csv",
    "detectors.csv",
    "members.csv",
    "report.json",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn bac_raw(r: &ExperimentReport) -> String {
    let mut s = String::from("method,k_spec,snr_db,repeat,fold,bac\n");
    for b in &r.bac {
        writeln!(s, "{},{},{},{},{},{}", b.method, b.k_spec, b.snr_db, b.repeat, b.fold, b.bac).unwrap();
    }
    s
}

fn ranks_by_k(r: &ExperimentReport) -> String {
    let mut s = String::from("method,k_spec,avg_rank\n");
    for row in &r.ranks_by_k {
        writeln!(s, "{},{},{}", row.method, row.alternative, row.avg_rank).unwrap();
    }
    s
}

fn ranks_by_snr(r: &ExperimentReport) -> String {
    let mut s = String::from("k_spec,snr_db,method,avg_rank\n");
    for row in &r.ranks_by_snr {
        writeln!(s, "{},{},{},{}", row.k_spec, opt(row.snr_db), row.method, row.avg_rank).unwrap();
    }
    s
}

fn pvalues(rows: &[PValueRow]) -> String {
    let mut s = String::from("family,a,b,n,statistic,median_diff,p_raw,p_holm,reject,note\n");
    for p in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p.family,
            p.a,
            p.b,
            p.n,
            opt(p.statistic),
            p.median_diff,
            opt(p.p_raw),
            opt(p.p_holm),
            p.reject,
            p.note
        )
        .unwrap();
    }
    s
}

fn detectors(r: &ExperimentReport) -> String {
    let mut s = String::from("repeat,fold,channel,nu,tuning_bac\n");
    for d in &r.detectors {
        writeln!(s, "{},{},{},{},{}", d.repeat, d.fold, d.channel, d.nu, d.tuning_bac).unwrap();
    }
    s
}

fn members(r: &ExperimentReport) -> String {
    let mut s = String::from("k_spec,snr_db,repeat,fold,subset,bac\n");
    for m in &r.members {
        writeln!(s, "{},{},{},{},{},{}", m.k_spec, m.snr_db, m.repeat, m.fold, m.subset, m.bac).unwrap();
    }
    s
}

/// One gnuplot data block per k spec (select with `index`), one column
/// per method, one row per (repeat, fold) cell.
fn boxplot(r: &ExperimentReport, snr: f64) -> String {
    let methods: Vec<Method> = {
        let mut m = r.config.methods.clone();
        m.sort();
        m.dedup();
        m
    };
    let mut s = String::new();
    for (i, k) in r.config.k_specs.iter().enumerate() {
        if i > 0 {
            s.push_str("\n\n");
        }
        writeln!(s, "# k_spec={k} snr_db={snr}").unwrap();
        let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
        writeln!(s, "# {}", names.join(" ")).unwrap();
        let cols: Vec<Vec<f64>> = methods.iter().map(|&m| r.bac_of(m, k, snr)).collect();
        for row in 0..cols.first().map_or(0, Vec::len) {
            let line: Vec<String> = cols.iter().map(|c| c[row].to_string()).collect();
            writeln!(s, "{}", line.join(" ")).unwrap();
        }
    }
    s
}

pub fn boxplot_file_name(snr: f64) -> String {
    format!("boxplot_snr_{snr}.dat")
}

/// Writes every report file into `out_dir`, creating it if needed, and
/// returns the paths written.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files: Vec<(String, String)> = vec![
        ("bac_raw.csv".into(), bac_raw(report)),
        ("ranks_by_k.csv".into(), ranks_by_k(report)),
        ("ranks_by_snr.csv".into(), ranks_by_snr(report)),
        ("pvalues_holm.csv".into(), pvalues(&report.pvalues)),
        ("pvalues_by_snr.csv".into(), pvalues(&report.pvalues_by_snr)),
        ("pvalues_by_k.csv".into(), pvalues(&report.pvalues_by_k)),
        ("detectors.csv".into(), detectors(report)),
        ("members.csv".into(), members(report)),
        ("report.json".into(), report.to_json()? + "\n"),
    ];
    for &snr in &report.config.snr_levels {
        files.push((boxplot_file_name(snr), boxplot(report, snr)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
