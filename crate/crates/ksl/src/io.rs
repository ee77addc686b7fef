//! Deterministic CSV and JSON renderings of every artifact the CLI emits.
//!
//! All numbers are written with Rust's shortest round-trip formatting, so a
//! value read back parses to the identical bits and identical inputs yield
//! byte-identical files. Profile CSV carries its metadata in a leading
//! `# {json}` comment line so a file is self-describing and can be re-read
//! into a [`RadialProfile`].

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::flow::FlowResult;
use crate::geometry::DecayReport;
use crate::kernels::KernelIdentityReport;
use crate::soliton::{ProfileKind, RadialProfile, SolitonParams};

/// Shortest decimal representation that round-trips to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v}")
}

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

#[derive(Serialize, Deserialize)]
struct ProfileMeta {
    kind: String,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    gauge: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
}

fn profile_meta(profile: &RadialProfile, s: Option<f64>) -> ProfileMeta {
    match profile.kind {
        ProfileKind::Soliton(p) => ProfileMeta {
            kind: "soliton".to_string(),
            n: p.n,
            lambda: Some(p.lambda),
            gauge: profile.gauge,
            s,
        },
        ProfileKind::Custom { n } => ProfileMeta {
            kind: "custom".to_string(),
            n,
            lambda: None,
            gauge: profile.gauge,
            s,
        },
    }
}

/// Profile as CSV: a `# {json}` metadata line, a header row, then one row
/// per node. Pass `s` for flow snapshots.
pub fn profile_to_csv(profile: &RadialProfile, s: Option<f64>) -> Result<String> {
    let meta = serde_json::to_string(&profile_meta(profile, s))?;
    let mut out = String::new();
    writeln!(out, "# {meta}").expect("string write");
    out.push_str("t,phi,phi1,phi2,phi3\n");
    for i in 0..profile.len() {
        push_row(
            &mut out,
            &[
                format_f64(profile.t[i]),
                format_f64(profile.phi[i]),
                format_f64(profile.phi1[i]),
                format_f64(profile.phi2[i]),
                format_f64(profile.phi3[i]),
            ],
        );
    }
    Ok(out)
}

/// Reads a profile back from [`profile_to_csv`] output.
pub fn profile_from_csv(text: &str) -> Result<RadialProfile> {
    let mut lines = text.lines();
    let meta_line = lines
        .next()
        .ok_or_else(|| Error::invalid("empty profile file"))?;
    let meta_json = meta_line
        .strip_prefix("# ")
        .ok_or_else(|| Error::invalid("profile file must start with a '# {json}' line"))?;
    let meta: ProfileMeta = serde_json::from_str(meta_json)?;
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("profile file missing the header row"))?;
    if header != "t,phi,phi1,phi2,phi3" {
        return Err(Error::invalid(format!(
            "unexpected profile header: {header}"
        )));
    }
    let kind = match (meta.kind.as_str(), meta.lambda) {
        ("soliton", Some(lambda)) => ProfileKind::Soliton(SolitonParams::new(meta.n, lambda)?),
        ("soliton", None) => return Err(Error::invalid("soliton profile metadata needs lambda")),
        ("custom", _) => ProfileKind::Custom { n: meta.n },
        (other, _) => return Err(Error::invalid(format!("unknown profile kind: {other}"))),
    };

    let mut t = Vec::new();
    let mut phi = Vec::new();
    let mut phi1 = Vec::new();
    let mut phi2 = Vec::new();
    let mut phi3 = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(Error::invalid(format!(
                "profile row {} has {} fields, expected 5",
                idx + 3,
                cells.len()
            )));
        }
        let mut vals = [0.0_f64; 5];
        for (slot, cell) in vals.iter_mut().zip(&cells) {
            *slot = cell.parse::<f64>().map_err(|_| {
                Error::invalid(format!("bad number {cell:?} in profile row {}", idx + 3))
            })?;
        }
        t.push(vals[0]);
        phi.push(vals[1]);
        phi1.push(vals[2]);
        phi2.push(vals[3]);
        phi3.push(vals[4]);
    }
    let profile = RadialProfile {
        t,
        phi,
        phi1,
        phi2,
        phi3,
        kind,
        gauge: meta.gauge,
    };
    profile.validate()?;
    Ok(profile)
}

/// Profile as a JSON document with the same metadata and per-node rows.
pub fn profile_to_json(profile: &RadialProfile, s: Option<f64>) -> Result<String> {
    let rows: Vec<_> = (0..profile.len())
        .map(|i| {
            json!({
                "t": profile.t[i],
                "phi": profile.phi[i],
                "phi1": profile.phi1[i],
                "phi2": profile.phi2[i],
                "phi3": profile.phi3[i],
            })
        })
        .collect();
    let doc = json!({
        "meta": serde_json::to_value(profile_meta(profile, s))?,
        "rows": rows,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// One row of a curvature scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub t: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub min_eig: f64,
    #[serde(rename = "A")]
    pub holds_a: bool,
    #[serde(rename = "B")]
    pub holds_b: bool,
    #[serde(rename = "C")]
    pub holds_c: bool,
    #[serde(rename = "D")]
    pub holds_d: bool,
}

pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("t,d,a,b,c,R,min_eig,A,B,C,D\n");
    for row in rows {
        push_row(
            &mut out,
            &[
                format_f64(row.t),
                format_f64(row.d),
                format_f64(row.a),
                format_f64(row.b),
                format_f64(row.c),
                format_f64(row.r),
                format_f64(row.min_eig),
                row.holds_a.to_string(),
                row.holds_b.to_string(),
                row.holds_c.to_string(),
                row.holds_d.to_string(),
            ],
        );
    }
    out
}

pub fn scan_to_json(rows: &[ScanRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&rows)?)
}

pub fn decay_to_csv(report: &DecayReport) -> Result<String> {
    let mut out = String::from("t,d,vol,R,vol_ratio,Rd2,avgR_scaled,riesz_ratio\n");
    for row in &report.rows {
        push_row(
            &mut out,
            &[
                format_f64(row.t),
                format_f64(row.d),
                format_f64(row.vol),
                format_f64(row.r),
                format_f64(row.vol_ratio),
                format_f64(row.r_d2),
                format_f64(row.avg_r_scaled),
                format_f64(row.riesz_ratio),
            ],
        );
    }
    let constants = serde_json::to_string(&json!({
        "c1_hat": report.c1_hat,
        "c2_hat": report.c2_hat,
        "C_hat": report.c_hat,
    }))?;
    writeln!(out, "# {constants}").expect("string write");
    Ok(out)
}

pub fn decay_to_json(report: &DecayReport) -> Result<String> {
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|row| {
            json!({
                "t": row.t,
                "d": row.d,
                "vol": row.vol,
                "R": row.r,
                "vol_ratio": row.vol_ratio,
                "Rd2": row.r_d2,
                "avgR_scaled": row.avg_r_scaled,
                "riesz_ratio": row.riesz_ratio,
            })
        })
        .collect();
    let doc = json!({
        "constants": {
            "c1_hat": report.c1_hat,
            "c2_hat": report.c2_hat,
            "C_hat": report.c_hat,
        },
        "rows": rows,
        "warnings": report.warnings,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn flow_to_csv(result: &FlowResult) -> String {
    let mut out = String::from("s,R_origin,R_max,R_origin_times_1ps,vol_ratio,selfsim_err\n");
    for snap in &result.snapshots {
        let d = &snap.diagnostics;
        push_row(
            &mut out,
            &[
                format_f64(snap.s),
                format_f64(d.r_origin),
                format_f64(d.r_max),
                format_f64(d.r_origin * (1.0 + snap.s)),
                format_f64(d.vol_ratio_at_window_edge),
                snap.selfsim_err.map(format_f64).unwrap_or_default(),
            ],
        );
    }
    out
}

pub fn flow_to_json(result: &FlowResult) -> Result<String> {
    let rows: Vec<_> = result
        .snapshots
        .iter()
        .map(|snap| {
            let d = &snap.diagnostics;
            json!({
                "s": snap.s,
                "R_origin": d.r_origin,
                "R_max": d.r_max,
                "R_origin_times_1ps": d.r_origin * (1.0 + snap.s),
                "vol_ratio": d.vol_ratio_at_window_edge,
                "selfsim_err": snap.selfsim_err,
            })
        })
        .collect();
    let doc = json!({
        "rows": rows,
        "summary": {
            "r_max_scaled_sup": result.summary.r_max_scaled_sup,
            "vol_ratio_min": result.summary.vol_ratio_min,
            "selfsim_err_sup": result.summary.selfsim_err_sup,
            "warnings": result.summary.warnings,
        },
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn kernel_report_to_csv(reports: &[KernelIdentityReport]) -> String {
    let mut out = String::from("n,step,f_chain,g_chain,h_chain,l_chain,max_residual\n");
    for r in reports {
        push_row(
            &mut out,
            &[
                r.n.to_string(),
                format_f64(r.step),
                format_f64(r.f_chain),
                format_f64(r.g_chain),
                format_f64(r.h_chain),
                format_f64(r.l_chain),
                format_f64(r.max_residual()),
            ],
        );
    }
    out
}

pub fn kernel_report_to_json(reports: &[KernelIdentityReport]) -> Result<String> {
    let rows: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "step": r.step,
                "f_chain": r.f_chain,
                "g_chain": r.g_chain,
                "h_chain": r.h_chain,
                "l_chain": r.l_chain,
                "max_residual": r.max_residual(),
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

/// Writes `text` to the path, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
