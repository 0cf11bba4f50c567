//! Report rows and their CSV / JSON / table renderings.
//!
//! CSV output is byte-identical across runs with the same configuration:
//! fixed column order, fixed 6-decimal formatting, deterministic row order.

use serde::Serialize;

/// One output row of a barrier computation.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub id: String,
    pub p: f64,
    pub kappa: f64,
    pub barrier: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub rank_mode: String,
    pub clamped: bool,
}

pub const CSV_HEADER: &str = "id,p,kappa,barrier,theta1,theta2,theta3,rank_mode,clamped";

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            r.id, r.p, r.kappa, r.barrier, r.theta1, r.theta2, r.theta3, r.rank_mode, r.clamped
        ));
    }
    out
}

pub fn to_json(rows: &[ReportRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

/// Paper-style table: 4-decimal barrier and weights.
pub fn to_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>8} {:>8} {:>8} {:>8} {:>8}  {:<9} {}\n",
        "id", "p", "kappa", "barrier", "theta1", "theta2=3", "rank", "flags"
    ));
    for r in rows {
        let mut flags = String::new();
        if r.clamped {
            flags.push_str("clamped");
        }
        out.push_str(&format!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  {:<9} {}\n",
            r.id, r.p, r.kappa, r.barrier, r.theta1, r.theta2, r.rank_mode, flags
        ));
    }
    out
}
