//! Tabulated chaos measurements along a time grid.
//!
//! CSV columns, one row per grid time (empty cell = not measured):
//!
//! | column | meaning |
//! |---|---|
//! | `time` | grid time |
//! | `omega_j`, `omega_j_se` | baseline-corrected `Ω_j` and its standard error |
//! | `omega_inf`, `omega_inf_se` | baseline-corrected `Ω_∞` against the reference |
//! | `rel_entropy`, `rel_entropy_se` | `H(f_t \| γ)` of the one-particle marginal |
//! | `rel_fisher`, `rel_fisher_se` | `I(f_t \| γ)` of the one-particle marginal |
//! | `m2`, `m4` | pooled second and fourth moments of `|v|` |
//! | `m4_reference` | fourth moment of the reference solution |
//! | `mean_collisions` | mean collision count per replica |

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fit::{ExpFit, RateFit};
use super::omega::Estimate;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

impl From<&Estimate> for Measured {
    fn from(e: &Estimate) -> Self {
        Self { value: e.value, stderr: e.stderr }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub time: f64,
    pub omega_j: Option<Measured>,
    pub omega_inf: Option<Measured>,
    pub rel_entropy: Option<Measured>,
    pub rel_fisher: Option<Measured>,
    pub m2: Option<f64>,
    pub m4: Option<f64>,
    pub m4_reference: Option<f64>,
    pub mean_collisions: Option<f64>,
}

impl ReportRow {
    pub fn at(time: f64) -> Self {
        Self { time, ..Default::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChaosReport {
    pub title: String,
    pub n: usize,
    pub dim: usize,
    pub j: usize,
    pub replicas: usize,
    pub kernel: String,
    pub rows: Vec<ReportRow>,
    /// Named power-law fits, e.g. `omega_inf vs N`.
    pub rate_fits: Vec<(String, RateFit)>,
    pub decay_fits: Vec<(String, ExpFit)>,
    pub notes: Vec<String>,
}

pub const CSV_HEADER: &str = "time,omega_j,omega_j_se,omega_inf,omega_inf_se,rel_entropy,rel_entropy_se,\
rel_fisher,rel_fisher_se,m2,m4,m4_reference,mean_collisions";

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v:.10e}");
    }
}

fn pair(out: &mut String, m: Option<Measured>) {
    cell(out, m.map(|m| m.value));
    cell(out, m.map(|m| m.stderr));
}

impl ChaosReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:.10e}", r.time);
            pair(&mut out, r.omega_j);
            pair(&mut out, r.omega_inf);
            pair(&mut out, r.rel_entropy);
            pair(&mut out, r.rel_fisher);
            cell(&mut out, r.m2);
            cell(&mut out, r.m4);
            cell(&mut out, r.m4_reference);
            cell(&mut out, r.mean_collisions);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape_and_json_round_trip() {
        let mut r = ChaosReport { title: "t".into(), n: 8, dim: 3, j: 2, replicas: 4, ..Default::default() };
        let mut row = ReportRow::at(0.5);
        row.omega_j = Some(Measured { value: 0.1, stderr: 0.01 });
        row.m4 = Some(15.0);
        r.rows.push(row);
        r.rows.push(ReportRow::at(1.0));
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let width = CSV_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == width));
        assert!(lines[2].ends_with(",,,,,,,,,,,,"));
        let back = ChaosReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
