use std::io::Write;

use fck_core::Scalar;
use serde::Serialize;

use crate::config::Format;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

/// One checked identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub key: String,
    pub module: String,
    pub identity: String,
    pub params: String,
    pub backend: String,
    pub lhs: String,
    pub rhs: String,
    pub delta: String,
    pub tolerance: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new() -> Self {
        Report { rows: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.verdict != Verdict::Pass)
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    /// Keys are `module.NNN`, numbered in insertion order per module.
    pub fn push(&mut self, module: &str, mut row: Row) {
        let n = self.rows.iter().filter(|r| r.module == module).count();
        row.module = module.into();
        row.key = format!("{module}.{n:03}");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> CliResult<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                for r in &self.rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            Format::Plain => {
                for r in &self.rows {
                    let v = match r.verdict {
                        Verdict::Pass => "PASS",
                        Verdict::Fail => "FAIL",
                        Verdict::Error => "ERROR",
                    };
                    writeln!(out, "{v:5} {:16} {} [{}] Δ = {}", r.key, r.identity, r.params, r.delta)?;
                    if r.verdict != Verdict::Pass {
                        writeln!(out, "      lhs = {}\n      rhs = {}", r.lhs, r.rhs)?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

/// Row comparing two scalars: literal equality when `tol` is zero.
pub fn scalar_row<F: Scalar>(identity: impl Into<String>, params: impl Into<String>, lhs: &F, rhs: &F, tol: &F) -> Row {
    let delta = (lhs.clone() - rhs).abs();
    let ok = if tol.is_zero() { lhs == rhs } else { delta <= *tol };
    Row {
        key: String::new(),
        module: String::new(),
        identity: identity.into(),
        params: params.into(),
        backend: F::BACKEND.name().into(),
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        delta: delta.to_string(),
        tolerance: tol.to_string(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Row comparing two coefficient lists.
pub fn series_row<F: Scalar>(identity: impl Into<String>, params: impl Into<String>, lhs: &[F], rhs: &[F], tol: &F) -> Row {
    let mut delta = F::zero();
    let mut ok = lhs.len() == rhs.len();
    for (a, b) in lhs.iter().zip(rhs) {
        let d = (a.clone() - b).abs();
        ok &= if tol.is_zero() { a == b } else { d <= *tol };
        delta = F::max_of(delta, d);
    }
    let show = |v: &[F]| format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
    Row {
        key: String::new(),
        module: String::new(),
        identity: identity.into(),
        params: params.into(),
        backend: F::BACKEND.name().into(),
        lhs: show(lhs),
        rhs: show(rhs),
        delta: delta.to_string(),
        tolerance: tol.to_string(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Row for a boolean property; `detail` explains a failure.
pub fn bool_row(identity: impl Into<String>, params: impl Into<String>, ok: bool, detail: impl Into<String>) -> Row {
    Row {
        key: String::new(),
        module: String::new(),
        identity: identity.into(),
        params: params.into(),
        backend: "exact".into(),
        lhs: detail.into(),
        rhs: String::new(),
        delta: String::new(),
        tolerance: String::new(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    }
}

/// Row recording an error raised while checking.
pub fn error_row(identity: impl Into<String>, params: impl Into<String>, err: &dyn std::fmt::Display) -> Row {
    Row {
        key: String::new(),
        module: String::new(),
        identity: identity.into(),
        params: params.into(),
        backend: String::new(),
        lhs: err.to_string(),
        rhs: String::new(),
        delta: String::new(),
        tolerance: String::new(),
        verdict: Verdict::Error,
    }
}
