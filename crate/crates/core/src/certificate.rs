//! Audit outcomes and their canonical serialization.
//!
//! Audits accumulate a [`Tally`] per sample range and merge them. Merging only
//! takes minima, maxima and integer counts, with ties broken by sample index,
//! so the merged result does not depend on how rayon splits the work.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Sample count, seed and tolerance multiplier shared by the audits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub samples: u64,
    pub seed: u64,
    pub tolerance_scale: f64,
}

impl AuditConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        AuditConfig {
            samples,
            seed,
            tolerance_scale: 1.0,
        }
    }

    pub fn tol(&self, base: f64) -> f64 {
        base * self.tolerance_scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub index: u64,
}

impl Extremum {
    fn pick_min(a: Extremum, b: Extremum) -> Extremum {
        match a.value.total_cmp(&b.value) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => if a.index <= b.index { a } else { b },
        }
    }

    fn pick_max(a: Extremum, b: Extremum) -> Extremum {
        match a.value.total_cmp(&b.value) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => if a.index <= b.index { a } else { b },
        }
    }
}

/// Mergeable per-sample statistics.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub evaluated: u64,
    pub skipped: u64,
    pub violations: u64,
    pub first_violation: Option<u64>,
    pub min: BTreeMap<&'static str, Extremum>,
    pub max: BTreeMap<&'static str, Extremum>,
}

impl Tally {
    pub fn observe_min(&mut self, key: &'static str, value: f64, index: u64) {
        let e = Extremum { value, index };
        self.min
            .entry(key)
            .and_modify(|m| *m = Extremum::pick_min(*m, e))
            .or_insert(e);
    }

    pub fn observe_max(&mut self, key: &'static str, value: f64, index: u64) {
        let e = Extremum { value, index };
        self.max
            .entry(key)
            .and_modify(|m| *m = Extremum::pick_max(*m, e))
            .or_insert(e);
    }

    pub fn observe(&mut self, key: &'static str, value: f64, index: u64) {
        self.observe_min(key, value, index);
        self.observe_max(key, value, index);
    }

    /// Records a failed sample. A NaN-valued check should be reported here too.
    pub fn violate(&mut self, index: u64) {
        self.violations += 1;
        self.first_violation = Some(self.first_violation.map_or(index, |f| f.min(index)));
    }

    pub fn check(&mut self, ok: bool, index: u64) {
        if !ok {
            self.violate(index);
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
        self.violations += other.violations;
        self.first_violation = match (self.first_violation, other.first_violation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for (k, e) in other.min {
            self.observe_min(k, e.value, e.index);
        }
        for (k, e) in other.max {
            self.observe_max(k, e.value, e.index);
        }
        self
    }

    pub fn max_of(&self, key: &str) -> Option<f64> {
        self.max.get(key).map(|e| e.value)
    }

    pub fn min_of(&self, key: &str) -> Option<f64> {
        self.min.get(key).map(|e| e.value)
    }
}

/// Runs `body(i, tally)` for `i in 0..n` on the rayon pool and merges.
pub fn run_samples<F>(n: u64, body: F) -> Tally
where
    F: Fn(u64, &mut Tally) + Sync,
{
    (0..n)
        .into_par_iter()
        .fold(Tally::default, |mut t, i| {
            body(i, &mut t);
            t
        })
        .reduce(Tally::default, Tally::merge)
}

/// Machine-readable outcome of one audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub seed: u64,
    pub samples: u64,
    pub skipped: u64,
    pub violations: u64,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub extremes: BTreeMap<String, f64>,
    pub arg_extremes: BTreeMap<String, u64>,
    pub metadata: BTreeMap<String, String>,
}

impl Certificate {
    pub fn new(name: impl Into<String>, seed: u64, tolerance: f64) -> Self {
        Certificate {
            name: name.into(),
            seed,
            samples: 0,
            skipped: 0,
            violations: 0,
            worst_residual: 0.0,
            tolerance,
            pass: false,
            extremes: BTreeMap::new(),
            arg_extremes: BTreeMap::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Builds a certificate from a tally. `worst_residual` is the maximum of
    /// the `"residual"` key; `pass` requires at least one evaluated sample, no
    /// violations and `worst_residual <= tolerance`.
    pub fn from_tally(name: impl Into<String>, seed: u64, tolerance: f64, tally: &Tally) -> Self {
        let mut c = Certificate::new(name, seed, tolerance);
        c.samples = tally.evaluated;
        c.skipped = tally.skipped;
        c.violations = tally.violations;
        c.worst_residual = tally.max_of("residual").unwrap_or(0.0);
        for (k, e) in &tally.min {
            c.extremes.insert(format!("min_{k}"), e.value);
            c.arg_extremes.insert(format!("argmin_{k}"), e.index);
        }
        for (k, e) in &tally.max {
            c.extremes.insert(format!("max_{k}"), e.value);
            c.arg_extremes.insert(format!("argmax_{k}"), e.index);
        }
        if let Some(f) = tally.first_violation {
            c.arg_extremes.insert("first_violation".into(), f);
        }
        c.pass = c.samples > 0 && c.violations == 0 && c.worst_residual <= tolerance;
        c
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn extreme(&self, key: &str) -> Option<f64> {
        self.extremes.get(key).copied()
    }

    /// Fails the certificate if `ok` is false, recording why.
    pub fn require(&mut self, ok: bool, what: &str) {
        if !ok {
            self.pass = false;
            self.metadata.insert(format!("failed_{what}"), "true".into());
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: samples={} skipped={} violations={} worst_residual={:e} tolerance={:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.skipped,
            self.violations,
            self.worst_residual,
            self.tolerance
        )
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("certificate serializes"))
    }
}

/// Several certificates written as one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub seed: u64,
    pub pass: bool,
    pub sections: Vec<Certificate>,
}

impl Report {
    pub fn new(name: impl Into<String>, seed: u64, sections: Vec<Certificate>) -> Self {
        let pass = !sections.is_empty() && sections.iter().all(|c| c.pass);
        Report {
            name: name.into(),
            seed,
            pass,
            sections,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }
}

/// `printf("%.17g")`.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Serializes with sorted keys, `%.17g` floats and `null` for non-finite values.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_g17(n.as_f64().expect("f64")));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            if items.iter().all(|i| !i.is_object() && !i.is_array()) {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, item, depth);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], depth + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_report(cert: &Certificate, path: &Path) -> Result<()> {
    write_text(path, &cert.to_canonical_json())
}

pub fn write_combined_report(report: &Report, path: &Path) -> Result<()> {
    write_text(path, &report.to_canonical_json())
}

/// `key,value` rows of the extremal statistics, for plotting.
pub fn write_extremes_csv(cert: &Certificate, path: &Path) -> Result<()> {
    let mut s = String::from("key,value\n");
    for (k, v) in &cert.extremes {
        let _ = writeln!(s, "{k},{}", format_g17(*v));
    }
    for (k, v) in &cert.arg_extremes {
        let _ = writeln!(s, "{k},{v}");
    }
    write_text(path, &s)
}
