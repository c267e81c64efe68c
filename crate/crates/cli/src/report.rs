use std::collections::BTreeMap;

use mdisp::scalar::{CMat, C};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// One asserted invariant: `value` compared against `tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub value: f64,
    pub tolerance: f64,
    /// `at_most`, `at_least` or `holds`.
    pub check: &'static str,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub passed: bool,
    pub verdicts: BTreeMap<String, Verdict>,
    pub tolerances: BTreeMap<String, f64>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Value>,
}

impl Report {
    pub fn failed(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.passed)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Collects verdicts while a command runs.
#[derive(Debug, Default)]
pub struct Checks {
    pub verdicts: BTreeMap<String, Verdict>,
}

impl Checks {
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, "at_most", value <= tolerance);
    }

    /// Passes when `value ≥ -tolerance`.
    pub fn at_least(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, "at_least", value >= -tolerance);
    }

    pub fn holds(&mut self, name: &str, ok: bool) {
        self.push(name, f64::from(u8::from(ok)), 1.0, "holds", ok);
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, check: &'static str, ok: bool) {
        self.verdicts.insert(
            name.to_string(),
            Verdict {
                value,
                tolerance,
                check,
                passed: ok && !value.is_nan(),
            },
        );
    }
}

pub fn complex(z: C<f64>) -> Value {
    json!([z.re, z.im])
}

/// `{rows, cols, data}` with `data` row-major `[re, im]` pairs.
pub fn matrix(m: &CMat<f64>) -> Value {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(complex(m[(i, j)]));
        }
    }
    json!({ "rows": m.nrows(), "cols": m.ncols(), "data": data })
}

/// Real table in the same layout as [`matrix`], imaginary parts zero.
pub fn real_table(rows: usize, cols: usize, at: impl Fn(usize, usize) -> f64) -> Value {
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            data.push(json!([at(i, j), 0.0]));
        }
    }
    json!({ "rows": rows, "cols": cols, "data": data })
}
