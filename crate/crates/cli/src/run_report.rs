use std::collections::BTreeMap;
use std::fmt::Write as _;

use phaselab::report::Report;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Usage, IO or spec error; exit code 2.
#[derive(Debug)]
pub struct Failure(pub String);

impl From<phaselab::Error> for Failure {
    fn from(e: phaselab::Error) -> Self {
        Failure(e.to_string())
    }
}

#[derive(Serialize, Debug)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 over the command, its arguments and every input file.
    pub inputs_digest: String,
    pub inputs: BTreeMap<String, Value>,
    /// Values chosen on the user's behalf (grids, windows, basepoints).
    pub resolved: BTreeMap<String, Value>,
    pub data: BTreeMap<String, Value>,
    pub entries: Report,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub struct Builder {
    command: String,
    hasher: Sha256,
    inputs: BTreeMap<String, Value>,
    pub resolved: BTreeMap<String, Value>,
    pub data: BTreeMap<String, Value>,
    pub entries: Report,
}

impl Builder {
    pub fn new(command: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Builder {
            command: command.into(),
            hasher,
            inputs: BTreeMap::new(),
            resolved: BTreeMap::new(),
            data: BTreeMap::new(),
            entries: Report::new(),
        }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("input value");
        self.hasher.update(key.as_bytes());
        self.hasher.update(v.to_string().as_bytes());
        self.inputs.insert(key.into(), v);
    }

    /// Hash file contents; the path itself is not part of the digest.
    pub fn input_file(&mut self, key: &str, bytes: &[u8]) {
        let d = hex(&Sha256::digest(bytes));
        self.hasher.update(key.as_bytes());
        self.hasher.update(d.as_bytes());
        self.inputs.insert(key.into(), Value::String(format!("sha256:{d}")));
    }

    pub fn resolve(&mut self, key: &str, v: impl Serialize) {
        self.resolved.insert(key.into(), serde_json::to_value(v).expect("resolved value"));
    }

    pub fn datum(&mut self, key: &str, v: impl Serialize) {
        self.data.insert(key.into(), serde_json::to_value(v).expect("data value"));
    }

    pub fn finish(self, wall_time_s: Option<f64>) -> RunReport {
        let pass = self.entries.passed();
        RunReport {
            command: self.command,
            inputs_digest: hex(&self.hasher.finalize()),
            inputs: self.inputs,
            resolved: self.resolved,
            data: self.data,
            entries: self.entries,
            pass,
            wall_time_s,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunReport {
    pub fn render(&self, json: bool) -> String {
        if json {
            let mut s = serde_json::to_string_pretty(self).expect("report serialization");
            s.push('\n');
            return s;
        }
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.command, &self.inputs_digest[..12]);
        for (k, v) in &self.resolved {
            let _ = writeln!(s, "  {k} = {v}");
        }
        for (k, e) in &self.entries.entries {
            let tag = if e.pass { "PASS" } else { "FAIL" };
            let op = match e.kind {
                phaselab::report::Kind::Max => "<=",
                phaselab::report::Kind::Min => ">",
            };
            let _ = writeln!(s, "{tag}  {k}: {:.3e} (want {op} {:.1e})", e.residual, e.tol);
        }
        let failed = self.entries.failures().len();
        let _ = writeln!(
            s,
            "{}: {} checks, {} failed",
            if self.pass { "pass" } else { "fail" },
            self.entries.entries.len(),
            failed
        );
        if let Some(t) = self.wall_time_s {
            let _ = writeln!(s, "wall time {t:.3} s");
        }
        s
    }
}
