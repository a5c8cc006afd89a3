//! Named residual reports, serialized as JSON with stable key order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Passes when residual ≤ tol.
    Max,
    /// Passes when residual > tol (smallest eigenvalues, margins).
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub kind: Kind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report {
    pub entries: BTreeMap<String, Entry>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn max(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> &mut Self {
        let pass = residual.is_finite() && residual <= tol;
        self.entries.insert(
            name.into(),
            Entry {
                residual,
                tol,
                pass,
                kind: Kind::Max,
            },
        );
        self
    }

    pub fn min(&mut self, name: impl Into<String>, value: f64, tol: f64) -> &mut Self {
        let pass = value.is_finite() && value > tol;
        self.entries.insert(
            name.into(),
            Entry {
                residual: value,
                tol,
                pass,
                kind: Kind::Min,
            },
        );
        self
    }

    /// Record a boolean condition as a 0/1 residual.
    pub fn flag(&mut self, name: impl Into<String>, ok: bool) -> &mut Self {
        self.max(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn merge(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, v) in &other.entries {
            self.entries.insert(format!("{prefix}{k}"), v.clone());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.entries.values().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, e)| !e.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn residual(&self, name: &str) -> f64 {
        self.entries.get(name).map(|e| e.residual).unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        let mut r = Report::new();
        r.max("a", f64::NAN, 1.0).min("b", f64::NAN, 0.0);
        assert_eq!(r.failures(), vec!["a", "b"]);
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut r = Report::new();
        r.max("z", 0.0, 1.0).max("a", 0.0, 1.0);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"z\"").unwrap());
    }
}
