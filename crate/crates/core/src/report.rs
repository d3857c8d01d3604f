//! Verification records and run reports.
//!
//! Everything here serializes deterministically: maps are ordered and floats
//! are printed in shortest round-trip form. The document layout is described
//! in `docs/report-format.md`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::measures::MCEstimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Contract case with nothing to check (e.g. a flat missing the support).
    Skipped,
    Pass,
    Indeterminate,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Fail dominates indeterminate, which dominates pass, which dominates skipped.
    pub fn combine(self, other: Status) -> Status {
        self.max(other)
    }
}

/// One reported number. Exact values carry `samples = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Quantity {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Quantity { name: name.into(), value, std_error: 0.0, samples: 0, seed: 0 }
    }

    pub fn estimate(name: impl Into<String>, e: &MCEstimate) -> Self {
        Quantity { name: name.into(), value: e.value, std_error: e.std_error, samples: e.samples, seed: e.seed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Statement being checked, e.g. `"gaussian waist"`.
    pub theorem: String,
    pub status: Status,
    pub quantities: Vec<Quantity>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Free-form structured payload (matrices, traces, probe inventories).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, theorem: impl Into<String>) -> Self {
        CheckRecord {
            name: name.into(),
            theorem: theorem.into(),
            status: Status::Indeterminate,
            quantities: Vec::new(),
            tolerances: BTreeMap::new(),
            notes: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn status(mut self, s: Status) -> Self {
        self.status = s;
        self
    }

    pub fn quantity(mut self, q: Quantity) -> Self {
        self.quantities.push(q);
        self
    }

    pub fn exact(self, name: impl Into<String>, value: f64) -> Self {
        self.quantity(Quantity::exact(name, value))
    }

    pub fn estimate(self, name: impl Into<String>, e: &MCEstimate) -> Self {
        self.quantity(Quantity::estimate(name, e))
    }

    pub fn tolerance(mut self, name: impl Into<String>, value: f64) -> Self {
        self.tolerances.insert(name.into(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn detail(mut self, key: impl Into<String>, value: impl Serialize) -> Self {
        self.details.insert(key.into(), serde_json::to_value(value).expect("serializable detail"));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Matrix as nested rows for JSON output.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub run_id: String,
    pub command: String,
    pub seed: u64,
    pub descriptors: Vec<String>,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    pub wall_time_seconds: f64,
}

impl VerificationReport {
    /// The run id is a hash of the command line and seed, so identical runs
    /// share it.
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        let command = command.into();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in command.bytes().chain(seed.to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        VerificationReport {
            run_id: format!("{h:016x}"),
            command,
            seed,
            descriptors: Vec::new(),
            status: Status::Pass,
            checks: Vec::new(),
            wall_time_seconds: 0.0,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.status = self.status.combine(check.status);
        self.checks.push(check);
    }

    pub fn describe(&mut self, d: impl Into<String>) {
        self.descriptors.push(d.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_combination() {
        assert_eq!(Status::Pass.combine(Status::Indeterminate), Status::Indeterminate);
        assert_eq!(Status::Fail.combine(Status::Indeterminate), Status::Fail);
    }

    #[test]
    fn report_is_deterministic() {
        let build = || {
            let mut r = VerificationReport::new("volume --body cube2", 7);
            r.push(
                CheckRecord::new("volume", "volume")
                    .status(Status::Pass)
                    .exact("volume", 1.0)
                    .tolerance("abs", 1e-12)
                    .detail("b", 2)
                    .detail("a", 1),
            );
            r.to_json()
        };
        assert_eq!(build(), build());
        assert!(build().find("\"a\"").unwrap() < build().find("\"b\"").unwrap());
        assert_ne!(VerificationReport::new("x", 1).run_id, VerificationReport::new("x", 2).run_id);
    }
}
