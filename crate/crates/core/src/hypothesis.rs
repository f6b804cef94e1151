//! Pass/fail records for checkable hypotheses.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Witnesses kept per report; further violations are only counted.
const MAX_WITNESSES: usize = 16;

/// A sample that violates an inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub label: String,
    pub values: Vec<f64>,
}

/// Outcome of checking one condition.
///
/// A margin is `allowed - observed`; a report passes iff every margin is
/// nonnegative and no witness was recorded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HypothesisReport {
    pub condition: String,
    pub constants: BTreeMap<String, f64>,
    pub margins: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub violations: usize,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn new(condition: impl Into<String>) -> Self {
        Self {
            condition: condition.into(),
            ..Self::default()
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0 && self.margins.values().all(|&m| m >= 0.0)
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn margin(&mut self, name: &str, value: f64) {
        // NaN margins must fail, not silently pass
        let value = if value.is_nan() { f64::NEG_INFINITY } else { value };
        self.margins.insert(name.to_string(), value);
    }

    pub fn witness(&mut self, label: impl Into<String>, values: Vec<f64>) {
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(Witness {
                label: label.into(),
                values,
            });
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Folds `other` into `self`, prefixing its keys with `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: HypothesisReport) {
        let key = |k: String| alloc::format!("{prefix}.{k}");
        for (k, v) in other.constants {
            self.constants.insert(key(k), v);
        }
        for (k, v) in other.margins {
            self.margins.insert(key(k), v);
        }
        for w in other.witnesses {
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(Witness {
                    label: key(w.label),
                    values: w.values,
                });
            }
        }
        self.violations += other.violations;
        self.notes.extend(other.notes);
    }

    /// Smallest margin, if any were recorded.
    pub fn worst_margin(&self) -> Option<f64> {
        self.margins.values().copied().reduce(f64::min)
    }
}
