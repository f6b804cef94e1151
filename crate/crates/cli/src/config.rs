//! Run configuration, shared by the JSON config file and the command line.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const MIN_GRID_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Check the hypotheses of a problem
    Check,
    /// Solve a problem and write the solution
    Solve,
    /// Ulam-Hyers table for trial functions
    Stability,
    /// Compare against closed-form or published values
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Solve => "solve",
            Command::Stability => "stability",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    #[default]
    Auto,
    Picard,
    Averaged,
    Resolvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CandidateSet {
    Table1,
}

/// Numeric problem parameters; which ones apply depends on the problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Params {
    pub fn is_empty(&self) -> bool {
        self.set().is_empty()
    }

    /// `(name, value)` for every parameter that was given.
    pub fn set(&self) -> Vec<(&'static str, f64)> {
        [
            ("kappa", self.kappa),
            ("a", self.a),
            ("q", self.q),
            ("lf", self.lf),
            ("x0", self.x0),
            ("c1", self.c1),
            ("t1", self.t1),
            ("horizon", self.horizon),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// Values in `other` win.
    pub fn overlay(&mut self, other: &Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(kappa, a, q, lf, x0, c1, t1, horizon);
    }
}

/// A run as written in a config file. Absent optional fields stay absent
/// when the config is written back out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub problem: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<CandidateSet>,
}

impl RunConfig {
    pub fn new(command: Command, problem: impl Into<String>) -> Self {
        Self {
            command,
            problem: problem.into(),
            grid_n: None,
            tol: None,
            max_iter: None,
            scheme: None,
            seed: None,
            output_dir: None,
            params: Params::default(),
            candidates: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(DEFAULT_MAX_ITER)
    }

    pub fn scheme(&self) -> SchemeArg {
        self.scheme.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(n) = self.grid_n {
            if n < MIN_GRID_N {
                return Err(CliError::Config(format!("grid_n must be at least {MIN_GRID_N}, got {n}")));
            }
        }
        let tol = self.tol();
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("tol must lie in (0, 1), got {tol}")));
        }
        if self.max_iter() == 0 {
            return Err(CliError::Config("max_iter must be positive".into()));
        }
        for (name, v) in self.params.set() {
            if !v.is_finite() {
                return Err(CliError::Config(format!("parameter {name} must be finite")));
            }
        }
        Ok(())
    }
}
