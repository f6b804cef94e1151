//! `report.json` and the CSV outputs.

use std::collections::BTreeMap;

use coincidia_core::engine::ResolventStage;
use coincidia_core::{Grid, GridStyle, HypothesisReport, NormKind, SolveReport};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, ErrorBlock};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub problem: String,
    /// `ok`, `failed` (a checked condition does not hold) or `error`.
    pub status: String,
    pub config: RunConfig,
    pub parameters: BTreeMap<String, f64>,
    pub grid: Option<GridJson>,
    pub hypotheses: Vec<HypothesisJson>,
    pub solve: Option<SolveJson>,
    pub table: Vec<TableRow>,
    pub oracle: Vec<OracleRow>,
    pub notes: Vec<String>,
    pub error: Option<ErrorBlock>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: config.command.name().to_string(),
            problem: config.problem.clone(),
            status: "ok".into(),
            config: config.clone(),
            parameters: BTreeMap::new(),
            grid: None,
            hypotheses: Vec::new(),
            solve: None,
            table: Vec::new(),
            oracle: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    pub fn fail(&mut self, e: &CliError) {
        let block = e.block();
        self.status = if block.exit_code == crate::error::EXIT_CERTIFICATE {
            "failed".into()
        } else {
            "error".into()
        };
        self.error = Some(block);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridJson {
    pub style: String,
    pub a: f64,
    pub b: f64,
    pub cells: usize,
    pub points: usize,
}

impl From<&Grid> for GridJson {
    fn from(g: &Grid) -> Self {
        Self {
            style: match g.style() {
                GridStyle::Nodes => "nodes",
                GridStyle::Midpoints => "midpoints",
            }
            .into(),
            a: g.a(),
            b: g.b(),
            cells: g.cells(),
            points: g.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisJson {
    pub condition: String,
    pub pass: bool,
    pub constants: BTreeMap<String, f64>,
    /// Non-finite margins serialize as `null`.
    pub margins: BTreeMap<String, f64>,
    pub worst_margin: Option<f64>,
    pub violations: usize,
    pub witnesses: Vec<WitnessJson>,
    pub notes: Vec<String>,
}

impl From<&HypothesisReport> for HypothesisJson {
    fn from(h: &HypothesisReport) -> Self {
        Self {
            condition: h.condition.clone(),
            pass: h.pass(),
            constants: h.constants.clone(),
            margins: h.margins.clone(),
            worst_margin: h.worst_margin(),
            violations: h.violations,
            witnesses: h
                .witnesses
                .iter()
                .map(|w| WitnessJson {
                    label: w.label.clone(),
                    values: w.values.clone(),
                })
                .collect(),
            notes: h.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageJson {
    pub n: u64,
    pub inner_iterations: usize,
    pub residual: f64,
    pub identity_defect: f64,
}

impl From<&ResolventStage> for StageJson {
    fn from(s: &ResolventStage) -> Self {
        Self {
            n: s.n,
            inner_iterations: s.inner_iterations,
            residual: s.residual,
            identity_defect: s.identity_defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveJson {
    pub scheme: String,
    pub norm: String,
    pub converged: bool,
    pub stagnated: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub modulus: Option<f64>,
    pub stability_radius: Option<f64>,
    pub max_iterate_norm: f64,
    pub residual_history: Vec<f64>,
    pub stages: Vec<StageJson>,
    /// Problem-specific scalars (e.g. `lambda`, `eta_snap_distance`).
    pub extras: BTreeMap<String, f64>,
}

impl From<&SolveReport> for SolveJson {
    fn from(r: &SolveReport) -> Self {
        Self {
            scheme: r.scheme.name().into(),
            norm: match r.norm {
                NormKind::Sup => "sup",
                NormKind::L2 => "l2",
            }
            .into(),
            converged: r.converged,
            stagnated: r.stagnated,
            iterations: r.iterations,
            final_residual: r.final_residual,
            modulus: r.modulus,
            stability_radius: r.stability_radius,
            max_iterate_norm: r.max_iterate_norm,
            residual_history: r.residual_history.clone(),
            stages: r.stages.iter().map(StageJson::from).collect(),
            extras: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub name: String,
    pub epsilon: f64,
    pub psi: f64,
    pub sup_distance_to_solution: Option<f64>,
    pub localized: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub name: String,
    pub computed: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleRow {
    pub fn new(name: impl Into<String>, computed: f64, expected: f64, tolerance: f64) -> Self {
        let abs_error = (computed - expected).abs();
        Self {
            name: name.into(),
            computed,
            expected,
            abs_error,
            tolerance,
            pass: abs_error <= tolerance,
        }
    }

    /// For rows whose `computed` is already an error measure.
    pub fn error(name: impl Into<String>, abs_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            computed: abs_error,
            expected: 0.0,
            abs_error,
            tolerance,
            pass: abs_error <= tolerance,
        }
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
