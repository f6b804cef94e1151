//! Built-in problems and their default parameters.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use coincidia_core::bvp3::Bvp3Problem;
use coincidia_core::caputo::{CaputoProblem, NonlocalTerm};
use coincidia_core::pendulum::PendulumProblem;

use crate::config::Params;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Bvp3,
    Pendulum,
    Caputo,
}

#[derive(Debug, Clone, Copy)]
pub struct ProblemInfo {
    pub name: &'static str,
    pub family: Family,
    pub summary: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    pub default_grid_n: usize,
}

const REGISTRY: &[ProblemInfo] = &[
    ProblemInfo {
        name: "bvp3-example",
        family: Family::Bvp3,
        summary: "(x''^3 + 2x'')/(x''^2 + 3) = kappa x^2/(t + t x^2) + log(t sqrt(1 + 2e^{x'})), \
                  x(0) = 0, 10x'(1) + x'(1/2) = 0",
        defaults: &[("kappa", 0.4)],
        default_grid_n: 1000,
    },
    ProblemInfo {
        name: "pendulum-Pa",
        family: Family::Pendulum,
        summary: "u'' - a^2 sin(u) = sin(pi t), u(0) = u(1) = 0",
        defaults: &[("a", 1.0)],
        default_grid_n: 1000,
    },
    ProblemInfo {
        name: "caputo-constant",
        family: Family::Caputo,
        summary: "D^q x = 1, x(0) = x0",
        defaults: &[("q", 0.5), ("x0", 0.0), ("lf", 1.0), ("horizon", 1.0)],
        default_grid_n: 1024,
    },
    ProblemInfo {
        name: "caputo-linear",
        family: Family::Caputo,
        summary: "D^q x = lf x, x(0) = x0",
        defaults: &[("q", 0.5), ("x0", 1.0), ("lf", 1.0), ("horizon", 1.0)],
        default_grid_n: 1024,
    },
    ProblemInfo {
        name: "caputo-nonlocal",
        family: Family::Caputo,
        summary: "D^q x = 0, x(0) = x0 + c1 x(t1); lf bounds the (zero) source",
        defaults: &[
            ("q", 0.5),
            ("x0", 1.0),
            ("lf", 0.1),
            ("c1", 0.5),
            ("t1", 0.5),
            ("horizon", 1.0),
        ],
        default_grid_n: 1024,
    },
];

pub fn registry() -> &'static [ProblemInfo] {
    REGISTRY
}

pub fn lookup(name: &str) -> Result<&'static ProblemInfo, CliError> {
    REGISTRY.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<_> = REGISTRY.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown problem {name:?}; known: {}", known.join(", ")))
    })
}

pub enum Built {
    Bvp3(Bvp3Problem),
    Pendulum(PendulumProblem),
    Caputo(CaputoProblem),
}

/// Defaults overlaid with `params`; parameters a problem does not take are errors.
pub fn resolve(info: &ProblemInfo, params: &Params) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out: BTreeMap<String, f64> =
        info.defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, v) in params.set() {
        match out.get_mut(k) {
            Some(slot) => *slot = v,
            None => {
                return Err(CliError::Config(format!(
                    "problem {} takes no parameter {k}",
                    info.name
                )))
            }
        }
    }
    Ok(out)
}

pub fn build(info: &ProblemInfo, p: &BTreeMap<String, f64>) -> Result<Built, CliError> {
    let get = |k: &str| p[k];
    Ok(match info.name {
        "bvp3-example" => Built::Bvp3(Bvp3Problem::example(get("kappa"))?),
        "pendulum-Pa" => Built::Pendulum(PendulumProblem::pa(get("a"), |t| (PI * t).sin())?),
        "caputo-constant" => Built::Caputo(CaputoProblem::new(
            get("q"),
            |_, _| 1.0,
            get("lf"),
            get("x0"),
            Vec::new(),
            get("horizon"),
        )?),
        "caputo-linear" => {
            let lf = get("lf");
            Built::Caputo(CaputoProblem::new(
                get("q"),
                move |_, x| lf * x,
                lf,
                get("x0"),
                Vec::new(),
                get("horizon"),
            )?)
        }
        "caputo-nonlocal" => {
            let c1 = get("c1");
            Built::Caputo(CaputoProblem::new(
                get("q"),
                |_, _| 0.0,
                get("lf"),
                get("x0"),
                vec![NonlocalTerm::new(get("t1"), c1.abs(), move |x| c1 * x)],
                get("horizon"),
            )?)
        }
        other => unreachable!("registry entry {other} has no builder"),
    })
}
