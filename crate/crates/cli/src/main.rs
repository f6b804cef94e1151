use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use coincidia::config::{CandidateSet, Command, Params, RunConfig, SchemeArg};
use coincidia::error::EXIT_CONFIG;
use coincidia::report::Report;
use coincidia::{run, write_atomic, write_outputs, CliError};

/// Coincidence-problem solver: hypothesis checks, solves, stability tables
/// and oracle comparisons for the built-in problems.
#[derive(Debug, Parser)]
#[command(name = "coincidia", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registry name, e.g. pendulum-Pa or bvp3-example.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin_candidates: Option<CandidateSet>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lf: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let mut c = RunConfig::from_json(&text)?;
                c.command = self.command;
                c
            }
            None => RunConfig::new(self.command, String::new()),
        };
        if let Some(p) = self.problem {
            config.problem = p;
        }
        if config.problem.is_empty() {
            return Err(CliError::Config("--problem is required".into()));
        }
        config.grid_n = self.grid_n.or(config.grid_n);
        config.tol = self.tol.or(config.tol);
        config.max_iter = self.max_iter.or(config.max_iter);
        config.scheme = self.scheme.or(config.scheme);
        config.seed = self.seed.or(config.seed);
        config.output_dir = self.out.or(config.output_dir);
        config.candidates = self.builtin_candidates.or(config.candidates);
        config.params.overlay(&Params {
            kappa: self.kappa,
            a: self.a,
            q: self.q,
            lf: self.lf,
            x0: self.x0,
            c1: self.c1,
            t1: self.t1,
            horizon: self.horizon,
        });
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, problem, out) = (cli.command, cli.problem.clone(), cli.out.clone());
    let config = match cli.into_config() {
        Ok(c) => c,
        Err(e) => {
            // still leave a report with the error block behind
            let mut stub = RunConfig::new(command, problem.unwrap_or_default());
            stub.output_dir = out;
            let mut report = Report::new(&stub);
            report.fail(&e);
            let dir = stub.output_dir();
            let _ = std::fs::create_dir_all(&dir)
                .map_err(drop)
                .and_then(|_| write_atomic(&dir, "report.json", report.to_json().as_bytes()).map_err(drop));
            eprintln!("coincidia: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = run(&config);
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let dir = config.output_dir();
    if let Err(e) = write_outputs(&dir, &outcome) {
        eprintln!("coincidia: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    match &outcome.report.error {
        Some(err) => eprintln!("coincidia: {}: {}", err.kind, err.message),
        None => println!(
            "coincidia {} {}: ok ({})",
            outcome.report.command,
            outcome.report.problem,
            dir.join("report.json").display()
        ),
    }
    ExitCode::from(outcome.exit_code as u8)
}
