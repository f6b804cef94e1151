//! Library side of the `coincidia` command: configuration, the problem
//! registry, run execution and output files.

pub mod config;
pub mod error;
pub mod registry;
pub mod report;
pub mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{Command, RunConfig};
pub use error::CliError;
pub use run::{run, Outcome};

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(contents).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    drop(f);
    fs::rename(&tmp, &target).map_err(io(&target))?;
    Ok(target)
}

/// Writes `report.json` and every output file of `outcome` into `dir`.
pub fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, bytes) in &outcome.files {
        written.push(write_atomic(dir, name, bytes)?);
    }
    written.push(write_atomic(dir, "report.json", outcome.report.to_json().as_bytes())?);
    Ok(written)
}
