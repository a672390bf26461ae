//! Command-line front end: argument parsing, run manifests and subcommands.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult, EXIT_DIVERGED, EXIT_FAILURE, EXIT_IO, EXIT_OK, EXIT_USAGE};
pub use manifest::{RunManifest, Versions, MANIFEST_FILE};

use commands::RunOutput;
use error::Context;
use manifest::{manifest_path, unix_now, MANIFEST_SCHEMA_VERSION};

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

/// Runs a command to completion: outputs, their checks, and the manifest.
pub fn execute(command: Command) -> CliResult<RunManifest> {
    match command {
        Command::Rerun(r) => {
            let recorded: RunManifest = siren2::signal::read_json(&r.manifest).ctx("--manifest")?;
            let mut command = recorded.run;
            if matches!(command, Command::Rerun(_)) {
                return Err(CliError::usage("--manifest: a rerun manifest cannot itself be a rerun"));
            }
            if let Some(out) = r.out {
                command.set_out_dir(out);
            }
            execute_recorded(command, Some(&r.manifest))
        }
        command => execute_recorded(command, None),
    }
}

fn execute_recorded(mut command: Command, rerun_of: Option<&Path>) -> CliResult<RunManifest> {
    let out = io::resolve_out(command.out_dir().expect("non-rerun commands have --out"));
    command.set_out_dir(out.clone());
    io::create_dir(&out)?;
    let started_at = unix_now();
    let RunOutput { inputs, outputs } = match &command {
        Command::Fit(a) => commands::cmd_fit(a)?,
        Command::Denoise(a) => commands::cmd_denoise(a)?,
        Command::AnalyzeNtk(a) => commands::cmd_analyze_ntk(a)?,
        Command::AnalyzeActivations(a) => commands::cmd_analyze_activations(a)?,
        Command::Scales(a) => commands::cmd_scales(a)?,
        Command::Synth(a) => commands::cmd_synth(a)?,
        Command::Rerun(_) => unreachable!("reruns are resolved before execution"),
    };
    io::verify_outputs(&outputs)?;
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: command.seed(),
        run: command,
        versions: Versions::current(),
        inputs,
        outputs,
        started_at,
        finished_at: unix_now(),
        rerun_of: rerun_of.map(Path::to_path_buf),
    };
    let path = manifest_path(&out);
    siren2::signal::write_json(&manifest, &path).ctx("--out")?;
    io::verify_outputs(std::slice::from_ref(&path))?;
    Ok(manifest)
}
