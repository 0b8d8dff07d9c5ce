//! Command-line front end. [`run`] parses arguments, runs one subcommand and returns the
//! process exit code: 0 on success, 1 when a verification fails or a computation hits a
//! cap, 2 on usage or input errors.

mod args;
mod commands;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use vprofile::{Error, TreeModel};

pub use args::Cli;

/// Everything needed to rerun a command and get the same bytes back.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub vertex_cap: Option<usize>,
    pub rejection_cap: Option<u64>,
    pub outputs: Vec<String>,
}

/// What a subcommand produced.
pub(crate) struct Output {
    pub text: String,
    /// false when a verification suite found a counterexample
    pub passed: bool,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub caps: Option<(usize, u64)>,
}

impl Output {
    pub fn text(text: String) -> Self {
        Output { text, passed: true, model: None, seed: None, caps: None }
    }
}

pub(crate) fn parse_model(spec: &str) -> vprofile::Result<TreeModel> {
    if let Some(id) = spec.strip_prefix("builtin:") {
        vprofile::builtin_model(id)
    } else if let Some(path) = spec.strip_prefix("file:") {
        TreeModel::from_file(Path::new(path))
    } else {
        Err(Error::Config(format!("model {spec:?} must be builtin:<id> or file:<path>")))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Parse { .. } | Error::Unsupported(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn manifest_path(cli: &Cli) -> Option<PathBuf> {
    cli.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

/// Runs the command line `argv` (program name first).
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error[usage]: {first}");
            return 2;
        }
    };
    let (name, result) = commands::dispatch(&cli.command);
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            // drop the category word that Display puts in front; the tag already carries it
            let msg = e.to_string();
            let msg = match msg.split_once(": ") {
                Some((head, rest)) if !head.contains(' ') => rest.to_string(),
                _ => msg,
            };
            let _ = writeln!(stderr, "error[{}]: {msg}", e.kind());
            return exit_code(&e);
        }
    };
    let mut outputs = Vec::new();
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &out.text) {
            let _ = writeln!(stderr, "error[io]: {}: {e}", path.display());
            return 2;
        }
        outputs.push(path.display().to_string());
    } else if stdout.write_all(out.text.as_bytes()).is_err() {
        return 2;
    }
    let manifest = RunManifest {
        tool: "vprofile".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: name.into(),
        argv: argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
        model: out.model.clone(),
        seed: out.seed,
        vertex_cap: out.caps.map(|c| c.0),
        rejection_cap: out.caps.map(|c| c.1),
        outputs,
    };
    let json = serde_json::to_string(&manifest).expect("manifest serializes");
    match manifest_path(&cli) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, json + "\n") {
                let _ = writeln!(stderr, "error[io]: {}: {e}", path.display());
                return 2;
            }
        }
        None => {
            let _ = writeln!(stderr, "manifest: {json}");
        }
    }
    if out.passed {
        0
    } else {
        1
    }
}
