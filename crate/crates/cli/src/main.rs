//! `folner-lab`: experiment runner. Exit status 0 on success, 2 when a check
//! fails, 1 on usage or input errors.
//!
//! `folner-lab --config FILE [SUBCOMMAND] [ARGS..]` reads `key = value`
//! lines (`#` starts a comment) and treats each as `--key value` placed
//! before the command-line arguments, which therefore take precedence. A
//! `command = name` line selects the subcommand when none is given. A value
//! of `true` stands for a bare flag.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fs;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use output::{emit, Artifacts};

fn config_args(path: &str) -> Result<(Option<String>, Vec<OsString>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut command = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, _)| !k.is_empty())
            .ok_or_else(|| format!("{path}:{}: expected `key = value`", i + 1))?;
        if key == "command" {
            command = Some(value.to_string());
        } else {
            out.push(format!("--{key}").into());
            if value != "true" {
                out.push(value.into());
            }
        }
    }
    Ok((command, out))
}

/// Splices config-file arguments between the subcommand and the explicit
/// arguments.
fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    if argv.get(1).map(|a| a != "--config").unwrap_or(true) {
        return Ok(argv);
    }
    let path = argv.get(2).and_then(|p| p.to_str()).ok_or("--config needs a file path")?;
    let (file_command, file_args) = config_args(path)?;
    let mut rest = argv[3..].iter().cloned();
    let explicit = argv.get(3).filter(|a| !a.to_string_lossy().starts_with('-')).cloned();
    let command = match (explicit, file_command) {
        (Some(c), _) => {
            rest.next();
            c
        }
        (None, Some(c)) => c.into(),
        (None, None) => return Err("no subcommand given on the command line or in the config file".into()),
    };
    let mut out = vec![argv[0].clone(), command];
    out.extend(file_args);
    out.extend(rest);
    Ok(out)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("LAB_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn run(command: &Command) -> folner_lab_core::Result<Artifacts> {
    match command {
        Command::Density(a) => commands::density(a),
        Command::Besicovitch(a) => commands::besicovitch(a),
        Command::Dprime(a) => commands::dprime(a),
        Command::Dbar(a) => commands::dbar(a),
        Command::Empirical(a) => commands::empirical(a),
        Command::Prokhorov(a) => commands::prokhorov(a),
        Command::Omega(a) => commands::omega(a),
        Command::Transport(a) => commands::transport(a),
        Command::RhoChain(a) => commands::rho_chain(a),
        Command::GlueCheck(a) => commands::glue_check(a),
        Command::DbRhoCheck(a) => commands::db_rho_check(a),
        Command::TriangleCheck(a) => commands::triangle_check(a),
        Command::Tempered(a) => commands::tempered(a),
        Command::Examples(a) => commands::examples(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Convergence(a) => commands::convergence(a),
    }
}

fn output_dir(command: &Command) -> Option<&std::path::Path> {
    let out = match command {
        Command::Density(a) => &a.output,
        Command::Besicovitch(a) => &a.output,
        Command::Dprime(a) => &a.output,
        Command::Dbar(a) => &a.output,
        Command::Empirical(a) => &a.output,
        Command::Prokhorov(a) => &a.output,
        Command::Omega(a) => &a.output,
        Command::Transport(a) => &a.output,
        Command::RhoChain(a) => &a.output,
        Command::GlueCheck(a) | Command::TriangleCheck(a) => &a.output,
        Command::DbRhoCheck(a) => &a.output,
        Command::Tempered(a) => &a.output,
        Command::Examples(a) => &a.output,
        Command::Entropy(a) => &a.output,
        Command::Convergence(a) => &a.output,
    };
    out.out.as_deref()
}

fn main() -> ExitCode {
    let argv = match expand_argv(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let artifacts = match run(&cli.command) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(cli.command.name(), output_dir(&cli.command), &cli.command, &artifacts) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    match artifacts.pass {
        Some(false) => {
            eprintln!("{}: check failed", cli.command.name());
            ExitCode::from(2)
        }
        _ => ExitCode::SUCCESS,
    }
}
