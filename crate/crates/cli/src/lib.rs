//! Command-line pipeline around the `reanchor` core: synthesize videos,
//! mine anchors, track, evaluate and report.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod pipeline;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::formats::RunManifest;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let raw: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, &raw) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, raw: &[String]) -> CliResult<()> {
    let (config, _) = config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(a) => commands::synth(a, config, raw),
        Command::Mine(a) => commands::mine(a, config, raw),
        Command::Track(a) => commands::track(a, config, raw),
        Command::Eval(a) => commands::eval(a, config, raw),
        Command::Run(a) => commands::run(a, config, raw),
        Command::Replay(a) => {
            let manifest = RunManifest::load(&a.manifest)?;
            let mut argv = vec![OsString::from("reanchor")];
            argv.extend(commands::replay_args(&manifest, &a.manifest, a.out.as_ref()).into_iter().map(OsString::from));
            let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(format!("recorded arguments: {e}")))?;
            if matches!(cli.command, Command::Replay(_)) {
                return Err(CliError::Usage("a manifest cannot replay another replay".into()));
            }
            let raw: Vec<String> = argv[1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
            execute(cli, &raw)
        }
    }
}
