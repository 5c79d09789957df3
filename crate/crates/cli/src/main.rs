//! `latwalk`: synthesize data from a victim, distill a proxy, walk latent
//! codes and score the walks. Every run leaves a manifest that `replay`
//! can repeat byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

mod cmd;
mod manifest;
mod victim;

/// Exit status for a replay whose outputs differ from the manifest.
const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "latwalk", version, about = "Black-box latent traversal toolkit")]
struct Cli {
    /// Worker threads for batch traversal and metric aggregation.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample latents, query the victim and keep confident labels.
    Synth(cmd::synth::SynthArgs),
    /// Train a proxy on a synthesized dataset.
    Train(cmd::train::TrainArgs),
    /// Walk start points with the iterative method or a baseline.
    Traverse(cmd::traverse::TraverseArgs),
    /// Score trajectory files.
    #[command(subcommand)]
    Eval(cmd::eval::EvalCommand),
    /// Re-run a manifest and compare every output hash.
    Replay(cmd::replay::ReplayArgs),
    /// Serve a builtin victim over the external protocol (test fixture).
    #[command(hide = true)]
    VictimStub(cmd::stub::StubArgs),
}

/// Files a run read and wrote. `anchor` names the manifest location.
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub anchor: PathBuf,
    /// Failure to report after the outputs and manifest are written.
    pub deferred: Option<anyhow::Error>,
}

pub trait RunConfig: Serialize + DeserializeOwned + Default {
    const COMMAND: &'static str;

    fn run(&self) -> Result<Outcome>;

    /// Sends every output into `dir`, keeping file names.
    fn redirect(&mut self, dir: &Path);
}

pub fn execute<C: RunConfig>(cfg: &C) -> Result<Outcome> {
    let mut outcome = cfg.run()?;
    manifest::write_manifest(
        C::COMMAND,
        cfg,
        &outcome.inputs,
        &outcome.outputs,
        &manifest::manifest_path(&outcome.anchor),
    )?;
    match outcome.deferred.take() {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

#[derive(Debug)]
pub struct Mismatch(pub Vec<PathBuf>);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} output(s) differ from the manifest", self.0.len())
    }
}

impl std::error::Error for Mismatch {}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<latwalk_core::Error>() {
            if core.is_numerical() {
                return EXIT_NUMERICAL;
            }
        }
        if cause.is::<Mismatch>() {
            return EXIT_MISMATCH;
        }
    }
    EXIT_INPUT
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => execute(&cmd::synth::config(a)?).map(drop),
        Command::Train(a) => execute(&cmd::train::config(a)?).map(drop),
        Command::Traverse(a) => execute(&cmd::traverse::config(a)?).map(drop),
        Command::Eval(a) => execute(&cmd::eval::config(a)?).map(drop),
        Command::Replay(a) => cmd::replay::run(a),
        Command::VictimStub(a) => cmd::stub::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
