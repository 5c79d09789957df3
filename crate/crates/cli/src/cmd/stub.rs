use std::io::{BufReader, Write};
use std::net::TcpListener;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use latwalk_core::victims::{serve_stub, StubBehavior, VictimSpec};

use crate::victim::VictimArgs;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Behavior {
    Normal,
    WrongDim,
    Silent,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[command(flatten)]
    victim: VictimArgs,
    #[arg(long, value_enum, default_value = "normal")]
    behavior: Behavior,
    /// Accept TCP connections here instead of serving stdin/stdout.
    #[arg(long, value_name = "ADDR")]
    listen: Option<String>,
}

pub fn run(a: StubArgs) -> Result<()> {
    let spec = a.victim.resolve()?.unwrap_or_else(VictimSpec::linear_gauss_default);
    let victim = spec.build().context("building victim")?;
    let behavior = match a.behavior {
        Behavior::Normal => StubBehavior::Normal,
        Behavior::WrongDim => StubBehavior::WrongDimension,
        Behavior::Silent => StubBehavior::Silent,
    };
    match a.listen {
        None => {
            let stdin = std::io::stdin().lock();
            let mut stdout = std::io::stdout().lock();
            serve_stub(&victim, behavior, stdin, &mut stdout)?;
            stdout.flush()?;
        }
        Some(addr) => {
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let mut w = stream.try_clone()?;
                if let Err(e) = serve_stub(&victim, behavior, BufReader::new(stream), &mut w) {
                    eprintln!("connection ended: {e}");
                }
            }
        }
    }
    Ok(())
}
