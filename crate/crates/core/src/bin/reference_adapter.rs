//! Bridge adapter backed by the built-in simulator.
//!
//! Serves as the protocol reference and as a test double; `--fault` makes it
//! misbehave in specific ways on the first `run` request.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use shadowprint::backend::VariantProfile;
use shadowprint::bridge::{handle_request_line, BridgeResponse};
use shadowprint::channels::ChannelName;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Fault {
    /// Exit with status 3 instead of answering.
    CrashOnRun,
    /// Answer with the wrong id.
    WrongId,
    /// Print a line that is not JSON.
    Garbage,
    /// Never answer.
    Hang,
    /// Exit right after the handshake.
    ExitAfterHello,
    /// Report an expectation of 1.5.
    OutOfRange,
}

#[derive(Parser, Debug)]
#[command(name = "reference-adapter", version, about = "Reference bridge adapter over the built-in simulator")]
struct Args {
    /// Built-in noise semantics to emulate.
    #[arg(long, default_value = "variant-A")]
    profile: String,
    /// Adapter name reported in the handshake.
    #[arg(long, default_value = "reference-adapter")]
    name: String,
    /// Adapter version reported in the handshake.
    #[arg(long = "adapter-version", default_value = env!("CARGO_PKG_VERSION"))]
    adapter_version: String,
    /// Channels to support; all when omitted.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<ChannelName>>,
    #[arg(long, value_enum)]
    fault: Option<Fault>,
}

fn requested_channel(line: &str) -> Option<ChannelName> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    serde_json::from_value(value.get("noise")?.get("channel")?.clone()).ok()
}

fn main() -> ExitCode {
    let args = Args::parse();
    let profile = match VariantProfile::builtin(&args.profile) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("reference-adapter: {e}");
            return ExitCode::from(1);
        }
    };
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let (mut response, stop) = handle_request_line(&line, &profile, &args.name, &args.adapter_version);
        let is_run = line.contains(r#""op":"run""#);
        if let (Some(allowed), Some(caps)) = (&args.channels, response.capabilities.as_mut()) {
            caps.channels = allowed.iter().map(|c| c.to_string()).collect();
        }
        if let (Some(allowed), Some(channel)) = (&args.channels, requested_channel(&line)) {
            if !allowed.contains(&channel) {
                response = BridgeResponse::error(response.id, format!("unsupported channel '{channel}'"));
            }
        }
        match args.fault {
            Some(Fault::CrashOnRun) if is_run => {
                eprintln!("reference-adapter: simulated crash");
                return ExitCode::from(3);
            }
            Some(Fault::WrongId) if is_run => response.id += 1,
            Some(Fault::OutOfRange) if is_run => response.expectation = Some(1.5),
            Some(Fault::Garbage) if is_run => {
                let _ = writeln!(stdout, "this is not json");
                let _ = stdout.flush();
                continue;
            }
            Some(Fault::Hang) if is_run => loop {
                thread::sleep(Duration::from_secs(3600));
            },
            _ => {}
        }
        let text = serde_json::to_string(&response).expect("responses always serialize");
        if writeln!(stdout, "{text}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
        if stop || (args.fault == Some(Fault::ExitAfterHello) && response.name.is_some()) {
            break;
        }
    }
    ExitCode::SUCCESS
}
