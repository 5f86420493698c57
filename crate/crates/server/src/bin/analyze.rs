//! Replays an event log and writes the factor description report as JSON.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use lfg_core::analysis::{report_from_log, AnalysisConfig};
use lfg_core::log::read_log;

#[derive(Parser)]
#[command(about = "Aggregate an event log into factor descriptions")]
struct Args {
    /// JSONL event log written by lfg-server.
    #[arg(long)]
    log: PathBuf,
    /// Minimum match count for a term to survive.
    #[arg(long, default_value_t = 2)]
    threshold: u64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let file = File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
    let contents = read_log(BufReader::new(file))?;
    if contents.corrupt > 0 {
        eprintln!("skipped {} corrupt lines", contents.corrupt);
    }
    let report = report_from_log(&contents, &AnalysisConfig { good_label_threshold: args.threshold })?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => writeln!(std::io::stdout(), "{json}")?,
    }
    Ok(())
}
