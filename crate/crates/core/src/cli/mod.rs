//! The `ioamsim` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

pub mod bench;
pub mod inspect;
pub mod simulate;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::sim::{run_flow, FlowSpec, SimError, Topology};
use crate::wire::{read_hex_fixtures, read_pcap, OptionCodes};

use bench::{BenchParams, Experiment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Parse(#[from] inspect::ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ioamsim",
    version,
    about = "IOAM for IPv6: packet tools and domain simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run throughput / delay experiments and write CSV.
    Bench(BenchArgs),
    /// Decode packets from a hex dump or pcap file.
    Inspect(InspectArgs),
    /// Send one flow through a topology and print the telemetry.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiments to run (e1..e5); all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub experiment: Vec<Experiment>,
    /// Fractions for e2.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Largest option count for e3.
    #[arg(long, default_value_t = 11)]
    pub options: usize,
    /// Largest namespace count for e4/e5.
    #[arg(long, default_value_t = 7)]
    pub namespaces: usize,
    #[arg(long, default_value_t = 1200)]
    pub pkt_size: usize,
    #[arg(long, default_value_t = 10_000)]
    pub packets: u64,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 128)]
    pub headroom: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InspectArgs {
    /// Hex string, or a file with one packet per line.
    #[arg(long)]
    pub hex: Option<String>,
    #[arg(long)]
    pub pcap: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Topology JSON; the built-in five-node chain when omitted.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    /// Source and destination node names.
    #[arg(long, default_value = "Alpha,Beta")]
    pub flow: String,
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub packets: u64,
    #[arg(long, default_value_t = 1200)]
    pub pkt_size: usize,
    #[arg(long, default_value_t = 128)]
    pub headroom: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the telemetry records as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write one pcap per link here.
    #[arg(long)]
    pub pcap_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Bench(a) => bench_cmd(a, out, err),
        Command::Inspect(a) => inspect_cmd(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
    }
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let params = BenchParams {
        experiments: if a.experiment.is_empty() {
            Experiment::ALL.to_vec()
        } else {
            a.experiment
        },
        fractions: a
            .fractions
            .unwrap_or_else(|| bench::DEFAULT_FRACTIONS.to_vec()),
        options: a.options,
        namespaces: a.namespaces,
        packet_size: a.pkt_size,
        packets: a.packets,
        runs: a.runs,
        seed: a.seed,
        headroom: a.headroom,
        workers: a.workers,
    };
    let rows = bench::run_bench(&params, |r| {
        let _ = writeln!(
            err,
            "{} {} run {}: {:.0} pps",
            r.experiment, r.param, r.run, r.pps
        );
    })?;
    match a.out {
        Some(path) => bench::write_csv(&rows, File::create(path)?),
        None => bench::write_csv(&rows, out),
    }
}

fn inspect_cmd(a: InspectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let packets = if let Some(hex) = a.hex {
        let path = PathBuf::from(&hex);
        if path.is_file() {
            read_hex_fixtures(BufReader::new(File::open(path)?))
        } else {
            read_hex_fixtures(hex.as_bytes())
        }
    } else {
        let path = a.pcap.expect("clap enforces one input");
        read_pcap(BufReader::new(File::open(path)?))
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let codes = OptionCodes::default();
    for (i, p) in packets.iter().enumerate() {
        out.write_all(inspect::inspect_packet(i, p, &codes)?.as_bytes())?;
    }
    Ok(())
}

fn simulate_cmd(a: SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (src, dst) = a
        .flow
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("--flow wants SRC,DST, got {:?}", a.flow)))?;
    if !(0.0..=1.0).contains(&a.fraction) {
        return Err(CliError::Usage(format!(
            "fraction {} outside [0, 1]",
            a.fraction
        )));
    }
    let topo = match &a.topology {
        Some(p) => Topology::load(p)?,
        None => Topology::default_chain(),
    };
    let flow = FlowSpec {
        packet_size: a.pkt_size,
        count: a.packets,
        ioam_fraction: a.fraction,
        headroom: a.headroom,
        capture_dir: a.pcap_dir,
        ..FlowSpec::new(src.trim(), dst.trim())
    };
    let report = run_flow(&topo, &flow, a.seed)?;
    simulate::write_summary(&report, out)?;
    simulate::write_records(&report, out)?;
    if let Some(path) = a.csv {
        simulate::write_records_csv(&report, &topo, File::create(path)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("ioamsim").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_capture(&["bench", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["inspect"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["simulate", "--flow", "Alpha"]).0, EXIT_USAGE);
    }

    #[test]
    fn simulate_prints_records() {
        let (code, out, err) = run_capture(&["simulate", "--packets", "3"]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(out.contains("record seq=0 ns=123 path=1,2,3"), "{out}");
        assert_eq!(out.matches("record ").count(), 3);
    }

    #[test]
    fn unknown_node_is_runtime_error() {
        let (code, _, err) = run_capture(&["simulate", "--flow", "Alpha,Nowhere"]);
        assert_eq!(code, EXIT_RUNTIME);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn bad_hex_is_runtime_error() {
        assert_eq!(run_capture(&["inspect", "--hex", "6000zz"]).0, EXIT_RUNTIME);
        assert_eq!(run_capture(&["inspect", "--hex", "6000"]).0, EXIT_RUNTIME);
    }
}
