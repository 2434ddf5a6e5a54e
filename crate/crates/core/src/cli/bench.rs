//! The five benchmark experiments.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::sim::{chain, run_flow, ChainSpec, FlowSpec, SimReport};
use crate::wire::TRACE_HOP_LIMIT_NODE_ID;

use super::CliError;

pub const DEFAULT_FRACTIONS: [f64; 9] = [0.0, 0.0001, 0.001, 0.01, 0.02, 0.10, 0.25, 0.50, 1.0];
pub const CSV_HEADER: &str = "experiment,param,run,pps,bps,encap_ns,transit_ns,decap_ns,reallocs";

/// Slots per trace option in the fraction and option-count sweeps.
pub const OPTION_SWEEP_CAPACITY: u8 = 2;
/// Slots per trace option in the namespace sweeps. Sized so one namespace's
/// option takes the room of two option-sweep options.
pub const NAMESPACE_SWEEP_CAPACITY: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Baseline: no IOAM, registered but idle, registered and inserting.
    E1,
    /// Fraction of packets carrying IOAM.
    E2,
    /// Number of trace options in one namespace.
    E3,
    /// Number of namespaces, one option each.
    E4,
    /// Per-node delay against the number of namespaces.
    E5,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [Self::E1, Self::E2, Self::E3, Self::E4, Self::E5];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 => "e3",
            Self::E4 => "e4",
            Self::E5 => "e5",
        };
        f.write_str(s)
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown experiment {s:?} (expected e1..e5)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub experiments: Vec<Experiment>,
    pub fractions: Vec<f64>,
    /// E3 sweeps 1..=options.
    pub options: usize,
    /// E4/E5 sweep 1..=namespaces.
    pub namespaces: usize,
    pub packet_size: usize,
    pub packets: u64,
    pub runs: usize,
    pub seed: u64,
    pub headroom: usize,
    pub workers: Option<usize>,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            experiments: Experiment::ALL.to_vec(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            options: 11,
            namespaces: 7,
            packet_size: 1200,
            packets: 10_000,
            runs: 5,
            seed: 1,
            headroom: 128,
            workers: None,
        }
    }
}

impl BenchParams {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.options == 0 || self.namespaces == 0 || self.packets == 0 || self.runs == 0 {
            return bad("options, namespaces, packets and runs must be at least 1".into());
        }
        if self.fractions.is_empty() {
            return bad("no fractions given".into());
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return bad(format!("fraction {f} outside [0, 1]"));
        }
        if self.packet_size < crate::sim::MIN_PACKET_SIZE {
            return bad(format!("packet size {} too small", self.packet_size));
        }
        Ok(())
    }
}

/// One parameter point of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub experiment: Experiment,
    pub param: String,
    pub chain: ChainSpec,
    pub fraction: f64,
}

pub fn points(exp: Experiment, params: &BenchParams) -> Vec<BenchPoint> {
    let option_chain = |options: usize| ChainSpec {
        options_per_namespace: options,
        trace_type: TRACE_HOP_LIMIT_NODE_ID,
        capacity: OPTION_SWEEP_CAPACITY,
        ..ChainSpec::default()
    };
    let ns_chain = |namespaces: usize| ChainSpec {
        namespaces,
        trace_type: TRACE_HOP_LIMIT_NODE_ID,
        capacity: NAMESPACE_SWEEP_CAPACITY,
        ..ChainSpec::default()
    };
    let point = |param: String, chain: ChainSpec, fraction: f64| BenchPoint {
        experiment: exp,
        param,
        chain,
        fraction,
    };
    match exp {
        Experiment::E1 => vec![
            point(
                "no-ioam".into(),
                ChainSpec {
                    registered: false,
                    ..option_chain(1)
                },
                0.0,
            ),
            point("registered-no-insert".into(), option_chain(1), 0.0),
            point("registered-insert".into(), option_chain(1), 1.0),
        ],
        Experiment::E2 => params
            .fractions
            .iter()
            .map(|&f| point(f.to_string(), option_chain(1), f))
            .collect(),
        Experiment::E3 => (1..=params.options)
            .map(|n| point(n.to_string(), option_chain(n), 1.0))
            .collect(),
        Experiment::E4 | Experiment::E5 => (1..=params.namespaces)
            .map(|n| point(n.to_string(), ns_chain(n), 1.0))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub experiment: String,
    pub param: String,
    /// Run index, or `mean`.
    pub run: String,
    pub pps: f64,
    pub bps: f64,
    pub encap_ns: Option<f64>,
    pub transit_ns: Option<f64>,
    pub decap_ns: Option<f64>,
    pub reallocs: f64,
}

pub fn run_point(
    point: &BenchPoint,
    params: &BenchParams,
    run: usize,
) -> Result<SimReport, CliError> {
    let topo = chain(&point.chain)?;
    let flow = FlowSpec {
        packet_size: params.packet_size,
        count: params.packets,
        ioam_fraction: point.fraction,
        headroom: params.headroom,
        workers: params.workers,
        ..FlowSpec::new("Alpha", "Beta")
    };
    Ok(run_flow(
        &topo,
        &flow,
        params.seed.wrapping_add(run as u64),
    )?)
}

pub fn row_from_report(point: &BenchPoint, run: usize, r: &SimReport) -> BenchRow {
    let mean = |name: &str, pick: fn(&crate::sim::NodeReport) -> &crate::sim::RoleStats| {
        r.node(name).and_then(|n| pick(n).mean_ns())
    };
    BenchRow {
        experiment: point.experiment.to_string(),
        param: point.param.clone(),
        run: run.to_string(),
        pps: r.packets_per_sec(),
        bps: r.bytes_per_sec(),
        encap_ns: mean("Athos", |n| &n.encap),
        transit_ns: mean("Porthos", |n| &n.transit),
        decap_ns: mean("Aramis", |n| &n.decap),
        reallocs: r.nodes.iter().map(|n| n.reallocs).sum::<u64>() as f64,
    }
}

fn mean_row(rows: &[BenchRow]) -> BenchRow {
    let n = rows.len() as f64;
    let avg = |f: fn(&BenchRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let avg_opt = |f: fn(&BenchRow) -> Option<f64>| {
        let vals: Vec<f64> = rows.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    BenchRow {
        experiment: rows[0].experiment.clone(),
        param: rows[0].param.clone(),
        run: "mean".into(),
        pps: avg(|r| r.pps),
        bps: avg(|r| r.bps),
        encap_ns: avg_opt(|r| r.encap_ns),
        transit_ns: avg_opt(|r| r.transit_ns),
        decap_ns: avg_opt(|r| r.decap_ns),
        reallocs: avg(|r| r.reallocs),
    }
}

/// Runs every requested experiment. Within a parameter sweep the runs are
/// interleaved (run 0 of every point, then run 1, ...) so slow drift in the
/// host affects all points alike.
pub fn run_bench(
    params: &BenchParams,
    mut progress: impl FnMut(&BenchRow),
) -> Result<Vec<BenchRow>, CliError> {
    params.validate()?;
    let mut out = Vec::new();
    for &exp in &params.experiments {
        let pts = points(exp, params);
        let mut per_point: Vec<Vec<BenchRow>> = vec![Vec::new(); pts.len()];
        for run in 0..params.runs {
            for (i, p) in pts.iter().enumerate() {
                let report = run_point(p, params, run)?;
                let row = row_from_report(p, run, &report);
                progress(&row);
                per_point[i].push(row);
            }
        }
        for rows in per_point {
            let mean = mean_row(&rows);
            out.extend(rows);
            out.push(mean);
        }
    }
    Ok(out)
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
