//! `simulate`: push one flow through a topology and print what the sink saw.

use std::io::Write;

use serde::Serialize;

use crate::sim::{reconstruct_path, SimReport, Topology};

use super::CliError;

#[derive(Serialize)]
struct RecordRow<'a> {
    seq: u64,
    namespace_id: u16,
    overflow: bool,
    node_ids: String,
    path: &'a str,
}

pub fn write_summary(report: &SimReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "generated={} encapsulated={} delivered={} dropped={} (malformed={} mtu={} hop_limit={})",
        report.generated,
        report.encapsulated,
        report.delivered_packets,
        report.dropped,
        report.drops.malformed,
        report.drops.mtu,
        report.drops.hop_limit
    )?;
    writeln!(
        out,
        "throughput pps={:.0} bps={:.0} ioam_octets_delivered={}",
        report.packets_per_sec(),
        report.bytes_per_sec(),
        report.ioam_octets_delivered
    )?;
    for n in &report.nodes {
        let fmt = |s: &crate::sim::RoleStats| match s.mean_ns() {
            Some(m) => format!("{}@{m:.0}ns", s.count),
            None => "-".to_owned(),
        };
        writeln!(
            out,
            "node {} encap={} transit={} decap={} reallocs={}",
            n.name,
            fmt(&n.encap),
            fmt(&n.transit),
            fmt(&n.decap),
            n.reallocs
        )?;
    }
    Ok(())
}

pub fn write_records(report: &SimReport, out: &mut dyn Write) -> std::io::Result<()> {
    for r in &report.records {
        let ids: Vec<String> = r.entries.iter().map(|e| e.node_id.to_string()).collect();
        writeln!(
            out,
            "record seq={} ns={} path={}{}",
            r.packet_seq,
            r.namespace_id,
            ids.join(","),
            if r.overflow { " overflow" } else { "" }
        )?;
    }
    Ok(())
}

pub fn write_records_csv(
    report: &SimReport,
    topo: &Topology,
    out: impl Write,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &report.records {
        let ids: Vec<String> = r.entries.iter().map(|e| e.node_id.to_string()).collect();
        let path = reconstruct_path(r, topo).join(">");
        w.serialize(RecordRow {
            seq: r.packet_seq,
            namespace_id: r.namespace_id,
            overflow: r.overflow,
            node_ids: ids.join(","),
            path: &path,
        })
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
