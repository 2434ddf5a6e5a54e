//! In-process IOAM domain: nodes joined by lossless links, fed by a UDP
//! generator, with per-node timing and telemetry collection.

mod run;
mod topology;

pub use run::{
    run_flow, select_for_encap, DropCounts, FlowSpec, NodeReport, RoleStats, SimReport,
    MIN_PACKET_SIZE,
};
pub use topology::{
    chain, chain_config, ChainSpec, Endpoint, Link, LinkSpec, NodeSpec, SimNode, Step, Topology,
    TopologyConfig, DEFAULT_MTU, DEFAULT_TOPOLOGY, FIRST_NAMESPACE,
};

use thiserror::Error;

use crate::datapath::TelemetryRecord;
use crate::registry::RegistryError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad topology: {0}")]
    BadTopology(String),
    #[error("node {node}: {source}")]
    Registry {
        node: String,
        #[source]
        source: RegistryError,
    },
    #[error("no path from {src} to {dst}")]
    NoPath { src: String, dst: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("bad flow: {0}")]
    BadFlow(String),
    #[error("topology JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Fixture(#[from] crate::wire::FixtureError),
}

/// Node names in the order the record's entries were written. Entries whose
/// node id is unknown to the topology show as `#id`.
pub fn reconstruct_path(rec: &TelemetryRecord, topo: &Topology) -> Vec<String> {
    rec.entries
        .iter()
        .map(|e| {
            topo.name_of_node_id(e.node_id)
                .map_or_else(|| format!("#{}", e.node_id), str::to_owned)
        })
        .collect()
}
