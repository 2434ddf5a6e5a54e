//! Per-packet IOAM pipeline: scan, delete, update in place, insert.
//!
//! Nothing on the encap and transit paths allocates once the node is
//! registered, provided the packet buffer has enough headroom.

mod delete;
mod insert;
mod plan;
mod trace;

pub use delete::{delete_ioam, DeleteOutcome};
pub use insert::{insert_ioam, InsertOutcome};
pub use plan::{plan_insertion, InsertionPlan};
pub use trace::{update_trace, TraceUpdate, TransitContext};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buffer::{ContextAlreadyAttached, RawPacket};
use crate::registry::{RegisteredNode, RegistryError};
use crate::scan::{scan_eh, ParsedEh, Removal, ScanError};
use crate::wire::{EhKind, NodeDataEntry, RawOptions, IPV6_HEADER_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatapathError {
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("IOAM block of {0} octets is not a multiple of 4 of at least 12")]
    BadIoamSize(usize),
    #[error("extension header would grow to {0} octets")]
    EhTooLarge(usize),
    #[error("device {0:?} is not configured on this node")]
    UnknownInterface(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Context(#[from] ContextAlreadyAttached),
}

/// Trace data collected from an option removed at the domain edge.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub namespace_id: u16,
    /// In hop order; includes the removing node when it was eligible and
    /// room remained.
    pub entries: Vec<NodeDataEntry>,
    pub packet_seq: u64,
    /// The trace ran out of room somewhere along the path.
    pub overflow: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Timestamp {
    pub sec: u32,
    pub subsec: u32,
}

/// Everything about one traversal of one node except the packet.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hop<'a> {
    /// `None` when the packet originates here.
    pub in_if: Option<&'a str>,
    /// `None` when the packet is delivered here.
    pub out_if: Option<&'a str>,
    pub now: Timestamp,
    /// Insert this node's encap options (when it has any for `out_if`).
    pub encap: bool,
    /// Strip every known-namespace option regardless of configuration.
    pub force_decap: bool,
    /// The packet's destination address is this node; enables destination
    /// header processing.
    pub at_destination: bool,
    pub packet_seq: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcessSummary {
    pub options_removed: usize,
    pub records: usize,
    pub fast_path: bool,
    pub removed_octets: usize,
    /// Byte moves spent on removal.
    pub decap_moves: u32,
    pub traces_written: usize,
    pub overflows: usize,
    pub inserted_octets: usize,
    pub grown: isize,
    pub moves: u32,
    pub reallocs: u32,
}

impl ProcessSummary {
    pub fn did_encap(&self) -> bool {
        self.inserted_octets > 0
    }

    pub fn did_decap(&self) -> bool {
        self.options_removed > 0
    }
}

pub(crate) fn sync_payload_length(bytes: &mut [u8]) {
    let len = (bytes.len() - IPV6_HEADER_LEN) as u16;
    bytes[4..6].copy_from_slice(&len.to_be_bytes());
}

pub(crate) fn set_eh_len(bytes: &mut [u8], offset: usize, size: usize) {
    bytes[offset + 1] = (size / 8 - 1) as u8;
}

/// Recomputes padding bookkeeping for the header described by `parsed`.
pub(crate) fn rescan_padding(bytes: &[u8], parsed: &mut ParsedEh) {
    parsed.pad_size = 0;
    parsed.last_pad = None;
    let Some(eh) = parsed.eh else {
        return;
    };
    for opt in RawOptions::new(&bytes[eh.offset..eh.end()]).flatten() {
        if opt.is_padding() {
            let b = crate::scan::Block {
                offset: eh.offset + opt.offset,
                size: opt.total_len(),
            };
            parsed.pad_size += b.size;
            parsed.last_pad = Some(b);
        }
    }
}

/// Runs one node over one packet in the fixed order scan, decap, update,
/// encap, for the hop-by-hop header and then the destination header.
/// Records from removed trace options are appended to `records`.
pub fn process_packet(
    node: &RegisteredNode,
    hop: &Hop<'_>,
    pkt: &mut RawPacket,
    records: &mut Vec<TelemetryRecord>,
) -> Result<ProcessSummary, DatapathError> {
    let resolve = |dev: Option<&str>| match dev {
        None => Ok(None),
        Some(d) => node
            .interface(d)
            .map(Some)
            .ok_or_else(|| DatapathError::UnknownInterface(d.to_owned())),
    };
    let in_if = resolve(hop.in_if)?;
    let out_if = resolve(hop.out_if)?;
    let (reallocs0, moves0) = (pkt.reallocs(), pkt.moves());
    let ctx = TransitContext {
        node_id: node.node_id(),
        in_if,
        out_if,
        timestamp_sec: hop.now.sec,
        timestamp_subsec: hop.now.subsec,
        hop_limit_at_arrival: pkt.bytes().get(7).copied().unwrap_or(0),
    };
    let removal = if hop.force_decap {
        Removal::Forced
    } else {
        Removal::Configured
    };
    let slots = match (hop.encap, hop.out_if) {
        (true, Some(dev)) => node.encap_slots(dev),
        _ => None,
    };

    let mut summary = ProcessSummary::default();
    for kind in [EhKind::HopByHop, EhKind::Destination] {
        let handle_existing = kind == EhKind::HopByHop || hop.at_destination || hop.force_decap;
        let encap = slots.and_then(|s| s[kind.index()].as_ref());
        if !handle_existing && encap.is_none() {
            continue;
        }
        let mut parsed = scan_eh(pkt.bytes(), kind, node, removal)?;
        if !handle_existing {
            parsed.free_idx = 0;
            parsed.decap_size = 0;
            parsed.trace_count = 0;
        }
        if parsed.eh.is_none() && encap.is_none() {
            continue;
        }
        pkt.attach_context(parsed)?;
        let res = pkt.with_context(|pkt, cb| {
            let parsed = cb.expect("context attached above");
            if parsed.free_idx > 0 {
                decap(
                    pkt,
                    parsed,
                    node,
                    &ctx,
                    hop.packet_seq,
                    records,
                    &mut summary,
                );
            }
            for i in (0..parsed.trace_count).rev() {
                let at = parsed.traces[i].offset;
                match update_trace(pkt, parsed, at, node, &ctx) {
                    TraceUpdate::Written => summary.traces_written += 1,
                    TraceUpdate::Overflow => summary.overflows += 1,
                    TraceUpdate::Skipped => {}
                }
            }
            if let Some(buf) = encap {
                let out = insert::splice(pkt, node, buf, parsed)?;
                insert::stamp(pkt.bytes_mut(), node, buf, out.options_at, &ctx.entry());
                summary.inserted_octets += out.ioam_octets;
                summary.grown += out.grown;
            }
            Ok::<_, DatapathError>(())
        });
        pkt.detach_context();
        res?;
    }
    summary.moves = pkt.moves() - moves0;
    summary.reallocs = pkt.reallocs() - reallocs0;
    node.add_reallocs(u64::from(summary.reallocs));
    Ok(summary)
}

fn decap(
    pkt: &mut RawPacket,
    parsed: &mut ParsedEh,
    node: &RegisteredNode,
    ctx: &TransitContext<'_>,
    packet_seq: u64,
    records: &mut Vec<TelemetryRecord>,
    summary: &mut ProcessSummary,
) {
    let own = ctx.entry();
    for b in parsed.decap_blocks() {
        let mut entries = Vec::new();
        let Some(t) = trace::read_trace(pkt.bytes(), node, b.offset, &mut entries) else {
            continue;
        };
        let mut overflow = t.overflow;
        if ctx.ingress_allowed() {
            if t.remaining > 0 {
                entries.push(own.masked(t.trace_type));
            } else {
                overflow = true;
            }
        }
        records.push(TelemetryRecord {
            namespace_id: t.namespace_id,
            entries,
            packet_seq,
            overflow,
        });
        summary.records += 1;
    }
    summary.options_removed += parsed.free_idx;
    let moves0 = pkt.moves();
    let out = delete_ioam(pkt, parsed, node);
    summary.decap_moves += pkt.moves() - moves0;
    summary.fast_path |= out.fast_path;
    summary.removed_octets += out.removed;
}
