use crate::buffer::RawPacket;
use crate::registry::{InterfaceConfig, RegisteredNode};
use crate::scan::{option_at, trace_geometry, ParsedEh, TraceGeometry};
use crate::wire::{
    fill_padding, NodeDataEntry, TraceVariant, FLAG_OVERFLOW, MAX_EH_LEN, TRACE_HEADER_LEN,
};

use super::plan::tail_padding;
use super::{rescan_padding, set_eh_len, sync_payload_length};

/// Per-hop facts a node stamps into trace options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitContext<'a> {
    pub node_id: u32,
    pub in_if: Option<&'a InterfaceConfig>,
    pub out_if: Option<&'a InterfaceConfig>,
    pub timestamp_sec: u32,
    pub timestamp_subsec: u32,
    pub hop_limit_at_arrival: u8,
}

impl TransitContext<'_> {
    pub fn entry(&self) -> NodeDataEntry {
        NodeDataEntry {
            hop_limit: self.hop_limit_at_arrival,
            node_id: self.node_id,
            ingress_if_id: self.in_if.map_or(0, |i| i.ioam_if_id),
            egress_if_id: self.out_if.map_or(0, |i| i.ioam_if_id),
            timestamp_sec: self.timestamp_sec,
            timestamp_subsec: self.timestamp_subsec,
            namespace_specific: 0,
        }
    }

    /// Incoming IOAM data may be touched only through an ingress interface.
    pub fn ingress_allowed(&self) -> bool {
        self.in_if.is_some_and(|i| i.role.ingress)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceUpdate {
    /// Role or namespace check failed; packet untouched.
    Skipped,
    Written,
    /// No room left; the overflow flag is now set.
    Overflow,
}

fn geometry_at(
    pkt: &[u8],
    node: &RegisteredNode,
    at: usize,
) -> Option<(TraceVariant, TraceGeometry)> {
    let opt = option_at(pkt, at);
    let variant = node.codes().trace_variant(opt.opt_type)?;
    trace_geometry(variant, opt.data).ok().map(|g| (variant, g))
}

fn set_overflow(bytes: &mut [u8], at: usize, mut geo: TraceGeometry) {
    geo.header.flags |= FLAG_OVERFLOW;
    geo.header.write(&mut bytes[at + 2..]);
}

/// Writes `entry` into the next free pre-allocated slot (or the single
/// template slot of a fresh incremental option) without any checks.
pub(crate) fn stamp_slot(
    bytes: &mut [u8],
    at: usize,
    node: &RegisteredNode,
    entry: &NodeDataEntry,
) {
    let Some((_, mut geo)) = geometry_at(bytes, node, at) else {
        return;
    };
    if geo.header.remaining_len == 0 {
        set_overflow(bytes, at, geo);
        return;
    }
    let slot = geo
        .slots
        .saturating_sub(usize::from(geo.header.remaining_len));
    let start = at + 2 + TRACE_HEADER_LEN + slot * geo.entry_len;
    entry.write(
        geo.header.trace_type,
        &mut bytes[start..start + geo.entry_len],
    );
    geo.header.remaining_len -= 1;
    geo.header.write(&mut bytes[at + 2..]);
}

/// Adds this node's entry to the trace option at packet offset `at`.
pub fn update_trace(
    pkt: &mut RawPacket,
    parsed: &mut ParsedEh,
    at: usize,
    node: &RegisteredNode,
    ctx: &TransitContext<'_>,
) -> TraceUpdate {
    let Some((variant, geo)) = geometry_at(pkt.bytes(), node, at) else {
        return TraceUpdate::Skipped;
    };
    if !ctx.ingress_allowed() || node.lookup_namespace(geo.header.namespace_id).is_none() {
        return TraceUpdate::Skipped;
    }
    let entry = ctx.entry();
    match variant {
        TraceVariant::PreAllocated => {
            if geo.header.remaining_len == 0 {
                set_overflow(pkt.bytes_mut(), at, geo);
                return TraceUpdate::Overflow;
            }
            stamp_slot(pkt.bytes_mut(), at, node, &entry);
            TraceUpdate::Written
        }
        TraceVariant::Incremental => grow_incremental(pkt, parsed, at, geo, &entry),
    }
}

/// Appends one entry to an incremental option in place. The header end is
/// kept on an 8-octet boundary by shrinking or adding 4 octets of tail
/// padding.
fn grow_incremental(
    pkt: &mut RawPacket,
    parsed: &mut ParsedEh,
    at: usize,
    mut geo: TraceGeometry,
    entry: &NodeDataEntry,
) -> TraceUpdate {
    let Some(eh) = parsed.eh else {
        return TraceUpdate::Skipped;
    };
    let g = geo.entry_len;
    let opt_len = usize::from(pkt.bytes()[at + 1]);
    let tp = tail_padding(parsed);
    let adj: isize = if (eh.size + g) % 8 == 0 {
        0
    } else if tp >= 4 {
        -4
    } else {
        4
    };
    let new_size = (eh.size + g).wrapping_add_signed(adj);
    if geo.header.remaining_len == 0 || opt_len + g > 255 || new_size > MAX_EH_LEN {
        set_overflow(pkt.bytes_mut(), at, geo);
        return TraceUpdate::Overflow;
    }
    let growth = new_size - eh.size;
    let opt_end = at + 2 + opt_len;
    let mid_end = eh.end() - tp;
    pkt.open_gap(eh.end(), growth);
    pkt.move_within(opt_end..mid_end, opt_end + g);
    let new_tp = tp.wrapping_add_signed(adj);
    let bytes = pkt.bytes_mut();
    fill_padding(&mut bytes[mid_end + g..mid_end + g + new_tp]);
    entry.write(geo.header.trace_type, &mut bytes[opt_end..opt_end + g]);
    bytes[at + 1] = (opt_len + g) as u8;
    geo.header.remaining_len -= 1;
    geo.header.write(&mut bytes[at + 2..]);
    set_eh_len(bytes, eh.offset, new_size);
    sync_payload_length(bytes);

    for t in &mut parsed.traces[..parsed.trace_count] {
        if t.offset > at {
            t.offset += g;
        } else if t.offset == at {
            t.size += g;
        }
    }
    parsed.eh = Some(crate::scan::Block {
        offset: eh.offset,
        size: new_size,
    });
    rescan_padding(pkt.bytes(), parsed);
    TraceUpdate::Written
}

/// Appends the entries carried by the trace option at `at` to `out`, in hop
/// order. `None` if `at` does not hold a well-formed trace.
pub(crate) fn read_trace(
    bytes: &[u8],
    node: &RegisteredNode,
    at: usize,
    out: &mut Vec<NodeDataEntry>,
) -> Option<TraceSummary> {
    let (variant, geo) = geometry_at(bytes, node, at)?;
    let used = match variant {
        TraceVariant::PreAllocated => geo.slots - usize::from(geo.header.remaining_len),
        TraceVariant::Incremental => geo.slots,
    };
    let base = at + 2 + TRACE_HEADER_LEN;
    for i in 0..used {
        let s = base + i * geo.entry_len;
        out.push(NodeDataEntry::read(
            geo.header.trace_type,
            &bytes[s..s + geo.entry_len],
        ));
    }
    Some(TraceSummary {
        namespace_id: geo.header.namespace_id,
        trace_type: geo.header.trace_type,
        overflow: geo.header.flags & FLAG_OVERFLOW != 0,
        remaining: geo.header.remaining_len,
    })
}

pub(crate) struct TraceSummary {
    pub namespace_id: u16,
    pub trace_type: u16,
    pub overflow: bool,
    pub remaining: u8,
}
