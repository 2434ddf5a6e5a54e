//! Human-readable dump of IPv6 packets and their IOAM options.

use std::fmt::Write as _;

use thiserror::Error;

use crate::wire::{
    parse_packet_with, EhKind, NodeDataEntry, OptionBody, OptionCodes, PacketView, TraceVariant,
    WireError, IPV6_HEADER_LEN, TRACE_HOP_LIMIT_NODE_ID, TRACE_IF_IDS, TRACE_NAMESPACE_DATA,
    TRACE_TS_SEC, TRACE_TS_SUBSEC,
};

#[derive(Debug, Error)]
#[error("packet {packet}: parse error{}: {source}", at.map(|o| format!(" at octet {o}")).unwrap_or_default())]
pub struct ParseError {
    pub packet: usize,
    /// Offset of the offending octet, when the error points at one.
    pub at: Option<usize>,
    #[source]
    pub source: WireError,
}

/// Octet offset that a wire error blames, if any.
pub fn error_offset(err: &WireError) -> Option<usize> {
    match *err {
        WireError::TooShort { got, .. } => Some(got),
        WireError::NotIpv6(_) => Some(0),
        WireError::TruncatedEh { offset, .. } => Some(offset),
        WireError::PayloadLengthMismatch { .. } => Some(4),
        WireError::MisplacedHopByHop(o) => Some(o),
        WireError::OptionOverrun { offset, .. } => Some(offset),
        WireError::MalformedIoam { offset, .. } => Some(offset),
        _ => None,
    }
}

pub fn inspect_packet(
    index: usize,
    bytes: &[u8],
    codes: &OptionCodes,
) -> Result<String, ParseError> {
    let view = parse_packet_with(bytes, codes).map_err(|source| ParseError {
        packet: index,
        at: error_offset(&source),
        source,
    })?;
    Ok(render(index, bytes.len(), &view))
}

fn render(index: usize, total: usize, view: &PacketView) -> String {
    let h = &view.header;
    let mut s = String::new();
    let _ = writeln!(s, "packet {index}: {total} octets");
    let _ = writeln!(
        s,
        "  ipv6 {} -> {} next={} hop_limit={} payload_length={} flow_label={:#07x}",
        h.src, h.dst, h.next_header, h.hop_limit, h.payload_length, h.flow_label
    );
    let mut end = IPV6_HEADER_LEN;
    for eh in &view.ext_headers {
        let name = match eh.kind {
            EhKind::HopByHop => "hop-by-hop",
            EhKind::Destination => "destination",
        };
        let len = eh.len();
        end = eh.offset + len;
        let _ = writeln!(
            s,
            "  {name} @{} len={len} next={} len%8 {}",
            eh.offset,
            eh.next_header,
            if len % 8 == 0 { "OK" } else { "BAD" }
        );
        for opt in &eh.options {
            let at = eh.offset + opt.offset;
            let align = |s: &mut String| {
                let _ = write!(s, " 4n {}", if opt.offset % 4 == 0 { "OK" } else { "BAD" });
            };
            let _ = write!(s, "    @{at} +{} ", opt.total_len);
            match &opt.body {
                OptionBody::Pad1 => s.push_str("Pad1"),
                OptionBody::PadN { data } => {
                    let _ = write!(s, "PadN({})", data.len() + 2);
                }
                OptionBody::IoamTrace(t) => {
                    let variant = match t.variant {
                        TraceVariant::PreAllocated => "pre-allocated",
                        TraceVariant::Incremental => "incremental",
                    };
                    let _ = write!(
                        s,
                        "IOAM trace {variant} ns={} node_len={} flags={:#x} remaining={} type={:#06x}",
                        t.namespace_id, t.node_len, t.flags, t.remaining_len, t.trace_type
                    );
                    align(&mut s);
                    for (i, e) in t.node_data.iter().enumerate() {
                        let _ = write!(s, "\n      entry {i}:{}", entry_fields(e, t.trace_type));
                    }
                }
                OptionBody::IoamPot(p) => {
                    let _ = write!(
                        s,
                        "IOAM pot ns={} body={}",
                        p.namespace_id,
                        hex::encode(&p.opaque_body)
                    );
                    align(&mut s);
                }
                OptionBody::IoamE2E(e) => {
                    let _ = write!(
                        s,
                        "IOAM e2e ns={} type={:#06x} seq={}",
                        e.namespace_id, e.e2e_type, e.seq_num
                    );
                    align(&mut s);
                }
                OptionBody::Unknown { opt_type, data } => {
                    let _ = write!(s, "option type={opt_type:#04x} data={}", hex::encode(data));
                }
            }
            s.push('\n');
        }
    }
    let _ = writeln!(s, "  payload @{end} len={}", view.payload.len());
    s
}

fn entry_fields(e: &NodeDataEntry, trace_type: u16) -> String {
    let mut s = String::new();
    if trace_type & TRACE_HOP_LIMIT_NODE_ID != 0 {
        let _ = write!(s, " hop_limit={} node_id={}", e.hop_limit, e.node_id);
    }
    if trace_type & TRACE_IF_IDS != 0 {
        let _ = write!(s, " in_if={} out_if={}", e.ingress_if_id, e.egress_if_id);
    }
    if trace_type & TRACE_TS_SEC != 0 {
        let _ = write!(s, " ts_sec={}", e.timestamp_sec);
    }
    if trace_type & TRACE_TS_SUBSEC != 0 {
        let _ = write!(s, " ts_subsec={}", e.timestamp_subsec);
    }
    if trace_type & TRACE_NAMESPACE_DATA != 0 {
        let _ = write!(s, " ns_data={:#010x}", e.namespace_specific);
    }
    s
}
