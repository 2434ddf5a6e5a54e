#![allow(dead_code)]

use std::net::Ipv6Addr;

use ioam6::buffer::RawPacket;
use ioam6::datapath::{process_packet, DatapathError, Hop, ProcessSummary, TelemetryRecord};
use ioam6::registry::{register_node, NodeConfig, RegisteredNode};
use ioam6::wire::{
    head_padding, parse_packet, EhKind, ExtHeader, IoamE2EOption, IoamPotOption, IoamTraceOption,
    NodeDataEntry, OptionBody, OptionCodes, PacketView, TraceVariant, E2E_SEQ_NUM, NEXT_HEADER_UDP,
    TRACE_SUPPORTED_BITS,
};
use rand::{Rng, RngExt};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-IOAM, non-padding option types.
pub const OTHER_TYPES: [u8; 6] = [0x05, 0x07, 0x1e, 0x3e, 0x8b, 0xc2];

pub fn entry(rng: &mut TestRng, trace_type: u16) -> NodeDataEntry {
    NodeDataEntry {
        hop_limit: rng.random(),
        node_id: rng.random_range(0..1 << 24),
        ingress_if_id: rng.random(),
        egress_if_id: rng.random(),
        timestamp_sec: rng.random(),
        timestamp_subsec: rng.random(),
        namespace_specific: rng.random(),
    }
    .masked(trace_type)
}

pub fn trace(rng: &mut TestRng, namespace_id: u16) -> IoamTraceOption {
    let trace_type = rng.random_range(1..=TRACE_SUPPORTED_BITS);
    let entry_len = 4 * trace_type.count_ones() as usize;
    let max_slots = ((253 - 8) / entry_len).min(6);
    let variant = if rng.random_bool(0.5) {
        TraceVariant::PreAllocated
    } else {
        TraceVariant::Incremental
    };
    let used = rng.random_range(0..=max_slots);
    let remaining = match variant {
        TraceVariant::PreAllocated => rng.random_range(0..=max_slots - used),
        TraceVariant::Incremental => rng.random_range(0..=10),
    } as u8;
    let mut t = IoamTraceOption::new(variant, namespace_id, trace_type, remaining).unwrap();
    t.flags = rng.random_range(0..2);
    t.node_data = (0..used).map(|_| entry(rng, trace_type)).collect();
    t
}

pub fn ioam_body(rng: &mut TestRng, namespace_id: u16, kind: EhKind) -> OptionBody {
    match (kind, rng.random_range(0..3)) {
        (EhKind::Destination, _) | (_, 2) => {
            let e2e_type = if rng.random_bool(0.7) { E2E_SEQ_NUM } else { 0 };
            OptionBody::IoamE2E(IoamE2EOption {
                namespace_id,
                e2e_type,
                seq_num: if e2e_type == 0 { 0 } else { rng.random() },
            })
        }
        (_, 0) => OptionBody::IoamTrace(trace(rng, namespace_id)),
        _ => {
            let len = rng.random_range(0..16);
            let mut opaque_body = vec![0u8; len];
            rng.fill_bytes(&mut opaque_body);
            OptionBody::IoamPot(IoamPotOption {
                namespace_id,
                opaque_body,
            })
        }
    }
}

pub fn other_body(rng: &mut TestRng) -> OptionBody {
    let len = rng.random_range(0..12);
    let mut data = vec![0u8; len];
    rng.fill_bytes(&mut data);
    OptionBody::Unknown {
        opt_type: OTHER_TYPES[rng.random_range(0..OTHER_TYPES.len())],
        data,
    }
}

pub fn pad_body(len: usize) -> OptionBody {
    match len {
        1 => OptionBody::Pad1,
        n => OptionBody::PadN {
            data: vec![0; n - 2],
        },
    }
}

/// Appends padding of `len` octets as one or more options.
pub fn push_padding(out: &mut Vec<OptionBody>, mut len: usize) {
    while len > 0 {
        let take = if len > 257 { 255 } else { len };
        out.push(pad_body(take));
        len -= take;
    }
}

/// Lays out `bodies` in a header, padding in front of every IOAM option to
/// 4n and at the end to a multiple of 8.
pub fn aligned_header(kind: EhKind, next_header: u8, bodies: Vec<OptionBody>) -> ExtHeader {
    let mut out = Vec::new();
    let mut at = 2;
    for b in bodies {
        if matches!(
            b,
            OptionBody::IoamTrace(_) | OptionBody::IoamPot(_) | OptionBody::IoamE2E(_)
        ) {
            let pad = head_padding(at, 4, 0);
            push_padding(&mut out, pad);
            at += pad;
        }
        at += b.wire_len();
        out.push(b);
    }
    push_padding(&mut out, (8 - at % 8) % 8);
    ExtHeader::from_bodies(kind, next_header, out)
}

/// Header whose options sit wherever they fall, padded only at the end.
pub fn packed_header(kind: EhKind, next_header: u8, mut bodies: Vec<OptionBody>) -> ExtHeader {
    let at: usize = 2 + bodies.iter().map(OptionBody::wire_len).sum::<usize>();
    push_padding(&mut bodies, (8 - at % 8) % 8);
    ExtHeader::from_bodies(kind, next_header, bodies)
}

pub fn addr(rng: &mut TestRng) -> Ipv6Addr {
    Ipv6Addr::from(rng.random::<u128>())
}

pub fn udp(rng: &mut TestRng, src: Ipv6Addr, dst: Ipv6Addr, len: usize) -> PacketView {
    let mut view = PacketView::udp(src, dst, len, |p| rng.fill_bytes(p));
    view.header.flow_label = rng.random_range(0..1 << 20);
    view.header.traffic_class = rng.random();
    view.header.hop_limit = rng.random_range(1..=255);
    view
}

/// Random valid packet: 0..=2 extension headers with any mix of options.
pub fn random_view(rng: &mut TestRng) -> PacketView {
    let (src, dst) = (addr(rng), addr(rng));
    let len = rng.random_range(48..600);
    let mut view = udp(rng, src, dst, len);
    let mut kinds = Vec::new();
    if rng.random_bool(0.6) {
        kinds.push(EhKind::HopByHop);
    }
    if rng.random_bool(0.4) {
        kinds.push(EhKind::Destination);
    }
    for kind in kinds {
        let n = rng.random_range(0..6);
        let bodies = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => pad_body(rng.random_range(1..8)),
                1 => other_body(rng),
                _ => {
                    let ns = rng.random();
                    ioam_body(rng, ns, kind)
                }
            })
            .collect();
        let eh = if rng.random_bool(0.5) {
            aligned_header(kind, NEXT_HEADER_UDP, bodies)
        } else {
            packed_header(kind, NEXT_HEADER_UDP, bodies)
        };
        view.ext_headers.push(eh);
    }
    view.normalize();
    if let Some(last) = view.ext_headers.last_mut() {
        last.next_header = NEXT_HEADER_UDP;
    }
    view
}

pub fn encode(view: &PacketView) -> Vec<u8> {
    view.encode(&OptionCodes::default()).unwrap()
}

pub fn node(cfg: &NodeConfig) -> RegisteredNode {
    register_node(cfg).unwrap()
}

/// One node traversal, entering on `eth0` and leaving on `eth1`.
pub fn traverse(
    node: &RegisteredNode,
    pkt: &mut RawPacket,
    records: &mut Vec<TelemetryRecord>,
    encap: bool,
    seq: u64,
) -> Result<ProcessSummary, DatapathError> {
    let hop = Hop {
        in_if: Some("eth0"),
        out_if: Some("eth1"),
        encap,
        packet_seq: seq,
        ..Hop::default()
    };
    process_packet(node, &hop, pkt, records)
}

/// Alignment violations in a packet: IOAM options off 4n, headers off 8n.
/// A parse failure counts as one violation.
pub fn alignment_violations(bytes: &[u8]) -> usize {
    let Ok(view) = parse_packet(bytes) else {
        return 1;
    };
    let mut bad = 0;
    for eh in &view.ext_headers {
        if eh.len() % 8 != 0 {
            bad += 1;
        }
        for opt in &eh.options {
            let ioam = matches!(
                opt.body,
                OptionBody::IoamTrace(_) | OptionBody::IoamPot(_) | OptionBody::IoamE2E(_)
            );
            if ioam && opt.offset % 4 != 0 {
                bad += 1;
            }
        }
    }
    bad
}

/// The non-padding options of every header, by header kind.
pub fn significant_options(view: &PacketView) -> Vec<(EhKind, Vec<OptionBody>)> {
    view.ext_headers
        .iter()
        .map(|eh| {
            let opts = eh
                .options
                .iter()
                .filter(|o| !matches!(o.body, OptionBody::Pad1 | OptionBody::PadN { .. }))
                .map(|o| o.body.clone())
                .collect::<Vec<_>>();
            (eh.kind, opts)
        })
        .filter(|(_, o)| !o.is_empty())
        .collect()
}
