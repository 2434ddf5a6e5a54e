//! Single pass over one extension header, recording everything the datapath
//! needs: which IOAM options to remove, which traces to update, where the
//! padding is.

use thiserror::Error;

use crate::registry::{RegisteredNode, MAX_NS};
use crate::wire::{
    namespace_of, node_data_len, EhKind, EhWalk, RawOption, RawOptions, TraceHeader, TraceVariant,
    WireError, TRACE_HEADER_LEN,
};

/// Packet-relative octet range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub size: usize,
}

impl Block {
    pub fn end(&self) -> usize {
        self.offset + self.size
    }
}

/// Per-packet parse context, attached to the packet between scan and
/// processing. Fixed size so attaching it never allocates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParsedEh {
    pub kind: Option<EhKind>,
    /// The header, when present.
    pub eh: Option<Block>,
    /// Next-header octet that names the header (or would name a new one).
    pub link: usize,
    /// Where a new header of this kind would be inserted.
    pub insert_at: usize,
    /// Last Pad1/PadN option in the header.
    pub last_pad: Option<Block>,
    /// Sum of all padding option sizes.
    pub pad_size: usize,
    /// Sum of the recorded removal blocks.
    pub decap_size: usize,
    pub free_idx: usize,
    pub decaps: [Block; MAX_NS],
    /// More removable options than [`MAX_NS`]; the excess stays in place.
    pub decap_overflow: bool,
    pub trace_count: usize,
    /// Known-namespace trace options that stay in the packet.
    pub traces: [Block; MAX_NS],
}

impl ParsedEh {
    pub fn decap_blocks(&self) -> &[Block] {
        &self.decaps[..self.free_idx]
    }

    pub fn trace_blocks(&self) -> &[Block] {
        &self.traces[..self.trace_count]
    }

    pub fn eh_len(&self) -> usize {
        self.eh.map_or(0, |b| b.size)
    }

    /// The header holds nothing but removable IOAM options and padding, so
    /// deletion can drop it whole.
    pub fn only_removable_left(&self) -> bool {
        self.eh.is_some_and(|eh| {
            !self.decap_overflow && self.decap_size + self.pad_size == eh.size - 2
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("malformed extension header: {0}")]
    MalformedEh(#[from] WireError),
}

/// Whether namespaces without `remove_on_transit` are also stripped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Removal {
    Configured,
    Forced,
}

/// In-place view of a trace option's geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceGeometry {
    pub(crate) header: TraceHeader,
    pub entry_len: usize,
    /// Number of node-data slots present on the wire.
    pub slots: usize,
}

/// Validates a trace option body (`data` excludes type and length) without
/// allocating.
pub fn trace_geometry(variant: TraceVariant, data: &[u8]) -> Result<TraceGeometry, &'static str> {
    let header = TraceHeader::read(data).ok_or("trace header truncated")?;
    let entry_len = node_data_len(header.trace_type).map_err(|_| "unsupported trace type bits")?;
    if entry_len == 0 || usize::from(header.node_len) * 4 != entry_len {
        return Err("node_len disagrees with trace type");
    }
    let area = data.len() - TRACE_HEADER_LEN;
    if area % entry_len != 0 {
        return Err("node data area is not a whole number of entries");
    }
    let slots = area / entry_len;
    if variant == TraceVariant::PreAllocated && slots < usize::from(header.remaining_len) {
        return Err("remaining length exceeds allocated slots");
    }
    Ok(TraceGeometry {
        header,
        entry_len,
        slots,
    })
}

pub fn scan_eh(
    packet: &[u8],
    kind: EhKind,
    node: &RegisteredNode,
    removal: Removal,
) -> Result<ParsedEh, ScanError> {
    if packet.len() < crate::wire::IPV6_HEADER_LEN {
        return Err(ScanError::MalformedEh(WireError::TooShort {
            need: crate::wire::IPV6_HEADER_LEN,
            got: packet.len(),
        }));
    }
    if packet[0] >> 4 != 6 {
        return Err(ScanError::MalformedEh(WireError::NotIpv6(packet[0] >> 4)));
    }
    let mut parsed = ParsedEh {
        kind: Some(kind),
        ..ParsedEh::default()
    };
    let mut walk = EhWalk::new(packet);
    let mut found = None;
    for loc in walk.by_ref() {
        let loc = loc?;
        if loc.kind == kind {
            found = Some(loc);
            break;
        }
    }
    let Some(loc) = found else {
        let (tail, tail_link) = walk.tail();
        if kind == EhKind::HopByHop {
            parsed.insert_at = crate::wire::IPV6_HEADER_LEN;
            parsed.link = crate::wire::IPV6_NEXT_HEADER_OFFSET;
        } else {
            parsed.insert_at = tail;
            parsed.link = tail_link;
        }
        return Ok(parsed);
    };
    parsed.eh = Some(Block {
        offset: loc.offset,
        size: loc.len,
    });
    parsed.link = loc.link;
    parsed.insert_at = loc.offset;

    let codes = node.codes();
    let eh = &packet[loc.offset..loc.offset + loc.len];
    for opt in RawOptions::new(eh) {
        let opt = opt.map_err(|e| shift(e, loc.offset))?;
        let block = Block {
            offset: loc.offset + opt.offset,
            size: opt.total_len(),
        };
        if opt.is_padding() {
            parsed.pad_size += block.size;
            parsed.last_pad = Some(block);
            continue;
        }
        if !codes.is_ioam(opt.opt_type) {
            continue;
        }
        let malformed = |reason| WireError::MalformedIoam {
            offset: block.offset,
            reason,
        };
        let ns_id = namespace_of(opt.data).ok_or(malformed("namespace id truncated"))?;
        let Some(ns) = node.lookup_namespace(ns_id) else {
            continue;
        };
        let variant = codes.trace_variant(opt.opt_type);
        if let Some(v) = variant {
            trace_geometry(v, opt.data).map_err(malformed)?;
        }
        if ns.remove_on_transit || removal == Removal::Forced {
            if parsed.free_idx == MAX_NS {
                parsed.decap_overflow = true;
                continue;
            }
            parsed.decaps[parsed.free_idx] = block;
            parsed.free_idx += 1;
            parsed.decap_size += block.size;
        } else if variant.is_some() && parsed.trace_count < MAX_NS {
            parsed.traces[parsed.trace_count] = block;
            parsed.trace_count += 1;
        }
    }
    Ok(parsed)
}

fn shift(err: WireError, base: usize) -> WireError {
    match err {
        WireError::OptionOverrun { offset, len, end } => WireError::OptionOverrun {
            offset: offset + base,
            len,
            end: end + base,
        },
        other => other,
    }
}

/// Raw option at packet offset `at` (which must start an option).
pub(crate) fn option_at(packet: &[u8], at: usize) -> RawOption<'_> {
    let opt_type = packet[at];
    if opt_type == crate::wire::PAD1 {
        return RawOption {
            offset: at,
            opt_type,
            data: &[],
        };
    }
    let len = usize::from(packet[at + 1]);
    RawOption {
        offset: at,
        opt_type,
        data: &packet[at + 2..at + 2 + len],
    }
}
