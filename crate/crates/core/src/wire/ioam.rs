//! IOAM option bodies: pre-allocated / incremental trace, POT, E2E.
//!
//! Trace option layout (the two leading octets are the generic option
//! type/length pair):
//!
//! ```text
//!  0                   1                   2                   3
//!  0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |  Option Type  |  Opt Data Len |          Namespace-ID         |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! | NodeLen | Flags | RemainingLen|         Trace-Type            |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |            Reserved           |  node data (node 0 first) ... |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! ```
//!
//! Node data slots are filled in hop order: the first writer takes the slot
//! adjacent to the header.

use serde::{Deserialize, Serialize};

use super::WireError;

/// Octets of trace header following the option type/length pair.
pub const TRACE_HEADER_LEN: usize = 8;

pub const TRACE_HOP_LIMIT_NODE_ID: u16 = 1 << 0;
pub const TRACE_IF_IDS: u16 = 1 << 1;
pub const TRACE_TS_SEC: u16 = 1 << 2;
pub const TRACE_TS_SUBSEC: u16 = 1 << 3;
pub const TRACE_NAMESPACE_DATA: u16 = 1 << 4;
pub const TRACE_SUPPORTED_BITS: u16 = 0x1f;

/// Overflow flag in the 4-bit flags field.
pub const FLAG_OVERFLOW: u8 = 0x1;

/// E2E type bit carrying a 64-bit sequence number.
pub const E2E_SEQ_NUM: u16 = 1 << 0;

const MAX_NODE_LEN: u8 = 0x1f;
const MAX_FLAGS: u8 = 0x0f;
const MAX_REMAINING: u8 = 0x7f;
const MAX_NODE_ID: u32 = 0x00ff_ffff;

/// Option type code points. Experimental values; overridable per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptionCodes {
    pub trace_prealloc: u8,
    pub trace_incremental: u8,
    pub pot: u8,
    pub e2e: u8,
}

impl Default for OptionCodes {
    fn default() -> Self {
        Self {
            trace_prealloc: 0x31,
            trace_incremental: 0x30,
            pot: 0x32,
            e2e: 0x33,
        }
    }
}

impl OptionCodes {
    pub fn is_ioam(&self, opt_type: u8) -> bool {
        opt_type == self.trace_prealloc
            || opt_type == self.trace_incremental
            || opt_type == self.pot
            || opt_type == self.e2e
    }

    pub fn trace_variant(&self, opt_type: u8) -> Option<TraceVariant> {
        if opt_type == self.trace_prealloc {
            Some(TraceVariant::PreAllocated)
        } else if opt_type == self.trace_incremental {
            Some(TraceVariant::Incremental)
        } else {
            None
        }
    }

    pub fn trace_code(&self, variant: TraceVariant) -> u8 {
        match variant {
            TraceVariant::PreAllocated => self.trace_prealloc,
            TraceVariant::Incremental => self.trace_incremental,
        }
    }
}

/// Octets one node writes for the given trace type.
pub fn node_data_len(trace_type: u16) -> Result<usize, WireError> {
    if trace_type & !TRACE_SUPPORTED_BITS != 0 {
        return Err(WireError::UnsupportedTraceBit(trace_type));
    }
    Ok(4 * trace_type.count_ones() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVariant {
    PreAllocated,
    Incremental,
}

/// One hop's worth of trace data. Fields not selected by the trace type are
/// neither written nor read and decode as zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDataEntry {
    pub hop_limit: u8,
    pub node_id: u32,
    pub ingress_if_id: u16,
    pub egress_if_id: u16,
    pub timestamp_sec: u32,
    pub timestamp_subsec: u32,
    pub namespace_specific: u32,
}

impl NodeDataEntry {
    /// Copy with every field outside `trace_type` zeroed.
    pub fn masked(mut self, trace_type: u16) -> Self {
        if trace_type & TRACE_HOP_LIMIT_NODE_ID == 0 {
            self.hop_limit = 0;
            self.node_id = 0;
        }
        if trace_type & TRACE_IF_IDS == 0 {
            self.ingress_if_id = 0;
            self.egress_if_id = 0;
        }
        if trace_type & TRACE_TS_SEC == 0 {
            self.timestamp_sec = 0;
        }
        if trace_type & TRACE_TS_SUBSEC == 0 {
            self.timestamp_subsec = 0;
        }
        if trace_type & TRACE_NAMESPACE_DATA == 0 {
            self.namespace_specific = 0;
        }
        self
    }

    /// Writes the selected fields into `out`, which must be exactly
    /// `node_data_len(trace_type)` octets. The 24-bit node id is truncated.
    pub fn write(&self, trace_type: u16, out: &mut [u8]) {
        let mut at = 0;
        let mut put = |word: u32| {
            out[at..at + 4].copy_from_slice(&word.to_be_bytes());
            at += 4;
        };
        if trace_type & TRACE_HOP_LIMIT_NODE_ID != 0 {
            put(u32::from(self.hop_limit) << 24 | (self.node_id & MAX_NODE_ID));
        }
        if trace_type & TRACE_IF_IDS != 0 {
            put(u32::from(self.ingress_if_id) << 16 | u32::from(self.egress_if_id));
        }
        if trace_type & TRACE_TS_SEC != 0 {
            put(self.timestamp_sec);
        }
        if trace_type & TRACE_TS_SUBSEC != 0 {
            put(self.timestamp_subsec);
        }
        if trace_type & TRACE_NAMESPACE_DATA != 0 {
            put(self.namespace_specific);
        }
    }

    pub fn read(trace_type: u16, bytes: &[u8]) -> Self {
        let mut words = bytes
            .chunks_exact(4)
            .map(|w| u32::from_be_bytes([w[0], w[1], w[2], w[3]]));
        let mut entry = Self::default();
        if trace_type & TRACE_HOP_LIMIT_NODE_ID != 0 {
            let w = words.next().unwrap_or(0);
            entry.hop_limit = (w >> 24) as u8;
            entry.node_id = w & MAX_NODE_ID;
        }
        if trace_type & TRACE_IF_IDS != 0 {
            let w = words.next().unwrap_or(0);
            entry.ingress_if_id = (w >> 16) as u16;
            entry.egress_if_id = w as u16;
        }
        if trace_type & TRACE_TS_SEC != 0 {
            entry.timestamp_sec = words.next().unwrap_or(0);
        }
        if trace_type & TRACE_TS_SUBSEC != 0 {
            entry.timestamp_subsec = words.next().unwrap_or(0);
        }
        if trace_type & TRACE_NAMESPACE_DATA != 0 {
            entry.namespace_specific = words.next().unwrap_or(0);
        }
        entry
    }
}

/// Decoded trace option. `node_data` holds only occupied entries, in hop
/// order; free pre-allocated slots are implied by `remaining_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoamTraceOption {
    pub variant: TraceVariant,
    pub namespace_id: u16,
    pub node_len: u8,
    pub flags: u8,
    pub remaining_len: u8,
    pub trace_type: u16,
    pub node_data: Vec<NodeDataEntry>,
}

impl IoamTraceOption {
    /// Empty option with `capacity` free slots and a consistent node_len.
    pub fn new(
        variant: TraceVariant,
        namespace_id: u16,
        trace_type: u16,
        capacity: u8,
    ) -> Result<Self, WireError> {
        let node_len = (node_data_len(trace_type)? / 4) as u8;
        if capacity > MAX_REMAINING {
            return Err(WireError::FieldOverflow {
                field: "remaining_len",
                value: capacity.into(),
            });
        }
        Ok(Self {
            variant,
            namespace_id,
            node_len,
            flags: 0,
            remaining_len: capacity,
            trace_type,
            node_data: Vec::new(),
        })
    }

    pub fn overflow(&self) -> bool {
        self.flags & FLAG_OVERFLOW != 0
    }

    pub fn entry_len(&self) -> usize {
        usize::from(self.node_len) * 4
    }

    /// Size of the node-data area as laid out on the wire.
    pub fn data_area_len(&self) -> usize {
        let slots = match self.variant {
            TraceVariant::PreAllocated => self.node_data.len() + usize::from(self.remaining_len),
            TraceVariant::Incremental => self.node_data.len(),
        };
        slots * self.entry_len()
    }

    /// Total encoded length including the option type/length octets.
    pub fn wire_len(&self) -> usize {
        2 + TRACE_HEADER_LEN + self.data_area_len()
    }

    fn check(&self) -> Result<(), WireError> {
        let expected = (node_data_len(self.trace_type)? / 4) as u8;
        if self.node_len != expected {
            return Err(WireError::InconsistentNodeLen {
                trace_type: self.trace_type,
                found: self.node_len,
                expected,
            });
        }
        if self.flags > MAX_FLAGS {
            return Err(WireError::FieldOverflow {
                field: "flags",
                value: self.flags.into(),
            });
        }
        if self.remaining_len > MAX_REMAINING {
            return Err(WireError::FieldOverflow {
                field: "remaining_len",
                value: self.remaining_len.into(),
            });
        }
        let data_len = TRACE_HEADER_LEN + self.data_area_len();
        if data_len > usize::from(u8::MAX) {
            return Err(WireError::OptionTooLong(data_len));
        }
        Ok(())
    }

    /// Encodes the full option (type, length, header, node data).
    pub fn encode(&self, codes: &OptionCodes) -> Result<Vec<u8>, WireError> {
        self.check()?;
        let mut out = vec![0u8; self.wire_len()];
        out[0] = codes.trace_code(self.variant);
        out[1] = (self.wire_len() - 2) as u8;
        write_trace_header(
            &mut out[2..2 + TRACE_HEADER_LEN],
            self.namespace_id,
            self.node_len,
            self.flags,
            self.remaining_len,
            self.trace_type,
        );
        let entry_len = self.entry_len();
        let area = &mut out[2 + TRACE_HEADER_LEN..];
        for (slot, entry) in area.chunks_exact_mut(entry_len.max(1)).zip(&self.node_data) {
            entry.write(self.trace_type, slot);
        }
        Ok(out)
    }

    /// Decodes the option data (everything after the type/length pair).
    pub fn decode(variant: TraceVariant, data: &[u8]) -> Result<Self, &'static str> {
        let hdr = TraceHeader::read(data).ok_or("trace header shorter than 8 octets")?;
        let expected =
            node_data_len(hdr.trace_type).map_err(|_| "trace type sets unsupported bits")? / 4;
        if usize::from(hdr.node_len) != expected {
            return Err("node_len inconsistent with trace type");
        }
        let entry_len = usize::from(hdr.node_len) * 4;
        let area = &data[TRACE_HEADER_LEN..];
        let slots = match (entry_len, area.len()) {
            (0, 0) => 0,
            (0, _) => return Err("node data present with empty trace type"),
            (e, a) if a % e != 0 => return Err("node data not a whole number of entries"),
            (e, a) => a / e,
        };
        let occupied = match variant {
            TraceVariant::PreAllocated => slots
                .checked_sub(usize::from(hdr.remaining_len))
                .ok_or("remaining_len exceeds pre-allocated slots")?,
            TraceVariant::Incremental => slots,
        };
        let node_data = area
            .chunks_exact(entry_len.max(1))
            .take(occupied)
            .map(|slot| NodeDataEntry::read(hdr.trace_type, slot))
            .collect();
        Ok(Self {
            variant,
            namespace_id: hdr.namespace_id,
            node_len: hdr.node_len,
            flags: hdr.flags,
            remaining_len: hdr.remaining_len,
            trace_type: hdr.trace_type,
            node_data,
        })
    }
}

/// Fixed trace header fields, read in place without allocating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TraceHeader {
    pub namespace_id: u16,
    pub node_len: u8,
    pub flags: u8,
    pub remaining_len: u8,
    pub trace_type: u16,
}

impl TraceHeader {
    pub fn read(data: &[u8]) -> Option<Self> {
        if data.len() < TRACE_HEADER_LEN {
            return None;
        }
        let packed = u16::from_be_bytes([data[2], data[3]]);
        Some(Self {
            namespace_id: u16::from_be_bytes([data[0], data[1]]),
            node_len: (packed >> 11) as u8,
            flags: ((packed >> 7) & 0x0f) as u8,
            remaining_len: (packed & 0x7f) as u8,
            trace_type: u16::from_be_bytes([data[4], data[5]]),
        })
    }

    pub fn write(&self, out: &mut [u8]) {
        write_trace_header(
            out,
            self.namespace_id,
            self.node_len,
            self.flags,
            self.remaining_len,
            self.trace_type,
        );
    }
}

fn write_trace_header(
    out: &mut [u8],
    namespace_id: u16,
    node_len: u8,
    flags: u8,
    remaining_len: u8,
    trace_type: u16,
) {
    let packed = u16::from(node_len & MAX_NODE_LEN) << 11
        | u16::from(flags & MAX_FLAGS) << 7
        | u16::from(remaining_len & MAX_REMAINING);
    out[0..2].copy_from_slice(&namespace_id.to_be_bytes());
    out[2..4].copy_from_slice(&packed.to_be_bytes());
    out[4..6].copy_from_slice(&trace_type.to_be_bytes());
    out[6..8].fill(0);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoamE2EOption {
    pub namespace_id: u16,
    pub e2e_type: u16,
    pub seq_num: u64,
}

impl IoamE2EOption {
    pub fn wire_len(&self) -> usize {
        2 + 4
            + if self.e2e_type & E2E_SEQ_NUM != 0 {
                8
            } else {
                0
            }
    }

    pub fn encode(&self, codes: &OptionCodes) -> Result<Vec<u8>, WireError> {
        if self.e2e_type & !E2E_SEQ_NUM != 0 {
            return Err(WireError::UnsupportedE2eBit(self.e2e_type));
        }
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(codes.e2e);
        out.push((self.wire_len() - 2) as u8);
        out.extend_from_slice(&self.namespace_id.to_be_bytes());
        out.extend_from_slice(&self.e2e_type.to_be_bytes());
        if self.e2e_type & E2E_SEQ_NUM != 0 {
            out.extend_from_slice(&self.seq_num.to_be_bytes());
        }
        Ok(out)
    }

    pub fn decode(data: &[u8]) -> Result<Self, &'static str> {
        if data.len() < 4 {
            return Err("E2E option shorter than 4 octets");
        }
        let namespace_id = u16::from_be_bytes([data[0], data[1]]);
        let e2e_type = u16::from_be_bytes([data[2], data[3]]);
        if e2e_type & !E2E_SEQ_NUM != 0 {
            return Err("E2E type sets unsupported bits");
        }
        let seq_num = if e2e_type & E2E_SEQ_NUM != 0 {
            if data.len() != 12 {
                return Err("E2E sequence number field has wrong size");
            }
            u64::from_be_bytes(data[4..12].try_into().expect("8 octets"))
        } else {
            if data.len() != 4 {
                return Err("E2E option carries trailing octets");
            }
            0
        };
        Ok(Self {
            namespace_id,
            e2e_type,
            seq_num,
        })
    }
}

/// Proof-of-transit option, carried and removed verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoamPotOption {
    pub namespace_id: u16,
    pub opaque_body: Vec<u8>,
}

impl IoamPotOption {
    pub fn wire_len(&self) -> usize {
        2 + 2 + self.opaque_body.len()
    }

    pub fn encode(&self, codes: &OptionCodes) -> Result<Vec<u8>, WireError> {
        let data_len = 2 + self.opaque_body.len();
        if data_len > usize::from(u8::MAX) {
            return Err(WireError::OptionTooLong(data_len));
        }
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(codes.pot);
        out.push(data_len as u8);
        out.extend_from_slice(&self.namespace_id.to_be_bytes());
        out.extend_from_slice(&self.opaque_body);
        Ok(out)
    }

    pub fn decode(data: &[u8]) -> Result<Self, &'static str> {
        if data.len() < 2 {
            return Err("POT option shorter than 2 octets");
        }
        Ok(Self {
            namespace_id: u16::from_be_bytes([data[0], data[1]]),
            opaque_body: data[2..].to_vec(),
        })
    }
}

/// Namespace id of any IOAM option body (all variants lead with it).
pub(crate) fn namespace_of(data: &[u8]) -> Option<u16> {
    (data.len() >= 2).then(|| u16::from_be_bytes([data[0], data[1]]))
}
