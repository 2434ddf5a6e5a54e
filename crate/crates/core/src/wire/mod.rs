//! Bit-exact IPv6 / extension header / IOAM option codec.
//!
//! Everything here is a pure function over byte slices. The datapath uses the
//! allocation-free pieces ([`RawOptions`], [`EhWalk`]); the owned
//! [`PacketView`] model is for inspection, fixtures and round-trip testing.

mod fixture;
mod ioam;
mod options;
mod packet;

pub use fixture::{read_hex_fixtures, read_pcap, write_hex_fixtures, write_pcap, FixtureError};
pub(crate) use ioam::{namespace_of, TraceHeader};
pub use ioam::{
    node_data_len, IoamE2EOption, IoamPotOption, IoamTraceOption, NodeDataEntry, OptionCodes,
    TraceVariant, E2E_SEQ_NUM, FLAG_OVERFLOW, TRACE_HEADER_LEN, TRACE_HOP_LIMIT_NODE_ID,
    TRACE_IF_IDS, TRACE_NAMESPACE_DATA, TRACE_SUPPORTED_BITS, TRACE_TS_SEC, TRACE_TS_SUBSEC,
};
pub(crate) use options::fill_padding;
pub use options::{
    encode_options, encode_padding, head_padding, parse_options, parse_options_with, EhOption,
    OptionBody, OptionKind, RawOption, RawOptions, PAD1, PADN,
};
pub(crate) use packet::IPV6_NEXT_HEADER_OFFSET;
pub use packet::{
    locate_eh, parse_packet, parse_packet_with, EhKind, EhLocation, EhWalk, ExtHeader, Ipv6Header,
    PacketView, IPV6_HEADER_LEN, NEXT_HEADER_DESTINATION, NEXT_HEADER_HOP_BY_HOP, NEXT_HEADER_NONE,
    NEXT_HEADER_UDP,
};

use thiserror::Error;

/// Largest extension header representable by the 8-bit length field.
pub const MAX_EH_LEN: usize = 256 * 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("buffer too short: need {need} octets, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("version nibble is {0}, not 6")]
    NotIpv6(u8),
    #[error("extension header at offset {offset} declares {declared} octets but only {available} remain")]
    TruncatedEh {
        offset: usize,
        declared: usize,
        available: usize,
    },
    #[error("payload length field says {declared}, packet carries {actual}")]
    PayloadLengthMismatch { declared: usize, actual: usize },
    #[error("hop-by-hop header at offset {0} does not directly follow the IPv6 header")]
    MisplacedHopByHop(usize),
    #[error("extension header length {0} is not a positive multiple of 8")]
    BadEhLength(usize),
    #[error("option at offset {offset} needs {len} octets, header ends at {end}")]
    OptionOverrun {
        offset: usize,
        len: usize,
        end: usize,
    },
    #[error("IOAM option at offset {offset} is malformed: {reason}")]
    MalformedIoam { offset: usize, reason: &'static str },
    #[error("node_len is {found} but trace type {trace_type:#06x} implies {expected}")]
    InconsistentNodeLen {
        trace_type: u16,
        found: u8,
        expected: u8,
    },
    #[error("trace type {0:#06x} sets unsupported bits")]
    UnsupportedTraceBit(u16),
    #[error("E2E type {0:#06x} sets unsupported bits")]
    UnsupportedE2eBit(u16),
    #[error("padding length {0} outside 1..=7")]
    BadPadLen(usize),
    #[error("option data of {0} octets does not fit the 8-bit length field")]
    OptionTooLong(usize),
    #[error("trace field {field} value {value} exceeds its bit width")]
    FieldOverflow { field: &'static str, value: u32 },
}
