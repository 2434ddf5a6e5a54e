//! IPv6 fixed header and the hop-by-hop / destination extension header chain.

use std::net::Ipv6Addr;

use serde::{Deserialize, Serialize};

use super::ioam::OptionCodes;
use super::options::{parse_options_with, EhOption, OptionBody};
use super::WireError;

pub const IPV6_HEADER_LEN: usize = 40;
pub const NEXT_HEADER_HOP_BY_HOP: u8 = 0;
pub const NEXT_HEADER_DESTINATION: u8 = 60;
pub const NEXT_HEADER_UDP: u8 = 17;
pub const NEXT_HEADER_NONE: u8 = 59;

/// Offset of the next-header octet in the IPv6 header.
pub(crate) const IPV6_NEXT_HEADER_OFFSET: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EhKind {
    HopByHop,
    Destination,
}

impl EhKind {
    pub fn protocol(self) -> u8 {
        match self {
            Self::HopByHop => NEXT_HEADER_HOP_BY_HOP,
            Self::Destination => NEXT_HEADER_DESTINATION,
        }
    }

    pub fn from_protocol(nh: u8) -> Option<Self> {
        match nh {
            NEXT_HEADER_HOP_BY_HOP => Some(Self::HopByHop),
            NEXT_HEADER_DESTINATION => Some(Self::Destination),
            _ => None,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Self::HopByHop => 0,
            Self::Destination => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ipv6Header {
    pub traffic_class: u8,
    pub flow_label: u32,
    pub payload_length: u16,
    pub next_header: u8,
    pub hop_limit: u8,
    pub src: Ipv6Addr,
    pub dst: Ipv6Addr,
}

impl Ipv6Header {
    pub fn read(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < IPV6_HEADER_LEN {
            return Err(WireError::TooShort {
                need: IPV6_HEADER_LEN,
                got: bytes.len(),
            });
        }
        let version = bytes[0] >> 4;
        if version != 6 {
            return Err(WireError::NotIpv6(version));
        }
        let word = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        let addr = |at: usize| {
            let octets: [u8; 16] = bytes[at..at + 16].try_into().expect("16 octets");
            Ipv6Addr::from(octets)
        };
        Ok(Self {
            traffic_class: (word >> 20) as u8,
            flow_label: word & 0x000f_ffff,
            payload_length: u16::from_be_bytes([bytes[4], bytes[5]]),
            next_header: bytes[6],
            hop_limit: bytes[7],
            src: addr(8),
            dst: addr(24),
        })
    }

    pub fn write(&self, out: &mut [u8]) {
        let word =
            6u32 << 28 | u32::from(self.traffic_class) << 20 | (self.flow_label & 0x000f_ffff);
        out[0..4].copy_from_slice(&word.to_be_bytes());
        out[4..6].copy_from_slice(&self.payload_length.to_be_bytes());
        out[6] = self.next_header;
        out[7] = self.hop_limit;
        out[8..24].copy_from_slice(&self.src.octets());
        out[24..40].copy_from_slice(&self.dst.octets());
    }
}

/// Where an extension header sits in a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EhLocation {
    pub kind: EhKind,
    /// Offset of the header from the packet start.
    pub offset: usize,
    pub len: usize,
    /// Offset of the next-header octet that names this header.
    pub link: usize,
}

/// Allocation-free walk over the leading hop-by-hop / destination headers.
/// Stops at the first protocol that is neither.
#[derive(Debug, Clone)]
pub struct EhWalk<'a> {
    bytes: &'a [u8],
    link: usize,
    offset: usize,
    done: bool,
}

impl<'a> EhWalk<'a> {
    /// `bytes` must already hold a valid IPv6 header.
    pub fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            link: IPV6_NEXT_HEADER_OFFSET,
            offset: IPV6_HEADER_LEN,
            done: bytes.len() < IPV6_HEADER_LEN,
        }
    }

    /// Offset of the first octet after the walked headers, and the
    /// next-header octet that names whatever follows. Valid once the walk
    /// has been exhausted without error.
    pub fn tail(&self) -> (usize, usize) {
        (self.offset, self.link)
    }
}

impl Iterator for EhWalk<'_> {
    type Item = Result<EhLocation, WireError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let Some(kind) = EhKind::from_protocol(self.bytes[self.link]) else {
            self.done = true;
            return None;
        };
        let offset = self.offset;
        if kind == EhKind::HopByHop && offset != IPV6_HEADER_LEN {
            self.done = true;
            return Some(Err(WireError::MisplacedHopByHop(offset)));
        }
        let available = self.bytes.len() - offset;
        if available < 2 {
            self.done = true;
            return Some(Err(WireError::TruncatedEh {
                offset,
                declared: 8,
                available,
            }));
        }
        let len = (usize::from(self.bytes[offset + 1]) + 1) * 8;
        if len > available {
            self.done = true;
            return Some(Err(WireError::TruncatedEh {
                offset,
                declared: len,
                available,
            }));
        }
        let loc = EhLocation {
            kind,
            offset,
            len,
            link: self.link,
        };
        self.link = offset;
        self.offset = offset + len;
        Some(Ok(loc))
    }
}

/// First extension header of `kind`, if any.
pub fn locate_eh(bytes: &[u8], kind: EhKind) -> Result<Option<EhLocation>, WireError> {
    for loc in EhWalk::new(bytes) {
        let loc = loc?;
        if loc.kind == kind {
            return Ok(Some(loc));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtHeader {
    pub kind: EhKind,
    pub next_header: u8,
    /// Offset from the packet start.
    pub offset: usize,
    pub options: Vec<EhOption>,
}

impl ExtHeader {
    /// Builds a header from option bodies, computing offsets.
    pub fn from_bodies(kind: EhKind, next_header: u8, bodies: Vec<OptionBody>) -> Self {
        let mut at = 2;
        let options = bodies
            .into_iter()
            .map(|body| {
                let total_len = body.wire_len();
                let opt = EhOption {
                    offset: at,
                    total_len,
                    body,
                };
                at += total_len;
                opt
            })
            .collect();
        Self {
            kind,
            next_header,
            offset: 0,
            options,
        }
    }

    pub fn len(&self) -> usize {
        2 + self.options.iter().map(|o| o.total_len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    pub fn encode_into(&self, codes: &OptionCodes, out: &mut Vec<u8>) -> Result<(), WireError> {
        let len = self.len();
        if len % 8 != 0 || len > super::MAX_EH_LEN {
            return Err(WireError::BadEhLength(len));
        }
        out.push(self.next_header);
        out.push((len / 8 - 1) as u8);
        for opt in &self.options {
            opt.body.encode_into(codes, out)?;
        }
        Ok(())
    }
}

/// Fully decoded packet: IPv6 header, hop-by-hop / destination chain, and
/// everything after the chain as opaque payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketView {
    pub header: Ipv6Header,
    pub ext_headers: Vec<ExtHeader>,
    pub payload: Vec<u8>,
}

pub fn parse_packet(bytes: &[u8]) -> Result<PacketView, WireError> {
    parse_packet_with(bytes, &OptionCodes::default())
}

pub fn parse_packet_with(bytes: &[u8], codes: &OptionCodes) -> Result<PacketView, WireError> {
    let header = Ipv6Header::read(bytes)?;
    let mut walk = EhWalk::new(bytes);
    let mut ext_headers = Vec::new();
    for loc in walk.by_ref() {
        let loc = loc?;
        let eh = &bytes[loc.offset..loc.offset + loc.len];
        let options = parse_options_with(eh, codes).map_err(|e| shift_error(e, loc.offset))?;
        ext_headers.push(ExtHeader {
            kind: loc.kind,
            next_header: eh[0],
            offset: loc.offset,
            options,
        });
    }
    let declared = usize::from(header.payload_length);
    let actual = bytes.len() - IPV6_HEADER_LEN;
    if declared != actual {
        return Err(WireError::PayloadLengthMismatch { declared, actual });
    }
    let (payload_at, _) = walk.tail();
    Ok(PacketView {
        header,
        ext_headers,
        payload: bytes[payload_at..].to_vec(),
    })
}

/// Reports option offsets relative to the packet rather than the header.
fn shift_error(err: WireError, by: usize) -> WireError {
    match err {
        WireError::OptionOverrun { offset, len, end } => WireError::OptionOverrun {
            offset: offset + by,
            len,
            end: end + by,
        },
        WireError::MalformedIoam { offset, reason } => WireError::MalformedIoam {
            offset: offset + by,
            reason,
        },
        other => other,
    }
}

impl PacketView {
    /// Minimal UDP-in-IPv6 packet of `total_len` octets with the payload
    /// after the UDP header filled by `fill`.
    pub fn udp(
        src: Ipv6Addr,
        dst: Ipv6Addr,
        total_len: usize,
        fill: impl FnOnce(&mut [u8]),
    ) -> Self {
        let payload_len = total_len.saturating_sub(IPV6_HEADER_LEN);
        let mut payload = vec![0u8; payload_len];
        if payload_len >= 8 {
            payload[0..2].copy_from_slice(&9000u16.to_be_bytes());
            payload[2..4].copy_from_slice(&9001u16.to_be_bytes());
            payload[4..6].copy_from_slice(&(payload_len as u16).to_be_bytes());
            fill(&mut payload[8..]);
        }
        Self {
            header: Ipv6Header {
                traffic_class: 0,
                flow_label: 0,
                payload_length: payload_len as u16,
                next_header: NEXT_HEADER_UDP,
                hop_limit: 64,
                src,
                dst,
            },
            ext_headers: Vec::new(),
            payload,
        }
    }

    pub fn encoded_len(&self) -> usize {
        IPV6_HEADER_LEN
            + self.ext_headers.iter().map(ExtHeader::len).sum::<usize>()
            + self.payload.len()
    }

    /// Serializes the packet. Lengths and offsets are taken from the
    /// structure, so `payload_length` and `ExtHeader::offset` are recomputed.
    pub fn encode(&self, codes: &OptionCodes) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.resize(IPV6_HEADER_LEN, 0);
        let mut header = self.header;
        header.payload_length = (self.encoded_len() - IPV6_HEADER_LEN) as u16;
        header.write(&mut out);
        for eh in &self.ext_headers {
            eh.encode_into(codes, &mut out)?;
        }
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Recomputes every derived field (offsets, payload length, next-header
    /// chain) so that `parse(encode(view)) == view`.
    pub fn normalize(&mut self) {
        if let Some(first) = self.ext_headers.first() {
            self.header.next_header = first.kind.protocol();
        }
        let kinds: Vec<EhKind> = self.ext_headers.iter().map(|eh| eh.kind).collect();
        let mut at = IPV6_HEADER_LEN;
        for (i, eh) in self.ext_headers.iter_mut().enumerate() {
            eh.offset = at;
            let mut rel = 2;
            for opt in &mut eh.options {
                opt.offset = rel;
                opt.total_len = opt.body.wire_len();
                rel += opt.total_len;
            }
            at += eh.len();
            if let Some(next) = kinds.get(i + 1) {
                eh.next_header = next.protocol();
            }
        }
        self.header.payload_length = (self.encoded_len() - IPV6_HEADER_LEN) as u16;
    }
}
