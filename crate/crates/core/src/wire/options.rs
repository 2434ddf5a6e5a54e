//! Hop-by-hop / destination option TLVs and padding.

use super::ioam::{IoamE2EOption, IoamPotOption, IoamTraceOption, OptionCodes};
use super::WireError;

pub const PAD1: u8 = 0x00;
pub const PADN: u8 = 0x01;

/// Smallest `p` such that `offset + p ≡ align_y (mod align_x)`.
///
/// `align_x` must be a power of two up to 8 and `align_y < align_x`.
pub fn head_padding(current_offset: usize, align_x: usize, align_y: usize) -> usize {
    debug_assert!(matches!(align_x, 1 | 2 | 4 | 8) && align_y < align_x);
    (align_y + align_x - current_offset % align_x) % align_x
}

/// Pad1 for one octet, PadN with zeroed data otherwise.
pub fn encode_padding(len: usize) -> Result<Vec<u8>, WireError> {
    match len {
        1 => Ok(vec![PAD1]),
        2..=7 => {
            let mut out = vec![0u8; len];
            out[0] = PADN;
            out[1] = (len - 2) as u8;
            Ok(out)
        }
        _ => Err(WireError::BadPadLen(len)),
    }
}

/// Writes padding of any length into `out` as a single Pad1/PadN (or a run of
/// PadN when longer than one option can express).
pub(crate) fn fill_padding(out: &mut [u8]) {
    let mut rest = out;
    while !rest.is_empty() {
        let take = match rest.len() {
            1 => 1,
            n if n <= 257 => n,
            // leave at least two octets so the remainder is a valid PadN
            n => 257.min(n - 2),
        };
        let (head, tail) = rest.split_at_mut(take);
        if take == 1 {
            head[0] = PAD1;
        } else {
            head[0] = PADN;
            head[1] = (take - 2) as u8;
            head[2..].fill(0);
        }
        rest = tail;
    }
}

/// One TLV as it sits in the header, borrowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawOption<'a> {
    /// Offset of the type octet from the EH start.
    pub offset: usize,
    pub opt_type: u8,
    pub data: &'a [u8],
}

impl RawOption<'_> {
    pub fn total_len(&self) -> usize {
        if self.opt_type == PAD1 {
            1
        } else {
            2 + self.data.len()
        }
    }

    pub fn is_padding(&self) -> bool {
        self.opt_type == PAD1 || self.opt_type == PADN
    }
}

/// Allocation-free walk over the options of one extension header.
///
/// `eh` is the whole header including its two leading octets.
#[derive(Debug, Clone)]
pub struct RawOptions<'a> {
    eh: &'a [u8],
    pos: usize,
}

impl<'a> RawOptions<'a> {
    pub fn new(eh: &'a [u8]) -> Self {
        Self {
            eh,
            pos: 2.min(eh.len()),
        }
    }
}

impl<'a> Iterator for RawOptions<'a> {
    type Item = Result<RawOption<'a>, WireError>;

    fn next(&mut self) -> Option<Self::Item> {
        let end = self.eh.len();
        if self.pos >= end {
            return None;
        }
        let offset = self.pos;
        let opt_type = self.eh[offset];
        if opt_type == PAD1 {
            self.pos += 1;
            return Some(Ok(RawOption {
                offset,
                opt_type,
                data: &[],
            }));
        }
        if offset + 2 > end {
            self.pos = end;
            return Some(Err(WireError::OptionOverrun {
                offset,
                len: 2,
                end,
            }));
        }
        let len = 2 + usize::from(self.eh[offset + 1]);
        if offset + len > end {
            self.pos = end;
            return Some(Err(WireError::OptionOverrun { offset, len, end }));
        }
        self.pos += len;
        Some(Ok(RawOption {
            offset,
            opt_type,
            data: &self.eh[offset + 2..offset + len],
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Pad1,
    PadN,
    IoamTrace,
    IoamPot,
    IoamE2E,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptionBody {
    Pad1,
    PadN { data: Vec<u8> },
    IoamTrace(IoamTraceOption),
    IoamPot(IoamPotOption),
    IoamE2E(IoamE2EOption),
    Unknown { opt_type: u8, data: Vec<u8> },
}

impl OptionBody {
    pub fn kind(&self) -> OptionKind {
        match self {
            Self::Pad1 => OptionKind::Pad1,
            Self::PadN { .. } => OptionKind::PadN,
            Self::IoamTrace(_) => OptionKind::IoamTrace,
            Self::IoamPot(_) => OptionKind::IoamPot,
            Self::IoamE2E(_) => OptionKind::IoamE2E,
            Self::Unknown { .. } => OptionKind::Unknown,
        }
    }

    pub fn wire_len(&self) -> usize {
        match self {
            Self::Pad1 => 1,
            Self::PadN { data } => 2 + data.len(),
            Self::IoamTrace(t) => t.wire_len(),
            Self::IoamPot(p) => p.wire_len(),
            Self::IoamE2E(e) => e.wire_len(),
            Self::Unknown { data, .. } => 2 + data.len(),
        }
    }

    pub fn is_ioam(&self) -> bool {
        matches!(
            self,
            Self::IoamTrace(_) | Self::IoamPot(_) | Self::IoamE2E(_)
        )
    }

    pub fn namespace_id(&self) -> Option<u16> {
        match self {
            Self::IoamTrace(t) => Some(t.namespace_id),
            Self::IoamPot(p) => Some(p.namespace_id),
            Self::IoamE2E(e) => Some(e.namespace_id),
            _ => None,
        }
    }

    pub fn encode_into(&self, codes: &OptionCodes, out: &mut Vec<u8>) -> Result<(), WireError> {
        match self {
            Self::Pad1 => out.push(PAD1),
            Self::PadN { data } => {
                if data.len() > usize::from(u8::MAX) {
                    return Err(WireError::OptionTooLong(data.len()));
                }
                out.push(PADN);
                out.push(data.len() as u8);
                out.extend_from_slice(data);
            }
            Self::IoamTrace(t) => out.extend_from_slice(&t.encode(codes)?),
            Self::IoamPot(p) => out.extend_from_slice(&p.encode(codes)?),
            Self::IoamE2E(e) => out.extend_from_slice(&e.encode(codes)?),
            Self::Unknown { opt_type, data } => {
                if data.len() > usize::from(u8::MAX) {
                    return Err(WireError::OptionTooLong(data.len()));
                }
                out.push(*opt_type);
                out.push(data.len() as u8);
                out.extend_from_slice(data);
            }
        }
        Ok(())
    }
}

/// A decoded option with its position in the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EhOption {
    pub offset: usize,
    pub total_len: usize,
    pub body: OptionBody,
}

impl EhOption {
    pub fn kind(&self) -> OptionKind {
        self.body.kind()
    }
}

pub fn parse_options(eh_bytes: &[u8]) -> Result<Vec<EhOption>, WireError> {
    parse_options_with(eh_bytes, &OptionCodes::default())
}

/// Decodes every option of a complete extension header.
pub fn parse_options_with(
    eh_bytes: &[u8],
    codes: &OptionCodes,
) -> Result<Vec<EhOption>, WireError> {
    if eh_bytes.len() < 8 || eh_bytes.len() % 8 != 0 {
        return Err(WireError::BadEhLength(eh_bytes.len()));
    }
    let declared = (usize::from(eh_bytes[1]) + 1) * 8;
    if declared != eh_bytes.len() {
        return Err(WireError::BadEhLength(declared));
    }
    RawOptions::new(eh_bytes)
        .map(|raw| {
            let raw = raw?;
            let malformed = |reason| WireError::MalformedIoam {
                offset: raw.offset,
                reason,
            };
            let body = match raw.opt_type {
                PAD1 => OptionBody::Pad1,
                PADN => OptionBody::PadN {
                    data: raw.data.to_vec(),
                },
                t if codes.trace_variant(t).is_some() => {
                    let variant = codes.trace_variant(t).expect("checked");
                    OptionBody::IoamTrace(
                        IoamTraceOption::decode(variant, raw.data).map_err(malformed)?,
                    )
                }
                t if t == codes.pot => {
                    OptionBody::IoamPot(IoamPotOption::decode(raw.data).map_err(malformed)?)
                }
                t if t == codes.e2e => {
                    OptionBody::IoamE2E(IoamE2EOption::decode(raw.data).map_err(malformed)?)
                }
                opt_type => OptionBody::Unknown {
                    opt_type,
                    data: raw.data.to_vec(),
                },
            };
            Ok(EhOption {
                offset: raw.offset,
                total_len: raw.total_len(),
                body,
            })
        })
        .collect()
}

/// Concatenates option encodings (no header, no implicit padding).
pub fn encode_options<'a>(
    options: impl IntoIterator<Item = &'a OptionBody>,
    codes: &OptionCodes,
) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::new();
    for opt in options {
        opt.encode_into(codes, &mut out)?;
    }
    Ok(out)
}
