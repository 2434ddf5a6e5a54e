use crate::buffer::RawPacket;
use crate::registry::{EncapBuffer, RegisteredNode, ENCAP_OPTIONS_OFFSET};
use crate::scan::{Block, ParsedEh};
use crate::wire::{EhKind, NodeDataEntry, E2E_SEQ_NUM, MAX_EH_LEN};

use super::plan::plan_insertion;
use super::trace::stamp_slot;
use super::{rescan_padding, set_eh_len, sync_payload_length, DatapathError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InsertOutcome {
    /// Net packet growth (negative if a long tail padding was replaced).
    pub grown: isize,
    /// Octets of IOAM data (options plus their interior padding) added.
    pub ioam_octets: usize,
    /// Packet offset of the first inserted option.
    pub options_at: usize,
}

/// Inserts the node's pre-built options for (`out_dev`, `kind`) and stamps
/// the node's own entry into each new trace option.
pub fn insert_ioam(
    pkt: &mut RawPacket,
    node: &RegisteredNode,
    out_dev: &str,
    kind: EhKind,
    parsed: &mut ParsedEh,
    entry: &NodeDataEntry,
) -> Result<InsertOutcome, DatapathError> {
    let buf = node.encap_buffer(out_dev, kind)?;
    let outcome = splice(pkt, node, buf, parsed)?;
    stamp(pkt.bytes_mut(), node, buf, outcome.options_at, entry);
    Ok(outcome)
}

pub(crate) fn splice(
    pkt: &mut RawPacket,
    node: &RegisteredNode,
    buf: &EncapBuffer,
    parsed: &mut ParsedEh,
) -> Result<InsertOutcome, DatapathError> {
    let block = buf.block();
    let Some(plan) = plan_insertion(parsed, block.len())? else {
        let full = buf.full();
        let at = parsed.insert_at;
        let link = parsed.link;
        pkt.open_gap(at, full.len());
        let bytes = pkt.bytes_mut();
        bytes[at..at + full.len()].copy_from_slice(full);
        bytes[at] = bytes[link];
        bytes[link] = buf.kind().protocol();
        sync_payload_length(bytes);
        parsed.eh = Some(Block {
            offset: at,
            size: full.len(),
        });
        rescan_padding(pkt.bytes(), parsed);
        return Ok(InsertOutcome {
            grown: full.len() as isize,
            ioam_octets: block.len(),
            options_at: at + ENCAP_OPTIONS_OFFSET,
        });
    };

    let eh = parsed.eh.expect("plan implies header");
    let new_size = plan.new_eh_size();
    if new_size > MAX_EH_LEN {
        return Err(DatapathError::EhTooLarge(new_size));
    }
    if plan.extra_room > 0 {
        pkt.open_gap(eh.end(), plan.extra_room as usize);
    }
    let mut w = eh.offset + plan.eh_notail_size;
    let bytes = pkt.bytes_mut();
    if plan.new_headpad_size > 0 {
        bytes[w..w + plan.new_headpad_size].copy_from_slice(node.padding(plan.new_headpad_size));
        w += plan.new_headpad_size;
    }
    let options_at = w;
    bytes[w..w + block.len()].copy_from_slice(block);
    w += block.len();
    if plan.new_tailpad_size > 0 {
        bytes[w..w + plan.new_tailpad_size].copy_from_slice(node.padding(plan.new_tailpad_size));
    }
    if plan.extra_room < 0 {
        pkt.close_gap(eh.offset + new_size, plan.extra_room.unsigned_abs());
    }
    let bytes = pkt.bytes_mut();
    set_eh_len(bytes, eh.offset, new_size);
    sync_payload_length(bytes);
    parsed.eh = Some(Block {
        offset: eh.offset,
        size: new_size,
    });
    rescan_padding(pkt.bytes(), parsed);
    Ok(InsertOutcome {
        grown: plan.extra_room,
        ioam_octets: block.len(),
        options_at,
    })
}

pub(crate) fn stamp(
    bytes: &mut [u8],
    node: &RegisteredNode,
    buf: &EncapBuffer,
    options_at: usize,
    entry: &NodeDataEntry,
) {
    for &off in buf.trace_offsets() {
        stamp_slot(bytes, options_at + off, node, entry);
    }
    for &off in buf.e2e_offsets() {
        let at = options_at + off;
        let e2e_type = u16::from_be_bytes([bytes[at + 4], bytes[at + 5]]);
        if e2e_type & E2E_SEQ_NUM != 0 {
            bytes[at + 6..at + 14].copy_from_slice(&node.next_e2e_seq().to_be_bytes());
        }
    }
}
