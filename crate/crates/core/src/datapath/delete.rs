use crate::buffer::RawPacket;
use crate::registry::RegisteredNode;
use crate::scan::ParsedEh;
use crate::wire::fill_padding;

use super::{rescan_padding, set_eh_len, sync_payload_length};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeleteOutcome {
    /// The whole header went in one splice.
    pub fast_path: bool,
    /// Octets the packet shrank by.
    pub removed: usize,
}

/// Removes the IOAM blocks recorded in `parsed` and updates it to describe
/// the resulting header.
///
/// Each removed block leaves `size % 4` octets of padding behind so every
/// later option moves by a multiple of 4 and keeps its alignment.
pub fn delete_ioam(
    pkt: &mut RawPacket,
    parsed: &mut ParsedEh,
    node: &RegisteredNode,
) -> DeleteOutcome {
    let Some(eh) = parsed.eh else {
        return DeleteOutcome::default();
    };
    if parsed.free_idx == 0 {
        return DeleteOutcome::default();
    }

    if parsed.only_removable_left() {
        let bytes = pkt.bytes_mut();
        bytes[parsed.link] = bytes[eh.offset];
        pkt.close_gap(eh.offset, eh.size);
        sync_payload_length(pkt.bytes_mut());
        *parsed = ParsedEh {
            kind: parsed.kind,
            link: parsed.link,
            insert_at: eh.offset,
            ..ParsedEh::default()
        };
        return DeleteOutcome {
            fast_path: true,
            removed: eh.size,
        };
    }

    let decaps = parsed.decaps;
    let blocks = &decaps[..parsed.free_idx];
    let mut write = blocks[0].offset;
    for (i, b) in blocks.iter().enumerate() {
        let keep = b.size % 4;
        if keep > 0 {
            pkt.bytes_mut()[write..write + keep].copy_from_slice(node.padding(keep));
            write += keep;
        }
        let seg_end = blocks.get(i + 1).map_or(eh.end(), |n| n.offset);
        pkt.move_within(b.end()..seg_end, write);
        write += seg_end - b.end();
    }
    let tail = (8 - (write - eh.offset) % 8) % 8;
    fill_padding(&mut pkt.bytes_mut()[write..write + tail]);
    write += tail;
    let removed = eh.end() - write;
    pkt.close_gap(write, removed);

    let new_size = write - eh.offset;
    set_eh_len(pkt.bytes_mut(), eh.offset, new_size);
    sync_payload_length(pkt.bytes_mut());

    for t in &mut parsed.traces[..parsed.trace_count] {
        let shift: usize = blocks
            .iter()
            .take_while(|b| b.offset < t.offset)
            .map(|b| b.size - b.size % 4)
            .sum();
        t.offset -= shift;
    }
    parsed.eh = Some(crate::scan::Block {
        offset: eh.offset,
        size: new_size,
    });
    parsed.free_idx = 0;
    parsed.decap_size = 0;
    rescan_padding(pkt.bytes(), parsed);
    DeleteOutcome {
        fast_path: false,
        removed,
    }
}
