//! Packet buffer with reserved headroom.
//!
//! Growth and shrinkage happen by sliding the packet *prefix* (IPv6 header
//! and the extension headers before the edit point) into or out of the
//! headroom, so the payload is never copied unless the headroom runs out.

use std::ops::Range;

use thiserror::Error;

use crate::scan::ParsedEh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("an IOAM parse context is already attached to this packet")]
pub struct ContextAlreadyAttached;

#[derive(Debug, Clone)]
pub struct RawPacket {
    buf: Vec<u8>,
    start: usize,
    reallocs: u32,
    moves: u32,
    cb: Option<ParsedEh>,
}

impl RawPacket {
    pub fn new(bytes: &[u8], headroom: usize) -> Self {
        let mut buf = vec![0u8; headroom + bytes.len()];
        buf[headroom..].copy_from_slice(bytes);
        Self {
            buf,
            start: headroom,
            reallocs: 0,
            moves: 0,
            cb: None,
        }
    }

    /// Reloads the buffer with new contents, reusing its allocation when it is
    /// large enough. Counters and context are cleared.
    pub fn reset(&mut self, bytes: &[u8], headroom: usize) {
        self.buf.clear();
        self.buf.resize(headroom + bytes.len(), 0);
        self.buf[headroom..].copy_from_slice(bytes);
        self.start = headroom;
        self.reallocs = 0;
        self.moves = 0;
        self.cb = None;
    }

    pub fn bytes(&self) -> &[u8] {
        &self.buf[self.start..]
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.buf[self.start..]
    }

    pub fn len(&self) -> usize {
        self.buf.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Free octets in front of the packet.
    pub fn headroom(&self) -> usize {
        self.start
    }

    /// Times the buffer had to be reallocated because the headroom was
    /// exhausted.
    pub fn reallocs(&self) -> u32 {
        self.reallocs
    }

    /// Bulk byte-move operations performed on this buffer.
    pub fn moves(&self) -> u32 {
        self.moves
    }

    /// Inserts `len` octets of unspecified content at packet offset `at`.
    pub fn open_gap(&mut self, at: usize, len: usize) {
        if len == 0 {
            return;
        }
        assert!(at <= self.len(), "gap offset beyond packet");
        if len <= self.start {
            let from = self.start;
            self.buf.copy_within(from..from + at, from - len);
            self.start -= len;
            self.moves += 1;
        } else {
            let old = self.bytes();
            let mut buf = vec![0u8; old.len() + len];
            buf[..at].copy_from_slice(&old[..at]);
            buf[at + len..].copy_from_slice(&old[at..]);
            self.buf = buf;
            self.start = 0;
            self.reallocs += 1;
            self.moves += 1;
        }
    }

    /// Removes octets `at..at + len`, returning the space to the headroom.
    pub fn close_gap(&mut self, at: usize, len: usize) {
        if len == 0 {
            return;
        }
        assert!(at + len <= self.len(), "gap beyond packet");
        let from = self.start;
        self.buf.copy_within(from..from + at, from + len);
        self.start += len;
        self.moves += 1;
    }

    /// `memmove` within the packet, counted as one move.
    pub fn move_within(&mut self, src: Range<usize>, dest: usize) {
        if src.is_empty() || src.start == dest {
            return;
        }
        let s = self.start;
        self.buf.copy_within(src.start + s..src.end + s, dest + s);
        self.moves += 1;
    }

    pub fn attach_context(&mut self, parsed: ParsedEh) -> Result<(), ContextAlreadyAttached> {
        if self.cb.is_some() {
            return Err(ContextAlreadyAttached);
        }
        self.cb = Some(parsed);
        Ok(())
    }

    pub fn context(&self) -> Option<&ParsedEh> {
        self.cb.as_ref()
    }

    pub fn detach_context(&mut self) -> Option<ParsedEh> {
        self.cb.take()
    }

    /// Splits the packet into its bytes and the attached context so both can
    /// be mutated together.
    pub(crate) fn with_context<R>(
        &mut self,
        f: impl FnOnce(&mut RawPacket, Option<&mut ParsedEh>) -> R,
    ) -> R {
        let mut cb = self.cb.take();
        let out = f(self, cb.as_mut());
        self.cb = cb;
        out
    }
}
