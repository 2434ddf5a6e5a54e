//! C ABI over the `ioam6` datapath.
//!
//! Handles are opaque and owned by the caller once returned; release each
//! with its `_free` function. Every fallible call returns an [`IoamStatus`];
//! on failure a message is kept per thread and can be read back with
//! [`ioam_last_error`]. Panics never cross the boundary and surface as
//! [`IoamStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ioam6::buffer::RawPacket;
use ioam6::datapath::{
    process_packet, DatapathError, Hop, ProcessSummary, TelemetryRecord, Timestamp,
};
use ioam6::registry::{register_node, NodeConfig, RegisteredNode};
use ioam6::wire::{self, NodeDataEntry, OptionCodes};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Node JSON did not parse or failed validation.
    InvalidConfig = 3,
    /// Packet bytes are not a well-formed IPv6 packet.
    Malformed = 4,
    /// An extension header would exceed 2048 octets.
    EhTooLarge = 5,
    UnknownInterface = 6,
    /// Output buffer too small; the needed size was reported.
    BufferTooSmall = 7,
    InvalidArgument = 8,
    OutOfRange = 9,
    Panic = 10,
}

/// Registered IOAM node.
pub struct IoamNode(RegisteredNode);

/// Packet buffer with headroom.
pub struct IoamPacket(RawPacket);

/// Telemetry collected by [`ioam_process`].
pub struct IoamRecords(Vec<TelemetryRecord>);

/// One traversal of one node. Interface names are NUL-terminated and may be
/// null (packet originates / terminates here).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IoamHop {
    pub in_if: *const c_char,
    pub out_if: *const c_char,
    pub now_sec: u32,
    pub now_subsec: u32,
    pub encap: bool,
    pub force_decap: bool,
    pub at_destination: bool,
    pub packet_seq: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IoamSummary {
    pub options_removed: usize,
    pub records: usize,
    pub fast_path: bool,
    pub removed_octets: usize,
    pub decap_moves: u32,
    pub traces_written: usize,
    pub overflows: usize,
    pub inserted_octets: usize,
    pub grown: isize,
    pub moves: u32,
    pub reallocs: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IoamRecordInfo {
    pub namespace_id: u16,
    pub overflow: bool,
    pub packet_seq: u64,
    pub entry_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IoamNodeData {
    pub hop_limit: u8,
    pub node_id: u32,
    pub ingress_if_id: u16,
    pub egress_if_id: u16,
    pub timestamp_sec: u32,
    pub timestamp_subsec: u32,
    pub namespace_specific: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (IoamStatus, String);

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IoamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IoamStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside ioam6".into());
            IoamStatus::Panic
        }
    }
}

fn null() -> Failure {
    (IoamStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|e| (IoamStatus::InvalidUtf8, e.to_string()))
}

fn datapath_status(e: &DatapathError) -> IoamStatus {
    match e {
        DatapathError::Scan(_) => IoamStatus::Malformed,
        DatapathError::EhTooLarge(_) => IoamStatus::EhTooLarge,
        DatapathError::UnknownInterface(_) => IoamStatus::UnknownInterface,
        DatapathError::BadIoamSize(_) | DatapathError::Registry(_) => IoamStatus::InvalidConfig,
        DatapathError::Context(_) => IoamStatus::InvalidArgument,
    }
}

/// Copies a string plus NUL into `buf`. Returns the size needed.
unsafe fn write_c_string(s: &str, buf: *mut c_char, cap: usize) -> usize {
    let needed = s.len() + 1;
    if !buf.is_null() && cap > 0 {
        let n = s.len().min(cap - 1);
        ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    }
    needed
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ioam_status_str(status: IoamStatus) -> *const c_char {
    let s: &'static CStr = match status {
        IoamStatus::Ok => c"ok",
        IoamStatus::NullPointer => c"null pointer",
        IoamStatus::InvalidUtf8 => c"invalid UTF-8",
        IoamStatus::InvalidConfig => c"invalid configuration",
        IoamStatus::Malformed => c"malformed packet",
        IoamStatus::EhTooLarge => c"extension header too large",
        IoamStatus::UnknownInterface => c"unknown interface",
        IoamStatus::BufferTooSmall => c"buffer too small",
        IoamStatus::InvalidArgument => c"invalid argument",
        IoamStatus::OutOfRange => c"index out of range",
        IoamStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies this thread's last error message into `buf` (truncated to `cap`,
/// always NUL-terminated when `cap > 0`). Returns the length needed including
/// the NUL, or 0 if no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn ioam_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => write_c_string(msg.to_str().unwrap_or(""), buf, cap),
        None => 0,
    })
}

/// Builds a node from its JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_node_from_json(
    json: *const c_char,
    out: *mut *mut IoamNode,
) -> IoamStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let text = str_arg(json)?.ok_or_else(null)?;
        let cfg =
            NodeConfig::from_json(text).map_err(|e| (IoamStatus::InvalidConfig, e.to_string()))?;
        let node = register_node(&cfg).map_err(|e| (IoamStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(IoamNode(node)));
        Ok(())
    })
}

/// # Safety
/// `node` must be null or come from [`ioam_node_from_json`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ioam_node_free(node: *mut IoamNode) {
    if !node.is_null() {
        drop(Box::from_raw(node));
    }
}

/// The node's IOAM node id, or 0 for a null handle.
///
/// # Safety
/// `node` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ioam_node_id(node: *const IoamNode) -> u32 {
    node.as_ref().map_or(0, |n| n.0.node_id())
}

/// Copies `len` octets into a new packet buffer with `headroom` free octets
/// in front.
///
/// # Safety
/// `data` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_packet_new(
    data: *const u8,
    len: usize,
    headroom: usize,
    out: *mut *mut IoamPacket,
) -> IoamStatus {
    guard(|| {
        if out.is_null() || (data.is_null() && len > 0) {
            return Err(null());
        }
        let bytes = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(data, len)
        };
        *out = Box::into_raw(Box::new(IoamPacket(RawPacket::new(bytes, headroom))));
        Ok(())
    })
}

/// # Safety
/// `pkt` must be null or come from [`ioam_packet_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ioam_packet_free(pkt: *mut IoamPacket) {
    if !pkt.is_null() {
        drop(Box::from_raw(pkt));
    }
}

/// Current packet length, or 0 for a null handle.
///
/// # Safety
/// `pkt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ioam_packet_len(pkt: *const IoamPacket) -> usize {
    pkt.as_ref().map_or(0, |p| p.0.len())
}

/// Borrowed view of the packet bytes, valid until the next call that
/// modifies or frees the packet.
///
/// # Safety
/// `pkt` must be a live handle; `len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_packet_data(pkt: *const IoamPacket, len: *mut usize) -> *const u8 {
    let Some(p) = pkt.as_ref() else {
        return ptr::null();
    };
    if let Some(l) = len.as_mut() {
        *l = p.0.len();
    }
    p.0.bytes().as_ptr()
}

/// Reallocations the packet buffer has needed so far.
///
/// # Safety
/// `pkt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ioam_packet_reallocs(pkt: *const IoamPacket) -> u32 {
    pkt.as_ref().map_or(0, |p| p.0.reallocs())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_new(out: *mut *mut IoamRecords) -> IoamStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = Box::into_raw(Box::new(IoamRecords(Vec::new())));
        Ok(())
    })
}

/// # Safety
/// `records` must be null or come from [`ioam_records_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_free(records: *mut IoamRecords) {
    if !records.is_null() {
        drop(Box::from_raw(records));
    }
}

/// # Safety
/// `records` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_len(records: *const IoamRecords) -> usize {
    records.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `records` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_clear(records: *mut IoamRecords) {
    if let Some(r) = records.as_mut() {
        r.0.clear();
    }
}

/// # Safety
/// `records` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_get(
    records: *const IoamRecords,
    index: usize,
    out: *mut IoamRecordInfo,
) -> IoamStatus {
    guard(|| {
        let (r, out) = (
            records.as_ref().ok_or_else(null)?,
            out.as_mut().ok_or_else(null)?,
        );
        let rec =
            r.0.get(index)
                .ok_or_else(|| out_of_range(index, r.0.len()))?;
        *out = IoamRecordInfo {
            namespace_id: rec.namespace_id,
            overflow: rec.overflow,
            packet_seq: rec.packet_seq,
            entry_count: rec.entries.len(),
        };
        Ok(())
    })
}

/// Node data entry `entry` (hop order) of record `index`.
///
/// # Safety
/// `records` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_records_entry(
    records: *const IoamRecords,
    index: usize,
    entry: usize,
    out: *mut IoamNodeData,
) -> IoamStatus {
    guard(|| {
        let (r, out) = (
            records.as_ref().ok_or_else(null)?,
            out.as_mut().ok_or_else(null)?,
        );
        let rec =
            r.0.get(index)
                .ok_or_else(|| out_of_range(index, r.0.len()))?;
        let e: &NodeDataEntry = rec
            .entries
            .get(entry)
            .ok_or_else(|| out_of_range(entry, rec.entries.len()))?;
        *out = IoamNodeData {
            hop_limit: e.hop_limit,
            node_id: e.node_id,
            ingress_if_id: e.ingress_if_id,
            egress_if_id: e.egress_if_id,
            timestamp_sec: e.timestamp_sec,
            timestamp_subsec: e.timestamp_subsec,
            namespace_specific: e.namespace_specific,
        };
        Ok(())
    })
}

fn out_of_range(index: usize, len: usize) -> Failure {
    (
        IoamStatus::OutOfRange,
        format!("index {index} out of range (len {len})"),
    )
}

/// Runs `node` over `pkt`: remove, update, insert. Removed traces are
/// appended to `records`; `summary` may be null.
///
/// # Safety
/// `node`, `pkt`, `hop` and `records` must be live; `summary` null or
/// writable. A node may be shared between threads; a packet or record set
/// may not.
#[no_mangle]
pub unsafe extern "C" fn ioam_process(
    node: *const IoamNode,
    pkt: *mut IoamPacket,
    hop: *const IoamHop,
    records: *mut IoamRecords,
    summary: *mut IoamSummary,
) -> IoamStatus {
    guard(|| {
        let node = node.as_ref().ok_or_else(null)?;
        let pkt = pkt.as_mut().ok_or_else(null)?;
        let h = hop.as_ref().ok_or_else(null)?;
        let records = records.as_mut().ok_or_else(null)?;
        let hop = Hop {
            in_if: str_arg(h.in_if)?,
            out_if: str_arg(h.out_if)?,
            now: Timestamp {
                sec: h.now_sec,
                subsec: h.now_subsec,
            },
            encap: h.encap,
            force_decap: h.force_decap,
            at_destination: h.at_destination,
            packet_seq: h.packet_seq,
        };
        let s: ProcessSummary = process_packet(&node.0, &hop, &mut pkt.0, &mut records.0)
            .map_err(|e| (datapath_status(&e), e.to_string()))?;
        if let Some(out) = summary.as_mut() {
            *out = IoamSummary {
                options_removed: s.options_removed,
                records: s.records,
                fast_path: s.fast_path,
                removed_octets: s.removed_octets,
                decap_moves: s.decap_moves,
                traces_written: s.traces_written,
                overflows: s.overflows,
                inserted_octets: s.inserted_octets,
                grown: s.grown,
                moves: s.moves,
                reallocs: s.reallocs,
            };
        }
        Ok(())
    })
}

/// Octets one node data entry takes for `trace_type`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_node_data_len(trace_type: u16, out: *mut usize) -> IoamStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = wire::node_data_len(trace_type)
            .map_err(|e| (IoamStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Padding needed at `offset` to reach `offset ≡ align_y (mod align_x)`.
/// `align_x` must be 1, 2, 4 or 8 and `align_y < align_x`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_head_padding(
    offset: usize,
    align_x: usize,
    align_y: usize,
    out: *mut usize,
) -> IoamStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        if !matches!(align_x, 1 | 2 | 4 | 8) || align_y >= align_x {
            return Err((
                IoamStatus::InvalidArgument,
                format!("alignment {align_x}n+{align_y} not supported"),
            ));
        }
        *out = wire::head_padding(offset, align_x, align_y);
        Ok(())
    })
}

/// Decodes packets given as hex (one per line) into the text `inspect`
/// prints. `needed` receives the size including the NUL; when `buf` is null
/// or `cap` is smaller the call returns [`IoamStatus::BufferTooSmall`].
///
/// # Safety
/// `hex` must be a NUL-terminated string; `buf` null or valid for `cap`
/// writes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ioam_inspect_hex(
    hex: *const c_char,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> IoamStatus {
    guard(|| {
        let text = str_arg(hex)?.ok_or_else(null)?;
        let packets = wire::read_hex_fixtures(text.as_bytes())
            .map_err(|e| (IoamStatus::InvalidArgument, e.to_string()))?;
        let codes = OptionCodes::default();
        let mut report = String::new();
        for (i, p) in packets.iter().enumerate() {
            let s = ioam6::cli::inspect::inspect_packet(i, p, &codes)
                .map_err(|e| (IoamStatus::Malformed, e.to_string()))?;
            report.push_str(&s);
        }
        // only write when the whole report fits
        let dest = if cap > report.len() { buf } else { ptr::null_mut() };
        let n = write_c_string(&report, dest, cap);
        if let Some(out) = needed.as_mut() {
            *out = n;
        }
        if buf.is_null() || cap < n {
            return Err((IoamStatus::BufferTooSmall, format!("{n} octets needed")));
        }
        Ok(())
    })
}
