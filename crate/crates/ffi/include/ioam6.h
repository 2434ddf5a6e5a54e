#ifndef IOAM6_H
#define IOAM6_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  IOAM_STATUS_OK = 0,
  IOAM_STATUS_NULL_POINTER = 1,
  IOAM_STATUS_INVALID_UTF8 = 2,
  /**
   * Node JSON did not parse or failed validation.
   */
  IOAM_STATUS_INVALID_CONFIG = 3,
  /**
   * Packet bytes are not a well-formed IPv6 packet.
   */
  IOAM_STATUS_MALFORMED = 4,
  /**
   * An extension header would exceed 2048 octets.
   */
  IOAM_STATUS_EH_TOO_LARGE = 5,
  IOAM_STATUS_UNKNOWN_INTERFACE = 6,
  /**
   * Output buffer too small; the needed size was reported.
   */
  IOAM_STATUS_BUFFER_TOO_SMALL = 7,
  IOAM_STATUS_INVALID_ARGUMENT = 8,
  IOAM_STATUS_OUT_OF_RANGE = 9,
  IOAM_STATUS_PANIC = 10,
} IoamStatus;

/**
 * Registered IOAM node.
 */
typedef struct IoamNode IoamNode;

/**
 * Packet buffer with headroom.
 */
typedef struct IoamPacket IoamPacket;

/**
 * Telemetry collected by [`ioam_process`].
 */
typedef struct IoamRecords IoamRecords;

typedef struct {
  uint16_t namespace_id;
  bool overflow;
  uint64_t packet_seq;
  size_t entry_count;
} IoamRecordInfo;

typedef struct {
  uint8_t hop_limit;
  uint32_t node_id;
  uint16_t ingress_if_id;
  uint16_t egress_if_id;
  uint32_t timestamp_sec;
  uint32_t timestamp_subsec;
  uint32_t namespace_specific;
} IoamNodeData;

/**
 * One traversal of one node. Interface names are NUL-terminated and may be
 * null (packet originates / terminates here).
 */
typedef struct {
  const char *in_if;
  const char *out_if;
  uint32_t now_sec;
  uint32_t now_subsec;
  bool encap;
  bool force_decap;
  bool at_destination;
  uint64_t packet_seq;
} IoamHop;

typedef struct {
  size_t options_removed;
  size_t records;
  bool fast_path;
  size_t removed_octets;
  uint32_t decap_moves;
  size_t traces_written;
  size_t overflows;
  size_t inserted_octets;
  ptrdiff_t grown;
  uint32_t moves;
  uint32_t reallocs;
} IoamSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *ioam_status_str(IoamStatus status);

/**
 * Copies this thread's last error message into `buf` (truncated to `cap`,
 * always NUL-terminated when `cap > 0`). Returns the length needed including
 * the NUL, or 0 if no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `cap` writes.
 */
size_t ioam_last_error(char *buf, size_t cap);

/**
 * Builds a node from its JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
IoamStatus ioam_node_from_json(const char *json, IoamNode **out);

/**
 * # Safety
 * `node` must be null or come from [`ioam_node_from_json`], freed once.
 */
void ioam_node_free(IoamNode *node);

/**
 * The node's IOAM node id, or 0 for a null handle.
 *
 * # Safety
 * `node` must be null or a live handle.
 */
uint32_t ioam_node_id(const IoamNode *node);

/**
 * Copies `len` octets into a new packet buffer with `headroom` free octets
 * in front.
 *
 * # Safety
 * `data` must be valid for `len` reads; `out` must be writable.
 */
IoamStatus ioam_packet_new(const uint8_t *data, size_t len, size_t headroom, IoamPacket **out);

/**
 * # Safety
 * `pkt` must be null or come from [`ioam_packet_new`], freed once.
 */
void ioam_packet_free(IoamPacket *pkt);

/**
 * Current packet length, or 0 for a null handle.
 *
 * # Safety
 * `pkt` must be null or a live handle.
 */
size_t ioam_packet_len(const IoamPacket *pkt);

/**
 * Borrowed view of the packet bytes, valid until the next call that
 * modifies or frees the packet.
 *
 * # Safety
 * `pkt` must be a live handle; `len` must be null or writable.
 */
const uint8_t *ioam_packet_data(const IoamPacket *pkt, size_t *len);

/**
 * Reallocations the packet buffer has needed so far.
 *
 * # Safety
 * `pkt` must be null or a live handle.
 */
uint32_t ioam_packet_reallocs(const IoamPacket *pkt);

/**
 * # Safety
 * `out` must be writable.
 */
IoamStatus ioam_records_new(IoamRecords **out);

/**
 * # Safety
 * `records` must be null or come from [`ioam_records_new`], freed once.
 */
void ioam_records_free(IoamRecords *records);

/**
 * # Safety
 * `records` must be null or a live handle.
 */
size_t ioam_records_len(const IoamRecords *records);

/**
 * # Safety
 * `records` must be null or a live handle.
 */
void ioam_records_clear(IoamRecords *records);

/**
 * # Safety
 * `records` must be a live handle; `out` must be writable.
 */
IoamStatus ioam_records_get(const IoamRecords *records, size_t index, IoamRecordInfo *out);

/**
 * Node data entry `entry` (hop order) of record `index`.
 *
 * # Safety
 * `records` must be a live handle; `out` must be writable.
 */
IoamStatus ioam_records_entry(const IoamRecords *records,
                              size_t index,
                              size_t entry,
                              IoamNodeData *out);

/**
 * Runs `node` over `pkt`: remove, update, insert. Removed traces are
 * appended to `records`; `summary` may be null.
 *
 * # Safety
 * `node`, `pkt`, `hop` and `records` must be live; `summary` null or
 * writable. A node may be shared between threads; a packet or record set
 * may not.
 */
IoamStatus ioam_process(const IoamNode *node,
                        IoamPacket *pkt,
                        const IoamHop *hop,
                        IoamRecords *records,
                        IoamSummary *summary);

/**
 * Octets one node data entry takes for `trace_type`.
 *
 * # Safety
 * `out` must be writable.
 */
IoamStatus ioam_node_data_len(uint16_t trace_type, size_t *out);

/**
 * Padding needed at `offset` to reach `offset ≡ align_y (mod align_x)`.
 * `align_x` must be 1, 2, 4 or 8 and `align_y < align_x`.
 *
 * # Safety
 * `out` must be writable.
 */
IoamStatus ioam_head_padding(size_t offset, size_t align_x, size_t align_y, size_t *out);

/**
 * Decodes packets given as hex (one per line) into the text `inspect`
 * prints. `needed` receives the size including the NUL; when `buf` is null
 * or `cap` is smaller the call returns [`IoamStatus::BufferTooSmall`].
 *
 * # Safety
 * `hex` must be a NUL-terminated string; `buf` null or valid for `cap`
 * writes; `needed` null or writable.
 */
IoamStatus ioam_inspect_hex(const char *hex, char *buf, size_t cap, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IOAM6_H */
