//! Userspace In-situ OAM for IPv6.
//!
//! The crate is layered bottom-up:
//!
//! - [`wire`]: bit-exact codec for IPv6, hop-by-hop / destination headers
//!   and IOAM options, plus hex and pcap fixtures.
//! - [`registry`]: node registration. Validates a [`registry::NodeConfig`]
//!   and pre-builds every resource the packet path needs.
//! - [`scan`]: single-pass extension header scan into [`scan::ParsedEh`].
//! - [`buffer`]: packet buffer with headroom and an attachable parse context.
//! - [`datapath`]: deletion, in-place trace update and insertion.
//! - [`sim`]: an in-process IOAM domain built from linked nodes.
//! - [`cli`]: the `ioamsim` front end (bench, inspect, simulate).

pub mod buffer;
pub mod cli;
pub mod datapath;
pub mod registry;
pub mod scan;
pub mod sim;
pub mod wire;
