use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buffer::RawPacket;
use crate::datapath::{process_packet, Hop, TelemetryRecord, Timestamp};
use crate::wire::{EhWalk, OptionCodes, PacketView, RawOptions, IPV6_HEADER_LEN};

use super::topology::{Step, Topology};
use super::SimError;

/// Smallest generated packet: IPv6 header, UDP header, 8 octets of payload.
pub const MIN_PACKET_SIZE: usize = 56 - 8;
const DEFAULT_HOP_LIMIT: u8 = 64;
/// Virtual time between two generated packets.
const PACKET_INTERVAL_NS: u64 = 1_000;
const HOP_DELAY_NS: u64 = 100;
const EPOCH_SEC: u64 = 1_700_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub src: String,
    pub dst: String,
    pub packet_size: usize,
    pub count: u64,
    /// Fraction of packets the ingress node encapsulates.
    pub ioam_fraction: f64,
    /// Free space reserved in front of each generated packet.
    pub headroom: usize,
    /// Worker threads; `IOAMSIM_WORKERS` overrides when unset.
    pub workers: Option<usize>,
    /// Write one pcap per traversed link here (forces a single worker).
    pub capture_dir: Option<PathBuf>,
}

impl FlowSpec {
    pub fn new(src: &str, dst: &str) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            packet_size: 1200,
            count: 10_000,
            ioam_fraction: 1.0,
            headroom: 128,
            workers: None,
            capture_dir: None,
        }
    }
}

/// Processing time for one role at one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleStats {
    pub count: u64,
    pub total_ns: u64,
    pub min_ns: u64,
}

impl Default for RoleStats {
    fn default() -> Self {
        Self {
            count: 0,
            total_ns: 0,
            min_ns: u64::MAX,
        }
    }
}

impl RoleStats {
    fn add(&mut self, ns: u64) {
        self.count += 1;
        self.total_ns += ns;
        self.min_ns = self.min_ns.min(ns);
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.total_ns += other.total_ns;
        self.min_ns = self.min_ns.min(other.min_ns);
    }

    pub fn mean_ns(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total_ns as f64 / self.count as f64)
    }

    pub fn min(&self) -> Option<u64> {
        (self.count > 0).then_some(self.min_ns)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeReport {
    pub name: String,
    pub encap: RoleStats,
    pub transit: RoleStats,
    pub decap: RoleStats,
    pub reallocs: u64,
    pub moves: u64,
    pub decap_moves: u64,
}

impl NodeReport {
    fn merge(&mut self, other: &Self) {
        self.encap.merge(&other.encap);
        self.transit.merge(&other.transit);
        self.decap.merge(&other.decap);
        self.reallocs += other.reallocs;
        self.moves += other.moves;
        self.decap_moves += other.decap_moves;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropCounts {
    pub malformed: u64,
    pub mtu: u64,
    pub hop_limit: u64,
}

impl DropCounts {
    pub fn total(&self) -> u64 {
        self.malformed + self.mtu + self.hop_limit
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    pub generated: u64,
    pub encapsulated: u64,
    pub delivered_packets: u64,
    pub delivered_bytes: u64,
    pub dropped: u64,
    pub drops: DropCounts,
    /// One entry per topology node, in topology order.
    pub nodes: Vec<NodeReport>,
    pub records: Vec<TelemetryRecord>,
    /// IOAM option octets still present in delivered packets.
    pub ioam_octets_delivered: u64,
    /// Wall-clock time spent pushing packets through the path, excluding
    /// packet generation.
    pub traversal_ns: u64,
}

impl SimReport {
    pub fn node(&self, name: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn packets_per_sec(&self) -> f64 {
        per_sec(self.delivered_packets, self.traversal_ns)
    }

    pub fn bytes_per_sec(&self) -> f64 {
        per_sec(self.delivered_bytes, self.traversal_ns)
    }

    fn merge(&mut self, other: Self) {
        self.generated += other.generated;
        self.encapsulated += other.encapsulated;
        self.delivered_packets += other.delivered_packets;
        self.delivered_bytes += other.delivered_bytes;
        self.dropped += other.dropped;
        self.drops.malformed += other.drops.malformed;
        self.drops.mtu += other.drops.mtu;
        self.drops.hop_limit += other.drops.hop_limit;
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            a.merge(b);
        }
        self.records.extend(other.records);
        self.ioam_octets_delivered += other.ioam_octets_delivered;
        self.traversal_ns += other.traversal_ns;
    }
}

fn per_sec(n: u64, ns: u64) -> f64 {
    if ns == 0 {
        0.0
    } else {
        n as f64 * 1e9 / ns as f64
    }
}

const FRACTION_SCALE: u128 = 1_000_000_000;

/// Deterministic selection: packet `i` is chosen iff `ceil((i+1)·f)` exceeds
/// `ceil(i·f)`, so exactly `ceil(n·f)` of the first `n` packets are chosen
/// and `f = 1/k` picks every k-th packet.
pub fn select_for_encap(i: u64, fraction: f64) -> bool {
    let num = (fraction.clamp(0.0, 1.0) * FRACTION_SCALE as f64).round() as u128;
    let ceil = |x: u128| (x * num).div_ceil(FRACTION_SCALE);
    ceil(u128::from(i) + 1) > ceil(u128::from(i))
}

fn ioam_octets(bytes: &[u8], codes: &OptionCodes) -> u64 {
    let mut total = 0;
    for loc in EhWalk::new(bytes).flatten() {
        for opt in RawOptions::new(&bytes[loc.offset..loc.offset + loc.len]).flatten() {
            if codes.is_ioam(opt.opt_type) {
                total += opt.total_len() as u64;
            }
        }
    }
    total
}

fn now(i: u64, hop: usize) -> Timestamp {
    let ns = i * PACKET_INTERVAL_NS + hop as u64 * HOP_DELAY_NS;
    Timestamp {
        sec: (EPOCH_SEC + ns / 1_000_000_000) as u32,
        subsec: (ns % 1_000_000_000) as u32,
    }
}

struct Shard<'a> {
    topo: &'a Topology,
    path: &'a [Step],
    flow: &'a FlowSpec,
    seed: u64,
    template: &'a [u8],
    captures: Option<Vec<Vec<Vec<u8>>>>,
}

impl Shard<'_> {
    fn run(&mut self, range: Range<u64>) -> SimReport {
        let topo = self.topo;
        let mut report = SimReport {
            nodes: topo
                .nodes
                .iter()
                .map(|n| NodeReport {
                    name: n.name.clone(),
                    ..NodeReport::default()
                })
                .collect(),
            ..SimReport::default()
        };
        let dst_addr = topo.nodes[self.path.last().expect("non-empty path").node].address;
        let codes = OptionCodes::default();
        let mut scratch = self.template.to_vec();
        let mut pkt = RawPacket::new(self.template, self.flow.headroom);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        for i in range {
            rng.set_stream(i);
            rng.set_word_pos(0);
            rng.fill_bytes(&mut scratch[IPV6_HEADER_LEN + 8..]);
            let label = rng.next_u32() & 0x000f_ffff;
            scratch[1] = (scratch[1] & 0xf0) | (label >> 16) as u8;
            scratch[2..4].copy_from_slice(&(label as u16).to_be_bytes());
            pkt.reset(&scratch, self.flow.headroom);
            report.generated += 1;
            let encap = select_for_encap(i, self.flow.ioam_fraction);
            let records_before = report.records.len();

            let start = Instant::now();
            let mut delivered = true;
            for (h, step) in self.path.iter().enumerate() {
                let node = &topo.nodes[step.node];
                if let Some(reg) = &node.ioam {
                    let hop = Hop {
                        in_if: step.in_dev.as_deref(),
                        out_if: step.out_dev.as_deref(),
                        now: now(i, h),
                        encap,
                        force_decap: false,
                        at_destination: node.address == dst_addr,
                        packet_seq: i,
                    };
                    let t0 = Instant::now();
                    let res = process_packet(reg, &hop, &mut pkt, &mut report.records);
                    let ns = t0.elapsed().as_nanos() as u64;
                    let Ok(s) = res else {
                        report.drops.malformed += 1;
                        delivered = false;
                        break;
                    };
                    let nr = &mut report.nodes[step.node];
                    if s.did_decap() {
                        nr.decap.add(ns);
                    } else if s.did_encap() {
                        nr.encap.add(ns);
                        report.encapsulated += 1;
                    } else {
                        nr.transit.add(ns);
                    }
                    nr.reallocs += u64::from(s.reallocs);
                    nr.moves += u64::from(s.moves);
                    nr.decap_moves += u64::from(s.decap_moves);
                }
                let Some(link) = step.out_link else {
                    continue;
                };
                if pkt.len() > topo.links[link].mtu {
                    report.drops.mtu += 1;
                    delivered = false;
                    break;
                }
                let hl = &mut pkt.bytes_mut()[7];
                if *hl <= 1 {
                    report.drops.hop_limit += 1;
                    delivered = false;
                    break;
                }
                *hl -= 1;
                if let Some(caps) = &mut self.captures {
                    caps[link].push(pkt.bytes().to_vec());
                }
            }
            report.traversal_ns += start.elapsed().as_nanos() as u64;

            if delivered {
                report.delivered_packets += 1;
                report.delivered_bytes += pkt.len() as u64;
                report.ioam_octets_delivered += ioam_octets(pkt.bytes(), &codes);
            } else {
                report.dropped += 1;
                report.records.truncate(records_before);
            }
        }
        report
    }
}

fn worker_count(flow: &FlowSpec) -> usize {
    if flow.capture_dir.is_some() {
        return 1;
    }
    flow.workers
        .or_else(|| {
            std::env::var("IOAMSIM_WORKERS")
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .unwrap_or(1)
        .max(1)
}

pub fn run_flow(topo: &Topology, flow: &FlowSpec, seed: u64) -> Result<SimReport, SimError> {
    if flow.packet_size < MIN_PACKET_SIZE {
        return Err(SimError::BadFlow(format!(
            "packet size {} below {MIN_PACKET_SIZE}",
            flow.packet_size
        )));
    }
    if !(0.0..=1.0).contains(&flow.ioam_fraction) {
        return Err(SimError::BadFlow(format!(
            "fraction {} outside [0, 1]",
            flow.ioam_fraction
        )));
    }
    let path = topo.path(&flow.src, &flow.dst)?;
    let src = &topo.nodes[path[0].node];
    let dst = &topo.nodes[path.last().expect("non-empty").node];
    let mut view = PacketView::udp(src.address, dst.address, flow.packet_size, |_| {});
    view.header.hop_limit = DEFAULT_HOP_LIMIT;
    let template = view
        .encode(&OptionCodes::default())
        .expect("generated packet encodes");

    let workers = worker_count(flow).min(flow.count.max(1) as usize);
    let chunk = flow.count.div_ceil(workers as u64);
    let mut shards: Vec<Shard> = (0..workers)
        .map(|_| Shard {
            topo,
            path: &path,
            flow,
            seed,
            template: &template,
            captures: flow
                .capture_dir
                .as_ref()
                .map(|_| vec![Vec::new(); topo.links.len()]),
        })
        .collect();
    let ranges: Vec<Range<u64>> = (0..workers as u64)
        .map(|w| (w * chunk).min(flow.count)..((w + 1) * chunk).min(flow.count))
        .collect();

    let parts: Vec<SimReport> = if workers == 1 {
        vec![shards[0].run(ranges[0].clone())]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = shards
                .iter_mut()
                .zip(&ranges)
                .map(|(shard, r)| {
                    let r = r.clone();
                    s.spawn(move || shard.run(r))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };

    let mut parts = parts.into_iter();
    let mut report = parts.next().expect("at least one worker");
    for p in parts {
        report.merge(p);
    }
    report.records.sort_by_key(|r| r.packet_seq);

    if let (Some(dir), Some(caps)) = (&flow.capture_dir, &shards[0].captures) {
        std::fs::create_dir_all(dir)?;
        for (li, pkts) in caps.iter().enumerate() {
            if pkts.is_empty() {
                continue;
            }
            let file =
                std::fs::File::create(dir.join(format!("{}.pcap", topo.links[li].name(topo))))?;
            crate::wire::write_pcap(
                std::io::BufWriter::new(file),
                pkts.iter().map(Vec::as_slice),
            )?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{chain, reconstruct_path, ChainSpec};

    #[test]
    fn selection_counts_are_exact() {
        for (f, n, want) in [
            (0.0, 1000, 0),
            (1.0, 1000, 1000),
            (0.01, 1000, 10),
            (0.0001, 1000, 1),
            (0.25, 10, 3),
            (0.5, 7, 4),
        ] {
            let got = (0..n).filter(|&i| select_for_encap(i, f)).count();
            assert_eq!(got, want, "f={f} n={n}");
        }
        let picks: Vec<u64> = (0..12).filter(|&i| select_for_encap(i, 0.25)).collect();
        assert_eq!(picks, vec![0, 4, 8]);
    }

    #[test]
    fn full_fraction_default_topology() {
        let topo = Topology::default_chain();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 500;
        let r = run_flow(&topo, &flow, 1).unwrap();
        assert_eq!(r.delivered_packets, 500);
        assert_eq!(r.records.len(), 500);
        assert_eq!(r.ioam_octets_delivered, 0);
        for rec in &r.records {
            assert_eq!(reconstruct_path(rec, &topo), ["Athos", "Porthos", "Aramis"]);
        }
        assert_eq!(r.node("Athos").unwrap().encap.count, 500);
        assert_eq!(r.node("Aramis").unwrap().decap.count, 500);
    }

    #[test]
    fn zero_fraction_passes_through() {
        let topo = Topology::default_chain();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 200;
        flow.ioam_fraction = 0.0;
        let r = run_flow(&topo, &flow, 1).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.delivered_packets, r.generated);
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let topo = Topology::default_chain();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 300;
        flow.ioam_fraction = 0.3;
        flow.workers = Some(1);
        let a = run_flow(&topo, &flow, 9).unwrap();
        flow.workers = Some(3);
        let b = run_flow(&topo, &flow, 9).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.delivered_bytes, b.delivered_bytes);
        assert_eq!(a.records.len(), 90);
    }

    #[test]
    fn mtu_drops_are_counted() {
        let topo = chain(&ChainSpec {
            namespaces: 4,
            capacity: 20,
            mtu: 1300,
            ..ChainSpec::default()
        })
        .unwrap();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 20;
        let r = run_flow(&topo, &flow, 0).unwrap();
        assert_eq!(r.drops.mtu, 20);
        assert_eq!(r.delivered_packets + r.dropped, r.generated);
    }

    #[test]
    fn zero_headroom_reallocates_at_ingress() {
        let topo = chain(&ChainSpec {
            namespaces: 7,
            capacity: 7,
            ..ChainSpec::default()
        })
        .unwrap();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 50;
        flow.headroom = 0;
        let r = run_flow(&topo, &flow, 0).unwrap();
        assert!(r.node("Athos").unwrap().reallocs > 0);
        assert_eq!(r.delivered_packets, 50);
    }

    #[test]
    fn decap_moves_independent_of_namespaces() {
        let mut per_ns = Vec::new();
        for namespaces in 1..=7 {
            let topo = chain(&ChainSpec {
                namespaces,
                capacity: 7,
                ..ChainSpec::default()
            })
            .unwrap();
            let mut flow = FlowSpec::new("Alpha", "Beta");
            flow.count = 10;
            let r = run_flow(&topo, &flow, 0).unwrap();
            per_ns.push(r.node("Aramis").unwrap().decap_moves);
        }
        assert!(per_ns.iter().all(|&m| m == per_ns[0]), "{per_ns:?}");
    }

    #[test]
    fn capture_writes_pcaps() {
        let dir = tempfile::tempdir().unwrap();
        let topo = Topology::default_chain();
        let mut flow = FlowSpec::new("Alpha", "Beta");
        flow.count = 3;
        flow.capture_dir = Some(dir.path().to_path_buf());
        run_flow(&topo, &flow, 0).unwrap();
        let f = std::fs::File::open(dir.path().join("Athos-eth1_Porthos-eth0.pcap")).unwrap();
        let pkts = crate::wire::read_pcap(f).unwrap();
        assert_eq!(pkts.len(), 3);
        assert_eq!(pkts[0].len(), 1200 + 64);
    }
}
