//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints its verdict whether or not it passes.

mod common;

use std::time::{Duration, Instant};

use ioam6::buffer::RawPacket;
use ioam6::cli::bench::{NAMESPACE_SWEEP_CAPACITY, OPTION_SWEEP_CAPACITY};
use ioam6::datapath::{delete_ioam, process_packet, Hop, InsertionPlan, TelemetryRecord};
use ioam6::registry::{
    EncapEntry, InterfaceConfig, InterfaceRole, NamespaceConfig, NodeConfig, OptionTemplate,
    RegisteredNode,
};
use ioam6::scan::{scan_eh, Removal};
use ioam6::sim::{chain, chain_config, reconstruct_path, run_flow, ChainSpec, FlowSpec, Topology};
use ioam6::wire::{
    parse_packet, EhKind, OptionBody, TraceVariant, FLAG_OVERFLOW, NEXT_HEADER_UDP,
    TRACE_HOP_LIMIT_NODE_ID,
};
use rand::RngExt;

use common::*;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "wire round-trip",
            limit: secs(5),
            run: wire_round_trip,
        },
        Criterion {
            id: 2,
            name: "alignment suite",
            limit: secs(30),
            run: alignment_suite,
        },
        Criterion {
            id: 3,
            name: "insertion padding arithmetic",
            limit: secs(5),
            run: padding_arithmetic,
        },
        Criterion {
            id: 4,
            name: "deletion fast-path condition",
            limit: secs(10),
            run: fast_path_condition,
        },
        Criterion {
            id: 5,
            name: "insert-delete inverse",
            limit: secs(10),
            run: insert_delete_inverse,
        },
        Criterion {
            id: 6,
            name: "path telemetry",
            limit: secs(30),
            run: path_telemetry,
        },
        Criterion {
            id: 7,
            name: "fraction throughput trend",
            limit: secs(180),
            run: fraction_trend,
        },
        Criterion {
            id: 8,
            name: "options headroom knee",
            limit: secs(60),
            run: options_knee,
        },
        Criterion {
            id: 9,
            name: "namespace/option byte equivalence",
            limit: secs(5),
            run: byte_equivalence,
        },
        Criterion {
            id: 10,
            name: "decap constancy",
            limit: secs(60),
            run: decap_constancy,
        },
        Criterion {
            id: 11,
            name: "overflow semantics",
            limit: secs(5),
            run: overflow_semantics,
        },
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| filter.is_empty() || filter.contains(&c.id))
    {
        let start = Instant::now();
        let result = (c.run)();
        let took = start.elapsed();
        let verdict = match result {
            Ok(_) if took > c.limit => Err(format!("took {took:.2?}, limit {:?}", c.limit)),
            other => other,
        };
        match verdict {
            Ok(detail) => println!(
                "criterion {:>2} {}: PASS ({detail}; {took:.2?})",
                c.id, c.name
            ),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {}: FAIL ({why}; {took:.2?})", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn wire_round_trip() -> Outcome {
    let mut rng = rng(1);
    for i in 0..1000 {
        let view = random_view(&mut rng);
        let bytes = encode(&view);
        let parsed = parse_packet(&bytes).map_err(|e| format!("packet {i}: {e}"))?;
        check(parsed == view, || {
            format!("packet {i}: parse differs from source")
        })?;
        check(encode(&parsed) == bytes, || {
            format!("packet {i}: re-encode differs")
        })?;
    }
    Ok("1000 packets byte-identical".into())
}

fn iface(dev: &str, id: u16, role: InterfaceRole) -> InterfaceConfig {
    InterfaceConfig {
        dev_name: dev.into(),
        ioam_if_id: id,
        role,
    }
}

const SUITE_NAMESPACES: [u16; 4] = [10, 11, 12, 13];

fn suite_nss(remove: &[u16]) -> Vec<NamespaceConfig> {
    SUITE_NAMESPACES
        .iter()
        .map(|&namespace_id| NamespaceConfig {
            namespace_id,
            remove_on_transit: remove.contains(&namespace_id),
        })
        .collect()
}

fn random_encap_node(rng: &mut TestRng, id: u32) -> RegisteredNode {
    let n = rng.random_range(1..=4);
    let encaps = (0..n)
        .map(|_| {
            let namespace_id = SUITE_NAMESPACES[rng.random_range(0..4)];
            let (eh_kind, option) = match rng.random_range(0..4) {
                0 | 1 => (
                    EhKind::HopByHop,
                    OptionTemplate::Trace {
                        variant: if rng.random_bool(0.5) {
                            TraceVariant::PreAllocated
                        } else {
                            TraceVariant::Incremental
                        },
                        trace_type: rng.random_range(1..=0x1f),
                        capacity: rng.random_range(1..=4),
                    },
                ),
                2 => (
                    EhKind::HopByHop,
                    OptionTemplate::Pot {
                        body: "ab".repeat(rng.random_range(8..17)),
                    },
                ),
                _ => (EhKind::Destination, OptionTemplate::E2e { e2e_type: 1 }),
            };
            EncapEntry {
                namespace_id,
                egress_dev: "eth1".into(),
                eh_kind,
                option,
            }
        })
        .collect();
    node(&NodeConfig {
        ioam_node_id: id,
        ifs: vec![
            iface("eth0", 1, InterfaceRole::INGRESS),
            iface("eth1", 2, InterfaceRole::EGRESS),
        ],
        nss: suite_nss(&[]),
        encaps,
        option_codes: Default::default(),
    })
}

fn alignment_suite() -> Outcome {
    let mut rng = rng(2);
    let encappers: Vec<RegisteredNode> = (0..8)
        .map(|i| random_encap_node(&mut rng, 100 + i))
        .collect();
    let transit = node(&NodeConfig {
        ioam_node_id: 200,
        ifs: vec![
            iface("eth0", 1, InterfaceRole::INGRESS),
            iface("eth1", 2, InterfaceRole::EGRESS),
        ],
        nss: suite_nss(&[]),
        encaps: vec![],
        option_codes: Default::default(),
    });
    let decap = node(&NodeConfig {
        ioam_node_id: 300,
        ifs: vec![
            iface("eth0", 1, InterfaceRole::INGRESS),
            iface("eth1", 2, InterfaceRole::NONE),
        ],
        nss: suite_nss(&[10, 11]),
        encaps: vec![],
        option_codes: Default::default(),
    });
    let mut records = Vec::new();
    let (mut ops, mut violations, mut too_large) = (0, 0, 0);
    for seq in 0..1000u64 {
        let (src, dst) = (addr(&mut rng), addr(&mut rng));
        let len = rng.random_range(48..900);
        let mut view = udp(&mut rng, src, dst, len);
        if rng.random_bool(0.5) {
            let n = rng.random_range(0..5);
            let bodies = (0..n)
                .map(|_| match rng.random_range(0..3) {
                    0 => pad_body(rng.random_range(1..8)),
                    1 => other_body(&mut rng),
                    // IOAM from a namespace nobody here knows
                    _ => ioam_body(&mut rng, 999, EhKind::HopByHop),
                })
                .collect();
            view.ext_headers
                .push(aligned_header(EhKind::HopByHop, NEXT_HEADER_UDP, bodies));
            view.normalize();
        }
        let mut pkt = RawPacket::new(&encode(&view), rng.random_range(0..256));
        for _ in 0..rng.random_range(1..=8) {
            let hop_in = Some("eth0");
            let result = match rng.random_range(0..4) {
                0 => {
                    let n = &encappers[rng.random_range(0..encappers.len())];
                    traverse(n, &mut pkt, &mut records, true, seq)
                }
                1 => traverse(&transit, &mut pkt, &mut records, false, seq),
                k => {
                    let hop = Hop {
                        in_if: hop_in,
                        out_if: Some("eth1"),
                        force_decap: k == 3,
                        at_destination: true,
                        packet_seq: seq,
                        ..Hop::default()
                    };
                    process_packet(&decap, &hop, &mut pkt, &mut records)
                }
            };
            ops += 1;
            match result {
                Ok(_) => {}
                Err(ioam6::datapath::DatapathError::EhTooLarge(_)) => too_large += 1,
                Err(e) => return Err(format!("sequence {seq}: {e}")),
            }
            violations += alignment_violations(pkt.bytes());
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "{ops} operations, 0 violations, {too_large} refused as too large"
    ))
}

fn padding_arithmetic() -> Outcome {
    let mut cases = 0;
    for notail in 0..=255usize {
        let tailpad = (8 - notail % 8) % 8;
        let eh_size = notail + tailpad;
        for ioam in (12..=256).step_by(4) {
            let plan = InsertionPlan::new(eh_size, tailpad, ioam).map_err(|e| e.to_string())?;
            // smallest head then tail padding giving 4n placement and 8n length
            let (head, tail) = (0..8)
                .flat_map(|h| (0..8).map(move |t| (h, t)))
                .filter(|(h, t)| (notail + h) % 4 == 0 && (notail + h + ioam + t) % 8 == 0)
                .min_by_key(|&(h, t)| (h + t, h))
                .expect("some padding works");
            let new_size = notail + head + ioam + tail;
            let got = (
                plan.eh_notail_size,
                plan.new_headpad_size,
                plan.new_tailpad_size,
                plan.extra_room,
                plan.new_eh_size(),
            );
            let want = (
                notail,
                head,
                tail,
                new_size as isize - eh_size as isize,
                new_size,
            );
            check(got == want, || {
                format!("notail {notail} ioam {ioam}: {got:?} != {want:?}")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} cases exact"))
}

fn fast_path_condition() -> Outcome {
    let mut rng = rng(4);
    let node = node(&NodeConfig {
        ioam_node_id: 9,
        ifs: vec![],
        nss: vec![
            NamespaceConfig {
                namespace_id: 1,
                remove_on_transit: true,
            },
            NamespaceConfig {
                namespace_id: 2,
                remove_on_transit: false,
            },
        ],
        encaps: vec![],
        option_codes: Default::default(),
    });
    let (mut agree, mut fast) = (0, 0);
    for i in 0..10_000 {
        let only_removable = rng.random_bool(0.5);
        let n = rng.random_range(0..10);
        let bodies: Vec<OptionBody> = (0..n)
            .map(|_| match (only_removable, rng.random_range(0..5)) {
                (_, 0) => pad_body(rng.random_range(1..8)),
                (true, _) | (false, 1) => ioam_body(&mut rng, 1, EhKind::HopByHop),
                (false, 2) => {
                    let ns = rng.random_range(2..4);
                    ioam_body(&mut rng, ns, EhKind::HopByHop)
                }
                _ => other_body(&mut rng),
            })
            .collect();
        let eh = if rng.random_bool(0.5) {
            aligned_header(EhKind::HopByHop, NEXT_HEADER_UDP, bodies)
        } else {
            packed_header(EhKind::HopByHop, NEXT_HEADER_UDP, bodies)
        };
        let mut view = udp(
            &mut rng,
            "db00::1".parse().unwrap(),
            "db04::1".parse().unwrap(),
            64,
        );
        view.ext_headers.push(eh);
        view.normalize();
        let bytes = encode(&view);

        let oracle = view.ext_headers[0].options.iter().all(|o| match &o.body {
            OptionBody::Pad1 | OptionBody::PadN { .. } => true,
            OptionBody::IoamTrace(t) => t.namespace_id == 1,
            OptionBody::IoamPot(p) => p.namespace_id == 1,
            OptionBody::IoamE2E(e) => e.namespace_id == 1,
            OptionBody::Unknown { .. } => false,
        });
        let mut parsed = scan_eh(&bytes, EhKind::HopByHop, &node, Removal::Configured)
            .map_err(|e| e.to_string())?;
        let cond = parsed.only_removable_left();
        check(cond == oracle, || {
            format!("header {i}: condition {cond}, oracle {oracle}")
        })?;
        if parsed.free_idx > 0 {
            let mut pkt = RawPacket::new(&bytes, 64);
            let out = delete_ioam(&mut pkt, &mut parsed, &node);
            check(out.fast_path == oracle, || {
                format!("header {i}: deletion took the wrong path")
            })?;
        }
        fast += usize::from(oracle);
        agree += 1;
    }
    Ok(format!(
        "{agree} headers agree ({fast} whole-header removable)"
    ))
}

fn domain_nodes(topo: &Topology) -> [&RegisteredNode; 3] {
    ["Athos", "Porthos", "Aramis"].map(|n| {
        topo.node(n)
            .and_then(|s| s.ioam.as_ref())
            .expect("domain node")
    })
}

fn insert_delete_inverse() -> Outcome {
    let mut rng = rng(5);
    let topo = Topology::default_chain();
    let [athos, _, aramis] = domain_nodes(&topo);
    let mut records = Vec::new();
    for i in 0..1000u64 {
        let (src, dst) = (addr(&mut rng), addr(&mut rng));
        let len = rng.random_range(48..1400);
        let view = udp(&mut rng, src, dst, len);
        let bytes = encode(&view);
        let mut pkt = RawPacket::new(&bytes, rng.random_range(0..128));
        traverse(athos, &mut pkt, &mut records, true, i).map_err(|e| e.to_string())?;
        check(pkt.len() > bytes.len(), || {
            format!("packet {i}: nothing inserted")
        })?;
        traverse(aramis, &mut pkt, &mut records, false, i).map_err(|e| e.to_string())?;
        check(pkt.bytes() == &bytes[..], || {
            format!("packet {i}: bytes not restored")
        })?;
    }
    let mut with_eh = 0;
    for i in 0..1000u64 {
        let mut view = random_view(&mut rng);
        // only non-IOAM material ahead of time
        for eh in &mut view.ext_headers {
            let bodies = eh
                .options
                .iter()
                .map(|o| match o.body {
                    OptionBody::IoamTrace(_) | OptionBody::IoamPot(_) | OptionBody::IoamE2E(_) => {
                        other_body(&mut rng)
                    }
                    ref b => b.clone(),
                })
                .collect();
            *eh = packed_header(eh.kind, eh.next_header, bodies);
        }
        view.normalize();
        let before = parse_packet(&encode(&view)).map_err(|e| e.to_string())?;
        let mut pkt = RawPacket::new(&encode(&view), 64);
        traverse(athos, &mut pkt, &mut records, true, i).map_err(|e| e.to_string())?;
        traverse(aramis, &mut pkt, &mut records, false, i).map_err(|e| e.to_string())?;
        let after = parse_packet(pkt.bytes()).map_err(|e| format!("packet {i}: {e}"))?;
        check(
            significant_options(&after) == significant_options(&before),
            || format!("packet {i}: non-IOAM options changed"),
        )?;
        check(after.payload == before.payload, || {
            format!("packet {i}: payload changed")
        })?;
        let mut h = after.header;
        h.payload_length = before.header.payload_length;
        h.next_header = before.header.next_header;
        check(h == before.header, || {
            format!("packet {i}: IPv6 header changed")
        })?;
        with_eh += usize::from(!before.ext_headers.is_empty());
    }
    Ok(format!(
        "1000 exact, 1000 with prior headers ({with_eh} carried one) preserved"
    ))
}

fn path_telemetry() -> Outcome {
    let topo = Topology::default_chain();
    let flow = FlowSpec {
        count: 10_000,
        ioam_fraction: 1.0,
        ..FlowSpec::new("Alpha", "Beta")
    };
    let report = run_flow(&topo, &flow, 6).map_err(|e| e.to_string())?;
    check(report.records.len() == 10_000, || {
        format!("{} records", report.records.len())
    })?;
    check(report.delivered_packets == 10_000, || {
        format!("{} delivered", report.delivered_packets)
    })?;
    for r in &report.records {
        let path = reconstruct_path(r, &topo);
        check(path == ["Athos", "Porthos", "Aramis"], || {
            format!("seq {}: path {path:?}", r.packet_seq)
        })?;
    }
    check(report.ioam_octets_delivered == 0, || {
        format!("{} IOAM octets reached Beta", report.ioam_octets_delivered)
    })?;
    Ok("10000 records, all Athos>Porthos>Aramis, 0 IOAM octets at Beta".into())
}

const TREND_FRACTIONS: [f64; 8] = [0.0, 0.0001, 0.001, 0.01, 0.1, 0.25, 0.5, 1.0];

fn fraction_trend() -> Outcome {
    let topo = chain(&ChainSpec {
        capacity: OPTION_SWEEP_CAPACITY,
        ..ChainSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let rounds = 25;
    let mut samples = vec![Vec::with_capacity(rounds); TREND_FRACTIONS.len()];
    for round in 0..rounds {
        for (i, &f) in TREND_FRACTIONS.iter().enumerate() {
            let flow = FlowSpec {
                count: 20_000,
                ioam_fraction: f,
                workers: Some(1),
                ..FlowSpec::new("Alpha", "Beta")
            };
            let r = run_flow(&topo, &flow, round as u64).map_err(|e| e.to_string())?;
            samples[i].push(r.packets_per_sec());
        }
    }
    let pps: Vec<f64> = samples.into_iter().map(median).collect();
    let shown: Vec<String> = pps.iter().map(|p| format!("{:.0}", p)).collect();
    for w in 0..pps.len() - 1 {
        check(pps[w + 1] <= pps[w] * 1.03, || {
            format!(
                "rise of {:.1}% between fractions {} and {}: [{}]",
                (pps[w + 1] / pps[w] - 1.0) * 100.0,
                TREND_FRACTIONS[w],
                TREND_FRACTIONS[w + 1],
                shown.join(", ")
            )
        })?;
    }
    let drop = 1.0 - pps[pps.len() - 1] / pps[0];
    check(drop >= 0.01, || {
        format!(
            "full insertion only {:.2}% slower: [{}]",
            drop * 100.0,
            shown.join(", ")
        )
    })?;
    Ok(format!(
        "median pps [{}], full insertion {:.1}% slower",
        shown.join(", "),
        drop * 100.0
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn sweep_chain(options: usize, namespaces: usize, capacity: u8) -> Result<Topology, String> {
    chain(&ChainSpec {
        options_per_namespace: options,
        namespaces,
        capacity,
        trace_type: TRACE_HOP_LIMIT_NODE_ID,
        ..ChainSpec::default()
    })
    .map_err(|e| e.to_string())
}

fn encap_len(topo: &Topology) -> usize {
    let athos = domain_nodes(topo)[0];
    athos
        .encap_buffer("eth1", EhKind::HopByHop)
        .expect("encap")
        .full()
        .len()
}

fn options_knee() -> Outcome {
    let headroom = encap_len(&sweep_chain(6, 1, OPTION_SWEEP_CAPACITY)?);
    let packets = 2000u64;
    let mut per_packet = Vec::new();
    for n in 1..=11 {
        let topo = sweep_chain(n, 1, OPTION_SWEEP_CAPACITY)?;
        let flow = FlowSpec {
            count: packets,
            headroom,
            ..FlowSpec::new("Alpha", "Beta")
        };
        let r = run_flow(&topo, &flow, 8).map_err(|e| e.to_string())?;
        check(r.delivered_packets == packets, || {
            format!("{n} options: {} delivered", r.delivered_packets)
        })?;
        let reallocs: u64 = r.nodes.iter().map(|n| n.reallocs).sum();
        let rate = reallocs as f64 / packets as f64;
        if n <= 6 {
            check(reallocs == 0, || {
                format!("{n} options: {reallocs} reallocations")
            })?;
        } else {
            check(rate >= 1.0, || {
                format!("{n} options: {rate} reallocations per packet")
            })?;
        }
        per_packet.push(format!("{rate}"));
    }
    Ok(format!(
        "headroom {headroom}, reallocs/packet by options [{}]",
        per_packet.join(", ")
    ))
}

fn grown_by_encap(topo: &Topology) -> Result<isize, String> {
    let athos = domain_nodes(topo)[0];
    let mut rng = rng(9);
    let view = udp(
        &mut rng,
        "db00::1".parse().unwrap(),
        "db04::1".parse().unwrap(),
        1200,
    );
    let mut pkt = RawPacket::new(&encode(&view), 512);
    let s = traverse(athos, &mut pkt, &mut Vec::new(), true, 0).map_err(|e| e.to_string())?;
    Ok(s.grown)
}

fn byte_equivalence() -> Outcome {
    let three_ns = grown_by_encap(&sweep_chain(1, 3, NAMESPACE_SWEEP_CAPACITY)?)?;
    let six_opts = grown_by_encap(&sweep_chain(6, 1, OPTION_SWEEP_CAPACITY)?)?;
    check((three_ns - six_opts).abs() <= 8, || {
        format!("3 namespaces insert {three_ns} octets, 6 options insert {six_opts}")
    })?;
    Ok(format!(
        "3 namespaces x 1 option: {three_ns} octets, 1 namespace x 6 options: {six_opts} octets"
    ))
}

fn decap_constancy() -> Outcome {
    let mut moves_by_ns = Vec::new();
    let mut grown_by_ns = Vec::new();
    let mut rng = rng(10);
    for ns in 1..=7 {
        let topo = sweep_chain(1, ns, NAMESPACE_SWEEP_CAPACITY)?;
        let [athos, porthos, aramis] = domain_nodes(&topo);
        let mut moves = Vec::new();
        let mut grown = Vec::new();
        let mut records = Vec::new();
        for i in 0..200 {
            let view = udp(
                &mut rng,
                "db00::1".parse().unwrap(),
                "db04::1".parse().unwrap(),
                1200,
            );
            let mut pkt = RawPacket::new(&encode(&view), 128);
            let e = traverse(athos, &mut pkt, &mut records, true, i).map_err(|e| e.to_string())?;
            traverse(porthos, &mut pkt, &mut records, false, i).map_err(|e| e.to_string())?;
            let d =
                traverse(aramis, &mut pkt, &mut records, false, i).map_err(|e| e.to_string())?;
            check(d.options_removed == ns, || {
                format!("{ns} namespaces: removed {}", d.options_removed)
            })?;
            moves.push(d.decap_moves);
            grown.push(e.inserted_octets);
        }
        moves.dedup();
        grown.dedup();
        check(moves.len() == 1 && grown.len() == 1, || {
            format!("{ns} namespaces: per-packet counts vary")
        })?;
        moves_by_ns.push(moves[0]);
        grown_by_ns.push(grown[0]);
    }
    check(moves_by_ns.windows(2).all(|w| w[0] == w[1]), || {
        format!("decap splice operations differ: {moves_by_ns:?}")
    })?;
    check(grown_by_ns.windows(2).all(|w| w[0] < w[1]), || {
        format!("inserted octets not strictly increasing: {grown_by_ns:?}")
    })?;
    Ok(format!(
        "decap splices {:?} for 1..7 namespaces, inserted octets {grown_by_ns:?}",
        moves_by_ns[0]
    ))
}

fn overflow_semantics() -> Outcome {
    let spec = ChainSpec {
        capacity: 2,
        ..ChainSpec::default()
    };
    // keep the option at Aramis so the wire can be examined
    let mut cfg = chain_config(&spec);
    for n in &mut cfg.nodes {
        if let Some(ioam) = &mut n.ioam {
            for ns in &mut ioam.nss {
                ns.remove_on_transit = false;
            }
        }
    }
    let topo = Topology::from_config(&cfg).map_err(|e| e.to_string())?;
    let nodes = domain_nodes(&topo);
    let mut rng = rng(11);
    let view = udp(
        &mut rng,
        "db00::1".parse().unwrap(),
        "db04::1".parse().unwrap(),
        300,
    );
    let mut pkt = RawPacket::new(&encode(&view), 64);
    let mut records = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        traverse(n, &mut pkt, &mut records, i == 0, 0).map_err(|e| e.to_string())?;
    }
    let parsed = parse_packet(pkt.bytes()).map_err(|e| format!("re-parse failed: {e}"))?;
    let trace = parsed
        .ext_headers
        .iter()
        .flat_map(|eh| &eh.options)
        .find_map(|o| match &o.body {
            OptionBody::IoamTrace(t) => Some(t.clone()),
            _ => None,
        })
        .ok_or("trace option missing")?;
    check(trace.flags & FLAG_OVERFLOW != 0, || {
        "overflow flag not set".into()
    })?;
    let ids: Vec<u32> = trace.node_data.iter().map(|e| e.node_id).collect();
    check(ids == [1, 2] && trace.remaining_len == 0, || {
        format!("entries {ids:?}, remaining {}", trace.remaining_len)
    })?;
    check(parsed.payload == encode(&view)[40..], || {
        "payload corrupted".into()
    })?;

    // the same through the simulator, with removal at Aramis
    let report = run_flow(
        &chain(&spec).map_err(|e| e.to_string())?,
        &FlowSpec {
            count: 100,
            ..FlowSpec::new("Alpha", "Beta")
        },
        11,
    )
    .map_err(|e| e.to_string())?;
    let ok = |r: &TelemetryRecord| r.overflow && r.entries.len() == 2;
    check(
        report.records.len() == 100 && report.records.iter().all(ok),
        || "records lack the overflow flag or hold the wrong entry count".into(),
    )?;
    Ok("flag set, 2 entries [1, 2], packet re-parses; 100 records flagged".into())
}
