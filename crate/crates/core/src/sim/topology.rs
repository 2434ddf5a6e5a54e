use std::collections::{HashMap, VecDeque};
use std::net::Ipv6Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::registry::{
    register_node, EncapEntry, InterfaceConfig, InterfaceRole, NamespaceConfig, NodeConfig,
    OptionTemplate, RegisteredNode,
};
use crate::wire::{EhKind, OptionCodes, TraceVariant};

use super::SimError;

pub const DEFAULT_MTU: usize = 1500;

/// The shipped five-node chain.
pub const DEFAULT_TOPOLOGY: &str = include_str!("../../topologies/default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<Ipv6Addr>,
    /// Devices of a node without IOAM configuration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub devs: Vec<String>,
    /// IOAM configuration; absent for plain forwarding nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ioam: Option<NodeConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub node: String,
    pub dev: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: Endpoint,
    pub b: Endpoint,
    #[serde(default = "default_mtu")]
    pub mtu: usize,
}

fn default_mtu() -> usize {
    DEFAULT_MTU
}

#[derive(Debug)]
pub struct SimNode {
    pub name: String,
    pub address: Ipv6Addr,
    pub devs: Vec<String>,
    pub ioam: Option<RegisteredNode>,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub ends: [(usize, String); 2],
    pub mtu: usize,
}

impl Link {
    pub fn name(&self, topo: &Topology) -> String {
        let [(a, da), (b, db)] = &self.ends;
        format!(
            "{}-{}_{}-{}",
            topo.nodes[*a].name, da, topo.nodes[*b].name, db
        )
    }
}

/// One node on a forwarding path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub node: usize,
    pub in_dev: Option<String>,
    pub out_dev: Option<String>,
    pub out_link: Option<usize>,
}

#[derive(Debug)]
pub struct Topology {
    pub nodes: Vec<SimNode>,
    pub links: Vec<Link>,
    index: HashMap<String, usize>,
}

impl Topology {
    pub fn from_config(cfg: &TopologyConfig) -> Result<Self, SimError> {
        let mut nodes = Vec::with_capacity(cfg.nodes.len());
        let mut index = HashMap::new();
        for (i, spec) in cfg.nodes.iter().enumerate() {
            if index.insert(spec.name.clone(), i).is_some() {
                return Err(SimError::BadTopology(format!(
                    "node {:?} defined twice",
                    spec.name
                )));
            }
            let ioam = spec
                .ioam
                .as_ref()
                .map(register_node)
                .transpose()
                .map_err(|source| SimError::Registry {
                    node: spec.name.clone(),
                    source,
                })?;
            let mut devs = spec.devs.clone();
            if let Some(cfg) = &spec.ioam {
                devs.extend(cfg.ifs.iter().map(|i| i.dev_name.clone()));
            }
            let address = spec
                .address
                .unwrap_or_else(|| Ipv6Addr::new(0xfd00, 0, 0, 0, 0, 0, 0, i as u16 + 1));
            nodes.push(SimNode {
                name: spec.name.clone(),
                address,
                devs,
                ioam,
            });
        }

        let mut used = Vec::new();
        let mut links = Vec::with_capacity(cfg.links.len());
        for l in &cfg.links {
            let mut ends = Vec::with_capacity(2);
            for ep in [&l.a, &l.b] {
                let &n = index.get(&ep.node).ok_or_else(|| {
                    SimError::BadTopology(format!("link references unknown node {:?}", ep.node))
                })?;
                if !nodes[n].devs.contains(&ep.dev) {
                    return Err(SimError::BadTopology(format!(
                        "link references unknown device {}.{}",
                        ep.node, ep.dev
                    )));
                }
                if used.contains(&(n, ep.dev.clone())) {
                    return Err(SimError::BadTopology(format!(
                        "device {}.{} is used by two links",
                        ep.node, ep.dev
                    )));
                }
                used.push((n, ep.dev.clone()));
                ends.push((n, ep.dev.clone()));
            }
            let b = ends.pop().expect("two ends");
            let a = ends.pop().expect("two ends");
            links.push(Link {
                ends: [a, b],
                mtu: l.mtu,
            });
        }
        Ok(Self {
            nodes,
            links,
            index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: TopologyConfig =
            serde_json::from_str(text).map_err(|e| SimError::Json(e.to_string()))?;
        Self::from_config(&cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn default_chain() -> Self {
        Self::from_json(DEFAULT_TOPOLOGY).expect("shipped topology is valid")
    }

    pub fn node_index(&self, name: &str) -> Result<usize, SimError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| SimError::UnknownNode(name.to_owned()))
    }

    pub fn node(&self, name: &str) -> Option<&SimNode> {
        self.index.get(name).map(|&i| &self.nodes[i])
    }

    /// Shortest path by hop count.
    pub fn path(&self, src: &str, dst: &str) -> Result<Vec<Step>, SimError> {
        let s = self.node_index(src)?;
        let d = self.node_index(dst)?;
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == d {
                break;
            }
            for (li, link) in self.links.iter().enumerate() {
                for side in 0..2 {
                    let (from, _) = &link.ends[side];
                    let (to, _) = &link.ends[1 - side];
                    if *from == u && !seen[*to] {
                        seen[*to] = true;
                        prev[*to] = Some((u, li));
                        queue.push_back(*to);
                    }
                }
            }
        }
        if !seen[d] {
            return Err(SimError::NoPath {
                src: src.to_owned(),
                dst: dst.to_owned(),
            });
        }
        let mut hops = vec![d];
        let mut via = Vec::new();
        let mut cur = d;
        while let Some((p, li)) = prev[cur] {
            hops.push(p);
            via.push(li);
            cur = p;
        }
        hops.reverse();
        via.reverse();
        let dev_of = |link: usize, node: usize| {
            let l = &self.links[link];
            if l.ends[0].0 == node {
                l.ends[0].1.clone()
            } else {
                l.ends[1].1.clone()
            }
        };
        Ok(hops
            .iter()
            .enumerate()
            .map(|(i, &node)| Step {
                node,
                in_dev: (i > 0).then(|| dev_of(via[i - 1], node)),
                out_dev: via.get(i).map(|&l| dev_of(l, node)),
                out_link: via.get(i).copied(),
            })
            .collect())
    }

    pub fn name_of_node_id(&self, node_id: u32) -> Option<&str> {
        self.nodes
            .iter()
            .find(|n| n.ioam.as_ref().is_some_and(|r| r.node_id() == node_id))
            .map(|n| n.name.as_str())
    }
}

/// Parameters for the Alpha, Athos, Porthos, Aramis, Beta chain used by the
/// benchmarks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    /// Register IOAM configuration on the three domain nodes at all.
    pub registered: bool,
    /// Give Athos encap entries.
    pub encap: bool,
    pub namespaces: usize,
    pub options_per_namespace: usize,
    pub trace_type: u16,
    pub capacity: u8,
    pub mtu: usize,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            registered: true,
            encap: true,
            namespaces: 1,
            options_per_namespace: 1,
            trace_type: crate::wire::TRACE_HOP_LIMIT_NODE_ID,
            capacity: 3,
            mtu: DEFAULT_MTU,
        }
    }
}

pub const FIRST_NAMESPACE: u16 = 123;

pub fn chain_config(spec: &ChainSpec) -> TopologyConfig {
    let nss: Vec<NamespaceConfig> = (0..spec.namespaces)
        .map(|k| NamespaceConfig {
            namespace_id: FIRST_NAMESPACE + k as u16,
            remove_on_transit: false,
        })
        .collect();
    let role = |ingress: bool, egress: bool| InterfaceRole { ingress, egress };
    let domain = |id: u32, roles: [InterfaceRole; 2], remove: bool, encap: bool| {
        let ifs = roles
            .iter()
            .enumerate()
            .map(|(k, &role)| InterfaceConfig {
                dev_name: format!("eth{k}"),
                ioam_if_id: (id * 10 + k as u32 + 1) as u16,
                role,
            })
            .collect();
        let nss: Vec<NamespaceConfig> = nss
            .iter()
            .map(|n| NamespaceConfig {
                remove_on_transit: remove,
                ..*n
            })
            .collect();
        let encaps = if encap {
            nss.iter()
                .flat_map(|n: &NamespaceConfig| {
                    (0..spec.options_per_namespace).map(move |_| EncapEntry {
                        namespace_id: n.namespace_id,
                        egress_dev: "eth1".into(),
                        eh_kind: EhKind::HopByHop,
                        option: OptionTemplate::Trace {
                            variant: TraceVariant::PreAllocated,
                            trace_type: spec.trace_type,
                            capacity: spec.capacity,
                        },
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        NodeConfig {
            ioam_node_id: id,
            ifs,
            nss,
            encaps,
            option_codes: OptionCodes::default(),
        }
    };
    let domain_node = |name: &str, n: u16, cfg: NodeConfig| NodeSpec {
        name: name.into(),
        address: Some(Ipv6Addr::new(0xdb00 + n, 0, 0, 0, 0, 0, 0, 1)),
        devs: if spec.registered {
            Vec::new()
        } else {
            vec!["eth0".into(), "eth1".into()]
        },
        ioam: spec.registered.then_some(cfg),
    };
    let plain = |name: &str, n: u16| NodeSpec {
        name: name.into(),
        address: Some(Ipv6Addr::new(0xdb00 + n, 0, 0, 0, 0, 0, 0, 1)),
        devs: vec!["eth0".into()],
        ioam: None,
    };
    let link = |a: &str, da: &str, b: &str, db: &str| LinkSpec {
        a: Endpoint {
            node: a.into(),
            dev: da.into(),
        },
        b: Endpoint {
            node: b.into(),
            dev: db.into(),
        },
        mtu: spec.mtu,
    };
    TopologyConfig {
        nodes: vec![
            plain("Alpha", 0),
            domain_node(
                "Athos",
                1,
                domain(
                    1,
                    [role(false, false), role(false, true)],
                    false,
                    spec.encap,
                ),
            ),
            domain_node(
                "Porthos",
                2,
                domain(2, [role(true, false), role(false, true)], false, false),
            ),
            domain_node(
                "Aramis",
                3,
                domain(3, [role(true, false), role(false, false)], true, false),
            ),
            plain("Beta", 4),
        ],
        links: vec![
            link("Alpha", "eth0", "Athos", "eth0"),
            link("Athos", "eth1", "Porthos", "eth0"),
            link("Porthos", "eth1", "Aramis", "eth0"),
            link("Aramis", "eth1", "Beta", "eth0"),
        ],
    }
}

pub fn chain(spec: &ChainSpec) -> Result<Topology, SimError> {
    Topology::from_config(&chain_config(spec))
}
