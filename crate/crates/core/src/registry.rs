//! Node registration: validation plus pre-allocation of everything the packet
//! path touches (namespace table, paddings, per-interface encap buffers).

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wire::{
    encode_padding, head_padding, EhKind, IoamE2EOption, IoamPotOption, IoamTraceOption,
    NodeDataEntry, OptionCodes, TraceVariant, WireError, MAX_EH_LEN,
};

pub const MAX_NS: usize = 32;
pub const MAX_IF: usize = 16;
/// Namespace table buckets: four per allowed namespace.
pub const NS_BUCKETS: usize = 4 * MAX_NS;
/// Smallest option block the existing-header insertion path accepts.
pub const MIN_IOAM_BLOCK: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("{0} namespaces configured, at most {MAX_NS} allowed")]
    TooManyNamespaces(usize),
    #[error("{0} interfaces configured, at most {MAX_IF} allowed")]
    TooManyInterfaces(usize),
    #[error("{0} encap entries configured, at most {MAX_NS} allowed")]
    TooManyEncaps(usize),
    #[error("device {0:?} configured twice")]
    DuplicateDevName(String),
    #[error("IOAM interface id {0} configured twice")]
    DuplicateInterfaceId(u16),
    #[error("namespace {0} configured twice")]
    DuplicateNamespace(u16),
    #[error("encap targets device {0:?} which has no egress role")]
    EncapEgressNotEgressRole(String),
    #[error("encap targets unknown device {0:?}")]
    EncapUnknownInterface(String),
    #[error("{option} option cannot be carried in a {kind:?} header")]
    EncapWrongEhKind { option: &'static str, kind: EhKind },
    #[error("encap template for namespace {namespace_id} is invalid: {reason}")]
    InvalidTemplate { namespace_id: u16, reason: String },
    #[error("encap header for {dev:?} would be {len} octets")]
    EncapTooLarge { dev: String, len: usize },
    #[error("encap option block for {dev:?} is {len} octets, minimum {MIN_IOAM_BLOCK}")]
    EncapBlockTooSmall { dev: String, len: usize },
    #[error("no encap entries for device {dev:?} in a {kind:?} header")]
    NoEncapForInterface { dev: String, kind: EhKind },
    #[error("malformed node configuration: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ingress,
    Egress,
}

/// Subset of {ingress, egress}. The empty set marks a domain boundary that
/// refuses incoming IOAM data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Role>", into = "Vec<Role>")]
pub struct InterfaceRole {
    pub ingress: bool,
    pub egress: bool,
}

impl InterfaceRole {
    pub const NONE: Self = Self {
        ingress: false,
        egress: false,
    };
    pub const INGRESS: Self = Self {
        ingress: true,
        egress: false,
    };
    pub const EGRESS: Self = Self {
        ingress: false,
        egress: true,
    };
    pub const BOTH: Self = Self {
        ingress: true,
        egress: true,
    };
}

impl From<Vec<Role>> for InterfaceRole {
    fn from(roles: Vec<Role>) -> Self {
        Self {
            ingress: roles.contains(&Role::Ingress),
            egress: roles.contains(&Role::Egress),
        }
    }
}

impl From<InterfaceRole> for Vec<Role> {
    fn from(role: InterfaceRole) -> Self {
        let mut out = Vec::new();
        if role.ingress {
            out.push(Role::Ingress);
        }
        if role.egress {
            out.push(Role::Egress);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceConfig {
    pub dev_name: String,
    pub ioam_if_id: u16,
    #[serde(default)]
    pub role: InterfaceRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamespaceConfig {
    pub namespace_id: u16,
    #[serde(default)]
    pub remove_on_transit: bool,
}

/// What an encap entry inserts. The namespace id comes from the entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OptionTemplate {
    Trace {
        variant: TraceVariant,
        trace_type: u16,
        /// Node-data slots (pre-allocated) or maximum hops (incremental).
        capacity: u8,
    },
    E2e {
        e2e_type: u16,
    },
    Pot {
        /// Opaque body, hex encoded.
        #[serde(default)]
        body: String,
    },
}

impl OptionTemplate {
    fn name(&self) -> &'static str {
        match self {
            Self::Trace { .. } => "trace",
            Self::E2e { .. } => "e2e",
            Self::Pot { .. } => "pot",
        }
    }

    fn allowed_in(&self, kind: EhKind) -> bool {
        match self {
            Self::Trace { .. } | Self::Pot { .. } => kind == EhKind::HopByHop,
            Self::E2e { .. } => kind == EhKind::Destination,
        }
    }

    /// Encodes the option as it is inserted, before the node writes its own
    /// entry. Traces carry one blank slot for that entry.
    fn encode(&self, namespace_id: u16, codes: &OptionCodes) -> Result<Vec<u8>, RegistryError> {
        let invalid = |reason: String| RegistryError::InvalidTemplate {
            namespace_id,
            reason,
        };
        let wire = |e: WireError| invalid(e.to_string());
        match self {
            Self::Trace {
                variant,
                trace_type,
                capacity,
            } => {
                if *capacity == 0 {
                    return Err(invalid("trace capacity must be at least 1".into()));
                }
                if *trace_type == 0 {
                    return Err(invalid("trace type selects no data".into()));
                }
                let mut opt = IoamTraceOption::new(*variant, namespace_id, *trace_type, *capacity)
                    .map_err(wire)?;
                if *variant == TraceVariant::Incremental {
                    opt.node_data.push(NodeDataEntry::default());
                }
                opt.encode(codes).map_err(wire)
            }
            Self::E2e { e2e_type } => IoamE2EOption {
                namespace_id,
                e2e_type: *e2e_type,
                seq_num: 0,
            }
            .encode(codes)
            .map_err(wire),
            Self::Pot { body } => IoamPotOption {
                namespace_id,
                opaque_body: hex::decode(body).map_err(|e| invalid(e.to_string()))?,
            }
            .encode(codes)
            .map_err(wire),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncapEntry {
    pub namespace_id: u16,
    pub egress_dev: String,
    pub eh_kind: EhKind,
    pub option: OptionTemplate,
}

/// Registration request for one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub ioam_node_id: u32,
    #[serde(default)]
    pub ifs: Vec<InterfaceConfig>,
    #[serde(default)]
    pub nss: Vec<NamespaceConfig>,
    #[serde(default)]
    pub encaps: Vec<EncapEntry>,
    #[serde(default)]
    pub option_codes: OptionCodes,
}

impl NodeConfig {
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        serde_json::from_str(text).map_err(|e| RegistryError::Json(e.to_string()))
    }
}

/// Fixed-size chained hash table keyed by namespace id.
#[derive(Debug, Clone)]
pub struct NamespaceTable {
    buckets: Vec<Vec<NamespaceConfig>>,
}

impl NamespaceTable {
    fn new(nss: &[NamespaceConfig]) -> Self {
        let mut buckets = vec![Vec::new(); NS_BUCKETS];
        for ns in nss {
            buckets[Self::bucket_of(ns.namespace_id)].push(*ns);
        }
        Self { buckets }
    }

    pub fn bucket_of(namespace_id: u16) -> usize {
        usize::from(namespace_id) % NS_BUCKETS
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn get(&self, namespace_id: u16) -> Option<&NamespaceConfig> {
        self.buckets[Self::bucket_of(namespace_id)]
            .iter()
            .find(|ns| ns.namespace_id == namespace_id)
    }

    pub fn bucket_len(&self, bucket: usize) -> usize {
        self.buckets[bucket].len()
    }
}

/// Pre-built extension header for one (egress interface, header kind).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncapBuffer {
    kind: EhKind,
    full: Vec<u8>,
    block: Vec<u8>,
    traces: Vec<usize>,
    e2es: Vec<usize>,
}

/// Offset of the first option in a freshly inserted header.
pub const ENCAP_OPTIONS_OFFSET: usize = 4;

impl EncapBuffer {
    fn build(kind: EhKind, options: &[Vec<u8>], codes: &OptionCodes) -> Self {
        let mut block = Vec::new();
        let mut traces = Vec::new();
        let mut e2es = Vec::new();
        for opt in options {
            let pad = head_padding(ENCAP_OPTIONS_OFFSET + block.len(), 4, 0);
            if pad > 0 {
                block.extend(encode_padding(pad).expect("pad < 4"));
            }
            if codes.trace_variant(opt[0]).is_some() {
                traces.push(block.len());
            } else if opt[0] == codes.e2e {
                e2es.push(block.len());
            }
            block.extend_from_slice(opt);
        }
        let options_len = block.len();

        let mut full = vec![0u8, 0, 0x01, 0x00];
        full.extend_from_slice(&block);
        let tail = head_padding(full.len(), 8, 0);
        if tail > 0 {
            full.extend(encode_padding(tail).expect("tail < 8"));
        }
        full[1] = (full.len() / 8 - 1) as u8;

        let tail4 = head_padding(options_len, 4, 0);
        if tail4 > 0 {
            block.extend(encode_padding(tail4).expect("pad < 4"));
        }
        Self {
            kind,
            full,
            block,
            traces,
            e2es,
        }
    }

    pub fn kind(&self) -> EhKind {
        self.kind
    }

    /// Complete header for packets that have none of this kind. Octet 0
    /// (next header) is a placeholder patched at insertion.
    pub fn full(&self) -> &[u8] {
        &self.full
    }

    /// Options with their 4n head paddings, padded to a multiple of 4; what
    /// gets appended into an existing header.
    pub fn block(&self) -> &[u8] {
        &self.block
    }

    /// Offsets of trace options within [`Self::block`] (add
    /// [`ENCAP_OPTIONS_OFFSET`] for [`Self::full`]).
    pub fn trace_offsets(&self) -> &[usize] {
        &self.traces
    }

    pub fn e2e_offsets(&self) -> &[usize] {
        &self.e2es
    }
}

#[derive(Debug)]
struct RegisteredInterface {
    cfg: InterfaceConfig,
    encap: [Option<EncapBuffer>; 2],
}

/// A validated, fully pre-allocated node. Read-only apart from its counters.
#[derive(Debug)]
pub struct RegisteredNode {
    node_id: u32,
    codes: OptionCodes,
    ifs: Vec<RegisteredInterface>,
    ns_table: NamespaceTable,
    paddings: [Vec<u8>; 7],
    realloc_counter: AtomicU64,
    e2e_seq: AtomicU64,
}

pub fn register_node(cfg: &NodeConfig) -> Result<RegisteredNode, RegistryError> {
    if cfg.ifs.len() > MAX_IF {
        return Err(RegistryError::TooManyInterfaces(cfg.ifs.len()));
    }
    if cfg.nss.len() > MAX_NS {
        return Err(RegistryError::TooManyNamespaces(cfg.nss.len()));
    }
    if cfg.encaps.len() > MAX_NS {
        return Err(RegistryError::TooManyEncaps(cfg.encaps.len()));
    }
    for (i, iface) in cfg.ifs.iter().enumerate() {
        for other in &cfg.ifs[..i] {
            if other.dev_name == iface.dev_name {
                return Err(RegistryError::DuplicateDevName(iface.dev_name.clone()));
            }
            if other.ioam_if_id == iface.ioam_if_id {
                return Err(RegistryError::DuplicateInterfaceId(iface.ioam_if_id));
            }
        }
    }
    for (i, ns) in cfg.nss.iter().enumerate() {
        if cfg.nss[..i]
            .iter()
            .any(|o| o.namespace_id == ns.namespace_id)
        {
            return Err(RegistryError::DuplicateNamespace(ns.namespace_id));
        }
    }

    let mut encoded: Vec<Vec<Vec<u8>>> = vec![Vec::new(); cfg.ifs.len() * 2];
    for entry in &cfg.encaps {
        let idx = cfg
            .ifs
            .iter()
            .position(|i| i.dev_name == entry.egress_dev)
            .ok_or_else(|| RegistryError::EncapUnknownInterface(entry.egress_dev.clone()))?;
        if !cfg.ifs[idx].role.egress {
            return Err(RegistryError::EncapEgressNotEgressRole(
                entry.egress_dev.clone(),
            ));
        }
        if !entry.option.allowed_in(entry.eh_kind) {
            return Err(RegistryError::EncapWrongEhKind {
                option: entry.option.name(),
                kind: entry.eh_kind,
            });
        }
        let bytes = entry.option.encode(entry.namespace_id, &cfg.option_codes)?;
        encoded[idx * 2 + entry.eh_kind.index()].push(bytes);
    }

    let mut ifs = Vec::with_capacity(cfg.ifs.len());
    for (idx, iface) in cfg.ifs.iter().enumerate() {
        let mut encap = [None, None];
        for kind in [EhKind::HopByHop, EhKind::Destination] {
            let opts = &encoded[idx * 2 + kind.index()];
            if opts.is_empty() {
                continue;
            }
            let buf = EncapBuffer::build(kind, opts, &cfg.option_codes);
            if buf.full.len() > MAX_EH_LEN {
                return Err(RegistryError::EncapTooLarge {
                    dev: iface.dev_name.clone(),
                    len: buf.full.len(),
                });
            }
            if buf.block.len() < MIN_IOAM_BLOCK {
                return Err(RegistryError::EncapBlockTooSmall {
                    dev: iface.dev_name.clone(),
                    len: buf.block.len(),
                });
            }
            encap[kind.index()] = Some(buf);
        }
        ifs.push(RegisteredInterface {
            cfg: iface.clone(),
            encap,
        });
    }

    let paddings = std::array::from_fn(|i| encode_padding(i + 1).expect("1..=7"));
    Ok(RegisteredNode {
        node_id: cfg.ioam_node_id,
        codes: cfg.option_codes,
        ifs,
        ns_table: NamespaceTable::new(&cfg.nss),
        paddings,
        realloc_counter: AtomicU64::new(0),
        e2e_seq: AtomicU64::new(0),
    })
}

impl RegisteredNode {
    pub fn node_id(&self) -> u32 {
        self.node_id
    }

    pub fn codes(&self) -> &OptionCodes {
        &self.codes
    }

    pub fn interface(&self, dev: &str) -> Option<&InterfaceConfig> {
        self.ifs.iter().map(|i| &i.cfg).find(|c| c.dev_name == dev)
    }

    pub fn interfaces(&self) -> impl Iterator<Item = &InterfaceConfig> {
        self.ifs.iter().map(|i| &i.cfg)
    }

    pub fn lookup_namespace(&self, namespace_id: u16) -> Option<&NamespaceConfig> {
        self.ns_table.get(namespace_id)
    }

    pub fn namespace_table(&self) -> &NamespaceTable {
        &self.ns_table
    }

    /// Pre-encoded padding of `len` octets (1..=7).
    pub fn padding(&self, len: usize) -> &[u8] {
        &self.paddings[len - 1]
    }

    /// Both header-kind slots of an interface; `None` when `dev` is unknown.
    pub fn encap_slots(&self, dev: &str) -> Option<&[Option<EncapBuffer>; 2]> {
        self.ifs
            .iter()
            .find(|i| i.cfg.dev_name == dev)
            .map(|i| &i.encap)
    }

    pub fn encap_buffer(&self, dev: &str, kind: EhKind) -> Result<&EncapBuffer, RegistryError> {
        self.encap_slots(dev)
            .and_then(|slots| slots[kind.index()].as_ref())
            .ok_or_else(|| RegistryError::NoEncapForInterface {
                dev: dev.to_owned(),
                kind,
            })
    }

    /// The complete pre-built header for (dev, kind).
    pub fn build_encap_buffer(&self, dev: &str, kind: EhKind) -> Result<Vec<u8>, RegistryError> {
        self.encap_buffer(dev, kind).map(|b| b.full.clone())
    }

    pub fn has_encap(&self) -> bool {
        self.ifs.iter().any(|i| i.encap.iter().any(Option::is_some))
    }

    pub fn realloc_count(&self) -> u64 {
        self.realloc_counter.load(Ordering::Relaxed)
    }

    pub(crate) fn add_reallocs(&self, n: u64) {
        if n > 0 {
            self.realloc_counter.fetch_add(n, Ordering::Relaxed);
        }
    }

    pub(crate) fn next_e2e_seq(&self) -> u64 {
        self.e2e_seq.fetch_add(1, Ordering::Relaxed)
    }
}
