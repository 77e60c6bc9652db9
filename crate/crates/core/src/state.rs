//! In-memory mirror of cluster nodes and pods.
//!
//! Raw API objects are normalized once on receipt into [`CachedNode`] and
//! [`CachedPod`], so scoring reads plain numbers and labels. Recently chosen
//! placements live in a short-TTL side cache ([`RecentPlacements`]) that covers
//! the gap before the API reports a bound pod.

use std::collections::BTreeMap;
use std::ops::{Add, Sub};
use std::path::Path;
use std::time::Duration;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::error::MalformedQuantity;

pub const REGION_LABEL: &str = "topology.kubernetes.io/region";
pub const ZONE_LABEL: &str = "topology.kubernetes.io/zone";
pub const RACK_LABEL: &str = "topology.kubernetes.io/rack";
pub const HINT_ANNOTATION: &str = "allocation_hint";
pub const DEFAULT_DEPLOYMENT_LABEL: &str = "app";
pub const DEFAULT_PLACEMENT_TTL: Duration = Duration::from_secs(10);

/// Point in time as an offset from an arbitrary epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp(pub Duration);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(Duration::ZERO);

    pub fn from_millis(ms: u64) -> Self {
        Timestamp(Duration::from_millis(ms))
    }

    pub fn as_millis(self) -> u128 {
        self.0.as_millis()
    }

    /// Elapsed time since `earlier`, zero if `earlier` is in the future.
    pub fn since(self, earlier: Timestamp) -> Duration {
        self.0.saturating_sub(earlier.0)
    }
}

impl Add<Duration> for Timestamp {
    type Output = Timestamp;

    fn add(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0 + rhs)
    }
}

impl Sub<Duration> for Timestamp {
    type Output = Timestamp;

    fn sub(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0.saturating_sub(rhs))
    }
}

/// Time source, swappable so simulations can run on virtual time.
pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

/// Wall clock, measured from the Unix epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap_or_default(),
        )
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Timestamp>,
}

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        ManualClock { now: Mutex::new(start) }
    }

    pub fn set(&self, t: Timestamp) {
        *self.now.lock() = t;
    }

    pub fn advance(&self, d: Duration) {
        let mut now = self.now.lock();
        *now = *now + d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        *self.now.lock()
    }
}

/// Parses a resource quantity such as `100m`, `4`, `10Gi` or `2K`.
pub fn parse_quantity(text: &str) -> Result<f64, MalformedQuantity> {
    let err = || MalformedQuantity(text.to_string());
    let trimmed = text.trim();
    let split = trimmed
        .find(|c: char| c.is_ascii_alphabetic())
        .unwrap_or(trimmed.len());
    let (number, suffix) = trimmed.split_at(split);
    if number.is_empty()
        || !number.chars().all(|c| c.is_ascii_digit() || c == '.')
        || number.chars().filter(|&c| c == '.').count() > 1
        || number == "."
    {
        return Err(err());
    }
    let value: f64 = number.parse().map_err(|_| err())?;
    let scaled = match suffix {
        "" => value,
        "m" => value / 1000.0,
        "k" | "K" => value * 1e3,
        "M" => value * 1e6,
        "G" => value * 1e9,
        "T" => value * 1e12,
        "Ki" => value * 1024.0,
        "Mi" => value * 1_048_576.0,
        "Gi" => value * 1_073_741_824.0,
        "Ti" => value * 1_099_511_627_776.0,
        _ => return Err(err()),
    };
    Ok(scaled)
}

// Raw object shapes, trimmed copies of the Kubernetes API JSON.

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectMeta {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creation_timestamp: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Taint {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub effect: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taints: Vec<Taint>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStatus {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capacity: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub metadata: ObjectMeta,
    #[serde(default)]
    pub spec: NodeSpec,
    #[serde(default)]
    pub status: NodeStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PodSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_name: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawPod {
    #[serde(default)]
    pub metadata: ObjectMeta,
    #[serde(default)]
    pub spec: PodSpec,
}

/// Snapshot file: `{"nodes": [...], "pods": [...]}` in API object shape.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterSnapshot {
    #[serde(default)]
    pub nodes: Vec<RawNode>,
    #[serde(default)]
    pub pods: Vec<RawPod>,
}

impl ClusterSnapshot {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CachedNode {
    pub name: String,
    pub region: Option<String>,
    pub zone: Option<String>,
    pub rack: Option<String>,
    pub cpu_count: f64,
    pub memory_bytes: u64,
    pub gpu_count: f64,
    pub tpu_count: f64,
    pub has_ssd: bool,
    pub has_public_ip: bool,
    pub network_gbps: f64,
    pub network_type: Option<String>,
    pub ephemeral_storage_bytes: u64,
    pub unschedulable_taint: bool,
    pub labels: BTreeMap<String, String>,
}

impl CachedNode {
    /// A bare node with no resources or labels.
    pub fn named(name: impl Into<String>) -> Self {
        CachedNode {
            name: name.into(),
            region: None,
            zone: None,
            rack: None,
            cpu_count: 0.0,
            memory_bytes: 0,
            gpu_count: 0.0,
            tpu_count: 0.0,
            has_ssd: false,
            has_public_ip: false,
            network_gbps: 0.0,
            network_type: None,
            ephemeral_storage_bytes: 0,
            unschedulable_taint: false,
            labels: BTreeMap::new(),
        }
    }

    pub fn in_topology(mut self, region: &str, zone: &str, rack: &str) -> Self {
        self.region = Some(region.to_string());
        self.zone = Some(zone.to_string());
        self.rack = Some(rack.to_string());
        self
    }

    pub fn domain(&self, level: TopologyLevel) -> Option<&str> {
        match level {
            TopologyLevel::Node => Some(&self.name),
            TopologyLevel::Rack => self.rack.as_deref(),
            TopologyLevel::Zone => self.zone.as_deref(),
            TopologyLevel::Region => self.region.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyLevel {
    Node,
    Rack,
    Zone,
    Region,
}

fn label_flag(labels: &BTreeMap<String, String>, key: &str, value: &str) -> bool {
    labels.get(key).is_some_and(|v| v.eq_ignore_ascii_case(value))
}

fn label_number(labels: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, MalformedQuantity> {
    labels.get(key).map(|v| parse_quantity(v)).transpose()
}

fn capacity_number(status: &NodeStatus, key: &str) -> Result<f64, MalformedQuantity> {
    status
        .capacity
        .get(key)
        .map(|v| parse_quantity(v))
        .transpose()
        .map(|v| v.unwrap_or(0.0))
}

/// Normalizes a raw node.
///
/// Attribute labels: `hardware=gpu|tpu` (count from `gpu-count`/`tpu-count`,
/// default 1; extended resources `nvidia.com/gpu`/`google.com/tpu` also count),
/// `disk=ssd`, `network=public` or `has-public-ip=true`, `network-gbps`,
/// `network-type`.
pub fn node_from_raw(raw: &RawNode) -> Result<CachedNode, MalformedQuantity> {
    let labels = &raw.metadata.labels;
    let hardware_count = |kind: &str, count_label: &str, resource: &str| -> Result<f64, MalformedQuantity> {
        let from_label = if label_flag(labels, "hardware", kind) {
            label_number(labels, count_label)?.unwrap_or(1.0)
        } else {
            0.0
        };
        Ok(from_label.max(capacity_number(&raw.status, resource)?))
    };

    Ok(CachedNode {
        name: raw.metadata.name.clone(),
        region: labels.get(REGION_LABEL).cloned(),
        zone: labels.get(ZONE_LABEL).cloned(),
        rack: labels.get(RACK_LABEL).cloned(),
        cpu_count: capacity_number(&raw.status, "cpu")?,
        memory_bytes: capacity_number(&raw.status, "memory")?.round() as u64,
        gpu_count: hardware_count("gpu", "gpu-count", "nvidia.com/gpu")?,
        tpu_count: hardware_count("tpu", "tpu-count", "google.com/tpu")?,
        has_ssd: label_flag(labels, "disk", "ssd"),
        has_public_ip: label_flag(labels, "network", "public") || label_flag(labels, "has-public-ip", "true"),
        network_gbps: label_number(labels, "network-gbps")?.unwrap_or(0.0),
        network_type: labels.get("network-type").cloned(),
        ephemeral_storage_bytes: capacity_number(&raw.status, "ephemeral-storage")?.round() as u64,
        unschedulable_taint: raw.spec.taints.iter().any(|t| t.effect == "NoSchedule"),
        labels: labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PodKey {
    pub namespace: String,
    pub name: String,
}

impl PodKey {
    pub fn new(namespace: impl Into<String>, name: impl Into<String>) -> Self {
        PodKey {
            namespace: namespace.into(),
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CachedPod {
    pub name: String,
    pub namespace: String,
    pub node_name: Option<String>,
    pub deployment: Option<String>,
    pub allocation_hint: Option<String>,
    pub labels: BTreeMap<String, String>,
    pub created_at: Timestamp,
}

impl CachedPod {
    pub fn new(namespace: &str, name: &str, deployment: Option<&str>) -> Self {
        CachedPod {
            name: name.to_string(),
            namespace: namespace.to_string(),
            node_name: None,
            deployment: deployment.map(str::to_string),
            allocation_hint: None,
            labels: BTreeMap::new(),
            created_at: Timestamp::ZERO,
        }
    }

    pub fn on_node(mut self, node: &str) -> Self {
        self.node_name = Some(node.to_string());
        self
    }

    pub fn key(&self) -> PodKey {
        PodKey::new(&self.namespace, &self.name)
    }
}

pub fn pod_from_raw(raw: &RawPod, deployment_label: &str) -> CachedPod {
    let meta = &raw.metadata;
    let created_at = meta
        .creation_timestamp
        .as_deref()
        .and_then(|t| chrono::DateTime::parse_from_rfc3339(t).ok())
        .and_then(|t| u64::try_from(t.timestamp_millis()).ok())
        .map(Timestamp::from_millis)
        .unwrap_or_default();
    CachedPod {
        name: meta.name.clone(),
        namespace: meta.namespace.clone().unwrap_or_else(|| "default".to_string()),
        node_name: raw.spec.node_name.clone().filter(|n| !n.is_empty()),
        deployment: meta.labels.get(deployment_label).cloned(),
        allocation_hint: meta.annotations.get(HINT_ANNOTATION).cloned(),
        labels: meta.labels.clone(),
        created_at,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Added,
    Modified,
    Deleted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CachedObject {
    Node(CachedNode),
    Pod(CachedPod),
}

/// Consistent copy of the cache contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterView {
    pub nodes: BTreeMap<String, CachedNode>,
    pub pods: BTreeMap<PodKey, CachedPod>,
}

impl ClusterView {
    pub fn from_objects(nodes: Vec<CachedNode>, pods: Vec<CachedPod>) -> Self {
        ClusterView {
            nodes: nodes.into_iter().map(|n| (n.name.clone(), n)).collect(),
            pods: pods.into_iter().map(|p| (p.key(), p)).collect(),
        }
    }

    fn apply(&mut self, kind: EventKind, object: CachedObject) {
        match (kind, object) {
            (EventKind::Deleted, CachedObject::Node(n)) => {
                self.nodes.remove(&n.name);
            }
            (EventKind::Deleted, CachedObject::Pod(p)) => {
                self.pods.remove(&p.key());
            }
            (_, CachedObject::Node(n)) => {
                self.nodes.insert(n.name.clone(), n);
            }
            (_, CachedObject::Pod(p)) => {
                self.pods.insert(p.key(), p);
            }
        }
    }
}

/// Thread-safe cluster mirror. One writer at a time, readers see whole states.
#[derive(Debug, Default)]
pub struct StateCache {
    inner: RwLock<ClusterView>,
}

impl StateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply_event(&self, kind: EventKind, object: CachedObject) {
        self.inner.write().apply(kind, object);
    }

    /// Replaces the whole contents with the given snapshot.
    pub fn full_resync(&self, nodes: Vec<CachedNode>, pods: Vec<CachedPod>) {
        let fresh = ClusterView::from_objects(nodes, pods);
        *self.inner.write() = fresh;
    }

    pub fn load_snapshot(&self, snapshot: &ClusterSnapshot, deployment_label: &str) -> Result<(), MalformedQuantity> {
        let nodes = snapshot.nodes.iter().map(node_from_raw).collect::<Result<Vec<_>, _>>()?;
        let pods = snapshot.pods.iter().map(|p| pod_from_raw(p, deployment_label)).collect();
        self.full_resync(nodes, pods);
        Ok(())
    }

    pub fn view(&self) -> ClusterView {
        self.inner.read().clone()
    }

    pub fn node(&self, name: &str) -> Option<CachedNode> {
        self.inner.read().nodes.get(name).cloned()
    }

    pub fn node_count(&self) -> usize {
        self.inner.read().nodes.len()
    }

    pub fn pod_count(&self) -> usize {
        self.inner.read().pods.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementEntry {
    pub pod: CachedPod,
    pub node_name: String,
    pub placed_at: Timestamp,
}

impl PlacementEntry {
    pub fn deployment(&self) -> Option<&str> {
        self.pod.deployment.as_deref()
    }
}

/// Placements chosen locally but possibly not yet visible through the API.
///
/// An entry is live while `now - placed_at < ttl`; expired entries are
/// dropped on the next query.
#[derive(Debug)]
pub struct RecentPlacements {
    ttl: Duration,
    entries: Mutex<BTreeMap<PodKey, PlacementEntry>>,
}

impl Default for RecentPlacements {
    fn default() -> Self {
        Self::new(DEFAULT_PLACEMENT_TTL)
    }
}

impl RecentPlacements {
    pub fn new(ttl: Duration) -> Self {
        RecentPlacements {
            ttl,
            entries: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    /// Records a decision; a later decision for the same pod replaces it.
    pub fn record_placement(&self, pod: &CachedPod, node: &str, now: Timestamp) {
        let mut pod = pod.clone();
        pod.node_name = Some(node.to_string());
        let entry = PlacementEntry {
            pod,
            node_name: node.to_string(),
            placed_at: now,
        };
        self.entries.lock().insert(entry.pod.key(), entry);
    }

    pub fn live_entries(&self, now: Timestamp) -> Vec<PlacementEntry> {
        let mut entries = self.entries.lock();
        let ttl = self.ttl;
        entries.retain(|_, e| now.since(e.placed_at) < ttl);
        entries.values().cloned().collect()
    }

    pub fn clear(&self) {
        self.entries.lock().clear();
    }
}

/// API pods plus unexpired local placements, deduplicated by pod key with the
/// API copy taking precedence.
pub fn effective_pods(view: &ClusterView, recent: Option<&RecentPlacements>, now: Timestamp) -> Vec<CachedPod> {
    let mut merged: BTreeMap<PodKey, CachedPod> = view.pods.clone();
    if let Some(recent) = recent {
        for entry in recent.live_entries(now) {
            merged.entry(entry.pod.key()).or_insert(entry.pod);
        }
    }
    merged.into_values().collect()
}
