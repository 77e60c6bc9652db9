//! Brute-force reference scorer over plain structs. Shares nothing with the
//! crate's scoring code; the random-instance generator converts each instance
//! into crate types so both sides see the same input.

use hintsched_core::intent::{DetectedIntent, IntentKind, MetadataValue, ParsedHint, Strength};
use hintsched_core::state::{CachedNode, CachedPod};
use rand::seq::IndexedRandom;
use rand::Rng;

/// Registry order, written out independently.
pub const ORDER: [&str; 25] = [
    "prefer_colocate_same_deployment",
    "prefer_nearby_nodes_same_deployment",
    "prefer_regions",
    "avoid_regions",
    "spread_regions",
    "prefer_zones",
    "avoid_zones",
    "spread_zones",
    "prefer_racks",
    "avoid_racks",
    "spread_racks",
    "prefer_nodes",
    "avoid_nodes",
    "spread_nodes",
    "prefer_deployments",
    "avoid_deployments",
    "prefer_memory",
    "prefer_cpu",
    "prefer_gpu",
    "prefer_tpu",
    "prefer_ssd",
    "prefer_public_ip",
    "prefer_network_speed",
    "prefer_network_type",
    "prefer_ephemeral_storage",
];

#[derive(Debug, Clone)]
pub struct ONode {
    pub name: String,
    pub region: Option<String>,
    pub zone: Option<String>,
    pub rack: Option<String>,
    pub cpu: f64,
    pub mem_gib: f64,
    pub gpu: f64,
    pub tpu: f64,
    pub ssd: bool,
    pub public_ip: bool,
    pub gbps: f64,
    pub net_type: Option<String>,
    pub eph_gib: f64,
}

#[derive(Debug, Clone)]
pub struct OPod {
    pub namespace: String,
    pub name: String,
    pub deployment: Option<String>,
    pub node: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OIntent {
    pub kind: &'static str,
    pub confidence: f64,
    pub strength: f64,
    pub list: Vec<String>,
    pub number: f64,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub cluster: Vec<ONode>,
    pub candidates: Vec<usize>,
    pub pods: Vec<OPod>,
    pub subject: OPod,
    /// Distinct kinds, kept in registry order.
    pub intents: Vec<OIntent>,
}

impl Instance {
    fn node(&self, name: &str) -> Option<&ONode> {
        self.cluster.iter().find(|n| n.name == name)
    }

    fn is_subject(&self, p: &OPod) -> bool {
        p.namespace == self.subject.namespace && p.name == self.subject.name
    }

    fn siblings(&self) -> Vec<&OPod> {
        let Some(dep) = &self.subject.deployment else {
            return Vec::new();
        };
        self.pods
            .iter()
            .filter(|p| {
                p.node.is_some()
                    && p.deployment.as_ref() == Some(dep)
                    && p.namespace == self.subject.namespace
                    && !self.is_subject(p)
            })
            .collect()
    }

    fn named(&self, names: &[String]) -> Vec<&OPod> {
        self.pods
            .iter()
            .filter(|p| p.node.is_some() && !self.is_subject(p) && p.deployment.as_ref().is_some_and(|d| names.contains(d)))
            .collect()
    }

    fn label<'a>(n: &'a ONode, level: &str) -> Option<&'a str> {
        match level {
            "node" => Some(n.name.as_str()),
            "region" => n.region.as_deref(),
            "zone" => n.zone.as_deref(),
            "rack" => n.rack.as_deref(),
            _ => unreachable!(),
        }
    }

    fn pod_label(&self, p: &OPod, level: &str) -> Option<String> {
        let host = p.node.as_deref()?;
        if level == "node" {
            return Some(host.to_string());
        }
        self.node(host).and_then(|n| Self::label(n, level)).map(str::to_string)
    }

    fn same_domain_count(&self, n: &ONode, pods: &[&OPod], level: &str) -> f64 {
        match Self::label(n, level) {
            None => 0.0,
            Some(own) => pods.iter().filter(|p| self.pod_label(p, level).as_deref() == Some(own)).count() as f64,
        }
    }

    fn proximity(&self, pods: &[&OPod]) -> Vec<f64> {
        let raw: Vec<f64> = self
            .candidates
            .iter()
            .map(|&i| {
                let n = &self.cluster[i];
                2.0 * self.same_domain_count(n, pods, "rack")
                    + 0.5 * self.same_domain_count(n, pods, "zone")
                    + 0.2 * self.same_domain_count(n, pods, "region")
            })
            .collect();
        rescale(raw)
    }

    fn phi(&self, intent: &OIntent) -> Vec<f64> {
        let cands: Vec<&ONode> = self.candidates.iter().map(|&i| &self.cluster[i]).collect();
        let in_list = |v: Option<&str>| v.is_some_and(|v| intent.list.iter().any(|x| x == v));
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        let avoid = |b: bool| if b { -2.0 } else { 0.0 };
        match intent.kind {
            "prefer_colocate_same_deployment" => {
                let sib = self.siblings();
                rescale(
                    cands
                        .iter()
                        .map(|n| sib.iter().filter(|p| p.node.as_deref() == Some(n.name.as_str())).count() as f64)
                        .collect(),
                )
            }
            "prefer_nearby_nodes_same_deployment" => self.proximity(&self.siblings()),
            "prefer_deployments" => self.proximity(&self.named(&intent.list)),
            "avoid_deployments" => {
                let named = self.named(&intent.list);
                cands
                    .iter()
                    .map(|n| avoid(named.iter().any(|p| p.node.as_deref() == Some(n.name.as_str()))))
                    .collect()
            }
            "spread_regions" | "spread_zones" | "spread_racks" | "spread_nodes" => {
                let level = &intent.kind["spread_".len()..intent.kind.len() - 1];
                let sib = self.siblings();
                let labels: Vec<String> = sib.iter().filter_map(|p| self.pod_label(p, level)).collect();
                let count = |d: &str| labels.iter().filter(|l| *l == d).count() as i64;
                let m = labels.iter().map(|l| count(l)).max().unwrap_or(0);
                cands
                    .iter()
                    .map(|n| {
                        let k = Self::label(n, level).map_or(0, count);
                        (m - k + 1) as f64 / (m + 1) as f64
                    })
                    .collect()
            }
            "prefer_regions" => cands.iter().map(|n| indicator(in_list(n.region.as_deref()))).collect(),
            "prefer_zones" => cands.iter().map(|n| indicator(in_list(n.zone.as_deref()))).collect(),
            "prefer_racks" => cands.iter().map(|n| indicator(in_list(n.rack.as_deref()))).collect(),
            "prefer_nodes" => cands.iter().map(|n| indicator(in_list(Some(&n.name)))).collect(),
            "avoid_regions" => cands.iter().map(|n| avoid(in_list(n.region.as_deref()))).collect(),
            "avoid_zones" => cands.iter().map(|n| avoid(in_list(n.zone.as_deref()))).collect(),
            "avoid_racks" => cands.iter().map(|n| avoid(in_list(n.rack.as_deref()))).collect(),
            "avoid_nodes" => cands.iter().map(|n| avoid(in_list(Some(&n.name)))).collect(),
            "prefer_memory" => cands.iter().map(|n| indicator(n.mem_gib >= intent.number)).collect(),
            "prefer_cpu" => cands.iter().map(|n| indicator(n.cpu >= intent.number)).collect(),
            "prefer_gpu" => cands.iter().map(|n| indicator(n.gpu >= intent.number)).collect(),
            "prefer_tpu" => cands.iter().map(|n| indicator(n.tpu >= intent.number)).collect(),
            "prefer_ssd" => cands.iter().map(|n| indicator(n.ssd)).collect(),
            "prefer_public_ip" => cands.iter().map(|n| indicator(n.public_ip)).collect(),
            "prefer_network_speed" => cands.iter().map(|n| indicator(n.gbps >= intent.number)).collect(),
            "prefer_network_type" => cands
                .iter()
                .map(|n| indicator(n.net_type.as_ref().is_some_and(|t| t.to_lowercase() == intent.text.to_lowercase())))
                .collect(),
            "prefer_ephemeral_storage" => cands.iter().map(|n| indicator(n.eph_gib >= intent.number)).collect(),
            other => panic!("oracle has no rule for {other}"),
        }
    }

    /// Raw scores per candidate.
    pub fn raw_scores(&self) -> Vec<f64> {
        let mut raw = vec![0.0; self.candidates.len()];
        if self.intents.is_empty() {
            return raw;
        }
        let beta = 100.0 / self.intents.len() as f64;
        for intent in &self.intents {
            let w = beta * intent.confidence * intent.strength;
            for (r, phi) in raw.iter_mut().zip(self.phi(intent)) {
                *r += w * phi;
            }
        }
        raw
    }

    pub fn to_crate(&self) -> (Vec<CachedNode>, Vec<CachedNode>, Vec<CachedPod>, CachedPod, ParsedHint) {
        let convert = |n: &ONode| {
            let mut c = CachedNode::named(n.name.clone());
            c.region = n.region.clone();
            c.zone = n.zone.clone();
            c.rack = n.rack.clone();
            c.cpu_count = n.cpu;
            c.memory_bytes = (n.mem_gib * 1_073_741_824.0) as u64;
            c.gpu_count = n.gpu;
            c.tpu_count = n.tpu;
            c.has_ssd = n.ssd;
            c.has_public_ip = n.public_ip;
            c.network_gbps = n.gbps;
            c.network_type = n.net_type.clone();
            c.ephemeral_storage_bytes = (n.eph_gib * 1_073_741_824.0) as u64;
            c
        };
        let pod = |p: &OPod| {
            let mut c = CachedPod::new(&p.namespace, &p.name, p.deployment.as_deref());
            c.node_name = p.node.clone();
            c
        };
        let entries = self
            .intents
            .iter()
            .map(|i| {
                let kind: IntentKind = i.kind.parse().expect("known kind");
                let strength = Strength::from_exact(i.strength).expect("valid strength");
                let mut d = DetectedIntent::new(kind, i.confidence, strength);
                let meta = match kind.class().metadata_field {
                    None => None,
                    Some(f) if f.ends_with("_gb") || f.ends_with("_cores") || f.ends_with("_gbps") => {
                        Some(MetadataValue::Float(i.number))
                    }
                    Some("prefer_network_type") => Some(MetadataValue::Text(i.text.clone())),
                    Some(_) => Some(MetadataValue::List(i.list.clone())),
                };
                if let Some(m) = meta {
                    d = d.with_metadata(m);
                }
                d
            })
            .collect();
        (
            self.candidates.iter().map(|&i| convert(&self.cluster[i])).collect(),
            self.cluster.iter().map(convert).collect(),
            self.pods.iter().map(pod).collect(),
            pod(&self.subject),
            ParsedHint::from_entries("oracle", entries),
        )
    }
}

fn rescale(raw: Vec<f64>) -> Vec<f64> {
    let max = raw.iter().cloned().fold(0.0_f64, |a, b| if b > a { b } else { a });
    if max > 0.0 {
        raw.into_iter().map(|v| v / max).collect()
    } else {
        raw.into_iter().map(|_| 0.0).collect()
    }
}

fn maybe<R: Rng>(rng: &mut R, pool: &[&str]) -> Option<String> {
    if rng.random_bool(0.15) {
        None
    } else {
        pool.choose(rng).map(|s| s.to_string())
    }
}

fn pick_f<R: Rng>(rng: &mut R, pool: &[f64]) -> f64 {
    *pool.choose(rng).expect("non-empty pool")
}

const REGIONS: [&str; 3] = ["r1", "r2", "r3"];
const ZONES: [&str; 4] = ["z1", "z2", "z3", "z4"];
const RACKS: [&str; 4] = ["k1", "k2", "k3", "k4"];
const DEPLOYMENTS: [&str; 4] = ["web", "db", "cache", "log"];
const NET_TYPES: [&str; 3] = ["ena", "infiniband", "ENA"];

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let total = rng.random_range(1..=7);
    let cluster: Vec<ONode> = (0..total)
        .map(|i| ONode {
            name: format!("node-{i}"),
            region: maybe(rng, &REGIONS),
            zone: maybe(rng, &ZONES),
            rack: maybe(rng, &RACKS),
            cpu: pick_f(rng, &[1.0, 2.0, 4.0, 8.0]),
            mem_gib: pick_f(rng, &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0]),
            gpu: pick_f(rng, &[0.0, 0.0, 1.0, 2.0, 4.0]),
            tpu: pick_f(rng, &[0.0, 0.0, 1.0, 8.0]),
            ssd: rng.random_bool(0.5),
            public_ip: rng.random_bool(0.5),
            gbps: pick_f(rng, &[0.0, 1.0, 10.0, 25.0, 100.0]),
            net_type: maybe(rng, &NET_TYPES),
            eph_gib: pick_f(rng, &[0.0, 10.0, 20.0, 100.0]),
        })
        .collect();

    let mut order: Vec<usize> = (0..total).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let n_cand = rng.random_range(1..=total.min(5));
    let candidates = order[..n_cand].to_vec();

    let node_names: Vec<String> = cluster.iter().map(|n| n.name.clone()).collect();
    let pods: Vec<OPod> = (0..rng.random_range(0..=10))
        .map(|i| OPod {
            namespace: if rng.random_bool(0.8) { "default".into() } else { "other".into() },
            name: format!("pod-{i}"),
            deployment: maybe(rng, &DEPLOYMENTS),
            node: if rng.random_bool(0.9) { node_names.choose(rng).cloned() } else { None },
        })
        .collect();
    let subject = OPod {
        namespace: "default".into(),
        name: if rng.random_bool(0.1) && !pods.is_empty() { "pod-0".into() } else { "subject".into() },
        deployment: if rng.random_bool(0.9) { Some("web".into()) } else { None },
        node: None,
    };

    let n_intents = rng.random_range(0..=4);
    let mut kinds: Vec<usize> = Vec::new();
    while kinds.len() < n_intents {
        let k = rng.random_range(0..ORDER.len());
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds.sort();
    let intents = kinds
        .into_iter()
        .map(|k| {
            let kind = ORDER[k];
            let pool: Vec<String> = if kind.ends_with("regions") {
                REGIONS.iter().map(|s| s.to_string()).collect()
            } else if kind.ends_with("zones") {
                ZONES.iter().map(|s| s.to_string()).collect()
            } else if kind.ends_with("racks") {
                RACKS.iter().map(|s| s.to_string()).collect()
            } else if kind.ends_with("nodes") {
                node_names.clone()
            } else {
                DEPLOYMENTS.iter().map(|s| s.to_string()).collect()
            };
            let list_len = rng.random_range(0..=2);
            let list = (0..list_len).filter_map(|_| pool.choose(rng).cloned()).collect();
            let number = match kind {
                "prefer_memory" => pick_f(rng, &[0.5, 1.0, 4.0, 16.0, 64.0]),
                "prefer_cpu" => pick_f(rng, &[1.0, 2.0, 4.0, 16.0]),
                "prefer_gpu" | "prefer_tpu" => pick_f(rng, &[1.0, 2.0, 8.0]),
                "prefer_network_speed" => pick_f(rng, &[1.0, 10.0, 100.0]),
                "prefer_ephemeral_storage" => pick_f(rng, &[10.0, 50.0, 100.0]),
                _ => 1.0,
            };
            OIntent {
                kind,
                confidence: rng.random::<f64>(),
                strength: pick_f(rng, &[0.5, 1.0, 1.5]),
                list,
                number,
                text: NET_TYPES.choose(rng).expect("non-empty").to_lowercase(),
            }
        })
        .collect();

    Instance {
        cluster,
        candidates,
        pods,
        subject,
        intents,
    }
}
