//! Weighted-additive node scoring.
//!
//! Every detected intent contributes `w_i * phi_i(n)` to a node's raw score,
//! with `w_i = (100 / |J|) * confidence * strength`. Raw scores are rescaled
//! against the best node and exactly one node is lifted to 100.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::ScoringError;
use crate::intent::{DetectedIntent, IntentKind, ParsedHint};
use crate::state::{CachedNode, CachedPod, PodKey, TopologyLevel};

/// Per-level multipliers for hierarchical proximity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProximityWeights {
    pub rack: f64,
    pub zone: f64,
    pub region: f64,
}

impl Default for ProximityWeights {
    fn default() -> Self {
        ProximityWeights {
            rack: 2.0,
            zone: 0.5,
            region: 0.2,
        }
    }
}

pub fn base_weight(intent_count: usize) -> Result<f64, ScoringError> {
    if intent_count == 0 {
        return Err(ScoringError::ZeroIntents);
    }
    Ok(100.0 / intent_count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntentWeight {
    pub base: f64,
    pub confidence: f64,
    pub strength: f64,
    pub combined: f64,
}

impl IntentWeight {
    pub fn new(base: f64, intent: &DetectedIntent) -> Self {
        let confidence = intent.confidence;
        let strength = intent.strength.value();
        IntentWeight {
            base,
            confidence,
            strength,
            combined: base * confidence * strength,
        }
    }
}

/// Inputs for one scoring round.
#[derive(Debug, Clone)]
pub struct ScoringContext {
    pub candidates: Vec<CachedNode>,
    /// Pods visible to the scorer: API pods plus live local placements.
    pub effective: Vec<CachedPod>,
    pub subject_pod: CachedPod,
    pub subject_deployment: Option<String>,
    /// Every known node, used to place existing pods in the topology. Pods may
    /// sit on nodes that are not candidates for this round.
    pub cluster_nodes: BTreeMap<String, CachedNode>,
    pub proximity: ProximityWeights,
}

impl ScoringContext {
    pub fn new(candidates: Vec<CachedNode>, effective: Vec<CachedPod>, subject_pod: CachedPod) -> Self {
        let cluster_nodes = candidates.iter().map(|n| (n.name.clone(), n.clone())).collect();
        ScoringContext {
            subject_deployment: subject_pod.deployment.clone(),
            candidates,
            effective,
            subject_pod,
            cluster_nodes,
            proximity: ProximityWeights::default(),
        }
    }

    pub fn with_cluster_nodes(mut self, nodes: impl IntoIterator<Item = CachedNode>) -> Self {
        for node in nodes {
            self.cluster_nodes.insert(node.name.clone(), node);
        }
        self
    }

    /// Scheduled pods of the subject's own deployment, excluding the subject.
    fn sibling_pods(&self) -> impl Iterator<Item = &CachedPod> {
        let subject_key: PodKey = self.subject_pod.key();
        let namespace = &self.subject_pod.namespace;
        let deployment = self.subject_deployment.as_deref();
        self.effective.iter().filter(move |p| {
            deployment.is_some()
                && p.node_name.is_some()
                && p.deployment.as_deref() == deployment
                && &p.namespace == namespace
                && p.key() != subject_key
        })
    }

    /// Scheduled pods belonging to any of the named deployments.
    fn named_pods<'a>(&'a self, names: &'a [String]) -> impl Iterator<Item = &'a CachedPod> {
        let subject_key = self.subject_pod.key();
        self.effective.iter().filter(move |p| {
            p.node_name.is_some()
                && p.key() != subject_key
                && p.deployment.as_ref().is_some_and(|d| names.contains(d))
        })
    }

    fn pod_domain(&self, pod: &CachedPod, level: TopologyLevel) -> Option<String> {
        let node_name = pod.node_name.as_deref()?;
        match level {
            TopologyLevel::Node => Some(node_name.to_string()),
            _ => self
                .cluster_nodes
                .get(node_name)
                .and_then(|n| n.domain(level))
                .map(str::to_string),
        }
    }
}

/// Histogram of sibling pods per topology domain.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpreadTally {
    pub counts: BTreeMap<String, usize>,
    pub max_count: usize,
}

impl SpreadTally {
    pub fn build(ctx: &ScoringContext, level: TopologyLevel) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for pod in ctx.sibling_pods() {
            if let Some(domain) = ctx.pod_domain(pod, level) {
                *counts.entry(domain).or_default() += 1;
            }
        }
        let max_count = counts.values().copied().max().unwrap_or(0);
        SpreadTally { counts, max_count }
    }

    /// Least-loaded score `(M - k + 1) / (M + 1)`.
    pub fn score(&self, domain: Option<&str>) -> f64 {
        let k = domain.and_then(|d| self.counts.get(d)).copied().unwrap_or(0);
        let m = self.max_count as f64;
        (m - k as f64 + 1.0) / (m + 1.0)
    }
}

fn list_contains(intent: &DetectedIntent, value: Option<&str>) -> bool {
    value.is_some_and(|v| intent.list_metadata().iter().any(|item| item == v))
}

const GIB: f64 = 1_073_741_824.0;

/// Binary indicator for `prefer_*` classes with a node-local predicate.
pub fn eval_binary_pref(intent: &DetectedIntent, node: &CachedNode) -> f64 {
    use IntentKind as K;
    let wanted = || intent.float_metadata();
    let hit = match intent.intent {
        K::PreferRegions => list_contains(intent, node.region.as_deref()),
        K::PreferZones => list_contains(intent, node.zone.as_deref()),
        K::PreferRacks => list_contains(intent, node.rack.as_deref()),
        K::PreferNodes => list_contains(intent, Some(&node.name)),
        K::PreferMemory => node.memory_bytes as f64 / GIB >= wanted(),
        K::PreferCpu => node.cpu_count >= wanted(),
        K::PreferGpu => node.gpu_count >= wanted(),
        K::PreferTpu => node.tpu_count >= wanted(),
        K::PreferSsd => node.has_ssd,
        K::PreferPublicIp => node.has_public_ip,
        K::PreferNetworkSpeed => node.network_gbps >= wanted(),
        K::PreferNetworkType => node
            .network_type
            .as_deref()
            .is_some_and(|t| t.eq_ignore_ascii_case(intent.text_metadata())),
        K::PreferEphemeralStorage => node.ephemeral_storage_bytes as f64 / GIB >= wanted(),
        _ => false,
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// `-2` when the node matches an avoided region, zone, rack, node or hosts a
/// pod of an avoided deployment; `0` otherwise.
pub fn eval_avoid(intent: &DetectedIntent, node: &CachedNode, ctx: &ScoringContext) -> f64 {
    use IntentKind as K;
    let hit = match intent.intent {
        K::AvoidRegions => list_contains(intent, node.region.as_deref()),
        K::AvoidZones => list_contains(intent, node.zone.as_deref()),
        K::AvoidRacks => list_contains(intent, node.rack.as_deref()),
        K::AvoidNodes => list_contains(intent, Some(&node.name)),
        K::AvoidDeployments => ctx
            .named_pods(intent.list_metadata())
            .any(|p| p.node_name.as_deref() == Some(node.name.as_str())),
        _ => false,
    };
    if hit {
        -2.0
    } else {
        0.0
    }
}

fn spread_level(kind: IntentKind) -> Option<TopologyLevel> {
    match kind {
        IntentKind::SpreadRegions => Some(TopologyLevel::Region),
        IntentKind::SpreadZones => Some(TopologyLevel::Zone),
        IntentKind::SpreadRacks => Some(TopologyLevel::Rack),
        IntentKind::SpreadNodes => Some(TopologyLevel::Node),
        _ => None,
    }
}

pub fn eval_spread(intent: &DetectedIntent, node: &CachedNode, ctx: &ScoringContext) -> f64 {
    let Some(level) = spread_level(intent.intent) else {
        return 0.0;
    };
    SpreadTally::build(ctx, level).score(node.domain(level))
}

/// Unnormalized proximity `P(n)` of one node to the given pods.
fn proximity_raw(node: &CachedNode, pods: &[&CachedPod], ctx: &ScoringContext) -> f64 {
    let w = ctx.proximity;
    let count = |level: TopologyLevel| -> f64 {
        let Some(own) = node.domain(level) else {
            return 0.0;
        };
        pods.iter()
            .filter(|p| ctx.pod_domain(p, level).as_deref() == Some(own))
            .count() as f64
    };
    w.rack * count(TopologyLevel::Rack) + w.zone * count(TopologyLevel::Zone) + w.region * count(TopologyLevel::Region)
}

/// Hierarchical proximity of every candidate to pods of `targets`, normalized
/// by the best candidate. `None` targets the subject's own deployment.
pub fn proximity_scores(ctx: &ScoringContext, targets: Option<&[String]>) -> Vec<f64> {
    let pods: Vec<&CachedPod> = match targets {
        Some(names) => ctx.named_pods(names).collect(),
        None => ctx.sibling_pods().collect(),
    };
    let raw: Vec<f64> = ctx.candidates.iter().map(|n| proximity_raw(n, &pods, ctx)).collect();
    self_normalize(raw)
}

pub fn eval_proximity(node: &CachedNode, ctx: &ScoringContext, targets: Option<&[String]>) -> f64 {
    let scores = proximity_scores(ctx, targets);
    ctx.candidates
        .iter()
        .position(|c| c.name == node.name)
        .map(|i| scores[i])
        .unwrap_or(0.0)
}

/// Same-node sibling counts normalized by the most populated candidate.
pub fn colocate_scores(ctx: &ScoringContext) -> Vec<f64> {
    let mut per_node: HashMap<&str, f64> = HashMap::new();
    for pod in ctx.sibling_pods() {
        if let Some(n) = pod.node_name.as_deref() {
            *per_node.entry(n).or_default() += 1.0;
        }
    }
    let raw = ctx
        .candidates
        .iter()
        .map(|c| per_node.get(c.name.as_str()).copied().unwrap_or(0.0))
        .collect();
    self_normalize(raw)
}

pub fn eval_colocate(node: &CachedNode, ctx: &ScoringContext) -> f64 {
    let scores = colocate_scores(ctx);
    ctx.candidates
        .iter()
        .position(|c| c.name == node.name)
        .map(|i| scores[i])
        .unwrap_or(0.0)
}

fn self_normalize(raw: Vec<f64>) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.into_iter().map(|v| v / max).collect()
}

/// Utility `phi_i(n)` for every candidate, in candidate order.
pub fn intent_utilities(intent: &DetectedIntent, ctx: &ScoringContext) -> Vec<f64> {
    use IntentKind as K;
    match intent.intent {
        K::PreferColocateSameDeployment => colocate_scores(ctx),
        K::PreferNearbyNodesSameDeployment => proximity_scores(ctx, None),
        K::PreferDeployments => proximity_scores(ctx, Some(intent.list_metadata())),
        K::AvoidRegions | K::AvoidZones | K::AvoidRacks | K::AvoidNodes | K::AvoidDeployments => {
            ctx.candidates.iter().map(|n| eval_avoid(intent, n, ctx)).collect()
        }
        K::SpreadRegions | K::SpreadZones | K::SpreadRacks | K::SpreadNodes => {
            let level = spread_level(intent.intent).expect("spread class");
            let tally = SpreadTally::build(ctx, level);
            ctx.candidates.iter().map(|n| tally.score(n.domain(level))).collect()
        }
        _ => ctx.candidates.iter().map(|n| eval_binary_pref(intent, n)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub node: String,
    pub contributions: BTreeMap<String, f64>,
    pub raw: f64,
    pub normalized: f64,
    #[serde(rename = "final")]
    pub final_score: u8,
    pub is_winner: bool,
}

impl ScoreBreakdown {
    /// Intent with the largest contribution on this node, ties broken by
    /// registry order.
    pub fn dominant_intent(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for kind in IntentKind::ALL {
            if let Some(&v) = self.contributions.get(kind.name()) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((kind.name(), v));
                }
            }
        }
        best.map(|(name, _)| name)
    }
}

/// Scores every candidate. Candidates must be non-empty for a winner to exist.
pub fn score_nodes(parsed: &ParsedHint, ctx: &ScoringContext) -> Vec<ScoreBreakdown> {
    let mut contributions: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); ctx.candidates.len()];
    let mut raw = vec![0.0f64; ctx.candidates.len()];

    if let Ok(base) = base_weight(parsed.len()) {
        for intent in parsed.intents.values() {
            let weight = IntentWeight::new(base, intent).combined;
            for (i, phi) in intent_utilities(intent, ctx).into_iter().enumerate() {
                let mu = weight * phi;
                contributions[i].insert(intent.intent.name().to_string(), mu);
                raw[i] += mu;
            }
        }
    }

    let names: Vec<&str> = ctx.candidates.iter().map(|n| n.name.as_str()).collect();
    let normalized = normalize_detail(&names, &raw);
    ctx.candidates
        .iter()
        .zip(contributions)
        .zip(raw)
        .zip(normalized)
        .map(|(((node, contributions), raw), norm)| ScoreBreakdown {
            node: node.name.clone(),
            contributions,
            raw,
            normalized: norm.normalized,
            final_score: norm.final_score,
            is_winner: norm.is_winner,
        })
        .collect()
}

pub fn winner(breakdowns: &[ScoreBreakdown]) -> Option<&ScoreBreakdown> {
    breakdowns.iter().find(|b| b.is_winner)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Normalized {
    normalized: f64,
    final_score: u8,
    is_winner: bool,
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

fn normalize_detail(names: &[&str], raw: &[f64]) -> Vec<Normalized> {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winner = names
        .iter()
        .zip(raw)
        .filter(|(_, &r)| r == max)
        .map(|(n, _)| *n)
        .min();
    names
        .iter()
        .zip(raw)
        .map(|(name, &r)| {
            let normalized = if max > 0.0 { r.max(0.0) / max * 100.0 } else { 0.0 };
            let is_winner = Some(*name) == winner;
            let final_score = if is_winner {
                100
            } else {
                round_half_up(normalized).clamp(1.0, 99.0) as u8
            };
            Normalized {
                normalized,
                final_score,
                is_winner,
            }
        })
        .collect()
}

/// Integer scores in `[1, 100]` with exactly one 100, awarded to the
/// alphabetically first node among those with the highest raw score.
pub fn normalize_scores(raw: &BTreeMap<String, f64>) -> BTreeMap<String, u8> {
    let names: Vec<&str> = raw.keys().map(String::as_str).collect();
    let values: Vec<f64> = raw.values().copied().collect();
    names
        .iter()
        .zip(normalize_detail(&names, &values))
        .map(|(n, v)| (n.to_string(), v.final_score))
        .collect()
}
