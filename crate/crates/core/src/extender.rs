//! Scheduler-extender verbs over the state cache, analyzer and scorer.
//!
//! Wire bodies follow the Kubernetes extender v1 JSON shapes. Field names are
//! emitted in the casing of the upstream Go struct tags (`nodenames`,
//! `failedNodes`, `host`, `score`); decoding also accepts capitalized names.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::ExtenderError;
use crate::parsers::{AnalysisOutcome, IntentAnalyzer};
use crate::scoring::{score_nodes, winner, ScoreBreakdown, ScoringContext};
use crate::state::{
    effective_pods, node_from_raw, pod_from_raw, CachedNode, Clock, RawNode, RawPod, RecentPlacements, StateCache,
    SystemClock, DEFAULT_DEPLOYMENT_LABEL, DEFAULT_PLACEMENT_TTL,
};

pub const UNKNOWN_NODE_REASON: &str = "unknown node";
pub const TAINTED_NODE_REASON: &str = "node has a NoSchedule taint";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeList {
    #[serde(default)]
    pub items: Vec<RawNode>,
}

/// Body of `/filter` and `/prioritize` requests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtenderArgs {
    #[serde(alias = "Pod")]
    pub pod: RawPod,
    #[serde(default, alias = "Nodes", skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodeList>,
    #[serde(default, rename = "nodenames", alias = "NodeNames", alias = "nodeNames", skip_serializing_if = "Option::is_none")]
    pub node_names: Option<Vec<String>>,
}

impl ExtenderArgs {
    pub fn for_names(pod: RawPod, names: &[&str]) -> Self {
        ExtenderArgs {
            pod,
            nodes: None,
            node_names: Some(names.iter().map(|s| s.to_string()).collect()),
        }
    }

    /// Candidate names, from `nodenames` or else the inline node list.
    pub fn candidate_names(&self) -> Vec<String> {
        match (&self.node_names, &self.nodes) {
            (Some(names), _) => names.clone(),
            (None, Some(list)) => list.items.iter().map(|n| n.metadata.name.clone()).collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodeList>,
    #[serde(default, rename = "nodenames", alias = "NodeNames")]
    pub node_names: Vec<String>,
    #[serde(default, rename = "failedNodes", alias = "FailedNodes")]
    pub failed_nodes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "String::is_empty", alias = "Error")]
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostPriority {
    #[serde(alias = "Host")]
    pub host: String,
    #[serde(alias = "Score")]
    pub score: i64,
}

#[derive(Debug, Clone)]
pub struct PrioritizeOutcome {
    pub priorities: Vec<HostPriority>,
    pub breakdowns: Vec<ScoreBreakdown>,
    pub analysis: AnalysisOutcome,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtenderConfig {
    pub deployment_label: String,
    pub placement_ttl: Duration,
    /// Keep the short-lived record of recent decisions. Turning it off leaves
    /// burst scheduling at the mercy of API propagation delay.
    pub recent_placements: bool,
}

impl Default for ExtenderConfig {
    fn default() -> Self {
        ExtenderConfig {
            deployment_label: DEFAULT_DEPLOYMENT_LABEL.to_string(),
            placement_ttl: DEFAULT_PLACEMENT_TTL,
            recent_placements: true,
        }
    }
}

/// Response to a raw HTTP body: status code and JSON text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireResponse {
    pub status: u16,
    pub body: String,
}

impl WireResponse {
    fn ok(body: String) -> Self {
        WireResponse { status: 200, body }
    }

    fn bad_request(err: &ExtenderError) -> Self {
        WireResponse {
            status: 400,
            body: serde_json::json!({ "error": err.to_string() }).to_string(),
        }
    }
}

pub struct Extender {
    state: Arc<StateCache>,
    analyzer: Arc<IntentAnalyzer>,
    recent: Option<RecentPlacements>,
    clock: Arc<dyn Clock>,
    deployment_label: String,
    // Serializes read-score-record so back-to-back replicas see each other.
    decide: Mutex<()>,
}

impl std::fmt::Debug for Extender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extender")
            .field("analyzer", &self.analyzer)
            .field("recent_placements", &self.recent.is_some())
            .field("deployment_label", &self.deployment_label)
            .finish()
    }
}

impl Extender {
    pub fn new(state: Arc<StateCache>, analyzer: Arc<IntentAnalyzer>, config: ExtenderConfig) -> Self {
        Self::with_clock(state, analyzer, config, Arc::new(SystemClock))
    }

    pub fn with_clock(
        state: Arc<StateCache>,
        analyzer: Arc<IntentAnalyzer>,
        config: ExtenderConfig,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Extender {
            state,
            analyzer,
            recent: config
                .recent_placements
                .then(|| RecentPlacements::new(config.placement_ttl)),
            clock,
            deployment_label: config.deployment_label,
            decide: Mutex::new(()),
        }
    }

    pub fn state(&self) -> &Arc<StateCache> {
        &self.state
    }

    pub fn analyzer(&self) -> &Arc<IntentAnalyzer> {
        &self.analyzer
    }

    pub fn recent_placements(&self) -> Option<&RecentPlacements> {
        self.recent.as_ref()
    }

    fn inline_nodes(args: &ExtenderArgs) -> HashMap<&str, &RawNode> {
        args.nodes
            .iter()
            .flat_map(|l| l.items.iter())
            .map(|n| (n.metadata.name.as_str(), n))
            .collect()
    }

    fn resolve(&self, name: &str, inline: &HashMap<&str, &RawNode>) -> Option<CachedNode> {
        self.state
            .node(name)
            .or_else(|| inline.get(name).and_then(|raw| node_from_raw(raw).ok()))
    }

    pub fn filter(&self, args: &ExtenderArgs) -> FilterResult {
        let inline = Self::inline_nodes(args);
        let mut result = FilterResult::default();
        for name in args.candidate_names() {
            match self.resolve(&name, &inline) {
                None => {
                    result.failed_nodes.insert(name, UNKNOWN_NODE_REASON.to_string());
                }
                Some(node) if node.unschedulable_taint => {
                    result.failed_nodes.insert(name, TAINTED_NODE_REASON.to_string());
                }
                Some(_) => result.node_names.push(name),
            }
        }
        if args.nodes.is_some() {
            let items = result
                .node_names
                .iter()
                .filter_map(|n| inline.get(n.as_str()).map(|raw| (*raw).clone()))
                .collect();
            result.nodes = Some(NodeList { items });
        }
        result
    }

    pub fn prioritize(&self, args: &ExtenderArgs) -> Result<PrioritizeOutcome, ExtenderError> {
        let names = args.candidate_names();
        if names.is_empty() {
            return Err(ExtenderError::MalformedRequest("no candidate nodes".into()));
        }
        let inline = Self::inline_nodes(args);
        let candidates = names
            .iter()
            .map(|n| self.resolve(n, &inline).ok_or_else(|| ExtenderError::UnknownNode(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;

        let pod = pod_from_raw(&args.pod, &self.deployment_label);
        let hint = pod.allocation_hint.clone().unwrap_or_default();
        let analysis = self.analyzer.analyze(&hint);

        let _decision = self.decide.lock();
        let now = self.clock.now();
        let view = self.state.view();
        let effective = effective_pods(&view, self.recent.as_ref(), now);
        let ctx = ScoringContext::new(candidates, effective, pod.clone()).with_cluster_nodes(view.nodes.into_values());
        let breakdowns = score_nodes(&analysis.parsed, &ctx);
        let chosen = winner(&breakdowns).map(|b| b.node.clone()).unwrap_or_default();
        if let Some(recent) = &self.recent {
            recent.record_placement(&pod, &chosen, now);
        }

        let priorities = breakdowns
            .iter()
            .map(|b| HostPriority {
                host: b.node.clone(),
                score: i64::from(b.final_score),
            })
            .collect();
        Ok(PrioritizeOutcome {
            priorities,
            breakdowns,
            analysis,
            winner: chosen,
        })
    }

    pub fn handle_filter(&self, body: &[u8]) -> WireResponse {
        match decode_args(body) {
            Ok(args) => WireResponse::ok(serde_json::to_string(&self.filter(&args)).expect("serializable")),
            Err(e) => WireResponse::bad_request(&e),
        }
    }

    pub fn handle_prioritize(&self, body: &[u8]) -> WireResponse {
        let outcome = decode_args(body).and_then(|args| self.prioritize(&args));
        match outcome {
            Ok(o) => WireResponse::ok(serde_json::to_string(&o.priorities).expect("serializable")),
            Err(e) => WireResponse::bad_request(&e),
        }
    }
}

fn decode_args(body: &[u8]) -> Result<ExtenderArgs, ExtenderError> {
    serde_json::from_slice(body).map_err(|e| ExtenderError::MalformedRequest(e.to_string()))
}
