//! Offline replay of the six placement scenarios on the nine-node testbed.
//!
//! Every replica goes through the real extender path: filter over all nodes,
//! prioritize the survivors, bind the winner. Bindings only reach the state
//! cache after `api_visibility_delay`, which is how burst scenarios reproduce
//! the watch-lag race.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::Value;

use crate::error::BackendError;
use crate::eval::compare_case;
use crate::extender::{Extender, ExtenderArgs, ExtenderConfig};
use crate::intent::ParsedHint;
use crate::parsers::{AnalyzerConfig, IntentAnalyzer, LlmBackend, RegexBackend, ScriptedBackend, ScriptedRecord};
use crate::state::{
    node_from_raw, pod_from_raw, CachedObject, EventKind, ManualClock, NodeSpec, NodeStatus, ObjectMeta, PodSpec,
    RawNode, RawPod, StateCache, Taint, Timestamp, HINT_ANNOTATION, RACK_LABEL, REGION_LABEL, ZONE_LABEL,
};

pub const CONTROL_PLANE: &str = "minikube";
pub const REGION: &str = "us-east-1";
pub const NAMESPACE: &str = "default";
pub const APP: &str = "web";

/// Worker nodes as `(name, zone, rack)`.
pub const WORKERS: [(&str, &str, &str); 8] = [
    ("minikube-m02", "us-east-1a", "rack-1"),
    ("minikube-m03", "us-east-1a", "rack-1"),
    ("minikube-m04", "us-east-1b", "rack-2"),
    ("minikube-m05", "us-east-1b", "rack-3"),
    ("minikube-m06", "us-east-1b", "rack-3"),
    ("minikube-m07", "us-east-1b", "rack-4"),
    ("minikube-m08", "us-east-1b", "rack-4"),
    ("minikube-m09", "us-east-1b", "rack-5"),
];

/// Scripted parses of the scenario hints.
pub const SCENARIO_HINTS_JSON: &str = include_str!("../data/scenario_hints.json");
/// Labelled evaluation corpus shipped with the crate.
pub const EVAL_FIXTURE_JSON: &str = include_str!("../data/eval_fixture.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [ScenarioId::A, ScenarioId::B, ScenarioId::C, ScenarioId::D, ScenarioId::E, ScenarioId::F];

    pub fn letter(self) -> char {
        match self {
            ScenarioId::A => 'A',
            ScenarioId::B => 'B',
            ScenarioId::C => 'C',
            ScenarioId::D => 'D',
            ScenarioId::E => 'E',
            ScenarioId::F => 'F',
        }
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ScenarioId::A),
            "B" => Ok(ScenarioId::B),
            "C" => Ok(ScenarioId::C),
            "D" => Ok(ScenarioId::D),
            "E" => Ok(ScenarioId::E),
            "F" => Ok(ScenarioId::F),
            other => Err(format!("unknown scenario '{other}' (expected A..F)")),
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A pod that is already running when the scenario starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreExisting {
    pub deployment: String,
    pub node: String,
}

/// Label patch applied to one node before the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeOverlay {
    pub node: String,
    pub label: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub title: &'static str,
    pub replicas: usize,
    pub hint: String,
    pub pre_existing: Vec<PreExisting>,
    pub overlays: Vec<NodeOverlay>,
    pub expected: &'static str,
    /// What the stock scheduler did with the equivalent affinity manifest.
    pub baseline: &'static str,
    #[serde(with = "millis")]
    pub inter_arrival: Duration,
    #[serde(with = "millis")]
    pub api_visibility_delay: Duration,
}

mod millis {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }
}

pub const SEQUENTIAL_INTER_ARRIVAL: Duration = Duration::from_secs(1);
pub const SEQUENTIAL_VISIBILITY_DELAY: Duration = Duration::from_millis(200);
pub const BURST_INTER_ARRIVAL: Duration = Duration::from_millis(50);
pub const BURST_VISIBILITY_DELAY: Duration = Duration::from_secs(5);

fn overlay(node: &str, label: &str, value: &str) -> NodeOverlay {
    NodeOverlay {
        node: node.to_string(),
        label: label.to_string(),
        value: value.to_string(),
    }
}

pub fn scenario(id: ScenarioId) -> ScenarioSpec {
    let base = ScenarioSpec {
        id,
        title: "",
        replicas: 6,
        hint: String::new(),
        pre_existing: Vec::new(),
        overlays: Vec::new(),
        expected: "",
        baseline: "",
        inter_arrival: SEQUENTIAL_INTER_ARRIVAL,
        api_visibility_delay: SEQUENTIAL_VISIBILITY_DELAY,
    };
    match id {
        ScenarioId::A => ScenarioSpec {
            title: "topology spreading",
            hint: "spread these pods evenly across all available zones for high availability".into(),
            expected: "zone counts differ by at most one (3:3 for six replicas)",
            baseline: "topologySpreadConstraints (maxSkew 1, DoNotSchedule): 3:3 across the two zones",
            ..base
        },
        ScenarioId::B => ScenarioSpec {
            title: "resource affinity",
            hint: "this is a critical ML training job, it must run on nodes with GPUs".into(),
            overlays: vec![overlay("minikube-m02", "hardware", "gpu")],
            expected: "all replicas on minikube-m02, the only gpu node",
            baseline: "preferred nodeAffinity on hardware=gpu: 6/6 on minikube-m02",
            ..base
        },
        ScenarioId::C => ScenarioSpec {
            title: "co-location and anti-affinity",
            hint: "prefer to be in the same region as the 'database' and 'cache' deployments, but avoid being on the same node as the 'logging-agent' pods.".into(),
            pre_existing: vec![
                PreExisting { deployment: "database".into(), node: "minikube-m05".into() },
                PreExisting { deployment: "cache".into(), node: "minikube-m03".into() },
                PreExisting { deployment: "logging-agent".into(), node: "minikube-m02".into() },
            ],
            expected: "no replica on minikube-m02; all replicas on minikube-m03",
            baseline: "preferred podAffinity/podAntiAffinity: 6/6 off minikube-m02, spread over m03, m06, m07, m08, m09",
            ..base
        },
        ScenarioId::D => ScenarioSpec {
            title: "rapid burst colocation",
            replicas: 20,
            hint: "Collocate all pods from this deployment on a single node.".into(),
            expected: "all 20 replicas on one node while bindings are still invisible",
            baseline: "required podAffinity on hostname: 20/20 on one node",
            inter_arrival: BURST_INTER_ARRIVAL,
            api_visibility_delay: BURST_VISIBILITY_DELAY,
            ..base
        },
        ScenarioId::E => ScenarioSpec {
            title: "quantitative resource preference",
            hint: "This is a high-bandwidth job, please place on nodes with at least 100Gbps network speed.".into(),
            overlays: WORKERS
                .iter()
                .map(|(n, _, _)| overlay(n, "network-gbps", if *n == "minikube-m09" { "100" } else { "10" }))
                .collect(),
            expected: "all replicas on minikube-m09, the only 100 Gbps node",
            baseline: "preferred nodeAffinity on network-gbps > 99: 1/6 on minikube-m09",
            ..base
        },
        ScenarioId::F => ScenarioSpec {
            title: "conflicting intents",
            replicas: 1,
            hint: "For high performance, collocate all pods on a single node. For high availability, you must also spread these pods across all zones.".into(),
            expected: "the replica is scheduled; the favored intent is reported and stable across runs",
            baseline: "contradictory hard podAffinity + topologySpreadConstraints: pod stays Pending",
            ..base
        },
    }
}

pub fn scenarios() -> Vec<ScenarioSpec> {
    ScenarioId::ALL.into_iter().map(scenario).collect()
}

fn worker_node(name: &str, zone: &str, rack: &str) -> RawNode {
    let labels = BTreeMap::from([
        (REGION_LABEL.to_string(), REGION.to_string()),
        (ZONE_LABEL.to_string(), zone.to_string()),
        (RACK_LABEL.to_string(), rack.to_string()),
        ("kubernetes.io/hostname".to_string(), name.to_string()),
    ]);
    RawNode {
        metadata: ObjectMeta {
            name: name.to_string(),
            labels,
            ..Default::default()
        },
        spec: NodeSpec::default(),
        status: NodeStatus {
            capacity: BTreeMap::from([
                ("cpu".to_string(), "2".to_string()),
                ("memory".to_string(), "2Gi".to_string()),
                ("ephemeral-storage".to_string(), "20Gi".to_string()),
                ("pods".to_string(), "110".to_string()),
            ]),
        },
    }
}

/// The raw testbed nodes for a scenario, overlays applied.
pub fn testbed_nodes(spec: &ScenarioSpec) -> Vec<RawNode> {
    let mut control = worker_node(CONTROL_PLANE, "us-east-1a", "rack-1");
    control.metadata.labels.retain(|k, _| k == "kubernetes.io/hostname");
    control.metadata.labels.insert("node-role.kubernetes.io/control-plane".into(), String::new());
    control.spec.taints.push(Taint {
        key: "node-role.kubernetes.io/control-plane".into(),
        value: None,
        effect: "NoSchedule".into(),
    });

    let mut nodes = vec![control];
    nodes.extend(WORKERS.iter().map(|(n, z, r)| worker_node(n, z, r)));
    for o in &spec.overlays {
        if let Some(node) = nodes.iter_mut().find(|n| n.metadata.name == o.node) {
            node.metadata.labels.insert(o.label.clone(), o.value.clone());
        }
    }
    nodes
}

fn raw_pod(name: &str, app: &str, hint: Option<&str>, node: Option<&str>) -> RawPod {
    let mut meta = ObjectMeta {
        name: name.to_string(),
        namespace: Some(NAMESPACE.to_string()),
        labels: BTreeMap::from([("app".to_string(), app.to_string())]),
        ..Default::default()
    };
    if let Some(h) = hint {
        meta.annotations.insert(HINT_ANNOTATION.to_string(), h.to_string());
    }
    RawPod {
        metadata: meta,
        spec: PodSpec {
            node_name: node.map(str::to_string),
        },
    }
}

/// Builds the state cache for a scenario: testbed nodes plus pre-existing pods.
pub fn build_testbed(spec: &ScenarioSpec) -> Arc<StateCache> {
    let state = Arc::new(StateCache::new());
    let nodes = testbed_nodes(spec)
        .iter()
        .map(|n| node_from_raw(n).expect("testbed quantities are well-formed"))
        .collect();
    let pods = spec
        .pre_existing
        .iter()
        .map(|p| pod_from_raw(&raw_pod(&format!("{}-0", p.deployment), &p.deployment, None, Some(&p.node)), "app"))
        .collect();
    state.full_resync(nodes, pods);
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Test switch: run the extender without its recent-placement memory.
    pub recent_placements: bool,
    pub placement_ttl: Duration,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            recent_placements: true,
            placement_ttl: crate::state::DEFAULT_PLACEMENT_TTL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    pub pod: String,
    pub node: String,
    pub score: u8,
    pub favored_intent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Assertion {
    Assertion {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementReport {
    pub id: ScenarioId,
    pub title: String,
    pub hint: String,
    pub backend: String,
    pub replicas: usize,
    pub placements: Vec<Placement>,
    pub pending: Vec<String>,
    pub zone_counts: BTreeMap<String, usize>,
    pub rack_counts: BTreeMap<String, usize>,
    pub node_counts: BTreeMap<String, usize>,
    pub parsed: Value,
    pub degraded: bool,
    pub favored_intent: Option<String>,
    pub assertions: Vec<Assertion>,
    pub baseline: String,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl PlacementReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn distinct_nodes(&self) -> usize {
        self.node_counts.len()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "Scenario {} ({}) [{}] backend={}", self.id, self.title, status, self.backend);
        let _ = writeln!(out, "  hint: {}", self.hint);
        let _ = writeln!(out, "  parsed: {}", self.parsed);
        if self.degraded {
            let _ = writeln!(out, "  analyzer degraded: scored without intents");
        }
        let _ = writeln!(
            out,
            "  scheduled {}/{}{}",
            self.placements.len(),
            self.replicas,
            if self.pending.is_empty() {
                String::new()
            } else {
                format!(", pending: {}", self.pending.join(", "))
            }
        );
        let counts = |m: &BTreeMap<String, usize>| {
            m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "  zones: {}", counts(&self.zone_counts));
        let _ = writeln!(out, "  racks: {}", counts(&self.rack_counts));
        let _ = writeln!(out, "  nodes: {}", counts(&self.node_counts));
        if let Some(f) = &self.favored_intent {
            let _ = writeln!(out, "  favored intent: {f}");
        }
        for a in &self.assertions {
            let _ = writeln!(out, "  [{}] {}: {}", if a.passed { "ok" } else { "FAIL" }, a.name, a.detail);
        }
        let _ = writeln!(out, "  stock scheduler: {}", self.baseline);
        out
    }
}

struct RunResult {
    placements: Vec<Placement>,
    pending: Vec<String>,
    parsed: ParsedHint,
    degraded: bool,
}

fn drive(spec: &ScenarioSpec, analyzer: &Arc<IntentAnalyzer>, opts: SimOptions) -> RunResult {
    let state = build_testbed(spec);
    let node_names: Vec<String> = testbed_nodes(spec).into_iter().map(|n| n.metadata.name).collect();
    let clock = Arc::new(ManualClock::new(Timestamp::from_millis(1_000_000)));
    let extender = Extender::with_clock(
        state.clone(),
        analyzer.clone(),
        ExtenderConfig {
            placement_ttl: opts.placement_ttl,
            recent_placements: opts.recent_placements,
            ..Default::default()
        },
        clock.clone(),
    );

    let start = Timestamp::from_millis(1_000_000);
    let mut in_flight: VecDeque<(Timestamp, RawPod)> = VecDeque::new();
    let mut result = RunResult {
        placements: Vec::new(),
        pending: Vec::new(),
        parsed: ParsedHint::empty(spec.hint.clone()),
        degraded: false,
    };
    let deployment = format!("test-scenario-{}-hint", spec.id.letter().to_ascii_lowercase());

    let publish_until = |now: Timestamp, in_flight: &mut VecDeque<(Timestamp, RawPod)>| {
        while in_flight.front().is_some_and(|(at, _)| *at <= now) {
            let (_, pod) = in_flight.pop_front().expect("front checked");
            state.apply_event(EventKind::Added, CachedObject::Pod(pod_from_raw(&pod, "app")));
        }
    };

    for i in 0..spec.replicas {
        let now = start + spec.inter_arrival * i as u32;
        clock.set(now);
        publish_until(now, &mut in_flight);

        let name = format!("{deployment}-{i}");
        let pod = raw_pod(&name, APP, Some(&spec.hint), None);
        let names: Vec<&str> = node_names.iter().map(String::as_str).collect();
        let filtered = extender.filter(&ExtenderArgs::for_names(pod.clone(), &names));
        if filtered.node_names.is_empty() {
            result.pending.push(name);
            continue;
        }
        let survivors: Vec<&str> = filtered.node_names.iter().map(String::as_str).collect();
        match extender.prioritize(&ExtenderArgs::for_names(pod.clone(), &survivors)) {
            Ok(outcome) => {
                let chosen = outcome.breakdowns.iter().find(|b| b.is_winner);
                result.parsed = outcome.analysis.parsed.clone();
                result.degraded |= outcome.analysis.degraded;
                result.placements.push(Placement {
                    pod: name.clone(),
                    node: outcome.winner.clone(),
                    score: chosen.map_or(0, |b| b.final_score),
                    favored_intent: chosen.and_then(|b| b.dominant_intent()).map(str::to_string),
                });
                let mut bound = pod;
                bound.spec.node_name = Some(outcome.winner);
                in_flight.push_back((now + spec.api_visibility_delay, bound));
            }
            Err(e) => {
                log::warn!("prioritize failed for {name}: {e}");
                result.pending.push(name);
            }
        }
    }
    result
}

fn reference_parses() -> &'static BTreeMap<String, ParsedHint> {
    static REFS: std::sync::OnceLock<BTreeMap<String, ParsedHint>> = std::sync::OnceLock::new();
    REFS.get_or_init(|| {
        let records: Vec<ScriptedRecord> = serde_json::from_str(SCENARIO_HINTS_JSON).expect("bundled fixture parses");
        records
            .into_iter()
            .map(|r| {
                let parsed = ParsedHint::from_wire(r.hint.clone(), &r.parsed).expect("bundled fixture is valid");
                (r.hint, parsed)
            })
            .collect()
    })
}

/// Reference parse for a scenario hint, if the hint is one of the bundled ones.
pub fn reference_parse(hint: &str) -> Option<&'static ParsedHint> {
    reference_parses().get(hint)
}

fn count_by<'a>(values: impl Iterator<Item = Option<&'a str>>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v.unwrap_or("<none>").to_string()).or_insert(0) += 1;
    }
    counts
}

fn describe(counts: &BTreeMap<String, usize>) -> String {
    counts.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

pub fn run_scenario(spec: &ScenarioSpec, analyzer: &Arc<IntentAnalyzer>, opts: SimOptions) -> PlacementReport {
    let started = Instant::now();
    let run = drive(spec, analyzer, opts);
    let nodes: BTreeMap<String, (Option<String>, Option<String>)> = testbed_nodes(spec)
        .iter()
        .map(|n| {
            let l = &n.metadata.labels;
            (n.metadata.name.clone(), (l.get(ZONE_LABEL).cloned(), l.get(RACK_LABEL).cloned()))
        })
        .collect();
    let zone_of = |n: &str| nodes.get(n).and_then(|(z, _)| z.as_deref());
    let rack_of = |n: &str| nodes.get(n).and_then(|(_, r)| r.as_deref());

    let zone_counts = count_by(run.placements.iter().map(|p| zone_of(&p.node)));
    let rack_counts = count_by(run.placements.iter().map(|p| rack_of(&p.node)));
    let node_counts = count_by(run.placements.iter().map(|p| Some(p.node.as_str())));
    let favored_intent = run.placements.first().and_then(|p| p.favored_intent.clone());

    let mut assertions = vec![check(
        "all replicas scheduled",
        run.pending.is_empty() && run.placements.len() == spec.replicas,
        format!("{}/{} scheduled", run.placements.len(), spec.replicas),
    )];
    if let Some(reference) = reference_parse(&spec.hint) {
        let tally = compare_case(&run.parsed, reference);
        let got: Vec<&str> = run.parsed.kinds().map(|k| k.name()).collect();
        let want: Vec<&str> = reference.kinds().map(|k| k.name()).collect();
        let metadata_ok = tally.metadata_results.iter().all(|m| m.correct);
        assertions.push(check(
            "hint parsed as reference",
            tally.exact_set_match && metadata_ok,
            format!("got [{}], reference [{}]{}", got.join(", "), want.join(", "), if metadata_ok { "" } else { ", metadata differs" }),
        ));
    }

    let on = |node: &str| node_counts.get(node).copied().unwrap_or(0);
    let placed = run.placements.len();
    match spec.id {
        ScenarioId::A => {
            let workers_by_zone = count_by(WORKERS.iter().map(|(_, z, _)| Some(*z)));
            let per_zone: Vec<usize> = workers_by_zone.keys().map(|z| zone_counts.get(z).copied().unwrap_or(0)).collect();
            let spread = per_zone.iter().max().unwrap_or(&0) - per_zone.iter().min().unwrap_or(&0);
            assertions.push(check("zone counts within one", spread <= 1, describe(&zone_counts)));
        }
        ScenarioId::B => {
            assertions.push(check("every replica on minikube-m02", placed > 0 && on("minikube-m02") == placed, describe(&node_counts)));
        }
        ScenarioId::C => {
            assertions.push(check("no replica on minikube-m02", on("minikube-m02") == 0, describe(&node_counts)));
            assertions.push(check(
                "all replicas on minikube-m03 (prototype-exact)",
                placed > 0 && on("minikube-m03") == placed,
                describe(&node_counts),
            ));
        }
        ScenarioId::D => {
            assertions.push(check(
                "single distinct node",
                node_counts.len() == 1,
                format!("{} distinct: {}", node_counts.len(), describe(&node_counts)),
            ));
        }
        ScenarioId::E => {
            assertions.push(check("every replica on minikube-m09", placed > 0 && on("minikube-m09") == placed, describe(&node_counts)));
        }
        ScenarioId::F => {
            let again = drive(spec, analyzer, opts);
            let same = again.placements == run.placements;
            assertions.push(check(
                "deterministic across runs",
                same,
                format!(
                    "favored intent {} on {}",
                    favored_intent.as_deref().unwrap_or("<none>"),
                    run.placements.first().map_or("<none>", |p| p.node.as_str())
                ),
            ));
        }
    }

    PlacementReport {
        id: spec.id,
        title: spec.title.to_string(),
        hint: spec.hint.clone(),
        backend: analyzer.backend_source().name().to_string(),
        replicas: spec.replicas,
        placements: run.placements,
        pending: run.pending,
        zone_counts,
        rack_counts,
        node_counts,
        parsed: run.parsed.to_wire(),
        degraded: run.degraded,
        favored_intent,
        assertions,
        baseline: spec.baseline.to_string(),
        elapsed: started.elapsed(),
    }
}

pub fn run_all(analyzer: &Arc<IntentAnalyzer>, opts: SimOptions) -> Vec<PlacementReport> {
    scenarios().iter().map(|s| run_scenario(s, analyzer, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Regex,
    Llm,
    Scripted,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regex" => Ok(BackendKind::Regex),
            "llm" => Ok(BackendKind::Llm),
            "scripted" => Ok(BackendKind::Scripted),
            other => Err(format!("unknown backend '{other}' (expected regex, llm or scripted)")),
        }
    }
}

/// Scripted backend holding the scenario hints and every labelled prompt of
/// the bundled evaluation corpus.
pub fn bundled_scripted_backend(max_hint_length: usize) -> ScriptedBackend {
    let mut records: Vec<ScriptedRecord> = serde_json::from_str(SCENARIO_HINTS_JSON).expect("bundled fixture parses");
    let corpus: Vec<Value> = serde_json::from_str(EVAL_FIXTURE_JSON).expect("bundled corpus parses");
    records.extend(corpus.into_iter().filter_map(|c| {
        Some(ScriptedRecord {
            hint: c.get("prompt")?.as_str()?.to_string(),
            parsed: c.get("expected")?.clone(),
        })
    }));
    ScriptedBackend::from_records(&records, max_hint_length).expect("bundled fixtures are valid")
}

/// Builds an analyzer for the chosen backend. `scripted_path` replaces the
/// bundled fixtures when given.
pub fn build_analyzer(
    kind: BackendKind,
    config: &AnalyzerConfig,
    scripted_path: Option<&std::path::Path>,
) -> Result<IntentAnalyzer, BackendError> {
    let max = config.max_hint_length;
    Ok(match kind {
        BackendKind::Regex => IntentAnalyzer::new(RegexBackend, max),
        BackendKind::Llm => IntentAnalyzer::new(LlmBackend::new(config.clone())?, max),
        BackendKind::Scripted => match scripted_path {
            Some(path) => IntentAnalyzer::new(ScriptedBackend::load(path, max)?, max),
            None => IntentAnalyzer::new(bundled_scripted_backend(max), max),
        },
    })
}
