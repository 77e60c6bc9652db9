//! Checks shared by the per-topic test files and the acceptance runner. Each
//! returns `Ok(detail)` or `Err(detail)`.

#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hintsched_core::eval::{aggregate, compare_case, evaluate, parse_dataset, percentile, CaseTally, Category, Dataset};
use hintsched_core::extender::{Extender, ExtenderConfig};
use hintsched_core::intent::{DetectedIntent, IntentKind, IntentRegistry, ParsedHint, Strength};
use hintsched_core::parsers::{build_prompt, sanitize_hint, AnalyzerConfig, IntentAnalyzer};
use hintsched_core::scoring::{normalize_scores, score_nodes, winner, ScoringContext};
use hintsched_core::sim::{
    build_analyzer, run_all, run_scenario, scenario, BackendKind, ScenarioId, SimOptions, EVAL_FIXTURE_JSON,
    SCENARIO_HINTS_JSON,
};
use hintsched_core::state::{
    effective_pods, CachedNode, CachedPod, ClusterView, ManualClock, RecentPlacements,
    StateCache, Timestamp,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Outcome = Result<String, String>;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub fn read_golden(name: &str) -> String {
    let path = golden_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn scripted() -> Arc<IntentAnalyzer> {
    Arc::new(build_analyzer(BackendKind::Scripted, &AnalyzerConfig::default(), None).expect("bundled backend"))
}

pub fn fixture() -> Dataset {
    parse_dataset(EVAL_FIXTURE_JSON, true).expect("bundled corpus is valid")
}

// Scenario suite.

pub fn scenario_suite() -> Outcome {
    let started = Instant::now();
    let reports = run_all(&scripted(), SimOptions::default());
    let elapsed = started.elapsed();
    let summary: Vec<String> = reports
        .iter()
        .map(|r| {
            let nodes = r.node_counts.iter().map(|(k, v)| format!("{}={v}", k.trim_start_matches("minikube-"))).collect::<Vec<_>>();
            format!("{}:{}[{}]", r.id, if r.passed() { "ok" } else { "FAIL" }, nodes.join(","))
        })
        .collect();
    let by_id: BTreeMap<ScenarioId, _> = reports.iter().map(|r| (r.id, r)).collect();
    let count = |id: ScenarioId, node: &str| by_id[&id].node_counts.get(node).copied().unwrap_or(0);
    let a = &by_id[&ScenarioId::A].zone_counts;
    let exact = a.get("us-east-1a") == Some(&3)
        && a.get("us-east-1b") == Some(&3)
        && count(ScenarioId::B, "minikube-m02") == 6
        && count(ScenarioId::C, "minikube-m02") == 0
        && count(ScenarioId::C, "minikube-m03") == 6
        && by_id[&ScenarioId::D].placements.len() == 20
        && by_id[&ScenarioId::D].distinct_nodes() == 1
        && count(ScenarioId::E, "minikube-m09") == 6
        && by_id[&ScenarioId::F].placements.len() == 1
        && by_id[&ScenarioId::F].pending.is_empty();
    let detail = format!("{} in {:.3}s", summary.join(" "), elapsed.as_secs_f64());
    if exact && reports.iter().all(|r| r.passed()) && elapsed < Duration::from_secs(10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Scoring oracle.

pub fn oracle_equivalence(instances: usize, seed: u64) -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bitwise = 0usize;
    for i in 0..instances {
        let inst = oracle::random_instance(&mut rng);
        let expected = inst.raw_scores();
        let (candidates, cluster, pods, subject, parsed) = inst.to_crate();
        let ctx = ScoringContext::new(candidates, pods, subject).with_cluster_nodes(cluster);
        let got: Vec<f64> = score_nodes(&parsed, &ctx).iter().map(|b| b.raw).collect();
        if got.len() != expected.len() {
            return Err(format!("instance {i}: {} scores vs {} expected", got.len(), expected.len()));
        }
        let mut all_bits = true;
        for (g, e) in got.iter().zip(&expected) {
            if g.to_bits() != e.to_bits() {
                all_bits = false;
                let scale = g.abs().max(e.abs()).max(f64::MIN_POSITIVE);
                if (g - e).abs() / scale > 1e-12 {
                    return Err(format!("instance {i}: got {got:?}, oracle {expected:?}\n{inst:#?}"));
                }
            }
        }
        bitwise += usize::from(all_bits);
    }
    let elapsed = started.elapsed();
    let detail = format!("{instances} instances, {bitwise} bitwise-identical, {:.3}s", elapsed.as_secs_f64());
    if elapsed < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(format!("too slow: {detail}"))
    }
}

// Normalization properties.

fn raw_map() -> impl Strategy<Value = BTreeMap<String, f64>> {
    let value = prop_oneof![(-5i32..=5).prop_map(f64::from), (-1000i32..=1000).prop_map(f64::from)];
    prop::collection::btree_map("[a-e][a-z0-9]{0,3}", value, 1..12)
}

pub fn normalization_properties(cases: u32) -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let result = runner.run(&(raw_map(), 1u32..=800), |(raw, k)| {
        let out = normalize_scores(&raw);
        let hundreds: Vec<&String> = out.iter().filter(|(_, &s)| s == 100).map(|(n, _)| n).collect();
        prop_assert_eq!(hundreds.len(), 1);
        prop_assert!(out.values().filter(|&&s| s != 100).all(|&s| (1..=99).contains(&s)));
        let max = raw.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let expected_winner = raw.iter().filter(|(_, &v)| v == max).map(|(n, _)| n).min().unwrap();
        prop_assert_eq!(hundreds[0], expected_winner);
        let lambda = f64::from(k) / 8.0;
        let scaled: BTreeMap<String, f64> = raw.iter().map(|(n, v)| (n.clone(), v * lambda)).collect();
        let scaled_out = normalize_scores(&scaled);
        let scaled_winner = scaled_out.iter().find(|(_, &s)| s == 100).map(|(n, _)| n);
        prop_assert_eq!(scaled_winner, Some(expected_winner));
        Ok::<(), TestCaseError>(())
    });
    match result {
        Ok(()) => Ok(format!("{cases} cases, 0 failures")),
        Err(e) => Err(e.to_string()),
    }
}

// Spread balance.

/// All set partitions of `n` items as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let limit = if prefix.is_empty() { 0 } else { max + 1 };
        for b in 0..=limit {
            prefix.push(b);
            go(prefix, n, max.max(b), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, 0, &mut out);
    out
}

pub fn spread_balance(max_replicas: usize) -> Outcome {
    let partitions = set_partitions(8);
    let spread = ParsedHint::from_entries(
        "spread",
        vec![DetectedIntent::new(IntentKind::SpreadZones, 1.0, Strength::Normal)],
    );
    let mut rounds = 0usize;
    for blocks in &partitions {
        let nodes: Vec<CachedNode> = blocks
            .iter()
            .enumerate()
            .map(|(i, b)| CachedNode::named(format!("worker-{i}")).in_topology("region", &format!("zone-{b}"), &format!("rack-{i}")))
            .collect();
        let zones = blocks.iter().max().unwrap() + 1;
        let view = ClusterView::from_objects(nodes.clone(), Vec::new());
        let recent = RecentPlacements::new(Duration::from_secs(3600));
        let mut per_zone = vec![0usize; zones];
        for r in 0..max_replicas {
            let now = Timestamp::from_millis(r as u64);
            let subject = CachedPod::new("default", &format!("web-{r}"), Some("web"));
            let ctx = ScoringContext::new(nodes.clone(), effective_pods(&view, Some(&recent), now), subject.clone());
            let breakdowns = score_nodes(&spread, &ctx);
            let chosen = winner(&breakdowns).expect("one winner").node.clone();
            recent.record_placement(&subject, &chosen, now);
            let idx: usize = chosen["worker-".len()..].parse().unwrap();
            per_zone[blocks[idx]] += 1;
            rounds += 1;
            let skew = per_zone.iter().max().unwrap() - per_zone.iter().min().unwrap();
            if skew > 1 {
                return Err(format!("partition {blocks:?}, {} replicas: zone counts {per_zone:?}", r + 1));
            }
        }
    }
    Ok(format!("{} partitions x replicas 1..={max_replicas} ({rounds} rounds), max skew <= 1", partitions.len()))
}

// Recent-placement TTL.

pub fn ttl_boundary() -> Outcome {
    let ttl = Duration::from_secs(10);
    let eps = Duration::from_millis(1);
    let recent = RecentPlacements::new(ttl);
    let t0 = Timestamp::from_millis(50_000);
    let pod = CachedPod::new("default", "web-0", Some("web"));
    recent.record_placement(&pod, "node-a", t0);
    let view = ClusterView::default();
    let before = effective_pods(&view, Some(&recent), t0 + (ttl - eps)).len();
    let at = effective_pods(&view, Some(&recent), t0 + ttl).len();
    let after = effective_pods(&view, Some(&recent), t0 + ttl + eps).len();
    let detail = format!("age tau-1ms: {before} pod, age tau: {at}, age tau+1ms: {after}");
    if before == 1 && at == 0 && after == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn burst_without_recent_placements() -> Outcome {
    let opts = SimOptions {
        recent_placements: false,
        ..SimOptions::default()
    };
    let report = run_scenario(&scenario(ScenarioId::D), &scripted(), opts);
    let nodes: Vec<String> = report.node_counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let detail = format!("{} distinct node(s): {}", report.distinct_nodes(), nodes.join(" "));
    if report.distinct_nodes() > 1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Same burst race, but with a hint whose scores depend on sibling pods even
/// when none are visible: one replica per node. Without the local record every
/// replica lands on the same node; with it they fan out.
pub fn spread_burst_contrast() -> Outcome {
    let distinct = |recent_placements: bool| {
        let state = Arc::new(StateCache::new());
        let nodes: Vec<CachedNode> = (0..8).map(|i| CachedNode::named(format!("node-{i}"))).collect();
        state.full_resync(nodes, Vec::new());
        let clock = Arc::new(ManualClock::new(Timestamp::from_millis(0)));
        let extender = Extender::with_clock(
            state.clone(),
            Arc::new(IntentAnalyzer::regex()),
            ExtenderConfig {
                recent_placements,
                ..Default::default()
            },
            clock.clone(),
        );
        let names: Vec<String> = (0..8).map(|i| format!("node-{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut used = std::collections::BTreeSet::new();
        for r in 0..8u64 {
            clock.set(Timestamp::from_millis(r * 50));
            let mut pod = hintsched_core::state::RawPod::default();
            pod.metadata.name = format!("web-{r}");
            pod.metadata.labels.insert("app".into(), "web".into());
            pod.metadata
                .annotations
                .insert("allocation_hint".into(), "spread replicas across nodes".into());
            let out = extender
                .prioritize(&hintsched_core::extender::ExtenderArgs::for_names(pod, &refs))
                .expect("prioritize");
            used.insert(out.winner);
        }
        used.len()
    };
    let with = distinct(true);
    let without = distinct(false);
    let detail = format!("spread_nodes burst of 8: {with} distinct nodes with the record, {without} without");
    if with == 8 && without == 1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Evaluation harness.

fn predictor_tallies(cases: &Dataset, predict: impl Fn(&ParsedHint) -> ParsedHint) -> Vec<CaseTally> {
    cases
        .cases
        .iter()
        .map(|c| {
            let mut t = compare_case(&predict(&c.expected), &c.expected);
            t.category = Some(c.category);
            t
        })
        .collect()
}

pub fn eval_properties() -> Outcome {
    let data = fixture();
    let n = data.cases.len();
    let categories: std::collections::BTreeSet<Category> = data.cases.iter().map(|c| c.category).collect();
    if n < 40 || categories.len() != 4 {
        return Err(format!("fixture has {n} cases over {} categories", categories.len()));
    }

    let perfect = aggregate(&predictor_tallies(&data, |e| e.clone())).map_err(|e| e.to_string())?;
    if perfect.subset_accuracy != 100.0 || perfect.macro_f1 != 1.0 || perfect.confidence_mae != Some(0.0) {
        return Err(format!(
            "perfect predictor: subset {} f1 {} mae {:?}",
            perfect.subset_accuracy, perfect.macro_f1, perfect.confidence_mae
        ));
    }

    let empty = aggregate(&predictor_tallies(&data, |e| ParsedHint::empty(e.hint_text.clone()))).map_err(|e| e.to_string())?;
    let noise = data.cases.iter().filter(|c| c.expected.is_empty()).count();
    let noise_fraction = 100.0 * noise as f64 / n as f64;
    let supported: Vec<_> = empty.per_class.iter().filter(|c| c.tp + c.fn_ > 0).collect();
    if (empty.subset_accuracy - noise_fraction).abs() > 1e-9 || supported.iter().any(|c| c.recall != 0.0) || empty.tp != 0 {
        return Err(format!("empty predictor: subset {} vs noise {noise_fraction}", empty.subset_accuracy));
    }

    let regex = IntentAnalyzer::regex();
    let tallies = evaluate(&regex, &data.cases);
    for (t, c) in tallies.iter().zip(&data.cases) {
        let predicted = regex.analyze(&c.prompt).parsed;
        if t.true_positives.len() + t.false_negatives.len() != c.expected.len()
            || t.true_positives.len() + t.false_positives.len() != predicted.len()
        {
            return Err(format!("conservation broken on '{}'", c.prompt));
        }
    }
    let report = aggregate(&tallies).map_err(|e| e.to_string())?;
    let expected_total: usize = data.cases.iter().map(|c| c.expected.len()).sum();
    if report.tp + report.fn_ != expected_total {
        return Err(format!("aggregate conservation: {} + {} != {expected_total}", report.tp, report.fn_));
    }

    let ms = |v: &[u64]| v.iter().map(|&x| Duration::from_millis(x)).collect::<Vec<_>>();
    let goldens = [
        (ms(&(1..=20).collect::<Vec<_>>()), 95.0, 19),
        (ms(&(1..=100).rev().collect::<Vec<_>>()), 95.0, 95),
        (ms(&[7]), 95.0, 7),
        (ms(&[4, 1, 3, 2]), 50.0, 2),
        (ms(&[4, 1, 3, 2]), 95.0, 4),
        (ms(&[10, 20, 30]), 0.0, 10),
    ];
    for (values, p, want) in goldens {
        let got = percentile(&values, p).map_err(|e| e.to_string())?;
        if got != Duration::from_millis(want) {
            return Err(format!("p{p} of {} values: got {got:?}, want {want}ms", values.len()));
        }
    }
    if percentile(&[], 95.0).is_ok() {
        return Err("percentile of empty input should fail".into());
    }

    Ok(format!(
        "{n} cases ({noise} noise); perfect subset 100% F1 1.0 MAE 0; empty subset {:.2}% = noise fraction; conservation ok; 6 percentile goldens",
        empty.subset_accuracy
    ))
}

// Regex engine.

pub fn regex_on_scenarios() -> Outcome {
    let records: Vec<serde_json::Value> = serde_json::from_str(SCENARIO_HINTS_JSON).expect("bundled");
    let regex = IntentAnalyzer::regex();
    let mut matched = 0;
    for r in &records {
        let hint = r["hint"].as_str().unwrap();
        let reference = ParsedHint::from_wire(hint, &r["parsed"]).expect("valid");
        let t = compare_case(&regex.analyze(hint).parsed, &reference);
        if t.exact_set_match && t.metadata_results.iter().all(|m| m.correct) {
            matched += 1;
        }
    }
    let data = fixture();
    let report = aggregate(&evaluate(&regex, &data.cases)).map_err(|e| e.to_string())?;
    let text = report.render_text("regex");
    let detail = format!(
        "{matched}/{} scenario hints exact; fixture report: subset {:.2}%, macro F1 {:.3}, {} lines",
        records.len(),
        report.subset_accuracy,
        report.macro_f1,
        text.lines().count()
    );
    if matched == records.len() && report.cases == data.cases.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Opt-in: set HINTSCHED_LIVE_LLM=1 (plus the usual HINTSCHED_LLM_* settings).
pub fn live_llm_smoke() -> Option<Outcome> {
    if std::env::var("HINTSCHED_LIVE_LLM").ok().as_deref() != Some("1") {
        return None;
    }
    let analyzer = match build_analyzer(BackendKind::Llm, &AnalyzerConfig::from_env(), None) {
        Ok(a) => a,
        Err(e) => return Some(Err(e.to_string())),
    };
    let data = fixture();
    let report = match aggregate(&evaluate(&analyzer, &data.cases)) {
        Ok(r) => r,
        Err(e) => return Some(Err(e.to_string())),
    };
    let json = serde_json::to_value(&report).expect("serializable");
    let well_formed = report.cases == data.cases.len()
        && report.per_class.len() == 25
        && (0.0..=100.0).contains(&report.subset_accuracy)
        && json.get("macro_f1").is_some();
    let detail = format!("live eval: {} cases, subset {:.2}%", report.cases, report.subset_accuracy);
    Some(if well_formed { Ok(detail) } else { Err(detail) })
}

// Wire format.

pub fn golden_extender() -> Extender {
    let state = Arc::new(StateCache::new());
    let snapshot: hintsched_core::state::ClusterSnapshot =
        serde_json::from_str(&read_golden("cluster.json")).expect("golden cluster parses");
    state.load_snapshot(&snapshot, "app").expect("golden cluster is valid");
    Extender::with_clock(
        state,
        Arc::new(IntentAnalyzer::regex()),
        ExtenderConfig::default(),
        Arc::new(ManualClock::new(Timestamp::from_millis(1_000_000))),
    )
}

pub const WIRE_CASES: [(&str, &str, &str); 4] = [
    ("filter", "filter_request.json", "filter_response.json"),
    ("prioritize", "prioritize_request.json", "prioritize_response.json"),
    ("prioritize", "prioritize_near_request.json", "prioritize_near_response.json"),
    ("prioritize", "prioritize_bad_request.json", "prioritize_bad_response.json"),
];

pub fn wire_goldens() -> Outcome {
    let mut checked = 0;
    for (verb, req, resp) in WIRE_CASES {
        let extender = golden_extender();
        let body = read_golden(req);
        let out = match verb {
            "filter" => extender.handle_filter(body.as_bytes()),
            _ => extender.handle_prioritize(body.as_bytes()),
        };
        let want = read_golden(resp);
        if out.body != want {
            return Err(format!("{resp}: got {}, want {want}", out.body));
        }
        checked += 1;
    }
    let extender = golden_extender();
    let out = extender.handle_prioritize(read_golden("prioritize_request.json").as_bytes());
    let entries: Vec<serde_json::Value> = serde_json::from_str(&out.body).map_err(|e| e.to_string())?;
    let hundreds = entries.iter().filter(|e| e["score"] == 100).count();
    if entries.len() != 3 || hundreds != 1 {
        return Err(format!("3-node prioritize returned {} entries, {hundreds} at 100", entries.len()));
    }
    Ok(format!("{checked} golden bodies byte-identical; 3-node prioritize -> 3 entries, one 100"))
}

// Prompt.

pub const PROMPT_HINT: &str = "this is a critical ML training job, it must run on nodes with GPUs";

pub fn prompt_golden() -> Outcome {
    let got = build_prompt(&IntentRegistry, &sanitize_hint(PROMPT_HINT, 2048));
    let want = read_golden("prompt.txt");
    let descriptions = IntentRegistry.classes().iter().filter(|c| got.contains(c.description)).count();
    if got == want && descriptions == 25 {
        Ok(format!("{} bytes identical, 25/25 intent descriptions present", got.len()))
    } else if got != want {
        let at = got.bytes().zip(want.bytes()).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
        Err(format!("prompt differs from golden at byte {at}"))
    } else {
        Err(format!("only {descriptions}/25 descriptions present"))
    }
}
