//! Deterministic keyword and pattern baseline.
//!
//! The hint is split into clauses at sentence ends and contrast words
//! ("but", "however"). Each clause gets one strength from the keyword lists
//! and is matched against per-family rules. Hits for the same class across
//! clauses are merged.

use std::sync::LazyLock;

use regex::Regex;

use super::prompt::{STRONG_KEYWORDS, WEAK_KEYWORDS};
use crate::intent::{DetectedIntent, IntentKind, MetadataValue, ParsedHint, Strength};

pub const REGEX_CONFIDENCE: f64 = 0.9;

fn re(pattern: &str) -> Regex {
    Regex::new(pattern).expect("static pattern")
}

static CLAUSE_BREAK: LazyLock<Regex> =
    LazyLock::new(|| re(r"(?i)[.!?;]+(?:\s+|$)|\s+but\s+|\s+however,?\s+|\s+whereas\s+|\s+while\s+"));

static KEYWORDS: LazyLock<Vec<(Strength, &'static str, Regex)>> = LazyLock::new(|| {
    let mut out = Vec::new();
    for (strength, words) in [(Strength::Strong, STRONG_KEYWORDS), (Strength::Weak, WEAK_KEYWORDS)] {
        for &word in words {
            let pattern = match word {
                "need" => r"\bneed(?:s|ed)?\b".to_string(),
                "prefer" => r"\bprefer(?:s|red)?\b".to_string(),
                "do not" => r"\b(?:do not|don't)\b".to_string(),
                "required" => r"\brequire[sd]?\b".to_string(),
                _ => format!(r"\b{}\b", regex::escape(word)),
            };
            out.push((strength, word, re(&pattern)));
        }
    }
    out
});

// Polarity markers for list items. Each item takes the polarity of the
// closest marker before it in its clause; with no marker it is a preference.
static NEGATIVE: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\b(?:avoid\w*|not|never|no|don't|dont|exclud\w*|except|away from|stay off|keep off|steer clear of|without)\b")
});
static POSITIVE: LazyLock<Regex> = LazyLock::new(|| re(r"\b(?:prefer\w*|ideally|instead|rather|favou?r\w*|want|use|choose)\b"));

static REGION: LazyLock<Regex> = LazyLock::new(|| re(r"\b[a-z]{2}-[a-z]+-\d+\b"));
static ZONE: LazyLock<Regex> = LazyLock::new(|| re(r"\b[a-z]{2}-[a-z]+-\d+[a-z]\b"));
static RACK: LazyLock<Regex> = LazyLock::new(|| re(r"\brack-[a-z0-9]+(?:-[a-z0-9]+)*"));
static NODE: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:node|host|server|worker|minikube|machine|ip)-[a-z0-9]+(?:-[a-z0-9]+)*"));
static QUOTED: LazyLock<Regex> = LazyLock::new(|| re(r#"['"`‘’“”]([a-z0-9][a-z0-9._-]*)['"`‘’“”]"#));
static NAMED_DEPLOYMENT: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b([a-z][a-z0-9-]*)\s+(?:deployments?|pods|services?|apps?|workloads?)\b"));

static COLOCATE: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\bcoll?ocat\w*|\b(?:same|single|one) (?:node|host|server|machine)\b|\bpack(?:ed)? (?:them |the pods |all pods )?together\b|\btogether on\b")
});
static NEARBY: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\b(?:nearby|near each other|close to each other|close together|topologically close|same rack|same zone|low[- ]latency between|close proximity)\b")
});
static DEPLOYMENT_RELATION: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:near|close to|next to|with|alongside|same \w+ as|co-?locat\w*|together|beside|avoid|away from|separate from|apart from)\b"));
static SPREAD_VERB: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\b(?:spread\w*|distribut\w*|scatter\w*|balanc\w*|evenly|across (?:different|multiple|several|many|all)|anti-affinity|one per)\b")
});
static SPREAD_DOMAIN: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(regions?|zones?|availability zones?|racks?|nodes?|hosts?|servers?|machines?)\b"));
static DIFFERENT_NODES: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:different|separate|distinct) (nodes|hosts|servers|machines|racks|zones|regions)\b"));

static GPU: LazyLock<Regex> = LazyLock::new(|| re(r"\b(?:gpus?|cuda|nvidia|a100|h100|v100)\b"));
static GPU_COUNT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(\d+(?:\.\d+)?)\s*(?:x\s*)?(?:[a-z0-9]+\s+)?(?:gpus?|gpu cores|cuda gpus)\b|gpus?\s*[:=]?\s*(\d+(?:\.\d+)?)\b")
});
static TPU: LazyLock<Regex> = LazyLock::new(|| re(r"\btpus?\b|tensor processing"));
static TPU_COUNT: LazyLock<Regex> =
    LazyLock::new(|| re(r"(\d+(?:\.\d+)?)\s*(?:x\s*)?(?:tpus?|tpu cores|tpu chips)\b|tpus?\s*[:=]?\s*(\d+(?:\.\d+)?)\b"));
static CPU: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:v?cpus?|cpu[- ]intensive|compute[- ](?:heavy|intensive)|(?:many|lots of|more) cores|processor)\b|\d+\s*cores\b"));
static CPU_COUNT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(\d+(?:\.\d+)?)\s*(?:v?cpus?|cpu cores|cores|cpu-cores)\b|\bv?cpus?\s*[:=]?\s*(\d+(?:\.\d+)?)\b")
});
static MEMORY: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:ram|memory|mem)\b|memory[- ](?:intensive|heavy|hungry)"));
static MEMORY_AMOUNT: LazyLock<Regex> = LazyLock::new(|| {
    re(r"(\d+(?:\.\d+)?)\s*(gib|gb|g|tib|tb|mib|mb)\s*(?:of\s+)?(?:ram|memory|mem)\b|\b(?:ram|memory|mem)\s*(?:of|[:=]|at least|>=)?\s*(\d+(?:\.\d+)?)\s*(gib|gb|g|tib|tb|mib|mb)\b")
});
static EPHEMERAL: LazyLock<Regex> =
    LazyLock::new(|| re(r"\bephemeral\b|\bscratch (?:space|disk|storage)\b|\blocal (?:disk|storage|scratch)\b"));
static STORAGE_AMOUNT: LazyLock<Regex> = LazyLock::new(|| re(r"(\d+(?:\.\d+)?)\s*(gib|gb|g|tib|tb|mib|mb)\b"));
static SSD: LazyLock<Regex> = LazyLock::new(|| re(r"\bssds?\b|solid[- ]state|\bnvme\b|flash storage"));
static PUBLIC_IP: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\bpublic[- ]ip|\bexternal[- ]ip|\bpublic(?:ly)? (?:reachable|accessible|address)|\binternet[- ]facing|\bpublic ip address")
});
static NETWORK_SPEED: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\d+(?:\.\d+)?\s*(?:gbps|gbit|gigabit|gb/s)|\bhigh[- ]bandwidth\b|\bfast network\w*|\bnetwork[- ](?:intensive|heavy)\b|\bhigh[- ]speed network")
});
static NETWORK_GBPS: LazyLock<Regex> = LazyLock::new(|| re(r"(\d+(?:\.\d+)?)\s*(?:gbps|gbit|gigabit|gb/s)"));
static NETWORK_TYPE: LazyLock<Regex> = LazyLock::new(|| re(r"\b(infiniband|ena|efa|rdma|roce|sr-iov|ethernet)\b"));

#[derive(Debug)]
struct Clause<'a> {
    lower: String,
    original: &'a str,
    strength: Strength,
    keywords: Vec<&'static str>,
}

impl<'a> Clause<'a> {
    fn new(original: &'a str) -> Self {
        let lower = original.to_ascii_lowercase();
        let mut strong = Vec::new();
        let mut weak = Vec::new();
        for (strength, word, pattern) in KEYWORDS.iter() {
            if pattern.is_match(&lower) {
                match strength {
                    Strength::Strong => strong.push(*word),
                    _ => weak.push(*word),
                }
            }
        }
        let (strength, keywords) = if !strong.is_empty() {
            (Strength::Strong, strong)
        } else if !weak.is_empty() {
            (Strength::Weak, weak)
        } else {
            (Strength::Normal, Vec::new())
        };
        Clause {
            lower,
            original,
            strength,
            keywords,
        }
    }

    fn negated_at(&self, pos: usize) -> bool {
        let last = |r: &Regex| r.find_iter(&self.lower[..pos]).last().map(|m| m.start());
        match (last(&NEGATIVE), last(&POSITIVE)) {
            (Some(n), Some(p)) => n > p,
            (Some(_), None) => true,
            _ => false,
        }
    }

    fn negated(&self) -> bool {
        NEGATIVE.is_match(&self.lower)
    }

    /// Matches of `pattern` split by polarity, in order of appearance.
    fn items(&self, pattern: &Regex) -> (Vec<String>, Vec<String>) {
        let mut prefer = Vec::new();
        let mut avoid = Vec::new();
        for m in pattern.find_iter(&self.lower) {
            let item = m.as_str().trim_end_matches('-').to_string();
            let bucket = if self.negated_at(m.start()) { &mut avoid } else { &mut prefer };
            if !bucket.contains(&item) {
                bucket.push(item);
            }
        }
        (prefer, avoid)
    }

    fn deployment_names(&self) -> Vec<(usize, String)> {
        let mut out: Vec<(usize, String)> = QUOTED
            .captures_iter(&self.lower)
            .map(|c| {
                let g = c.get(1).unwrap();
                (g.start(), self.original[g.start()..g.end()].to_string())
            })
            .collect();
        if out.is_empty() {
            const NOT_NAMES: &[&str] = &[
                "this", "these", "those", "the", "same", "all", "my", "our", "other", "its", "their", "existing", "its",
                "of", "and", "other", "any", "such", "replica", "new", "a", "both", "sibling",
            ];
            for c in NAMED_DEPLOYMENT.captures_iter(&self.lower) {
                let g = c.get(1).unwrap();
                if !NOT_NAMES.contains(&g.as_str()) {
                    out.push((g.start(), self.original[g.start()..g.end()].to_string()));
                }
            }
        }
        out
    }
}

#[derive(Debug)]
struct Hit {
    kind: IntentKind,
    metadata: Option<MetadataValue>,
}

impl Hit {
    fn bare(kind: IntentKind) -> Self {
        Hit { kind, metadata: None }
    }

    fn with(kind: IntentKind, metadata: MetadataValue) -> Self {
        Hit {
            kind,
            metadata: Some(metadata),
        }
    }
}

fn first_number(pattern: &Regex, text: &str) -> Option<f64> {
    let caps = pattern.captures(text)?;
    caps.iter().skip(1).flatten().next()?.as_str().parse().ok()
}

fn gigabytes(number: &str, unit: &str) -> Option<f64> {
    let n: f64 = number.parse().ok()?;
    Some(match unit {
        "tb" => n * 1000.0,
        "tib" => n * 1024.0,
        "mb" => n / 1000.0,
        "mib" => n / 1024.0,
        _ => n,
    })
}

fn memory_amount(text: &str) -> Option<f64> {
    let caps = MEMORY_AMOUNT.captures(text)?;
    let (n, u) = match (caps.get(1), caps.get(2)) {
        (Some(n), Some(u)) => (n, u),
        _ => (caps.get(3)?, caps.get(4)?),
    };
    gigabytes(n.as_str(), u.as_str())
}

fn list_hits(clause: &Clause, pattern: &Regex, prefer: IntentKind, avoid: IntentKind, out: &mut Vec<Hit>) {
    let (pos, neg) = clause.items(pattern);
    if !pos.is_empty() {
        out.push(Hit::with(prefer, MetadataValue::List(pos)));
    }
    if !neg.is_empty() {
        out.push(Hit::with(avoid, MetadataValue::List(neg)));
    }
}

fn spread_kind(domain: &str) -> IntentKind {
    if domain.starts_with("region") {
        IntentKind::SpreadRegions
    } else if domain.contains("zone") {
        IntentKind::SpreadZones
    } else if domain.starts_with("rack") {
        IntentKind::SpreadRacks
    } else {
        IntentKind::SpreadNodes
    }
}

fn clause_hits(clause: &Clause) -> Vec<Hit> {
    use IntentKind as K;
    let text = clause.lower.as_str();
    let mut hits = Vec::new();

    // Named topology items. Zones first so their region prefix is not
    // reported twice; the region pattern cannot match inside a zone name.
    list_hits(clause, &ZONE, K::PreferZones, K::AvoidZones, &mut hits);
    list_hits(clause, &REGION, K::PreferRegions, K::AvoidRegions, &mut hits);
    list_hits(clause, &RACK, K::PreferRacks, K::AvoidRacks, &mut hits);
    list_hits(clause, &NODE, K::PreferNodes, K::AvoidNodes, &mut hits);

    // Other deployments, by quoted or "<name> deployment" reference.
    let deployments = clause.deployment_names();
    let targets_others = !deployments.is_empty() && DEPLOYMENT_RELATION.is_match(text);
    if targets_others {
        let mut prefer = Vec::new();
        let mut avoid = Vec::new();
        for (pos, name) in deployments {
            let bucket = if clause.negated_at(pos) { &mut avoid } else { &mut prefer };
            if !bucket.contains(&name) {
                bucket.push(name);
            }
        }
        if !prefer.is_empty() {
            hits.push(Hit::with(K::PreferDeployments, MetadataValue::List(prefer)));
        }
        if !avoid.is_empty() {
            hits.push(Hit::with(K::AvoidDeployments, MetadataValue::List(avoid)));
        }
    }

    // Own-deployment placement shape.
    let mut spread_found = false;
    if let Some(verb) = SPREAD_VERB.find(text) {
        let domain = SPREAD_DOMAIN
            .find(&text[verb.start()..])
            .map(|m| m.as_str())
            .unwrap_or("nodes");
        hits.push(Hit::bare(spread_kind(domain)));
        spread_found = true;
    }
    if !spread_found {
        if let Some(c) = DIFFERENT_NODES.captures(text) {
            hits.push(Hit::bare(spread_kind(c.get(1).unwrap().as_str())));
            spread_found = true;
        }
    }
    if !targets_others && COLOCATE.is_match(text) {
        if clause.negated() {
            if !spread_found {
                hits.push(Hit::bare(K::SpreadNodes));
            }
        } else {
            hits.push(Hit::bare(K::PreferColocateSameDeployment));
        }
    } else if !targets_others && !clause.negated() && NEARBY.is_match(text) {
        hits.push(Hit::bare(K::PreferNearbyNodesSameDeployment));
    }

    // Node resources.
    if TPU.is_match(text) {
        let n = first_number(&TPU_COUNT, text).unwrap_or(1.0);
        hits.push(Hit::with(K::PreferTpu, MetadataValue::Float(n)));
    }
    if GPU.is_match(text) {
        let n = first_number(&GPU_COUNT, text).unwrap_or(1.0);
        hits.push(Hit::with(K::PreferGpu, MetadataValue::Float(n)));
    }
    if CPU.is_match(text) {
        let n = first_number(&CPU_COUNT, text).unwrap_or(1.0);
        hits.push(Hit::with(K::PreferCpu, MetadataValue::Float(n)));
    }
    if EPHEMERAL.is_match(text) {
        let gb = STORAGE_AMOUNT
            .captures(text)
            .and_then(|c| gigabytes(c.get(1)?.as_str(), c.get(2)?.as_str()))
            .unwrap_or(1.0);
        hits.push(Hit::with(K::PreferEphemeralStorage, MetadataValue::Float(gb)));
    } else if MEMORY.is_match(text) {
        let gb = memory_amount(text).unwrap_or(1.0);
        hits.push(Hit::with(K::PreferMemory, MetadataValue::Float(gb)));
    }
    if SSD.is_match(text) {
        hits.push(Hit::bare(K::PreferSsd));
    }
    if PUBLIC_IP.is_match(text) {
        hits.push(Hit::bare(K::PreferPublicIp));
    }
    if NETWORK_SPEED.is_match(text) {
        let gbps = first_number(&NETWORK_GBPS, text).unwrap_or(1.0);
        hits.push(Hit::with(K::PreferNetworkSpeed, MetadataValue::Float(gbps)));
    }
    if let Some(c) = NETWORK_TYPE.captures(text) {
        hits.push(Hit::with(K::PreferNetworkType, MetadataValue::Text(c[1].to_string())));
    }
    hits
}

fn explanation(keywords: &[&str]) -> String {
    let quoted: Vec<String> = keywords.iter().map(|k| format!("'{k}'")).collect();
    format!("User stated {}", quoted.join(", "))
}

fn merge_metadata(existing: &mut DetectedIntent, incoming: Option<MetadataValue>) {
    let Some(incoming) = incoming else { return };
    let Some(field) = existing.intent.class().metadata_field else { return };
    match (existing.metadata.get_mut(field), incoming) {
        (Some(MetadataValue::List(have)), MetadataValue::List(new)) => {
            for item in new {
                if !have.contains(&item) {
                    have.push(item);
                }
            }
        }
        // An explicit number beats the 1.0 placeholder from a vaguer clause.
        (Some(MetadataValue::Float(have)), MetadataValue::Float(new)) => {
            if *have == 1.0 {
                *have = new;
            }
        }
        (Some(MetadataValue::Text(have)), MetadataValue::Text(new)) => {
            if have.is_empty() {
                *have = new;
            }
        }
        (_, new) => {
            existing.metadata.insert(field.to_string(), new);
        }
    }
}

fn rank(s: Strength) -> u8 {
    match s {
        Strength::Normal => 0,
        Strength::Weak => 1,
        Strength::Strong => 2,
    }
}

/// Parses a hint with the fixed rule set. Every match gets confidence 0.9.
pub fn regex_parse(hint: &str) -> ParsedHint {
    let mut found: Vec<DetectedIntent> = Vec::new();
    for piece in CLAUSE_BREAK.split(hint) {
        if piece.trim().is_empty() {
            continue;
        }
        let clause = Clause::new(piece);
        for hit in clause_hits(&clause) {
            let mut detected = DetectedIntent::new(hit.kind, REGEX_CONFIDENCE, clause.strength);
            if clause.strength != Strength::Normal {
                detected.strength_explanation = Some(explanation(&clause.keywords));
            }
            match found.iter_mut().find(|d| d.intent == hit.kind) {
                Some(existing) => {
                    merge_metadata(existing, hit.metadata);
                    if rank(detected.strength) > rank(existing.strength) {
                        existing.strength = detected.strength;
                        existing.strength_explanation = detected.strength_explanation;
                    }
                }
                None => {
                    if let Some(m) = hit.metadata {
                        detected = detected.with_metadata(m);
                    }
                    found.push(detected);
                }
            }
        }
    }
    ParsedHint::from_entries(hint, found)
}
