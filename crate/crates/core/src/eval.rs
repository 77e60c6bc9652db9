//! Intent-recognition metrics over a labelled hint corpus.
//!
//! Metadata, strength, explanation and confidence checks only look at true
//! positives: an intent the analyzer missed counts once, as a false negative.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::EvalError;
use crate::intent::{IntentKind, MetadataValue, ParsedHint, Strength};
use crate::parsers::IntentAnalyzer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    CategoricalParaphrasing,
    Combinatorial,
    StrengthNuance,
    NegativeNoise,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::CategoricalParaphrasing,
        Category::Combinatorial,
        Category::StrengthNuance,
        Category::NegativeNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::CategoricalParaphrasing => "categorical_paraphrasing",
            Category::Combinatorial => "combinatorial",
            Category::StrengthNuance => "strength_nuance",
            Category::NegativeNoise => "negative_noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCase {
    pub prompt: String,
    pub expected: ParsedHint,
    pub category: Category,
}

/// Record shape on disk. `hint`/`input` and `expected_output` are accepted
/// as alternative field names.
#[derive(Debug, Deserialize)]
struct RawCase {
    #[serde(alias = "hint", alias = "input")]
    prompt: String,
    #[serde(alias = "expected_output")]
    expected: Value,
    category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub cases: Vec<GroundTruthCase>,
    /// Lenient mode only: records left out, with their index and reason.
    pub skipped: Vec<(usize, String)>,
}

fn strict_check(expected: &Value) -> Result<(), String> {
    let obj = expected.as_object().ok_or("expected must be an object")?;
    for (name, fields) in obj {
        let fields: &Map<String, Value> = fields.as_object().ok_or_else(|| format!("{name}: entry must be an object"))?;
        let strength = fields
            .get("strength")
            .and_then(Value::as_f64)
            .ok_or_else(|| format!("{name}: strength missing or not a number"))?;
        if Strength::from_exact(strength).is_none() {
            return Err(format!("{name}: strength {strength} is not one of 0.5, 1.0, 1.5"));
        }
        let confidence = fields
            .get("confidence")
            .and_then(Value::as_f64)
            .ok_or_else(|| format!("{name}: confidence missing or not a number"))?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(format!("{name}: confidence {confidence} outside [0, 1]"));
        }
    }
    Ok(())
}

fn parse_case(value: Value, strict: bool) -> Result<GroundTruthCase, String> {
    let raw: RawCase = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let category: Category = serde_json::from_value(Value::String(raw.category.clone()))
        .map_err(|_| format!("unknown category `{}`", raw.category))?;
    if strict {
        strict_check(&raw.expected)?;
    }
    let expected = ParsedHint::from_wire(raw.prompt.clone(), &raw.expected).map_err(|e| e.to_string())?;
    if category == Category::NegativeNoise && !expected.is_empty() {
        return Err("negative_noise case with non-empty expected".into());
    }
    Ok(GroundTruthCase {
        prompt: raw.prompt,
        expected,
        category,
    })
}

/// Parses dataset JSON. Strict mode stops at the first bad record; lenient
/// mode skips it and records why.
pub fn parse_dataset(text: &str, strict: bool) -> Result<Dataset, EvalError> {
    let value: Value = serde_json::from_str(text).map_err(|e| EvalError::NotAnArray(e.to_string()))?;
    let Value::Array(records) = value else {
        return Err(EvalError::NotAnArray("top-level value is not an array".into()));
    };
    let mut cases = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for (index, record) in records.into_iter().enumerate() {
        match parse_case(record, strict) {
            Ok(c) => cases.push(c),
            Err(detail) if strict => return Err(EvalError::SchemaViolation { index, detail }),
            Err(detail) => {
                log::warn!("skipping dataset record {index}: {detail}");
                skipped.push((index, detail));
            }
        }
    }
    Ok(Dataset { cases, skipped })
}

pub fn load_dataset(path: &Path, strict: bool) -> Result<Dataset, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|_| EvalError::FileNotFound(path.display().to_string()))?;
    parse_dataset(&text, strict)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetadataResult {
    pub intent: IntentKind,
    pub field: String,
    pub expected: Value,
    pub predicted: Option<Value>,
    pub correct: bool,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthResult {
    pub intent: IntentKind,
    pub expected: f64,
    pub predicted: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationResult {
    pub intent: IntentKind,
    pub required: bool,
    pub provided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseTally {
    pub exact_set_match: bool,
    pub true_positives: Vec<IntentKind>,
    pub false_positives: Vec<IntentKind>,
    pub false_negatives: Vec<IntentKind>,
    pub metadata_results: Vec<MetadataResult>,
    pub strength_results: Vec<StrengthResult>,
    pub explanation_results: Vec<ExplanationResult>,
    pub confidence_abs_errors: Vec<f64>,
    #[serde(serialize_with = "ser_millis")]
    pub latency: Duration,
    pub category: Option<Category>,
}

fn ser_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1000.0)
}

fn metadata_json(v: &MetadataValue) -> Value {
    match v {
        MetadataValue::Float(f) => Value::from(*f),
        MetadataValue::Text(t) => Value::from(t.as_str()),
        MetadataValue::List(l) => Value::from(l.clone()),
    }
}

fn floats_match(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

fn metadata_matches(expected: &MetadataValue, predicted: &MetadataValue) -> bool {
    match (expected, predicted) {
        (MetadataValue::Float(a), MetadataValue::Float(b)) => floats_match(*a, *b),
        (MetadataValue::Text(a), MetadataValue::Text(b)) => a.to_lowercase() == b.to_lowercase(),
        (MetadataValue::List(a), MetadataValue::List(b)) => {
            let mut a = a.clone();
            let mut b = b.clone();
            a.sort();
            b.sort();
            a == b
        }
        _ => false,
    }
}

/// A predicted field counts as present unless it is an empty placeholder for
/// a non-empty expected value. Numeric fields are always present.
fn metadata_present(expected: &MetadataValue, predicted: Option<&MetadataValue>) -> bool {
    match (expected, predicted) {
        (_, None) => false,
        (MetadataValue::List(e), Some(MetadataValue::List(p))) => !p.is_empty() || e.is_empty(),
        (MetadataValue::Text(e), Some(MetadataValue::Text(p))) => !p.is_empty() || e.is_empty(),
        _ => true,
    }
}

pub fn compare_case(predicted: &ParsedHint, expected: &ParsedHint) -> CaseTally {
    let mut tally = CaseTally {
        exact_set_match: predicted.kinds().eq(expected.kinds()),
        true_positives: Vec::new(),
        false_positives: Vec::new(),
        false_negatives: Vec::new(),
        metadata_results: Vec::new(),
        strength_results: Vec::new(),
        explanation_results: Vec::new(),
        confidence_abs_errors: Vec::new(),
        latency: Duration::ZERO,
        category: None,
    };
    for kind in IntentKind::ALL {
        match (predicted.get(kind), expected.get(kind)) {
            (Some(_), None) => tally.false_positives.push(kind),
            (None, Some(_)) => tally.false_negatives.push(kind),
            (None, None) => {}
            (Some(p), Some(e)) => {
                tally.true_positives.push(kind);
                if let (Some(field), Some(exp)) = (kind.class().metadata_field, e.metadata_value()) {
                    let pred = p.metadata_value();
                    tally.metadata_results.push(MetadataResult {
                        intent: kind,
                        field: field.to_string(),
                        expected: metadata_json(exp),
                        predicted: pred.map(metadata_json),
                        correct: pred.is_some_and(|v| metadata_matches(exp, v)),
                        present: metadata_present(exp, pred),
                    });
                }
                tally.strength_results.push(StrengthResult {
                    intent: kind,
                    expected: e.strength.value(),
                    predicted: p.strength.value(),
                    correct: e.strength == p.strength,
                });
                tally.explanation_results.push(ExplanationResult {
                    intent: kind,
                    required: e.strength != Strength::Normal,
                    provided: p.strength_explanation.as_deref().is_some_and(|s| !s.trim().is_empty()),
                });
                tally.confidence_abs_errors.push((p.confidence - e.confidence).abs());
            }
        }
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub intent: IntentKind,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassStats {
    fn new(intent: IntentKind, tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassStats {
            intent,
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    pub cases: usize,
    pub exact_matches: usize,
    pub subset_accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Aggregate metrics. Ratios with an empty denominator are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cases: usize,
    pub exact_matches: usize,
    pub subset_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub metadata_accuracy: Option<f64>,
    pub metadata_completeness: Option<f64>,
    pub strength_accuracy: Option<f64>,
    pub strength_explanation_accuracy: Option<f64>,
    pub confidence_mae: Option<f64>,
    pub latency_avg_ms: f64,
    pub latency_max_ms: f64,
    pub latency_p95_ms: f64,
    pub per_class: Vec<ClassStats>,
    pub per_category: BTreeMap<Category, CategoryStats>,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Nearest-rank percentile: the element at 1-based index `ceil(p/100 * n)`.
pub fn percentile(latencies: &[Duration], p: f64) -> Result<Duration, EvalError> {
    if latencies.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sorted = latencies.to_vec();
    sorted.sort();
    let n = sorted.len();
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

pub fn aggregate(tallies: &[CaseTally]) -> Result<EvalReport, EvalError> {
    if tallies.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let count = |f: &dyn Fn(&CaseTally) -> &Vec<IntentKind>, k: IntentKind| {
        tallies.iter().map(|t| f(t).iter().filter(|&&x| x == k).count()).sum::<usize>()
    };
    let per_class: Vec<ClassStats> = IntentKind::ALL
        .iter()
        .map(|&k| {
            ClassStats::new(
                k,
                count(&|t| &t.true_positives, k),
                count(&|t| &t.false_positives, k),
                count(&|t| &t.false_negatives, k),
            )
        })
        .collect();
    let classes = per_class.len() as f64;
    let macro_of = |f: fn(&ClassStats) -> f64| per_class.iter().map(f).sum::<f64>() / classes;

    let exact_matches = tallies.iter().filter(|t| t.exact_set_match).count();
    let meta: Vec<&MetadataResult> = tallies.iter().flat_map(|t| &t.metadata_results).collect();
    let strengths: Vec<&StrengthResult> = tallies.iter().flat_map(|t| &t.strength_results).collect();
    let required: Vec<&ExplanationResult> = tallies
        .iter()
        .flat_map(|t| &t.explanation_results)
        .filter(|e| e.required)
        .collect();
    let errors: Vec<f64> = tallies.iter().flat_map(|t| t.confidence_abs_errors.iter().copied()).collect();
    let latencies: Vec<Duration> = tallies.iter().map(|t| t.latency).collect();

    let mut per_category: BTreeMap<Category, CategoryStats> = BTreeMap::new();
    for t in tallies {
        let Some(c) = t.category else { continue };
        let s = per_category.entry(c).or_insert(CategoryStats {
            cases: 0,
            exact_matches: 0,
            subset_accuracy: 0.0,
            tp: 0,
            fp: 0,
            fn_: 0,
        });
        s.cases += 1;
        s.exact_matches += usize::from(t.exact_set_match);
        s.tp += t.true_positives.len();
        s.fp += t.false_positives.len();
        s.fn_ += t.false_negatives.len();
    }
    for s in per_category.values_mut() {
        s.subset_accuracy = percent(s.exact_matches, s.cases).unwrap_or(0.0);
    }

    Ok(EvalReport {
        cases: tallies.len(),
        exact_matches,
        subset_accuracy: percent(exact_matches, tallies.len()).unwrap_or(0.0),
        macro_precision: macro_of(|c| c.precision),
        macro_recall: macro_of(|c| c.recall),
        macro_f1: macro_of(|c| c.f1),
        tp: per_class.iter().map(|c| c.tp).sum(),
        fp: per_class.iter().map(|c| c.fp).sum(),
        fn_: per_class.iter().map(|c| c.fn_).sum(),
        metadata_accuracy: percent(meta.iter().filter(|m| m.correct).count(), meta.len()),
        metadata_completeness: percent(meta.iter().filter(|m| m.present).count(), meta.len()),
        strength_accuracy: percent(strengths.iter().filter(|s| s.correct).count(), strengths.len()),
        strength_explanation_accuracy: percent(required.iter().filter(|e| e.provided).count(), required.len()),
        confidence_mae: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        latency_avg_ms: latencies.iter().map(|d| ms(*d)).sum::<f64>() / latencies.len() as f64,
        latency_max_ms: latencies.iter().copied().max().map(ms).unwrap_or(0.0),
        latency_p95_ms: ms(percentile(&latencies, 95.0)?),
        per_class,
        per_category,
    })
}

/// Runs the analyzer over every case, in order.
pub fn evaluate(analyzer: &IntentAnalyzer, cases: &[GroundTruthCase]) -> Vec<CaseTally> {
    cases
        .iter()
        .map(|case| {
            let outcome = analyzer.analyze(&case.prompt);
            let mut tally = compare_case(&outcome.parsed, &case.expected);
            tally.latency = outcome.latency;
            tally.category = Some(case.category);
            tally
        })
        .collect()
}

fn opt_percent(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "n/a".into())
}

impl EvalReport {
    pub fn render_text(&self, backend: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Intent recognition report ({backend} backend, {} cases)", self.cases);
        let _ = writeln!(out, "Metadata, strength and confidence rows are computed over true-positive intents only.");
        let _ = writeln!(out);
        let rows: Vec<(&str, String)> = vec![
            ("Subset Accuracy", format!("{:.2}%", self.subset_accuracy)),
            ("Macro Precision", format!("{:.4}", self.macro_precision)),
            ("Macro Recall", format!("{:.4}", self.macro_recall)),
            ("Macro F1", format!("{:.4}", self.macro_f1)),
            ("Correctly Detected Intents (TP)", self.tp.to_string()),
            ("False Positives (FP)", self.fp.to_string()),
            ("False Negatives (FN)", self.fn_.to_string()),
            ("Metadata Accuracy", opt_percent(self.metadata_accuracy)),
            ("Metadata Completeness", opt_percent(self.metadata_completeness)),
            ("Overall Strength Accuracy", opt_percent(self.strength_accuracy)),
            ("Strength Expl. Accuracy", opt_percent(self.strength_explanation_accuracy)),
            (
                "Confidence MAE",
                self.confidence_mae.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
            ),
            ("Avg Latency", format!("{:.2} ms", self.latency_avg_ms)),
            ("Max Latency", format!("{:.2} ms", self.latency_max_ms)),
            ("P95 Latency", format!("{:.2} ms", self.latency_p95_ms)),
        ];
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<34}{value:>12}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<26}{:>6}{:>8}{:>10}{:>5}{:>5}{:>5}", "category", "cases", "exact", "subset", "TP", "FP", "FN");
        for (c, s) in &self.per_category {
            let _ = writeln!(
                out,
                "{:<26}{:>6}{:>8}{:>9.2}%{:>5}{:>5}{:>5}",
                c.name(),
                s.cases,
                s.exact_matches,
                s.subset_accuracy,
                s.tp,
                s.fp,
                s.fn_
            );
        }
        out
    }
}
