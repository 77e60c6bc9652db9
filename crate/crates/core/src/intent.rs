//! Intent classes, parsed-hint types and validation of analyzer output.
//!
//! The registry is compiled in: class descriptions are rendered verbatim into
//! the analyzer prompt, so they have to stay byte-stable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::SchemaError;

/// Scope grouping of an intent class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentCategory {
    ColocationProximity,
    Topological,
    NodeLevel,
    DeploymentLevel,
    ResourceBased,
}

/// Type of the single metadata field an intent carries, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataKind {
    None,
    Float,
    String,
    StringList,
}

macro_rules! intent_kinds {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The closed set of scheduling intents, in registry order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum IntentKind {
            $($variant),+
        }

        impl IntentKind {
            pub const ALL: [IntentKind; 25] = [$(IntentKind::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(IntentKind::$variant => $name),+
                }
            }
        }

        impl FromStr for IntentKind {
            type Err = SchemaError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(IntentKind::$variant),)+
                    other => Err(SchemaError::UnknownIntent(other.to_string())),
                }
            }
        }
    };
}

intent_kinds! {
    PreferColocateSameDeployment => "prefer_colocate_same_deployment",
    PreferNearbyNodesSameDeployment => "prefer_nearby_nodes_same_deployment",
    PreferRegions => "prefer_regions",
    AvoidRegions => "avoid_regions",
    SpreadRegions => "spread_regions",
    PreferZones => "prefer_zones",
    AvoidZones => "avoid_zones",
    SpreadZones => "spread_zones",
    PreferRacks => "prefer_racks",
    AvoidRacks => "avoid_racks",
    SpreadRacks => "spread_racks",
    PreferNodes => "prefer_nodes",
    AvoidNodes => "avoid_nodes",
    SpreadNodes => "spread_nodes",
    PreferDeployments => "prefer_deployments",
    AvoidDeployments => "avoid_deployments",
    PreferMemory => "prefer_memory",
    PreferCpu => "prefer_cpu",
    PreferGpu => "prefer_gpu",
    PreferTpu => "prefer_tpu",
    PreferSsd => "prefer_ssd",
    PreferPublicIp => "prefer_public_ip",
    PreferNetworkSpeed => "prefer_network_speed",
    PreferNetworkType => "prefer_network_type",
    PreferEphemeralStorage => "prefer_ephemeral_storage",
}

impl IntentKind {
    pub fn class(self) -> &'static IntentClass {
        &REGISTRY[self as usize]
    }
}

impl serde::Serialize for IntentKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Display for IntentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentClass {
    pub kind: IntentKind,
    pub category: IntentCategory,
    pub description: &'static str,
    pub metadata_field: Option<&'static str>,
    pub metadata_kind: MetadataKind,
}

impl IntentClass {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

const fn class(
    kind: IntentKind,
    category: IntentCategory,
    metadata_field: Option<&'static str>,
    metadata_kind: MetadataKind,
    description: &'static str,
) -> IntentClass {
    IntentClass {
        kind,
        category,
        description,
        metadata_field,
        metadata_kind,
    }
}

use IntentCategory as C;
use IntentKind as K;
use MetadataKind as M;

static REGISTRY: [IntentClass; 25] = [
    class(K::PreferColocateSameDeployment, C::ColocationProximity, None, M::None,
        "Prefer scheduling this pod on the SAME node as existing pods from the SAME deployment. No metadata required."),
    class(K::PreferNearbyNodesSameDeployment, C::ColocationProximity, None, M::None,
        "Prefer scheduling this pod on a node TOPOLOGICALLY CLOSE (same rack > zone > region) to existing pods from the SAME deployment. No metadata required."),
    class(K::PreferRegions, C::Topological, Some("prefer_regions"), M::StringList,
        "Prefer scheduling in specific regions. Extract a list of region names. Metadata field: 'prefer_regions' (MUST be a JSON list of strings, e.g., ['us-east-1', 'eu-west-1'])."),
    class(K::AvoidRegions, C::Topological, Some("avoid_regions"), M::StringList,
        "Avoid scheduling in specific regions. Extract a list of region names to avoid. Metadata field: 'avoid_regions' (MUST be a JSON list of strings, e.g., ['us-east-1', 'eu-west-1'])."),
    class(K::SpreadRegions, C::Topological, None, M::None,
        "Distribute pods of the same deployment across different REGIONS. No metadata required."),
    class(K::PreferZones, C::Topological, Some("prefer_zones"), M::StringList,
        "Prefer scheduling in specific availability zones. Extract a list of zone names. Metadata field: 'prefer_zones' (MUST be a JSON list of strings, e.g., ['us-east-1a', 'us-east-1b'])."),
    class(K::AvoidZones, C::Topological, Some("avoid_zones"), M::StringList,
        "Avoid scheduling in specific availability zones. Extract a list of zone names to avoid. Metadata field: 'avoid_zones' (MUST be a JSON list of strings, e.g., ['eu-central-1c'])."),
    class(K::SpreadZones, C::Topological, None, M::None,
        "Distribute pods of the same deployment across different availability ZONES. No metadata required."),
    class(K::PreferRacks, C::Topological, Some("prefer_racks"), M::StringList,
        "Prefer scheduling in specific server racks. Extract a list of rack names. Metadata field: 'prefer_racks' (MUST be a JSON list of strings, e.g., ['rack-a1', 'rack-b2'])."),
    class(K::AvoidRacks, C::Topological, Some("avoid_racks"), M::StringList,
        "Avoid scheduling in specific server racks. Extract a list of rack names to avoid. Metadata field: 'avoid_racks' (MUST be a JSON list of strings, e.g., ['rack-c3'])."),
    class(K::SpreadRacks, C::Topological, None, M::None,
        "Distribute pods of the same deployment across different server RACKS. No metadata required."),
    class(K::PreferNodes, C::NodeLevel, Some("prefer_nodes"), M::StringList,
        "Prefer scheduling on specific nodes (servers/hosts). Extract a list of node names. Metadata field: 'prefer_nodes' (MUST be a JSON list of strings, e.g., ['node-101', 'node-102'])."),
    class(K::AvoidNodes, C::NodeLevel, Some("avoid_nodes"), M::StringList,
        "Avoid scheduling on specific nodes (servers/hosts). Extract a list of node names to avoid. Metadata field: 'avoid_nodes' (MUST be a JSON list of strings, e.g., ['node-maint'])."),
    class(K::SpreadNodes, C::NodeLevel, None, M::None,
        "Distribute pods of the same deployment across different NODES (servers/hosts). No metadata required."),
    class(K::PreferDeployments, C::DeploymentLevel, Some("prefer_deployments"), M::StringList,
        "Prefer scheduling near pods from specific other deployments/applications. Extract a list of deployment names. Metadata field: 'prefer_deployments' (MUST be a JSON list of strings, e.g., ['database', 'cache'])."),
    class(K::AvoidDeployments, C::DeploymentLevel, Some("avoid_deployments"), M::StringList,
        "Avoid scheduling near pods from specific other deployments/applications. Extract a list of deployment names to avoid. Metadata field: 'avoid_deployments' (MUST be a JSON list of strings, e.g., ['batch-job'])."),
    class(K::PreferMemory, C::ResourceBased, Some("prefer_memory_gb"), M::Float,
        "Prefer nodes with a minimum amount of available RAM. Extract the amount in Gigabytes as a float number. Metadata field: 'prefer_memory_gb' (MUST be a float, e.g., 128.0 for 128GB)."),
    class(K::PreferCpu, C::ResourceBased, Some("prefer_cpu_cores"), M::Float,
        "Prefer nodes with a minimum number of CPU cores. Extract the number of cores as a float number. Metadata field: 'prefer_cpu_cores' (MUST be a float, e.g., 16.0 for 16 cores)."),
    class(K::PreferGpu, C::ResourceBased, Some("prefer_gpu_cores"), M::Float,
        "Prefer nodes with GPU hardware (CUDA cores). Extract the minimum number of GPUs required as a float number. Metadata field: 'prefer_gpu_cores' (MUST be a float, e.g., 4.0 for 4 GPUs)."),
    class(K::PreferTpu, C::ResourceBased, Some("prefer_tpu_cores"), M::Float,
        "Prefer nodes with TPU hardware (Tensor Processing Unit). Extract the minimum number of TPU cores required as a float number. Metadata field: 'prefer_tpu_cores' (MUST be a float, e.g., 8.0 for 8 TPU cores)."),
    class(K::PreferSsd, C::ResourceBased, None, M::None,
        "Prefer nodes with Solid State Drive (SSD) storage. No metadata required."),
    class(K::PreferPublicIp, C::ResourceBased, None, M::None,
        "Prefer nodes that have a public or external IP address. No metadata required."),
    class(K::PreferNetworkSpeed, C::ResourceBased, Some("prefer_network_gbps"), M::Float,
        "Prefer nodes with a minimum network bandwidth. Extract the speed in Gigabits per second (Gbps) as a float number. Metadata field: 'prefer_network_gbps' (MUST be a float, e.g., 100.0 for 100Gbps)."),
    class(K::PreferNetworkType, C::ResourceBased, Some("prefer_network_type"), M::String,
        "Prefer nodes with a specific network interface type. Extract the network type name as a string. Metadata field: 'prefer_network_type' (MUST be a string, e.g., 'infiniband', 'ena')."),
    class(K::PreferEphemeralStorage, C::ResourceBased, Some("prefer_ephemeral_storage_gb"), M::Float,
        "Prefer nodes with a minimum amount of local ephemeral storage. Extract the amount in Gigabytes as a float number. Metadata field: 'prefer_ephemeral_storage_gb' (MUST be a float, e.g., 500.0 for 500GB)."),
];

/// Read-only view over the 25 compiled-in intent classes.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntentRegistry;

impl IntentRegistry {
    pub fn classes(&self) -> &'static [IntentClass] {
        &REGISTRY
    }

    pub fn lookup(&self, name: &str) -> Result<&'static IntentClass, SchemaError> {
        let kind: IntentKind = name.parse()?;
        Ok(kind.class())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        REGISTRY.iter().map(IntentClass::name)
    }
}

/// Three-point linguistic priority multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Strength {
    Weak,
    #[default]
    Normal,
    Strong,
}

impl Strength {
    pub fn value(self) -> f64 {
        match self {
            Strength::Weak => 0.5,
            Strength::Normal => 1.0,
            Strength::Strong => 1.5,
        }
    }

    /// Snaps an arbitrary number onto the scale; midpoints round up.
    pub fn snap(value: f64) -> Strength {
        if value >= 1.25 {
            Strength::Strong
        } else if value >= 0.75 {
            Strength::Normal
        } else {
            Strength::Weak
        }
    }

    pub fn from_exact(value: f64) -> Option<Strength> {
        [Strength::Weak, Strength::Normal, Strength::Strong]
            .into_iter()
            .find(|s| s.value() == value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetadataValue {
    Float(f64),
    Text(String),
    List(Vec<String>),
}

impl MetadataValue {
    pub fn as_float(&self) -> Option<f64> {
        match self {
            MetadataValue::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            MetadataValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            MetadataValue::List(v) => Some(v),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            MetadataValue::Float(v) => Value::from(*v),
            MetadataValue::Text(s) => Value::from(s.as_str()),
            MetadataValue::List(v) => Value::from(v.clone()),
        }
    }
}

/// One parsed directive with its confidence, strength and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedIntent {
    pub intent: IntentKind,
    pub confidence: f64,
    pub strength: Strength,
    pub strength_explanation: Option<String>,
    pub metadata: BTreeMap<String, MetadataValue>,
}

impl DetectedIntent {
    /// Builds an intent with default metadata for its class.
    pub fn new(intent: IntentKind, confidence: f64, strength: Strength) -> Self {
        let class = intent.class();
        let mut metadata = BTreeMap::new();
        if let Some(field) = class.metadata_field {
            metadata.insert(field.to_string(), default_metadata(class.metadata_kind));
        }
        DetectedIntent {
            intent,
            confidence: confidence.clamp(0.0, 1.0),
            strength,
            strength_explanation: None,
            metadata,
        }
    }

    pub fn with_explanation(mut self, text: impl Into<String>) -> Self {
        let text = text.into();
        self.strength_explanation = (!text.trim().is_empty()).then_some(text);
        self
    }

    /// Replaces the class's metadata value. Ignored for classes without metadata.
    pub fn with_metadata(mut self, value: MetadataValue) -> Self {
        if let Some(field) = self.intent.class().metadata_field {
            self.metadata.insert(field.to_string(), value);
        }
        self
    }

    /// The value of the class's metadata field.
    pub fn metadata_value(&self) -> Option<&MetadataValue> {
        self.intent
            .class()
            .metadata_field
            .and_then(|f| self.metadata.get(f))
    }

    pub fn float_metadata(&self) -> f64 {
        self.metadata_value()
            .and_then(MetadataValue::as_float)
            .unwrap_or(1.0)
    }

    pub fn list_metadata(&self) -> &[String] {
        self.metadata_value()
            .and_then(MetadataValue::as_list)
            .unwrap_or(&[])
    }

    pub fn text_metadata(&self) -> &str {
        self.metadata_value()
            .and_then(MetadataValue::as_text)
            .unwrap_or("")
    }

    /// True when a non-default strength carries no explanation.
    pub fn missing_explanation(&self) -> bool {
        self.strength != Strength::Normal && self.strength_explanation.is_none()
    }

    pub fn to_wire(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("confidence".into(), Value::from(self.confidence));
        obj.insert("strength".into(), Value::from(self.strength.value()));
        if let Some(text) = &self.strength_explanation {
            obj.insert("strength_explanation".into(), Value::from(text.as_str()));
        }
        for (field, value) in &self.metadata {
            obj.insert(field.clone(), value.to_json());
        }
        Value::Object(obj)
    }
}

fn default_metadata(kind: MetadataKind) -> MetadataValue {
    match kind {
        MetadataKind::Float => MetadataValue::Float(1.0),
        MetadataKind::StringList => MetadataValue::List(Vec::new()),
        MetadataKind::String | MetadataKind::None => MetadataValue::Text(String::new()),
    }
}

fn lenient_number(value: &Value) -> Option<f64> {
    match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
        _ => None,
    }
}

/// Validates and normalizes one analyzer entry.
///
/// Confidence is clamped to `[0, 1]`, strength snapped to the nearest scale
/// point, missing metadata filled with class defaults and unknown fields
/// dropped. An absent confidence reads as `1.0`.
pub fn validate_detected(
    raw_intent_name: &str,
    raw_fields: &Map<String, Value>,
) -> Result<DetectedIntent, SchemaError> {
    let intent: IntentKind = raw_intent_name.trim().parse()?;
    let class = intent.class();

    let confidence = match raw_fields.get("confidence") {
        None | Some(Value::Null) => 1.0,
        Some(v) => lenient_number(v).ok_or_else(|| SchemaError::MalformedValue {
            intent: intent.name().to_string(),
            field: "confidence".into(),
            detail: format!("expected a number, got {v}"),
        })?,
    };

    let strength = match raw_fields.get("strength") {
        None | Some(Value::Null) => Strength::Normal,
        Some(v) => Strength::snap(lenient_number(v).ok_or_else(|| {
            SchemaError::MalformedValue {
                intent: intent.name().to_string(),
                field: "strength".into(),
                detail: format!("expected a number, got {v}"),
            }
        })?),
    };

    let strength_explanation = raw_fields
        .get("strength_explanation")
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string);

    let mut metadata = BTreeMap::new();
    if let Some(field) = class.metadata_field {
        let raw = raw_fields.get(field).filter(|v| !v.is_null());
        let value = match (class.metadata_kind, raw) {
            (kind, None) => default_metadata(kind),
            (MetadataKind::Float, Some(v)) => {
                MetadataValue::Float(lenient_number(v).unwrap_or(1.0))
            }
            (MetadataKind::String, Some(Value::String(s))) => MetadataValue::Text(s.trim().to_string()),
            (MetadataKind::String, Some(Value::Number(n))) => MetadataValue::Text(n.to_string()),
            (MetadataKind::String, Some(_)) => MetadataValue::Text(String::new()),
            (MetadataKind::StringList, Some(Value::Array(items))) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        Value::String(s) => out.push(s.clone()),
                        other => {
                            return Err(SchemaError::MalformedValue {
                                intent: intent.name().to_string(),
                                field: field.to_string(),
                                detail: format!("list item {other} is not a string"),
                            })
                        }
                    }
                }
                MetadataValue::List(out)
            }
            (MetadataKind::StringList, Some(other)) => {
                return Err(SchemaError::MalformedValue {
                    intent: intent.name().to_string(),
                    field: field.to_string(),
                    detail: format!("expected a list of strings, got {other}"),
                })
            }
            (MetadataKind::None, Some(_)) => unreachable!("metadata_field implies a kind"),
        };
        metadata.insert(field.to_string(), value);
    }

    Ok(DetectedIntent {
        intent,
        confidence: confidence.clamp(0.0, 1.0),
        strength,
        strength_explanation,
        metadata,
    })
}

/// Full parse of one hint: at most one entry per intent class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedHint {
    pub hint_text: String,
    pub intents: BTreeMap<IntentKind, DetectedIntent>,
}

impl ParsedHint {
    pub fn empty(hint_text: impl Into<String>) -> Self {
        ParsedHint {
            hint_text: hint_text.into(),
            intents: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn get(&self, kind: IntentKind) -> Option<&DetectedIntent> {
        self.intents.get(&kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = IntentKind> + '_ {
        self.intents.keys().copied()
    }

    /// Builds a parse from validated entries, keeping the most confident entry
    /// per class (first occurrence wins ties).
    pub fn from_entries(hint: impl Into<String>, entries: Vec<DetectedIntent>) -> Self {
        let mut intents: BTreeMap<IntentKind, DetectedIntent> = BTreeMap::new();
        for entry in entries {
            match intents.get(&entry.intent) {
                Some(existing) if existing.confidence >= entry.confidence => {}
                _ => {
                    intents.insert(entry.intent, entry);
                }
            }
        }
        ParsedHint {
            hint_text: hint.into(),
            intents,
        }
    }

    pub fn to_wire(&self) -> Value {
        let obj: Map<String, Value> = self
            .intents
            .values()
            .map(|d| (d.intent.name().to_string(), d.to_wire()))
            .collect();
        Value::Object(obj)
    }

    /// Strict decode of the wire object: every key must be a known intent.
    pub fn from_wire(hint: impl Into<String>, wire: &Value) -> Result<Self, SchemaError> {
        let obj = wire.as_object().ok_or_else(|| SchemaError::MalformedValue {
            intent: String::new(),
            field: String::new(),
            detail: "parsed hint must be a JSON object".into(),
        })?;
        let mut entries = Vec::with_capacity(obj.len());
        for (name, fields) in obj {
            let fields = fields.as_object().ok_or_else(|| SchemaError::MalformedValue {
                intent: name.clone(),
                field: String::new(),
                detail: "intent entry must be a JSON object".into(),
            })?;
            entries.push(validate_detected(name, fields)?);
        }
        Ok(ParsedHint::from_entries(hint, entries))
    }
}

/// Shorthand for [`ParsedHint::from_entries`].
pub fn parsed_hint_from_entries(hint: &str, entries: Vec<DetectedIntent>) -> ParsedHint {
    ParsedHint::from_entries(hint, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn fields(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn registry_has_25_classes_in_order() {
        let reg = IntentRegistry;
        assert_eq!(reg.classes().len(), 25);
        for (i, class) in reg.classes().iter().enumerate() {
            assert_eq!(class.kind as usize, i);
            assert_eq!(class.kind, IntentKind::ALL[i]);
        }
        assert_eq!(reg.classes()[0].name(), "prefer_colocate_same_deployment");
        assert_eq!(reg.classes()[24].name(), "prefer_ephemeral_storage");
    }

    #[test]
    fn metadata_field_present_iff_kind_not_none() {
        for class in IntentRegistry.classes() {
            assert_eq!(class.metadata_field.is_some(), class.metadata_kind != MetadataKind::None, "{}", class.name());
        }
        let strings: Vec<_> = IntentRegistry
            .classes()
            .iter()
            .filter(|c| c.metadata_kind == MetadataKind::String)
            .map(|c| c.metadata_field.unwrap())
            .collect();
        assert_eq!(strings, ["prefer_network_type"]);
        let floats: Vec<_> = IntentRegistry
            .classes()
            .iter()
            .filter(|c| c.metadata_kind == MetadataKind::Float)
            .map(|c| c.metadata_field.unwrap())
            .collect();
        assert_eq!(
            floats,
            [
                "prefer_memory_gb",
                "prefer_cpu_cores",
                "prefer_gpu_cores",
                "prefer_tpu_cores",
                "prefer_network_gbps",
                "prefer_ephemeral_storage_gb"
            ]
        );
    }

    #[test]
    fn lookup_examples() {
        let gpu = IntentRegistry.lookup("prefer_gpu").unwrap();
        assert_eq!(gpu.metadata_field, Some("prefer_gpu_cores"));
        assert_eq!(gpu.metadata_kind, MetadataKind::Float);
        assert_eq!(IntentRegistry.lookup("spread_zones").unwrap().metadata_kind, MetadataKind::None);
        assert!(matches!(
            IntentRegistry.lookup("prefer_quantum"),
            Err(SchemaError::UnknownIntent(n)) if n == "prefer_quantum"
        ));
    }

    #[test]
    fn strength_snapping() {
        assert_eq!(Strength::snap(0.5), Strength::Weak);
        assert_eq!(Strength::snap(0.7), Strength::Weak);
        assert_eq!(Strength::snap(0.75), Strength::Normal);
        assert_eq!(Strength::snap(1.25), Strength::Strong);
        assert_eq!(Strength::snap(2.0), Strength::Strong);
        assert_eq!(Strength::snap(-3.0), Strength::Weak);
    }

    #[test]
    fn validate_full_entry() {
        let d = validate_detected(
            "prefer_cpu",
            &fields(json!({"confidence": 0.9, "strength": 1.5, "strength_explanation": "must", "prefer_cpu_cores": 16.0})),
        )
        .unwrap();
        assert_eq!(d.intent, IntentKind::PreferCpu);
        assert_eq!(d.confidence, 0.9);
        assert_eq!(d.strength, Strength::Strong);
        assert_eq!(d.strength_explanation.as_deref(), Some("must"));
        assert_eq!(d.float_metadata(), 16.0);
    }

    #[test]
    fn validate_fills_defaults() {
        let d = validate_detected("prefer_memory", &fields(json!({"confidence": 0.8}))).unwrap();
        assert_eq!(d.strength, Strength::Normal);
        assert_eq!(d.metadata.get("prefer_memory_gb"), Some(&MetadataValue::Float(1.0)));

        let d = validate_detected("avoid_zones", &fields(json!({"confidence": 1.0, "avoid_zones": []}))).unwrap();
        assert_eq!(d.list_metadata(), &[] as &[String]);
    }

    #[test]
    fn validate_clamps_and_drops_extras() {
        let d = validate_detected(
            "prefer_gpu",
            &fields(json!({"confidence": 1.7, "strength": "1.4", "prefer_gpu_cores": "two", "note": "x"})),
        )
        .unwrap();
        assert_eq!(d.confidence, 1.0);
        assert_eq!(d.strength, Strength::Strong);
        assert_eq!(d.float_metadata(), 1.0);
        assert_eq!(d.metadata.len(), 1);
    }

    #[test]
    fn validate_errors() {
        assert!(matches!(
            validate_detected("prefer_quantum", &Map::new()),
            Err(SchemaError::UnknownIntent(_))
        ));
        assert!(matches!(
            validate_detected("prefer_gpu", &fields(json!({"confidence": "high"}))),
            Err(SchemaError::MalformedValue { .. })
        ));
        assert!(matches!(
            validate_detected("prefer_gpu", &fields(json!({"strength": [1]}))),
            Err(SchemaError::MalformedValue { .. })
        ));
        assert!(matches!(
            validate_detected("avoid_zones", &fields(json!({"avoid_zones": "us-east-1a"}))),
            Err(SchemaError::MalformedValue { .. })
        ));
        assert!(matches!(
            validate_detected("avoid_zones", &fields(json!({"avoid_zones": ["a", 3]}))),
            Err(SchemaError::MalformedValue { .. })
        ));
    }

    #[test]
    fn dedupe_keeps_most_confident() {
        let a = DetectedIntent::new(IntentKind::PreferGpu, 0.7, Strength::Normal);
        let b = DetectedIntent::new(IntentKind::PreferGpu, 0.9, Strength::Strong);
        let p = parsed_hint_from_entries("h", vec![a, b]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(IntentKind::PreferGpu).unwrap().confidence, 0.9);

        let first = DetectedIntent::new(IntentKind::PreferGpu, 0.8, Strength::Weak);
        let second = DetectedIntent::new(IntentKind::PreferGpu, 0.8, Strength::Strong);
        let p = parsed_hint_from_entries("h", vec![first, second]);
        assert_eq!(p.get(IntentKind::PreferGpu).unwrap().strength, Strength::Weak);

        assert!(parsed_hint_from_entries("h", vec![]).is_empty());
        let p = parsed_hint_from_entries(
            "h",
            vec![
                DetectedIntent::new(IntentKind::PreferGpu, 1.0, Strength::Normal),
                DetectedIntent::new(IntentKind::SpreadZones, 1.0, Strength::Normal),
            ],
        );
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn wire_shape_matches_output_example() {
        let wire = json!({
            "prefer_gpu": {"confidence": 0.98, "prefer_gpu_cores": 4.0, "strength": 1.5,
                           "strength_explanation": "User stated 'Requires 4 GPUs.'"},
            "avoid_regions": {"confidence": 0.95, "avoid_regions": ["us-east-1", "ap-south-1"], "strength": 1.0},
            "prefer_cpu": {"confidence": 0.90, "prefer_cpu_cores": 8.0, "strength": 0.5,
                           "strength_explanation": "User mentioned 'maybe 8 cores'"}
        });
        let parsed = ParsedHint::from_wire("h", &wire).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed.to_wire(), wire);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_fields() -> impl Strategy<Value = Map<String, Value>> {
            (
                prop::option::of(-1.0f64..2.0),
                prop::option::of(-1.0f64..3.0),
                prop::option::of("[a-z ]{0,8}"),
                prop::option::of(-5.0f64..500.0),
                prop::option::of(prop::collection::vec("[a-z0-9-]{1,6}", 0..4)),
            )
                .prop_map(|(c, s, e, f, l)| {
                    let mut m = Map::new();
                    if let Some(c) = c {
                        m.insert("confidence".into(), json!(c));
                    }
                    if let Some(s) = s {
                        m.insert("strength".into(), json!(s));
                    }
                    if let Some(e) = e {
                        m.insert("strength_explanation".into(), json!(e));
                    }
                    for field in ["prefer_memory_gb", "prefer_cpu_cores", "prefer_network_gbps"] {
                        if let Some(f) = f {
                            m.insert(field.into(), json!(f));
                        }
                    }
                    if let Some(l) = &l {
                        for field in ["prefer_zones", "avoid_nodes", "prefer_deployments"] {
                            m.insert(field.into(), json!(l));
                        }
                    }
                    m.insert("junk".into(), json!(true));
                    m
                })
        }

        proptest! {
            #[test]
            fn validation_is_idempotent(idx in 0usize..25, raw in arb_fields()) {
                let name = IntentKind::ALL[idx].name();
                let once = validate_detected(name, &raw).unwrap();
                let wire = once.to_wire();
                let twice = validate_detected(name, wire.as_object().unwrap()).unwrap();
                prop_assert_eq!(&once, &twice);
                let class = IntentKind::ALL[idx].class();
                match class.metadata_field {
                    Some(f) => {
                        prop_assert_eq!(once.metadata.len(), 1);
                        prop_assert!(once.metadata.contains_key(f));
                    }
                    None => prop_assert!(once.metadata.is_empty()),
                }
                prop_assert!((0.0..=1.0).contains(&once.confidence));
            }

            #[test]
            fn wire_round_trip(picks in prop::collection::vec((0usize..25, arb_fields()), 0..6)) {
                let entries: Vec<_> = picks
                    .iter()
                    .map(|(i, f)| validate_detected(IntentKind::ALL[*i].name(), f).unwrap())
                    .collect();
                let parsed = ParsedHint::from_entries("hint", entries);
                let decoded = ParsedHint::from_wire("hint", &parsed.to_wire()).unwrap();
                prop_assert_eq!(parsed, decoded);
            }
        }
    }
}
