//! Optional TOML settings file. Every key mirrors a command-line flag; flags
//! and environment variables take precedence over the file.
//!
//! ```toml
//! backend = "scripted"
//! format = "json"
//!
//! [llm]
//! endpoint = "http://127.0.0.1:8081/v1/complete"
//! timeout_ms = 5000
//!
//! [serve]
//! listen = "0.0.0.0:8888"
//! snapshot = "cluster.json"
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<String>,
    pub format: Option<String>,
    pub scripted_fixture: Option<PathBuf>,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub serve: ServeSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub dialect: Option<String>,
    pub timeout_ms: Option<u64>,
    pub api_key: Option<String>,
    pub max_tokens: Option<u32>,
    pub max_hint_length: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub listen: Option<String>,
    pub snapshot: Option<PathBuf>,
    pub resync_secs: Option<u64>,
    pub deployment_label: Option<String>,
    pub placement_ttl_ms: Option<u64>,
    pub recent_placements: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub dataset: Option<PathBuf>,
    pub lenient: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: Option<String>,
    pub inter_arrival_ms: Option<u64>,
    pub visibility_delay_ms: Option<u64>,
    pub recent_placements: Option<bool>,
}

impl FileConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let c = FileConfig::parse(
            r#"
            backend = "llm"
            format = "json"
            [llm]
            endpoint = "http://x/v1"
            timeout_ms = 250
            [serve]
            listen = "127.0.0.1:9999"
            recent_placements = false
            [scenario]
            inter_arrival_ms = 10
            "#,
        )
        .unwrap();
        assert_eq!(c.backend.as_deref(), Some("llm"));
        assert_eq!(c.llm.timeout_ms, Some(250));
        assert_eq!(c.serve.recent_placements, Some(false));
        assert_eq!(c.scenario.inter_arrival_ms, Some(10));
        assert_eq!(c.eval, EvalSection::default());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(FileConfig::parse("backnd = \"regex\"").is_err());
        assert!(FileConfig::parse("[serve]\nport = 1").is_err());
    }
}
