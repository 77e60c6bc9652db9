//! Hint analysis: sanitization, backends and the memoizing analyzer front.

pub mod backend;
pub mod decode;
pub mod prompt;
pub mod regex_engine;

use std::collections::HashMap;
use std::sync::Arc;
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use regex::Regex;

pub use backend::{
    AnalyzerBackend, AnalyzerConfig, Dialect, LlmBackend, RegexBackend, ScriptedBackend, ScriptedRecord, Source,
};
pub use decode::{decode_model_response, Decoded};
pub use prompt::build_prompt;
pub use regex_engine::regex_parse;

use crate::intent::ParsedHint;

static DASH_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new("-{3,}").expect("static pattern"));

/// Strips control characters (newlines and tabs survive), collapses runs of
/// three or more dashes so the hint cannot forge prompt delimiters, and
/// truncates to `max_len` characters.
pub fn sanitize_hint(text: &str, max_len: usize) -> String {
    let cleaned: String = text
        .chars()
        .filter(|&c| !c.is_control() || c == '\n' || c == '\t')
        .collect();
    let collapsed = DASH_RUN.replace_all(&cleaned, "-");
    collapsed.chars().take(max_len).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutcome {
    pub parsed: ParsedHint,
    pub latency: Duration,
    pub source: Source,
    /// The backend failed and `parsed` is an empty stand-in.
    pub degraded: bool,
}

type Slot = Arc<Mutex<Option<ParsedHint>>>;

/// Front for one backend with a per-hint memo.
///
/// Concurrent callers with the same hint serialize on that hint's slot, so the
/// backend sees at most one call per distinct hint. Failed calls are not
/// memoized; the next request for that hint tries again.
pub struct IntentAnalyzer {
    backend: Box<dyn AnalyzerBackend>,
    max_hint_length: usize,
    memo: Mutex<HashMap<String, Slot>>,
}

impl std::fmt::Debug for IntentAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntentAnalyzer")
            .field("source", &self.backend.source())
            .field("max_hint_length", &self.max_hint_length)
            .finish()
    }
}

impl IntentAnalyzer {
    pub fn new(backend: impl AnalyzerBackend + 'static, max_hint_length: usize) -> Self {
        IntentAnalyzer {
            backend: Box::new(backend),
            max_hint_length,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn regex() -> Self {
        Self::new(RegexBackend, AnalyzerConfig::default().max_hint_length)
    }

    pub fn backend_source(&self) -> Source {
        self.backend.source()
    }

    pub fn clear_cache(&self) {
        self.memo.lock().clear();
    }

    pub fn analyze(&self, hint: &str) -> AnalysisOutcome {
        let started = Instant::now();
        let sanitized = sanitize_hint(hint, self.max_hint_length);
        if sanitized.trim().is_empty() {
            return AnalysisOutcome {
                parsed: ParsedHint::empty(sanitized),
                latency: started.elapsed(),
                source: self.backend.source(),
                degraded: false,
            };
        }

        let slot = self.memo.lock().entry(hint.to_string()).or_default().clone();
        let mut guard = slot.lock();
        if let Some(parsed) = guard.as_ref() {
            return AnalysisOutcome {
                parsed: parsed.clone(),
                latency: started.elapsed(),
                source: Source::Cache,
                degraded: false,
            };
        }
        match self.backend.parse(&sanitized) {
            Ok(parsed) => {
                *guard = Some(parsed.clone());
                AnalysisOutcome {
                    parsed,
                    latency: started.elapsed(),
                    source: self.backend.source(),
                    degraded: false,
                }
            }
            Err(e) => {
                log::warn!("hint analysis failed, scoring without intents: {e}");
                AnalysisOutcome {
                    parsed: ParsedHint::empty(sanitized),
                    latency: started.elapsed(),
                    source: self.backend.source(),
                    degraded: true,
                }
            }
        }
    }
}
