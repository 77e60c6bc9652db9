//! Tolerant decoding of model completions.

use serde_json::Value;

use crate::error::DecodeError;
use crate::intent::{validate_detected, ParsedHint};

/// A decoded completion plus whatever was dropped along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub parsed: ParsedHint,
    pub warnings: Vec<String>,
}

/// Returns the first top-level `{...}` span, skipping braces inside strings.
pub fn outermost_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Decodes a completion that should hold one JSON object of intents.
///
/// Code fences and surrounding prose are ignored. Unknown intent names and
/// malformed entries are dropped with a warning rather than failing the call.
pub fn decode_model_response(hint: &str, text: &str) -> Result<Decoded, DecodeError> {
    let object = outermost_object(text).ok_or(DecodeError::NoObject)?;
    let value: Value = serde_json::from_str(object)?;
    let Value::Object(map) = value else {
        return Err(DecodeError::NoObject);
    };

    let mut entries = Vec::with_capacity(map.len());
    let mut warnings = Vec::new();
    for (name, fields) in &map {
        let Some(fields) = fields.as_object() else {
            warnings.push(format!("dropped `{name}`: entry is not an object"));
            continue;
        };
        match validate_detected(name, fields) {
            Ok(d) => entries.push(d),
            Err(e) => warnings.push(format!("dropped `{name}`: {e}")),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Decoded {
        parsed: ParsedHint::from_entries(hint, entries),
        warnings,
    })
}
