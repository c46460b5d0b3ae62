//! Generation backends: prompt in, unified-diff text out.
//!
//! Shipped implementations: a scripted mock for deterministic tests and
//! replay, and a generic HTTP chat-completion client for real model
//! endpoints (opt-in; endpoint and model come from the loop config, the
//! credential from an environment variable).

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("generation backend {backend}: {detail}")]
pub struct GeneratorError {
    pub backend: String,
    pub detail: String,
}

pub trait GenerationBackend {
    fn name(&self) -> &str;
    fn generate(&mut self, prompt: &str) -> Result<String, GeneratorError>;
}

/// One scripted turn: a canned reply or an injected backend failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedResponse {
    Reply(String),
    Fail(String),
}

/// Deterministic backend replaying a fixed response sequence. When the
/// script runs out it repeats its last entry, so a one-entry script models a
/// backend that always answers the same way.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    name: String,
    responses: Vec<ScriptedResponse>,
    cursor: usize,
}

impl ScriptedBackend {
    pub fn new(responses: Vec<ScriptedResponse>) -> Self {
        assert!(!responses.is_empty(), "script must have at least one entry");
        ScriptedBackend {
            name: "scripted".to_string(),
            responses,
            cursor: 0,
        }
    }

    pub fn replies<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedBackend::new(
            replies
                .into_iter()
                .map(|r| ScriptedResponse::Reply(r.into()))
                .collect(),
        )
    }

    /// How many generate calls the backend has served.
    pub fn calls(&self) -> usize {
        self.cursor
    }
}

impl GenerationBackend for ScriptedBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&mut self, _prompt: &str) -> Result<String, GeneratorError> {
        let idx = self.cursor.min(self.responses.len() - 1);
        self.cursor += 1;
        match &self.responses[idx] {
            ScriptedResponse::Reply(text) => Ok(text.clone()),
            ScriptedResponse::Fail(detail) => Err(GeneratorError {
                backend: self.name.clone(),
                detail: detail.clone(),
            }),
        }
    }
}

/// Pull the unified diff out of a model reply: fenced ```diff blocks are
/// unwrapped, otherwise the reply is trimmed to its first `--- ` header.
pub fn extract_diff_text(reply: &str) -> String {
    let trimmed = reply.trim();
    if let Some(start) = trimmed.find("```") {
        let after = &trimmed[start + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after[body_start..];
        if let Some(end) = body.find("```") {
            return body[..end].trim_start().to_string();
        }
    }
    match trimmed.find("--- ") {
        Some(pos) => trimmed[pos..].to_string(),
        None => trimmed.to_string(),
    }
}

/// Chat-completion client speaking the common `POST {endpoint}` JSON shape:
/// `{"model": ..., "messages": [{"role": "user", "content": ...}]}` with the
/// reply at `choices[0].message.content`.
pub struct HttpChatBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatBackend {
    pub fn new(endpoint: String, model: String, api_key: Option<String>) -> Self {
        HttpChatBackend {
            endpoint,
            model,
            api_key,
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Construct from loop config fields, reading the credential from the
    /// configured environment variable.
    pub fn from_config(config: &super::LoopConfig) -> Result<Self, GeneratorError> {
        let endpoint = config
            .backend_endpoint
            .clone()
            .ok_or_else(|| GeneratorError {
                backend: "http".into(),
                detail: "backend_endpoint not configured".into(),
            })?;
        let model = config.backend_model.clone().unwrap_or_default();
        let api_key = std::env::var(&config.api_key_env).ok();
        Ok(HttpChatBackend::new(endpoint, model, api_key))
    }
}

impl GenerationBackend for HttpChatBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn generate(&mut self, prompt: &str) -> Result<String, GeneratorError> {
        let err = |detail: String| GeneratorError {
            backend: "http".into(),
            detail,
        };
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| err(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(err(format!("endpoint returned {status}")));
        }
        let value: serde_json::Value = response.json().map_err(|e| err(e.to_string()))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| err("missing choices[0].message.content".into()))?;
        Ok(extract_diff_text(content))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_sequence_then_repeats_last() {
        let mut backend = ScriptedBackend::replies(["first", "second"]);
        assert_eq!(backend.generate("p").unwrap(), "first");
        assert_eq!(backend.generate("p").unwrap(), "second");
        assert_eq!(backend.generate("p").unwrap(), "second");
        assert_eq!(backend.calls(), 3);
    }

    #[test]
    fn scripted_failure_injection() {
        let mut backend = ScriptedBackend::new(vec![
            ScriptedResponse::Fail("rate limited".into()),
            ScriptedResponse::Reply("ok".into()),
        ]);
        assert!(backend.generate("p").is_err());
        assert_eq!(backend.generate("p").unwrap(), "ok");
    }

    #[test]
    fn fenced_reply_is_unwrapped() {
        let reply = "Here is the patch:\n```diff\n--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n+b\n```\nDone.";
        let diff = extract_diff_text(reply);
        assert!(diff.starts_with("--- a/x.c"));
        assert!(!diff.contains("```"));
    }

    #[test]
    fn prose_prefix_is_stripped() {
        let reply = "Sure! Apply this:\n--- a/x.c\n+++ b/x.c\n@@ -1 +1 @@\n-a\n+b\n";
        assert!(extract_diff_text(reply).starts_with("--- a/x.c"));
    }
}
