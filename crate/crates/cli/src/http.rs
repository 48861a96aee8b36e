//! OpenAI-compatible chat completions backend.

use std::env;
use std::sync::Arc;
use std::time::Duration;

use mafia_core::agent::backend::{BackendRequest, BackendResponse, TokenUsage};
use mafia_core::agent::{Backend, BackendError};
use mafia_core::arena::{ArenaError, BackendConfig, BackendFactory};
use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::json;

/// Bearer token for HTTP backends. Read from the environment only.
pub const API_KEY_VAR: &str = "MAFIA_API_KEY";

pub struct HttpBackend {
    name: String,
    url: String,
    model: String,
    key: Option<String>,
    client: Client,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    pub fn new(name: &str, base_url: &str, model: &str, timeout: Duration) -> Result<Self, ArenaError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ArenaError::Config(format!("backend `{name}`: {e}")))?;
        Ok(HttpBackend {
            name: name.to_string(),
            url: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            model: model.to_string(),
            key: env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            client,
        })
    }

    fn body(&self, req: &BackendRequest) -> serde_json::Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.prompt()},
            ],
            "max_tokens": req.params.max_tokens,
            "temperature": req.params.temperature,
            "seed": req.params.seed,
        })
    }
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let mut call = self.client.post(&self.url).json(&self.body(req));
        if let Some(key) = &self.key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Unavailable(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::Unavailable(format!("HTTP {status}")));
        }
        let body: Completion = resp.json().map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        let text = body
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::InvalidResponse("no completion text".into()))?;
        let mut out = BackendResponse::new(req, text);
        if let Some(u) = body.usage {
            out.usage = TokenUsage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens };
        }
        Ok(out)
    }
}

/// Builds factories for `kind = "http"` entries of an arena config.
pub fn factory(name: &str, cfg: &BackendConfig) -> Result<BackendFactory, ArenaError> {
    let BackendConfig::Http { base_url, model, timeout_secs } = cfg else {
        return Err(ArenaError::Config(format!("backend `{name}` is not an HTTP backend")));
    };
    let backend: Arc<dyn Backend> =
        Arc::new(HttpBackend::new(name, base_url, model, Duration::from_secs(*timeout_secs))?);
    // One client shared across games; reqwest clients are safe to share.
    Ok(Arc::new(move |_| backend.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mafia_core::agent::backend::{GenerationParams, Segment, SegmentKind, Task};

    #[test]
    fn request_body_is_chat_shaped() {
        let b = HttpBackend::new("m", "http://localhost:1/v1/", "tiny", Duration::from_secs(1)).unwrap();
        assert_eq!(b.url, "http://localhost:1/v1/chat/completions");
        let req = BackendRequest {
            task: Task::Vote,
            system: "sys".into(),
            segments: vec![Segment { kind: SegmentKind::Instructions, text: "vote now".into() }],
            params: GenerationParams::default(),
            candidates: vec![],
        };
        let body = b.body(&req);
        assert_eq!(body["model"], "tiny");
        assert_eq!(body["messages"][0]["content"], "sys");
        assert_eq!(body["messages"][1]["content"], "vote now\n");
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let b = HttpBackend::new("m", "http://127.0.0.1:9", "tiny", Duration::from_secs(2)).unwrap();
        let req = BackendRequest {
            task: Task::Speak,
            system: String::new(),
            segments: vec![],
            params: GenerationParams::default(),
            candidates: vec![],
        };
        assert!(matches!(b.generate(&req), Err(BackendError::Unavailable(_) | BackendError::Timeout)));
    }
}
