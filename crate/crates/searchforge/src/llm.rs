//! Model backend traits shared by synthesis, judging, summarization, and the
//! rollout policy, plus a live OpenAI-compatible chat backend.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend failed: {0}")]
    Failed(String),
}

/// Text-only model: one rendered prompt in, one completion out.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

/// Multimodal model: prompt plus an optional image locator.
pub trait LvlmBackend: Send + Sync {
    fn complete_multimodal(
        &self,
        prompt: &str,
        image_ref: Option<&str>,
    ) -> Result<String, BackendError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    /// Image locator attached to this message (first user turn only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
            image_ref: None,
        }
    }

    pub fn user(content: impl Into<String>, image_ref: Option<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            image_ref,
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            image_ref: None,
        }
    }

    pub fn tool(content: impl Into<String>) -> Self {
        Self {
            role: Role::Tool,
            content: content.into(),
            image_ref: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presence_penalty: Option<f64>,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.6,
            top_p: 0.9,
            max_tokens: 28_000,
            presence_penalty: None,
        }
    }
}

/// Call `f` up to `attempts` times, returning the first success.
pub fn with_retries<T, E>(
    attempts: usize,
    mut f: impl FnMut(usize) -> Result<T, E>,
) -> Result<T, E> {
    let mut last_err = None;
    for attempt in 0..attempts.max(1) {
        match f(attempt) {
            Ok(v) => return Ok(v),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Live backend speaking the OpenAI-compatible `/chat/completions` protocol.
///
/// Serves as summarizer, judge, synthesis LLM, or rollout policy depending on
/// where it is plugged in. Credentials come from the environment; endpoints
/// from the run config.
pub struct OpenAiCompatBackend {
    base_url: String,
    api_key: Option<String>,
    model: String,
    client: reqwest::blocking::Client,
}

impl OpenAiCompatBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key,
            model: model.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(std::time::Duration::from_secs(300))
                .build()
                .expect("http client"),
        }
    }

    fn message_json(msg: &ChatMessage) -> serde_json::Value {
        let role = match msg.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            // OpenAI-style chat has no bare observation role; tool responses
            // ride as user turns carrying the <tool_response> block.
            Role::Tool => "user",
        };
        match &msg.image_ref {
            Some(image) => serde_json::json!({
                "role": role,
                "content": [
                    {"type": "text", "text": msg.content},
                    {"type": "image_url", "image_url": {"url": image}},
                ],
            }),
            None => serde_json::json!({"role": role, "content": msg.content}),
        }
    }

    /// One chat completion over the full message list.
    pub fn chat(
        &self,
        messages: &[ChatMessage],
        sampling: &SamplingParams,
    ) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": messages.iter().map(Self::message_json).collect::<Vec<_>>(),
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_tokens,
        });
        if let Some(penalty) = sampling.presence_penalty {
            body["presence_penalty"] = serde_json::json!(penalty);
        }
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(BackendError::Failed(format!(
                "{} from {url}",
                resp.status()
            )));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| BackendError::Failed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| BackendError::Failed("response missing choices[0].message.content".into()))
    }
}

impl LlmBackend for OpenAiCompatBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        self.chat(
            &[ChatMessage::user(prompt, None)],
            &SamplingParams {
                temperature: 0.0,
                top_p: 1.0,
                max_tokens: 4_096,
                presence_penalty: None,
            },
        )
    }
}

impl LvlmBackend for OpenAiCompatBackend {
    fn complete_multimodal(
        &self,
        prompt: &str,
        image_ref: Option<&str>,
    ) -> Result<String, BackendError> {
        self.chat(
            &[ChatMessage::user(prompt, image_ref.map(|s| s.to_string()))],
            &SamplingParams {
                temperature: 0.0,
                top_p: 1.0,
                max_tokens: 4_096,
                presence_penalty: None,
            },
        )
    }
}
