//! Tool registry and backends for `text_search`, `image_search`, and `visit`.
//!
//! A [`ToolBackend`] supplies the three raw tools; the [`Gateway`] validates
//! parsed invocations against the tool registry, enforces result caps and
//! image-page dedup, and converts visit failures into explicit failure-marker
//! results instead of aborting the calling trajectory.

pub mod cache;
pub mod keypool;
pub mod live;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::JsonObject;

/// Every tool returns at most this many entries.
pub const RESULT_CAP: usize = 5;

/// Marker prefix used in [`VisitResult::summary`] when the fetch or the
/// summarizer failed.
pub const VISIT_FAILURE_MARKER: &str = "[visit failed]";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TextSearchResult {
    pub link: String,
    pub title: String,
    pub snippet: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ImageSearchResult {
    pub image_url: String,
    pub page_link: String,
    pub page_title: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VisitResult {
    pub url: String,
    pub goal: String,
    pub summary: String,
}

impl VisitResult {
    pub fn failed(url: impl Into<String>, goal: impl Into<String>, reason: &str) -> Self {
        Self {
            url: url.into(),
            goal: goal.into(),
            summary: format!("{VISIT_FAILURE_MARKER} {reason}"),
        }
    }

    pub fn is_failure(&self) -> bool {
        self.summary.starts_with(VISIT_FAILURE_MARKER)
    }
}

/// Structured payload returned by one tool call.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "tool", rename_all = "snake_case")]
pub enum ToolResult {
    TextSearch { results: Vec<TextSearchResult> },
    ImageSearch { results: Vec<ImageSearchResult> },
    Visit { result: VisitResult },
}

impl ToolResult {
    pub fn tool_name(&self) -> &'static str {
        match self {
            ToolResult::TextSearch { .. } => "text_search",
            ToolResult::ImageSearch { .. } => "image_search",
            ToolResult::Visit { .. } => "visit",
        }
    }
}

/// Which kind of backend serves tool calls. `Recorded` never touches the network.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Simulated,
    Recorded,
}

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("query must be non-empty")]
    EmptyQuery,
    #[error("task has no image; image_search operates on the initial task image")]
    NoTaskImage,
    #[error("rate limited: all API keys at budget")]
    RateLimited,
    #[error("provider error: {0}")]
    ProviderError(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("bad arguments for `{tool}`: {detail}")]
    BadArguments { tool: String, detail: String },
    #[error("fetch failed: {0}")]
    FetchFailed(String),
    #[error("summarizer failed: {0}")]
    SummarizerFailed(String),
}

/// Raw tool surface implemented by live, simulated, and recorded backends.
///
/// Implementations must tolerate concurrent calls from many trajectories.
pub trait ToolBackend: Send + Sync {
    fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError>;
    fn image_search(&self, task_image: &str) -> Result<Vec<ImageSearchResult>, ToolError>;
    fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError>;
}

/// One registry entry: the tool name, its JSON spec block as shown to the
/// model, and the argument contract enforced at dispatch.
#[derive(Clone, Debug)]
pub struct ToolSpec {
    pub name: &'static str,
    pub spec_json: &'static str,
    pub required_args: &'static [&'static str],
    pub takes_arguments: bool,
}

pub const TEXT_SEARCH_SPEC: &str = r#"{"type": "function", "function": {"name": "text_search", "description": "Perform a Google web search and return a string of the top search results.", "parameters": {"type": "object", "properties": {"query": {"type": "string", "description": "The search query."}}, "required": ["query"]}}}"#;

pub const IMAGE_SEARCH_SPEC: &str = r#"{"type": "function", "function": {"name": "image_search", "description": "Perform a Google image search on the given image and return a list of URLs of similar images, along with the titles and links of the pages where they appear. Note that the image search is only conducted on the initial image provided by the user, so no parameters are needed for this tool."}}"#;

pub const VISIT_SPEC: &str = r#"{"type": "function", "function": {"name": "visit", "description": "Visit a webpage and return a summary of its content.", "parameters": {"type": "object", "properties": {"url": {"type": "string", "description": "The URL of the webpage to visit."}, "goal": {"type": "string", "description": "The specific information goal for visiting the webpage."}}, "required": ["url", "goal"]}}}"#;

/// The default three-tool registry.
pub fn default_toolset() -> Vec<ToolSpec> {
    vec![
        ToolSpec {
            name: "text_search",
            spec_json: TEXT_SEARCH_SPEC,
            required_args: &["query"],
            takes_arguments: true,
        },
        ToolSpec {
            name: "image_search",
            spec_json: IMAGE_SEARCH_SPEC,
            required_args: &[],
            takes_arguments: false,
        },
        ToolSpec {
            name: "visit",
            spec_json: VISIT_SPEC,
            required_args: &["url", "goal"],
            takes_arguments: true,
        },
    ]
}

/// Context a dispatch needs beyond the invocation itself: the calling task's
/// image locator, if any.
#[derive(Clone, Debug, Default)]
pub struct TaskContext {
    pub image_ref: Option<String>,
}

/// Tool registry plus backend: validates and routes parsed tool calls.
pub struct Gateway {
    backend: std::sync::Arc<dyn ToolBackend>,
    registry: Vec<ToolSpec>,
}

impl Gateway {
    pub fn new(backend: std::sync::Arc<dyn ToolBackend>) -> Self {
        Self {
            backend,
            registry: default_toolset(),
        }
    }

    pub fn registry(&self) -> &[ToolSpec] {
        &self.registry
    }

    fn spec(&self, name: &str) -> Result<&ToolSpec, ToolError> {
        self.registry
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ToolError::UnknownTool(name.to_string()))
    }

    fn arg_str<'a>(
        tool: &str,
        arguments: &'a JsonObject,
        key: &str,
    ) -> Result<&'a str, ToolError> {
        match arguments.get(key) {
            Some(serde_json::Value::String(s)) => Ok(s),
            Some(_) => Err(ToolError::BadArguments {
                tool: tool.to_string(),
                detail: format!("`{key}` must be a string"),
            }),
            None => Err(ToolError::BadArguments {
                tool: tool.to_string(),
                detail: format!("missing required argument `{key}`"),
            }),
        }
    }

    fn validate_args(&self, spec: &ToolSpec, arguments: &JsonObject) -> Result<(), ToolError> {
        for key in spec.required_args {
            if !arguments.contains_key(*key) {
                return Err(ToolError::BadArguments {
                    tool: spec.name.to_string(),
                    detail: format!("missing required argument `{key}`"),
                });
            }
        }
        for key in arguments.keys() {
            let known = spec.takes_arguments && spec.required_args.contains(&key.as_str());
            if !known {
                return Err(ToolError::BadArguments {
                    tool: spec.name.to_string(),
                    detail: format!("unexpected argument `{key}`"),
                });
            }
        }
        Ok(())
    }

    /// Validate a parsed tool invocation against the registry and route it to
    /// the backend. Visit fetch/summarizer failures come back as failure-marker
    /// results, not errors.
    pub fn dispatch(
        &self,
        name: &str,
        arguments: &JsonObject,
        ctx: &TaskContext,
    ) -> Result<ToolResult, ToolError> {
        let spec = self.spec(name)?;
        self.validate_args(spec, arguments)?;
        match spec.name {
            "text_search" => {
                let query = Self::arg_str("text_search", arguments, "query")?;
                if query.trim().is_empty() {
                    return Err(ToolError::EmptyQuery);
                }
                let mut results = self.backend.text_search(query)?;
                results.truncate(RESULT_CAP);
                Ok(ToolResult::TextSearch { results })
            }
            "image_search" => {
                let image = ctx.image_ref.as_deref().ok_or(ToolError::NoTaskImage)?;
                let results = self.backend.image_search(image)?;
                Ok(ToolResult::ImageSearch {
                    results: dedup_image_pages(results),
                })
            }
            "visit" => {
                let url = Self::arg_str("visit", arguments, "url")?;
                let goal = Self::arg_str("visit", arguments, "goal")?;
                if goal.trim().is_empty() {
                    return Err(ToolError::BadArguments {
                        tool: "visit".to_string(),
                        detail: "`goal` must be non-empty".to_string(),
                    });
                }
                if url::Url::parse(url).is_err() {
                    return Ok(ToolResult::Visit {
                        result: VisitResult::failed(url, goal, "URL is not parseable"),
                    });
                }
                let result = match self.backend.visit(url, goal) {
                    Ok(r) => r,
                    Err(ToolError::FetchFailed(reason)) => {
                        VisitResult::failed(url, goal, &format!("fetch failed: {reason}"))
                    }
                    Err(ToolError::SummarizerFailed(reason)) => {
                        VisitResult::failed(url, goal, &format!("summarizer failed: {reason}"))
                    }
                    Err(other) => return Err(other),
                };
                Ok(ToolResult::Visit { result })
            }
            _ => Err(ToolError::UnknownTool(spec.name.to_string())),
        }
    }
}

/// Keep at most one image per distinct page link, preserving provider order,
/// capped at [`RESULT_CAP`].
pub fn dedup_image_pages(results: Vec<ImageSearchResult>) -> Vec<ImageSearchResult> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for r in results {
        if seen.insert(r.page_link.clone()) {
            out.push(r);
            if out.len() == RESULT_CAP {
                break;
            }
        }
    }
    out
}
