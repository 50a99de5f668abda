//! Live web backends: Google Custom Search for text, Google Vision web
//! detection for image search, and a reader API plus summarizer LLM for visit.
//!
//! Credentials come from environment variables: `SEARCH_API_KEYS`
//! (comma-separated, rotated round-robin), `SEARCH_ENGINE_ID`,
//! `VISION_API_KEY`, `READER_API_KEY`, and `SUMMARIZER_API_BASE` /
//! `SUMMARIZER_API_KEY`.

use std::sync::Arc;
use std::time::Duration;

use super::keypool::KeyPool;
use super::{ImageSearchResult, TextSearchResult, ToolBackend, ToolError, VisitResult, RESULT_CAP};
use crate::grammar::templates::{substitute, TemplateSet};
use crate::llm::LlmBackend;

/// Google Custom Search daily request cap per key.
pub const DAILY_SEARCH_BUDGET: u64 = 10_000;

/// Per-candidate timeout when probing image reachability.
pub const IMAGE_PROBE_TIMEOUT: Duration = Duration::from_secs(5);

/// Cap applied to visit summaries to protect the context budget.
pub const SUMMARY_CHAR_CAP: usize = 2_000;

/// Cap on page content handed to the summarizer.
const PAGE_CONTENT_CHAR_CAP: usize = 60_000;

pub struct LiveToolBackend {
    client: reqwest::blocking::Client,
    search_keys: KeyPool,
    search_engine_id: String,
    vision_key: String,
    reader_key: Option<String>,
    summarizer: Arc<dyn LlmBackend>,
    templates: TemplateSet,
    summary_cap: usize,
}

impl LiveToolBackend {
    pub fn new(
        search_keys: KeyPool,
        search_engine_id: String,
        vision_key: String,
        reader_key: Option<String>,
        summarizer: Arc<dyn LlmBackend>,
    ) -> Self {
        Self {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("http client"),
            search_keys,
            search_engine_id,
            vision_key,
            reader_key,
            summarizer,
            templates: TemplateSet::builtin(),
            summary_cap: SUMMARY_CHAR_CAP,
        }
    }

    /// Assemble from environment variables; `None` when search keys are absent.
    pub fn from_env(summarizer: Arc<dyn LlmBackend>) -> Option<Self> {
        let search_keys = KeyPool::from_env("SEARCH_API_KEYS", DAILY_SEARCH_BUDGET)?;
        Some(Self::new(
            search_keys,
            std::env::var("SEARCH_ENGINE_ID").unwrap_or_default(),
            std::env::var("VISION_API_KEY").unwrap_or_default(),
            std::env::var("READER_API_KEY").ok(),
            summarizer,
        ))
    }

    fn quota_exceeded(status: reqwest::StatusCode) -> bool {
        status.as_u16() == 429 || status.as_u16() == 403
    }

    /// Probe that a candidate URL is reachable and serves an image file.
    fn image_reachable(&self, url: &str) -> bool {
        let probe = reqwest::blocking::Client::builder()
            .timeout(IMAGE_PROBE_TIMEOUT)
            .build();
        let Ok(client) = probe else { return false };
        match client.get(url).send() {
            Ok(resp) if resp.status().is_success() => resp
                .headers()
                .get(reqwest::header::CONTENT_TYPE)
                .and_then(|v| v.to_str().ok())
                .map(|ct| ct.starts_with("image/"))
                .unwrap_or(false),
            _ => false,
        }
    }
}

impl ToolBackend for LiveToolBackend {
    fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError> {
        // Rotate keys on provider quota errors until the pool is spent.
        loop {
            let key = self.search_keys.acquire()?;
            let resp = self
                .client
                .get("https://www.googleapis.com/customsearch/v1")
                .query(&[
                    ("key", key.as_str()),
                    ("cx", self.search_engine_id.as_str()),
                    ("q", query),
                    ("num", "5"),
                ])
                .send()
                .map_err(|e| ToolError::ProviderError(e.to_string()))?;
            if Self::quota_exceeded(resp.status()) {
                self.search_keys.exhaust(&key);
                continue;
            }
            if !resp.status().is_success() {
                return Err(ToolError::ProviderError(format!(
                    "search returned {}",
                    resp.status()
                )));
            }
            let value: serde_json::Value = resp
                .json()
                .map_err(|e| ToolError::ProviderError(e.to_string()))?;
            let items = value["items"].as_array().cloned().unwrap_or_default();
            return Ok(items
                .iter()
                .take(RESULT_CAP)
                .map(|item| TextSearchResult {
                    link: item["link"].as_str().unwrap_or_default().to_string(),
                    title: item["title"].as_str().unwrap_or_default().to_string(),
                    snippet: item["snippet"].as_str().unwrap_or_default().to_string(),
                })
                .collect());
        }
    }

    fn image_search(&self, task_image: &str) -> Result<Vec<ImageSearchResult>, ToolError> {
        let body = serde_json::json!({
            "requests": [{
                "image": {"source": {"imageUri": task_image}},
                "features": [{"type": "WEB_DETECTION", "maxResults": 20}],
            }]
        });
        let resp = self
            .client
            .post("https://vision.googleapis.com/v1/images:annotate")
            .query(&[("key", self.vision_key.as_str())])
            .json(&body)
            .send()
            .map_err(|e| ToolError::ProviderError(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ToolError::ProviderError(format!(
                "vision returned {}",
                resp.status()
            )));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| ToolError::ProviderError(e.to_string()))?;
        let pages = value["responses"][0]["webDetection"]["pagesWithMatchingImages"]
            .as_array()
            .cloned()
            .unwrap_or_default();

        // Iterate pages; keep one reachable, valid image per page, skipping
        // failures and moving on down the provider list.
        let mut results = Vec::new();
        let mut seen_pages = std::collections::HashSet::new();
        for page in pages {
            if results.len() == RESULT_CAP {
                break;
            }
            let page_link = page["url"].as_str().unwrap_or_default().to_string();
            if page_link.is_empty() || !seen_pages.insert(page_link.clone()) {
                continue;
            }
            let page_title = page["pageTitle"].as_str().unwrap_or_default().to_string();
            let mut candidates = Vec::new();
            for field in ["fullMatchingImages", "partialMatchingImages"] {
                if let Some(images) = page[field].as_array() {
                    for img in images {
                        if let Some(url) = img["url"].as_str() {
                            candidates.push(url.to_string());
                        }
                    }
                }
            }
            if let Some(image_url) = candidates.into_iter().find(|u| self.image_reachable(u)) {
                results.push(ImageSearchResult {
                    image_url,
                    page_link,
                    page_title,
                });
            }
        }
        Ok(results)
    }

    fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError> {
        let reader_url = format!("https://r.jina.ai/{url}");
        let mut req = self.client.get(&reader_url);
        if let Some(key) = &self.reader_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| ToolError::FetchFailed(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ToolError::FetchFailed(format!(
                "reader returned {}",
                resp.status()
            )));
        }
        let mut markdown = resp
            .text()
            .map_err(|e| ToolError::FetchFailed(e.to_string()))?;
        if markdown.len() > PAGE_CONTENT_CHAR_CAP {
            markdown = truncate_at_char_boundary(&markdown, PAGE_CONTENT_CHAR_CAP);
        }

        let prompt = substitute(
            &self.templates.summary_prompt,
            &[("{WEB_PAGE_CONTENT}", markdown.as_str()), ("{USER_GOAL}", goal)],
        );
        let summary = self
            .summarizer
            .complete(&prompt)
            .map_err(|e| ToolError::SummarizerFailed(e.to_string()))?;
        let summary = truncate_at_char_boundary(&summary, self.summary_cap);
        Ok(VisitResult {
            url: url.to_string(),
            goal: goal.to_string(),
            summary,
        })
    }
}

fn truncate_at_char_boundary(s: &str, max_bytes: usize) -> String {
    if s.len() <= max_bytes {
        return s.to_string();
    }
    let mut end = max_bytes;
    while end > 0 && !s.is_char_boundary(end) {
        end -= 1;
    }
    s[..end].to_string()
}
