//! Record/replay response cache.
//!
//! Responses are cached as content-addressed JSON files keyed by
//! sha256(tool + canonicalized arguments). [`RecordingBackend`] fills the cache
//! from a live backend; [`ReplayBackend`] serves only from the cache and never
//! issues network traffic, so a recorded session replays byte-identically.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::Value;

use super::{ImageSearchResult, TextSearchResult, ToolBackend, ToolError, ToolResult, VisitResult};
use crate::grammar::templates::sha256_hex;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    /// Content address for one call: sha256 over the canonical JSON of
    /// `{"args": ..., "tool": ...}` (object keys sorted by serde_json).
    pub fn cache_key(tool: &str, args: &[(&str, &str)]) -> String {
        let mut obj = serde_json::Map::new();
        let mut arg_obj = serde_json::Map::new();
        for (k, v) in args {
            arg_obj.insert(k.to_string(), Value::String(v.to_string()));
        }
        obj.insert("args".to_string(), Value::Object(arg_obj));
        obj.insert("tool".to_string(), Value::String(tool.to_string()));
        sha256_hex(Value::Object(obj).to_string().as_bytes())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<ToolResult> {
        let raw = std::fs::read_to_string(self.path_for(key)).ok()?;
        serde_json::from_str(&raw).ok()
    }

    /// Write-then-rename so concurrent readers never see partial files.
    pub fn put(&self, key: &str, result: &ToolResult) -> std::io::Result<()> {
        let tmp = self.dir.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&tmp, serde_json::to_string(result).unwrap())?;
        std::fs::rename(&tmp, self.path_for(key))?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Pass-through backend that records every response into the cache.
pub struct RecordingBackend<B> {
    inner: B,
    cache: ResponseCache,
}

impl<B: ToolBackend> RecordingBackend<B> {
    pub fn new(inner: B, cache: ResponseCache) -> Self {
        Self { inner, cache }
    }
}

impl<B: ToolBackend> ToolBackend for RecordingBackend<B> {
    fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError> {
        let key = ResponseCache::cache_key("text_search", &[("query", query)]);
        if let Some(ToolResult::TextSearch { results }) = self.cache.get(&key) {
            return Ok(results);
        }
        let results = self.inner.text_search(query)?;
        let _ = self.cache.put(
            &key,
            &ToolResult::TextSearch {
                results: results.clone(),
            },
        );
        Ok(results)
    }

    fn image_search(&self, task_image: &str) -> Result<Vec<ImageSearchResult>, ToolError> {
        let key = ResponseCache::cache_key("image_search", &[("image", task_image)]);
        if let Some(ToolResult::ImageSearch { results }) = self.cache.get(&key) {
            return Ok(results);
        }
        let results = self.inner.image_search(task_image)?;
        let _ = self.cache.put(
            &key,
            &ToolResult::ImageSearch {
                results: results.clone(),
            },
        );
        Ok(results)
    }

    fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError> {
        let key = ResponseCache::cache_key("visit", &[("goal", goal), ("url", url)]);
        if let Some(ToolResult::Visit { result }) = self.cache.get(&key) {
            return Ok(result);
        }
        let result = self.inner.visit(url, goal)?;
        let _ = self.cache.put(
            &key,
            &ToolResult::Visit {
                result: result.clone(),
            },
        );
        Ok(result)
    }
}

/// Cache-only backend; a miss is a [`ToolError::ProviderError`], never a fetch.
pub struct ReplayBackend {
    cache: ResponseCache,
}

impl ReplayBackend {
    pub fn new(cache: ResponseCache) -> Self {
        Self { cache }
    }

    fn miss(key: &str) -> ToolError {
        ToolError::ProviderError(format!("no recorded fixture for key {key}"))
    }
}

impl ToolBackend for ReplayBackend {
    fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError> {
        let key = ResponseCache::cache_key("text_search", &[("query", query)]);
        match self.cache.get(&key) {
            Some(ToolResult::TextSearch { results }) => Ok(results),
            _ => Err(Self::miss(&key)),
        }
    }

    fn image_search(&self, task_image: &str) -> Result<Vec<ImageSearchResult>, ToolError> {
        let key = ResponseCache::cache_key("image_search", &[("image", task_image)]);
        match self.cache.get(&key) {
            Some(ToolResult::ImageSearch { results }) => Ok(results),
            _ => Err(Self::miss(&key)),
        }
    }

    fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError> {
        let key = ResponseCache::cache_key("visit", &[("goal", goal), ("url", url)]);
        match self.cache.get(&key) {
            Some(ToolResult::Visit { result }) => Ok(result),
            _ => Err(Self::miss(&key)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    /// Counts calls so tests can prove replay never reaches the network side.
    struct CountingBackend {
        calls: AtomicUsize,
    }

    impl ToolBackend for CountingBackend {
        fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(vec![TextSearchResult {
                link: format!("https://example.org/{query}"),
                title: query.to_string(),
                snippet: "snippet".into(),
            }])
        }

        fn image_search(&self, image: &str) -> Result<Vec<ImageSearchResult>, ToolError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(vec![ImageSearchResult {
                image_url: image.to_string(),
                page_link: "https://example.org/p".into(),
                page_title: "p".into(),
            }])
        }

        fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(VisitResult {
                url: url.into(),
                goal: goal.into(),
                summary: "sum".into(),
            })
        }
    }

    #[test]
    fn record_then_replay_is_identical_without_inner_calls() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let counting = CountingBackend {
            calls: AtomicUsize::new(0),
        };
        let recorder = RecordingBackend::new(counting, cache.clone());

        let a1 = recorder.text_search("q1").unwrap();
        let b1 = recorder.image_search("img").unwrap();
        let c1 = recorder.visit("https://example.org", "goal").unwrap();
        assert_eq!(recorder.inner.calls.load(Ordering::SeqCst), 3);

        // Second pass through the recorder hits the cache.
        let a2 = recorder.text_search("q1").unwrap();
        assert_eq!(recorder.inner.calls.load(Ordering::SeqCst), 3);
        assert_eq!(a1, a2);

        // Replay-only backend returns identical payloads.
        let replay = ReplayBackend::new(ResponseCache::new(dir.path()).unwrap());
        assert_eq!(replay.text_search("q1").unwrap(), a1);
        assert_eq!(replay.image_search("img").unwrap(), b1);
        assert_eq!(replay.visit("https://example.org", "goal").unwrap(), c1);

        // A miss is a provider error, not a network call.
        assert!(matches!(
            replay.text_search("never-recorded"),
            Err(ToolError::ProviderError(_))
        ));
    }

    #[test]
    fn cache_key_is_order_insensitive_for_args() {
        let k1 = ResponseCache::cache_key("visit", &[("goal", "g"), ("url", "u")]);
        let k2 = ResponseCache::cache_key("visit", &[("url", "u"), ("goal", "g")]);
        assert_eq!(k1, k2);
    }
}
