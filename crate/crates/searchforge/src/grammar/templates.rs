//! Shipped prompt templates and `{PLACEHOLDER}` substitution.
//!
//! Templates are embedded at compile time and can be overridden by a template
//! directory supplied through the run config. Substitution is literal string
//! replacement; rendering the same inputs yields byte-identical output.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template `{0}` missing from {1}")]
    TemplateMissing(String, String),
}

/// File names used when loading a template directory override.
pub const TEMPLATE_FILES: [&str; 11] = [
    "system_prompt.txt",
    "judge_prompt.txt",
    "summary_prompt.txt",
    "initial_qa_prompt.txt",
    "entity_selection_prompt.txt",
    "info_parsing_prompt.txt",
    "text_injection_prompt.txt",
    "image_entity_selection_prompt.txt",
    "image_injection_prompt.txt",
    "direct_answer_prompt.txt",
    "image_eval_prompt.txt",
];

/// The full set of shipped prompts.
#[derive(Clone, Debug)]
pub struct TemplateSet {
    pub system_prompt: String,
    pub judge_prompt: String,
    pub summary_prompt: String,
    pub initial_qa_prompt: String,
    pub entity_selection_prompt: String,
    pub info_parsing_prompt: String,
    pub text_injection_prompt: String,
    pub image_entity_selection_prompt: String,
    pub image_injection_prompt: String,
    pub direct_answer_prompt: String,
    pub image_eval_prompt: String,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    /// The compiled-in templates.
    pub fn builtin() -> Self {
        Self {
            system_prompt: include_str!("templates/system_prompt.txt").to_string(),
            judge_prompt: include_str!("templates/judge_prompt.txt").to_string(),
            summary_prompt: include_str!("templates/summary_prompt.txt").to_string(),
            initial_qa_prompt: include_str!("templates/initial_qa_prompt.txt").to_string(),
            entity_selection_prompt: include_str!("templates/entity_selection_prompt.txt")
                .to_string(),
            info_parsing_prompt: include_str!("templates/info_parsing_prompt.txt").to_string(),
            text_injection_prompt: include_str!("templates/text_injection_prompt.txt").to_string(),
            image_entity_selection_prompt: include_str!(
                "templates/image_entity_selection_prompt.txt"
            )
            .to_string(),
            image_injection_prompt: include_str!("templates/image_injection_prompt.txt")
                .to_string(),
            direct_answer_prompt: include_str!("templates/direct_answer_prompt.txt").to_string(),
            image_eval_prompt: include_str!("templates/image_eval_prompt.txt").to_string(),
        }
    }

    /// Load every template from a directory, requiring all files to be present.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let load = |name: &str| -> Result<String, TemplateError> {
            std::fs::read_to_string(dir.join(name)).map_err(|_| {
                TemplateError::TemplateMissing(name.to_string(), dir.display().to_string())
            })
        };
        Ok(Self {
            system_prompt: load("system_prompt.txt")?,
            judge_prompt: load("judge_prompt.txt")?,
            summary_prompt: load("summary_prompt.txt")?,
            initial_qa_prompt: load("initial_qa_prompt.txt")?,
            entity_selection_prompt: load("entity_selection_prompt.txt")?,
            info_parsing_prompt: load("info_parsing_prompt.txt")?,
            text_injection_prompt: load("text_injection_prompt.txt")?,
            image_entity_selection_prompt: load("image_entity_selection_prompt.txt")?,
            image_injection_prompt: load("image_injection_prompt.txt")?,
            direct_answer_prompt: load("direct_answer_prompt.txt")?,
            image_eval_prompt: load("image_eval_prompt.txt")?,
        })
    }

    /// sha256 digest per template, for run manifests.
    pub fn digests(&self) -> Vec<(String, String)> {
        let entries: [(&str, &str); 11] = [
            ("system_prompt", &self.system_prompt),
            ("judge_prompt", &self.judge_prompt),
            ("summary_prompt", &self.summary_prompt),
            ("initial_qa_prompt", &self.initial_qa_prompt),
            ("entity_selection_prompt", &self.entity_selection_prompt),
            ("info_parsing_prompt", &self.info_parsing_prompt),
            ("text_injection_prompt", &self.text_injection_prompt),
            (
                "image_entity_selection_prompt",
                &self.image_entity_selection_prompt,
            ),
            ("image_injection_prompt", &self.image_injection_prompt),
            ("direct_answer_prompt", &self.direct_answer_prompt),
            ("image_eval_prompt", &self.image_eval_prompt),
        ];
        entries
            .iter()
            .map(|(name, body)| (name.to_string(), sha256_hex(body.as_bytes())))
            .collect()
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Replace each `{PLACEHOLDER}` occurrence literally.
pub fn substitute(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (placeholder, value) in pairs {
        out = out.replace(placeholder, value);
    }
    out
}
