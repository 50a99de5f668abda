//! Strict parser/validator for agent responses, plus prompt and observation
//! renderers.
//!
//! Accepted responses match, byte-for-byte:
//!
//! ```text
//! response  = ws , think , ws , payload , ws ;
//! think     = "<think>" , thought , "</think>" ;
//! payload   = tool-call | answer ;
//! tool-call = "<tool_call>" , body , "</tool_call>" ;
//! answer    = "<answer>" , text , "</answer>" ;
//! ```
//!
//! where `thought`, `body`, and `text` contain none of the six tag literals
//! (tag pairing is enforced lexically, so a stray `<think>` anywhere counts as
//! a second think tag), and `body` parses as a JSON object with a string field
//! `name`, an optional object field `arguments`, and nothing else. There is no
//! repair mode: anything else is a [`FormatViolation`].

pub mod templates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tools::{ToolResult, ToolSpec};
use crate::trajectory::{AgentAction, JsonObject};
use templates::TemplateSet;

/// Sentinel line rendered when a tool returns zero results.
pub const NO_RESULTS_SENTINEL: &str = "No results found.";

/// A response that passed every grammar rule.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedResponse {
    pub thought: String,
    pub payload: AgentAction,
}

impl ParsedResponse {
    /// Canonical wire form; re-parsing it yields an equal `ParsedResponse`.
    pub fn render(&self) -> String {
        format!(
            "<think>{}</think>{}",
            self.thought,
            self.payload.render_block()
        )
    }
}

/// First grammar rule violated, in document order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MissingThink,
    MultipleThink,
    MissingPayload,
    BothPayloads,
    UnclosedTag,
    BadTagOrder,
    MultipleToolCalls,
    InvalidToolJson,
    TrailingGarbage,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::MissingThink => "missing_think",
            ViolationKind::MultipleThink => "multiple_think",
            ViolationKind::MissingPayload => "missing_payload",
            ViolationKind::BothPayloads => "both_payloads",
            ViolationKind::UnclosedTag => "unclosed_tag",
            ViolationKind::BadTagOrder => "bad_tag_order",
            ViolationKind::MultipleToolCalls => "multiple_tool_calls",
            ViolationKind::InvalidToolJson => "invalid_tool_json",
            ViolationKind::TrailingGarbage => "trailing_garbage",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatViolation {
    pub kind: ViolationKind,
    /// Byte range of the offending tag or text, when identifiable.
    pub span: Option<(usize, usize)>,
}

impl FormatViolation {
    fn at(kind: ViolationKind, span: Option<(usize, usize)>) -> Self {
        Self { kind, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    ThinkOpen,
    ThinkClose,
    ToolOpen,
    ToolClose,
    AnswerOpen,
    AnswerClose,
}

const TAG_LITERALS: [(Tag, &str); 6] = [
    (Tag::ThinkOpen, "<think>"),
    (Tag::ThinkClose, "</think>"),
    (Tag::ToolOpen, "<tool_call>"),
    (Tag::ToolClose, "</tool_call>"),
    (Tag::AnswerOpen, "<answer>"),
    (Tag::AnswerClose, "</answer>"),
];

fn literal(tag: Tag) -> &'static str {
    TAG_LITERALS
        .iter()
        .find(|(t, _)| *t == tag)
        .map(|(_, l)| *l)
        .expect("tag literal")
}

/// Non-nesting lexical scan for all six tag literals, first-match, left to right.
fn scan_tags(text: &str) -> Vec<(Tag, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(rel) = text[i..].find('<') {
        let at = i + rel;
        let rest = &text[at..];
        let mut matched = None;
        for (tag, lit) in TAG_LITERALS {
            if rest.starts_with(lit) {
                matched = Some((tag, lit.len()));
                break;
            }
        }
        match matched {
            Some((tag, len)) => {
                out.push((tag, at));
                i = at + len;
            }
            None => i = at + 1,
        }
    }
    out
}

fn tag_span(tag: Tag, pos: usize) -> Option<(usize, usize)> {
    Some((pos, pos + literal(tag).len()))
}

fn tool_body_object(body: &str) -> Option<(String, JsonObject)> {
    let value: serde_json::Value = serde_json::from_str(body).ok()?;
    let obj = value.as_object()?;
    let name = match obj.get("name") {
        Some(serde_json::Value::String(s)) => s.clone(),
        _ => return None,
    };
    let mut arguments = JsonObject::new();
    for (key, val) in obj {
        match key.as_str() {
            "name" => {}
            "arguments" => match val {
                serde_json::Value::Object(map) => arguments = map.clone(),
                _ => return None,
            },
            _ => return None,
        }
    }
    Some((name, arguments))
}

/// Parse one model response under the strict grammar.
///
/// Total over arbitrary input: returns either a [`ParsedResponse`] or the first
/// [`FormatViolation`] in document order, and is deterministic per input.
pub fn parse_response(text: &str) -> Result<ParsedResponse, FormatViolation> {
    use Tag::*;
    use ViolationKind::*;

    let tags = scan_tags(text);
    if !tags.iter().any(|(t, _)| *t == ThinkOpen) {
        return Err(FormatViolation::at(MissingThink, None));
    }
    let (first_tag, first_pos) = tags[0];
    if !text[..first_pos].trim().is_empty() {
        return Err(FormatViolation::at(BadTagOrder, Some((0, first_pos))));
    }
    if first_tag != ThinkOpen {
        return Err(FormatViolation::at(BadTagOrder, tag_span(first_tag, first_pos)));
    }
    let thought_start = first_pos + literal(ThinkOpen).len();

    let Some(&(second_tag, second_pos)) = tags.get(1) else {
        return Err(FormatViolation::at(UnclosedTag, tag_span(first_tag, first_pos)));
    };
    match second_tag {
        ThinkClose => {}
        ThinkOpen => {
            return Err(FormatViolation::at(MultipleThink, tag_span(second_tag, second_pos)))
        }
        _ => return Err(FormatViolation::at(BadTagOrder, tag_span(second_tag, second_pos))),
    }
    let thought = &text[thought_start..second_pos];
    let after_think = second_pos + literal(ThinkClose).len();

    let Some(&(open_tag, open_pos)) = tags.get(2) else {
        return Err(FormatViolation::at(MissingPayload, None));
    };
    if !text[after_think..open_pos].trim().is_empty() {
        return Err(FormatViolation::at(BadTagOrder, Some((after_think, open_pos))));
    }
    match open_tag {
        ToolOpen | AnswerOpen => {}
        ThinkOpen | ThinkClose => {
            return Err(FormatViolation::at(MultipleThink, tag_span(open_tag, open_pos)))
        }
        ToolClose | AnswerClose => {
            return Err(FormatViolation::at(BadTagOrder, tag_span(open_tag, open_pos)))
        }
    }
    let body_start = open_pos + literal(open_tag).len();

    let Some(&(close_tag, close_pos)) = tags.get(3) else {
        return Err(FormatViolation::at(UnclosedTag, tag_span(open_tag, open_pos)));
    };
    let expected_close = if open_tag == ToolOpen { ToolClose } else { AnswerClose };
    if close_tag != expected_close {
        let kind = match (open_tag, close_tag) {
            (_, ThinkOpen) | (_, ThinkClose) => MultipleThink,
            (ToolOpen, ToolOpen) => MultipleToolCalls,
            (ToolOpen, AnswerOpen) | (ToolOpen, AnswerClose) => BothPayloads,
            (AnswerOpen, ToolOpen) | (AnswerOpen, ToolClose) => BothPayloads,
            (AnswerOpen, AnswerOpen) => BadTagOrder,
            _ => BadTagOrder,
        };
        return Err(FormatViolation::at(kind, tag_span(close_tag, close_pos)));
    }
    let body = &text[body_start..close_pos];

    // The payload body precedes everything after the close tag in document
    // order, so tool JSON validity is checked before trailing content.
    let payload = if open_tag == ToolOpen {
        match tool_body_object(body) {
            Some((name, arguments)) => AgentAction::ToolInvocation { name, arguments },
            None => {
                return Err(FormatViolation::at(
                    InvalidToolJson,
                    Some((body_start, close_pos)),
                ))
            }
        }
    } else {
        AgentAction::FinalAnswer { text: body.to_string() }
    };

    let after_close = close_pos + literal(expected_close).len();
    if let Some(&(extra_tag, extra_pos)) = tags.get(4) {
        if !text[after_close..extra_pos].trim().is_empty() {
            return Err(FormatViolation::at(
                TrailingGarbage,
                Some((after_close, extra_pos)),
            ));
        }
        let kind = match extra_tag {
            ThinkOpen | ThinkClose => MultipleThink,
            ToolOpen | ToolClose => {
                if open_tag == ToolOpen {
                    MultipleToolCalls
                } else {
                    BothPayloads
                }
            }
            AnswerOpen | AnswerClose => {
                if open_tag == ToolOpen {
                    BothPayloads
                } else {
                    TrailingGarbage
                }
            }
        };
        return Err(FormatViolation::at(kind, tag_span(extra_tag, extra_pos)));
    }
    if !text[after_close..].trim().is_empty() {
        return Err(FormatViolation::at(
            TrailingGarbage,
            Some((after_close, text.len())),
        ));
    }

    Ok(ParsedResponse {
        thought: thought.to_string(),
        payload,
    })
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("tool_specs must be non-empty")]
    EmptyToolset,
    #[error(transparent)]
    Template(#[from] templates::TemplateError),
}

/// Render the shipped system prompt with the tool JSON block and current date
/// substituted. Byte-identical for identical inputs.
pub fn render_system_prompt(
    set: &TemplateSet,
    current_date: &str,
    tool_specs: &[ToolSpec],
) -> Result<String, RenderError> {
    if tool_specs.is_empty() {
        return Err(RenderError::EmptyToolset);
    }
    let tools_block = tool_specs
        .iter()
        .map(|s| s.spec_json)
        .collect::<Vec<_>>()
        .join("\n");
    Ok(templates::substitute(
        &set.system_prompt,
        &[("{TOOLS}", tools_block.as_str()), ("{CURRENT_DATE}", current_date)],
    ))
}

/// Observation text can legally contain `</tool_response>` (scraped pages);
/// escape both tag forms so transcripts stay parseable.
fn escape_tool_response_tags(s: &str) -> String {
    s.replace("<tool_response>", "&lt;tool_response&gt;")
        .replace("</tool_response>", "&lt;/tool_response&gt;")
}

fn wrap_tool_response(body: &str) -> String {
    format!(
        "<tool_response>\n{}\n</tool_response>",
        escape_tool_response_tags(body)
    )
}

/// Render a tool result as the observation block shown to the agent.
/// Result listings are numbered from 1; empty result sets get an explicit
/// sentinel line.
pub fn render_tool_response(result: &ToolResult) -> String {
    let body = match result {
        ToolResult::TextSearch { results } => {
            if results.is_empty() {
                NO_RESULTS_SENTINEL.to_string()
            } else {
                results
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        format!(
                            "{}. [Link] {} [Title] {} [Snippet] {}",
                            i + 1,
                            r.link,
                            r.title,
                            r.snippet
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            }
        }
        ToolResult::ImageSearch { results } => {
            if results.is_empty() {
                NO_RESULTS_SENTINEL.to_string()
            } else {
                results
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        format!(
                            "{}. [Image URL] {} [Page Link] {} [Page Title] {}",
                            i + 1,
                            r.image_url,
                            r.page_link,
                            r.page_title
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            }
        }
        ToolResult::Visit { result } => result.summary.clone(),
    };
    wrap_tool_response(&body)
}

/// Render a dispatch failure as an observation block so the trajectory can
/// continue instead of aborting.
pub fn render_tool_error(message: &str) -> String {
    wrap_tool_response(&format!("Error: {message}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tools::{default_toolset, TextSearchResult, VisitResult};

    fn kind_of(text: &str) -> ViolationKind {
        parse_response(text).unwrap_err().kind
    }

    #[test]
    fn parses_answer_payload() {
        let parsed = parse_response("<think>t</think><answer>Titanic</answer>").unwrap();
        assert_eq!(parsed.thought, "t");
        assert_eq!(
            parsed.payload,
            AgentAction::FinalAnswer {
                text: "Titanic".into()
            }
        );
    }

    #[test]
    fn parses_tool_call_payload() {
        let parsed = parse_response(
            "<think>t</think><tool_call>{\"name\": \"image_search\", \"arguments\": {}}</tool_call>",
        )
        .unwrap();
        match parsed.payload {
            AgentAction::ToolInvocation { name, arguments } => {
                assert_eq!(name, "image_search");
                assert!(arguments.is_empty());
            }
            _ => panic!("expected tool invocation"),
        }
    }

    #[test]
    fn whitespace_between_blocks_is_permitted() {
        let parsed =
            parse_response("  <think>t</think>\n\n<answer>x</answer>\n").unwrap();
        assert_eq!(parsed.thought, "t");
    }

    #[test]
    fn both_payloads_rejected() {
        assert_eq!(
            kind_of("<think>t</think><tool_call>{\"name\": \"visit\"}</tool_call><answer>x</answer>"),
            ViolationKind::BothPayloads
        );
    }

    #[test]
    fn invalid_tool_json_rejected() {
        assert_eq!(
            kind_of("<think>t</think><tool_call>not json</tool_call>"),
            ViolationKind::InvalidToolJson
        );
        // Valid JSON but not the required shape.
        assert_eq!(
            kind_of("<think>t</think><tool_call>[1,2]</tool_call>"),
            ViolationKind::InvalidToolJson
        );
        assert_eq!(
            kind_of("<think>t</think><tool_call>{\"arguments\": {}}</tool_call>"),
            ViolationKind::InvalidToolJson
        );
        assert_eq!(
            kind_of("<think>t</think><tool_call>{\"name\": \"x\", \"extra\": 1}</tool_call>"),
            ViolationKind::InvalidToolJson
        );
    }

    #[test]
    fn missing_think_rejected() {
        assert_eq!(kind_of("<answer>x</answer>"), ViolationKind::MissingThink);
        assert_eq!(kind_of("no tags at all"), ViolationKind::MissingThink);
    }

    #[test]
    fn multiple_think_rejected_lexically() {
        assert_eq!(
            kind_of("<think>a<think>b</think><answer>x</answer>"),
            ViolationKind::MultipleThink
        );
        assert_eq!(
            kind_of("<think>a</think><think>b</think><answer>x</answer>"),
            ViolationKind::MultipleThink
        );
        // A stray literal inside the payload body also counts.
        assert_eq!(
            kind_of("<think>a</think><answer>x<think></answer>"),
            ViolationKind::MultipleThink
        );
    }

    #[test]
    fn missing_payload_rejected() {
        assert_eq!(kind_of("<think>t</think>"), ViolationKind::MissingPayload);
        assert_eq!(kind_of("<think>t</think>  \n"), ViolationKind::MissingPayload);
    }

    #[test]
    fn unclosed_tags_rejected() {
        assert_eq!(kind_of("<think>t"), ViolationKind::UnclosedTag);
        assert_eq!(
            kind_of("<think>t</think><answer>x"),
            ViolationKind::UnclosedTag
        );
        assert_eq!(
            kind_of("<think>t</think><tool_call>{\"name\": \"v\"}"),
            ViolationKind::UnclosedTag
        );
    }

    #[test]
    fn bad_tag_order_rejected() {
        assert_eq!(
            kind_of("<answer>x</answer><think>t</think>"),
            ViolationKind::BadTagOrder
        );
        assert_eq!(
            kind_of("past the start<think>t</think><answer>x</answer>"),
            ViolationKind::BadTagOrder
        );
        assert_eq!(
            kind_of("<think>t</think>garbage<answer>x</answer>"),
            ViolationKind::BadTagOrder
        );
    }

    #[test]
    fn multiple_tool_calls_rejected() {
        assert_eq!(
            kind_of(
                "<think>t</think><tool_call>{\"name\": \"a\"}</tool_call><tool_call>{\"name\": \"b\"}</tool_call>"
            ),
            ViolationKind::MultipleToolCalls
        );
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert_eq!(
            kind_of("<think>t</think><answer>x</answer>trailing"),
            ViolationKind::TrailingGarbage
        );
    }

    #[test]
    fn empty_answer_parses() {
        let parsed = parse_response("<think>t</think><answer></answer>").unwrap();
        assert_eq!(
            parsed.payload,
            AgentAction::FinalAnswer { text: String::new() }
        );
    }

    #[test]
    fn soundness_round_trip() {
        let inputs = [
            "<think>some thought</think><answer>Yes.</answer>",
            "<think></think><tool_call>{\"name\": \"text_search\", \"arguments\": {\"query\": \"q\"}}</tool_call>",
            "  <think>pad</think>\n<tool_call>{\"name\": \"visit\", \"arguments\": {\"url\": \"https://e\", \"goal\": \"g\"}}</tool_call>  ",
        ];
        for input in inputs {
            let parsed = parse_response(input).unwrap();
            let rendered = parsed.render();
            let reparsed = parse_response(&rendered).unwrap();
            assert_eq!(parsed, reparsed, "round trip for {input:?}");
        }
    }

    #[test]
    fn determinism_identical_inputs() {
        let input = "<think>t</think><tool_call>oops</tool_call>";
        assert_eq!(parse_response(input), parse_response(input));
    }

    #[test]
    fn system_prompt_contains_all_tool_specs_and_date() {
        let set = TemplateSet::builtin();
        let specs = default_toolset();
        let prompt = render_system_prompt(&set, "2025-11-01", &specs).unwrap();
        for spec in &specs {
            assert!(prompt.contains(spec.spec_json), "missing {}", spec.name);
        }
        assert!(prompt.contains("Current date: 2025-11-01"));
        let again = render_system_prompt(&set, "2025-11-01", &specs).unwrap();
        assert_eq!(prompt, again, "byte-identical rendering");
    }

    #[test]
    fn empty_toolset_rejected() {
        let set = TemplateSet::builtin();
        assert!(matches!(
            render_system_prompt(&set, "2025-11-01", &[]),
            Err(RenderError::EmptyToolset)
        ));
    }

    #[test]
    fn tool_response_numbering_starts_at_one() {
        let results: Vec<TextSearchResult> = (0..5)
            .map(|i| TextSearchResult {
                link: format!("https://e/{i}"),
                title: format!("t{i}"),
                snippet: format!("s{i}"),
            })
            .collect();
        let block = render_tool_response(&ToolResult::TextSearch { results });
        assert!(block.starts_with("<tool_response>\n1. [Link] https://e/0"));
        assert!(block.contains("\n5. [Link] https://e/4"));
        assert!(block.ends_with("\n</tool_response>"));
    }

    #[test]
    fn empty_results_render_sentinel() {
        let block = render_tool_response(&ToolResult::TextSearch { results: vec![] });
        assert!(block.contains(NO_RESULTS_SENTINEL));
    }

    #[test]
    fn visit_summary_rendered_verbatim() {
        let block = render_tool_response(&ToolResult::Visit {
            result: VisitResult {
                url: "https://e".into(),
                goal: "genre".into(),
                summary: "The artwork belongs to the installation genre.".into(),
            },
        });
        assert!(block.contains("The artwork belongs to the installation genre."));
    }

    #[test]
    fn embedded_tool_response_tags_are_escaped() {
        let block = render_tool_response(&ToolResult::Visit {
            result: VisitResult {
                url: "https://e".into(),
                goal: "g".into(),
                summary: "page shows </tool_response> literally".into(),
            },
        });
        assert_eq!(block.matches("</tool_response>").count(), 1);
        assert!(block.contains("&lt;/tool_response&gt;"));
    }
}
