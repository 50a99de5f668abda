//! Canonical data model and JSONL persistence for tasks and ReAct trajectories.
//!
//! A [`Trajectory`] is the immutable record of one episode: ordered
//! (thought, action, observation) steps plus a termination reason. Records are
//! built through [`TrajectoryBuilder`], which enforces step-index contiguity,
//! observation/action consistency, and the single-terminal-answer rule, and are
//! persisted one JSON object per line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type JsonObject = serde_json::Map<String, serde_json::Value>;

/// Difficulty level of a browsing task, determining the number of text
/// injection rounds applied during synthesis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Benchmark,
}

impl Difficulty {
    /// Number of text-information injection rounds for this level.
    pub fn injection_rounds(self) -> usize {
        match self {
            Difficulty::Easy => 1,
            Difficulty::Medium => 3,
            Difficulty::Hard => 5,
            Difficulty::Benchmark => 10,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
            Difficulty::Benchmark => "benchmark",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    Synthesized,
    ExternalBenchmark,
}

/// A multimodal browsing question with its gold answer.
///
/// `image_ref` is a locator (path, URL, or sim descriptor), never pixel data.
/// Its presence marks the task as multimodal.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub task_id: String,
    pub question_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    pub gold_answer: String,
    pub difficulty: Difficulty,
    pub source: TaskSource,
    /// Identifier of the synthesis record that produced this task, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl Task {
    pub fn is_multimodal(&self) -> bool {
        self.image_ref.is_some()
    }

    /// Structural validity: synthesized tasks must carry a non-empty gold answer.
    pub fn validate(&self) -> Result<(), String> {
        if self.source == TaskSource::Synthesized && self.gold_answer.trim().is_empty() {
            return Err(format!(
                "task {}: synthesized task with empty gold_answer",
                self.task_id
            ));
        }
        if self.task_id.is_empty() {
            return Err("task with empty task_id".to_string());
        }
        Ok(())
    }
}

/// What the agent did at one step: call a tool or emit the final answer.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentAction {
    ToolInvocation {
        name: String,
        arguments: JsonObject,
    },
    FinalAnswer {
        text: String,
    },
}

impl AgentAction {
    pub fn is_tool_invocation(&self) -> bool {
        matches!(self, AgentAction::ToolInvocation { .. })
    }

    pub fn tool_name(&self) -> Option<&str> {
        match self {
            AgentAction::ToolInvocation { name, .. } => Some(name),
            AgentAction::FinalAnswer { .. } => None,
        }
    }

    /// Render the action back into its tagged wire form.
    pub fn render_block(&self) -> String {
        match self {
            AgentAction::ToolInvocation { name, arguments } => {
                let mut obj = JsonObject::new();
                obj.insert("name".into(), serde_json::Value::String(name.clone()));
                if !arguments.is_empty() {
                    obj.insert(
                        "arguments".into(),
                        serde_json::Value::Object(arguments.clone()),
                    );
                } else {
                    obj.insert("arguments".into(), serde_json::Value::Object(JsonObject::new()));
                }
                format!(
                    "<tool_call>{}</tool_call>",
                    serde_json::Value::Object(obj)
                )
            }
            AgentAction::FinalAnswer { text } => format!("<answer>{text}</answer>"),
        }
    }
}

/// One (thought, action, observation) triple inside a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub index: usize,
    pub thought: String,
    pub action: AgentAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<String>,
}

/// Why a trajectory ended.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Answered,
    FormatViolation,
    StepLimit,
    Timeout,
    ContextOverflow,
    ToolError,
}

impl Termination {
    pub const ALL: [Termination; 6] = [
        Termination::Answered,
        Termination::FormatViolation,
        Termination::StepLimit,
        Termination::Timeout,
        Termination::ContextOverflow,
        Termination::ToolError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Answered => "answered",
            Termination::FormatViolation => "format_violation",
            Termination::StepLimit => "step_limit",
            Termination::Timeout => "timeout",
            Termination::ContextOverflow => "context_overflow",
            Termination::ToolError => "tool_error",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TokenAccounting {
    pub prompt_tokens: u64,
    pub response_tokens: u64,
}

/// Immutable, finalized trajectory record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub task_id: String,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<String>,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_accounting: Option<TokenAccounting>,
}

impl Trajectory {
    pub fn is_answered(&self) -> bool {
        self.termination == Termination::Answered
    }

    /// Number of steps whose action is a tool invocation.
    pub fn tool_call_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.action.is_tool_invocation())
            .count()
    }

    /// Check every structural invariant of a finalized record.
    pub fn validate(&self) -> Result<(), String> {
        for (i, step) in self.steps.iter().enumerate() {
            if step.index != i {
                return Err(format!(
                    "step index {} at position {i} breaks contiguity",
                    step.index
                ));
            }
            let is_tool = step.action.is_tool_invocation();
            if is_tool != step.observation.is_some() {
                return Err(format!(
                    "step {i}: observation presence does not match action kind"
                ));
            }
            if !is_tool && i + 1 != self.steps.len() {
                return Err(format!("step {i}: final answer before the last step"));
            }
        }
        let last_is_answer = self
            .steps
            .last()
            .map(|s| !s.action.is_tool_invocation())
            .unwrap_or(false);
        let answered = self.termination == Termination::Answered;
        if answered != self.final_answer.is_some() || answered != last_is_answer {
            return Err(format!(
                "termination {} inconsistent with final_answer/terminal step",
                self.termination.as_str()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrajectoryError {
    /// A final answer has already been recorded; the trajectory accepts no more steps.
    #[error("trajectory already finalized")]
    AlreadyFinalized,
    /// Observation supplied with a final answer, or missing for a tool call.
    #[error("observation presence does not match action kind")]
    ObservationMismatch,
    #[error("termination `answered` requires a final answer")]
    AnswerMissing,
    #[error("final answer supplied for termination `{0}`")]
    AnswerOnNonAnswered(&'static str),
    #[error("terminal step inconsistent with termination: {0}")]
    TerminalStepMismatch(String),
}

/// Single-owner builder for one trajectory. Steps are appended with contiguous
/// indices; once a [`AgentAction::FinalAnswer`] lands, the builder only finalizes.
#[derive(Clone, Debug)]
pub struct TrajectoryBuilder {
    task_id: String,
    steps: Vec<StepRecord>,
}

impl TrajectoryBuilder {
    pub fn new(task_id: impl Into<String>) -> Self {
        Self {
            task_id: task_id.into(),
            steps: Vec::new(),
        }
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn tool_call_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.action.is_tool_invocation())
            .count()
    }

    fn holds_final_answer(&self) -> bool {
        self.steps
            .last()
            .map(|s| !s.action.is_tool_invocation())
            .unwrap_or(false)
    }

    /// Append the next step. The observation must be present exactly when the
    /// action is a tool invocation.
    pub fn append_step(
        &mut self,
        thought: impl Into<String>,
        action: AgentAction,
        observation: Option<String>,
    ) -> Result<&mut Self, TrajectoryError> {
        if self.holds_final_answer() {
            return Err(TrajectoryError::AlreadyFinalized);
        }
        if action.is_tool_invocation() != observation.is_some() {
            return Err(TrajectoryError::ObservationMismatch);
        }
        self.steps.push(StepRecord {
            index: self.steps.len(),
            thought: thought.into(),
            action,
            observation,
        });
        Ok(self)
    }

    /// Seal the trajectory with a termination reason.
    pub fn finalize(
        self,
        termination: Termination,
        final_answer: Option<String>,
        wall_time: f64,
        token_accounting: Option<TokenAccounting>,
    ) -> Result<Trajectory, TrajectoryError> {
        let answered = termination == Termination::Answered;
        match (&final_answer, answered) {
            (None, true) => return Err(TrajectoryError::AnswerMissing),
            (Some(_), false) => {
                return Err(TrajectoryError::AnswerOnNonAnswered(termination.as_str()))
            }
            _ => {}
        }
        if answered != self.holds_final_answer() {
            return Err(TrajectoryError::TerminalStepMismatch(format!(
                "termination {} but terminal step {}",
                termination.as_str(),
                if self.holds_final_answer() {
                    "is an answer"
                } else {
                    "is not an answer"
                }
            )));
        }
        if let (Some(answer), Some(StepRecord { action: AgentAction::FinalAnswer { text }, .. })) =
            (&final_answer, self.steps.last())
        {
            if answer != text {
                return Err(TrajectoryError::TerminalStepMismatch(format!(
                    "final_answer {answer:?} differs from terminal step answer {text:?}"
                )));
            }
        }
        Ok(Trajectory {
            task_id: self.task_id,
            steps: self.steps,
            termination,
            final_answer,
            wall_time,
            token_accounting,
        })
    }
}

#[derive(Debug, Error)]
pub enum LineCodecError {
    #[error("line {line}: malformed JSON: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: schema mismatch: {detail}")]
    SchemaVersionMismatch { line: usize, detail: String },
    #[error("line {line}: invalid record: {detail}")]
    InvalidRecord { line: usize, detail: String },
}

/// Serialize any record to its JSONL line (no trailing newline).
///
/// Field ordering is byte-stable: struct fields in declaration order, JSON
/// object keys sorted.
pub fn to_jsonl_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("record serialization cannot fail")
}

/// Decode one JSONL line. Syntactically broken JSON is a [`LineCodecError::MalformedLine`];
/// structurally unknown shapes (unknown enum values, missing or extra fields) are
/// [`LineCodecError::SchemaVersionMismatch`].
pub fn from_jsonl_line<T: serde::de::DeserializeOwned>(
    line: &str,
    line_no: usize,
) -> Result<T, LineCodecError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| LineCodecError::MalformedLine {
            line: line_no,
            detail: e.to_string(),
        })?;
    serde_json::from_value(value).map_err(|e| LineCodecError::SchemaVersionMismatch {
        line: line_no,
        detail: e.to_string(),
    })
}

impl Trajectory {
    pub fn to_line(&self) -> String {
        to_jsonl_line(self)
    }

    /// Decode and validate one trajectory line.
    pub fn from_line(line: &str, line_no: usize) -> Result<Self, LineCodecError> {
        let record: Trajectory = from_jsonl_line(line, line_no)?;
        record
            .validate()
            .map_err(|detail| LineCodecError::InvalidRecord {
                line: line_no,
                detail,
            })?;
        Ok(record)
    }
}

impl Task {
    pub fn to_line(&self) -> String {
        to_jsonl_line(self)
    }

    pub fn from_line(line: &str, line_no: usize) -> Result<Self, LineCodecError> {
        let task: Task = from_jsonl_line(line, line_no)?;
        task.validate()
            .map_err(|detail| LineCodecError::InvalidRecord {
                line: line_no,
                detail,
            })?;
        Ok(task)
    }
}

/// Read a JSONL corpus with per-line decode, reporting 1-based line numbers.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(
    content: &str,
) -> Result<Vec<T>, LineCodecError> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| from_jsonl_line(l, i + 1))
        .collect()
}

/// Render records as a JSONL document (one object per line, trailing newline).
pub fn write_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&to_jsonl_line(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tool_action(name: &str) -> AgentAction {
        AgentAction::ToolInvocation {
            name: name.into(),
            arguments: JsonObject::new(),
        }
    }

    fn answer_action(text: &str) -> AgentAction {
        AgentAction::FinalAnswer { text: text.into() }
    }

    #[test]
    fn first_append_gets_index_zero() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("look at the image", tool_action("image_search"), Some("obs".into()))
            .unwrap();
        assert_eq!(b.steps().len(), 1);
        assert_eq!(b.steps()[0].index, 0);
    }

    #[test]
    fn answer_step_after_tool_steps() {
        let mut b = TrajectoryBuilder::new("t1");
        for _ in 0..3 {
            b.append_step("search", tool_action("text_search"), Some("obs".into()))
                .unwrap();
        }
        b.append_step("done", answer_action("Titanic"), None).unwrap();
        assert_eq!(b.steps().len(), 4);
        assert!(matches!(
            b.steps()[3].action,
            AgentAction::FinalAnswer { .. }
        ));
    }

    #[test]
    fn observation_with_answer_is_rejected() {
        let mut b = TrajectoryBuilder::new("t1");
        let err = b
            .append_step("done", answer_action("x"), Some("x".into()))
            .unwrap_err();
        assert_eq!(err, TrajectoryError::ObservationMismatch);
    }

    #[test]
    fn missing_observation_for_tool_is_rejected() {
        let mut b = TrajectoryBuilder::new("t1");
        let err = b
            .append_step("search", tool_action("text_search"), None)
            .unwrap_err();
        assert_eq!(err, TrajectoryError::ObservationMismatch);
    }

    #[test]
    fn append_after_final_answer_is_rejected() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("done", answer_action("x"), None).unwrap();
        let err = b
            .append_step("more", tool_action("text_search"), Some("o".into()))
            .unwrap_err();
        assert_eq!(err, TrajectoryError::AlreadyFinalized);
    }

    #[test]
    fn finalize_answered() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("done", answer_action("Fayette County"), None)
            .unwrap();
        let traj = b
            .finalize(Termination::Answered, Some("Fayette County".into()), 1.5, None)
            .unwrap();
        assert!(traj.is_answered());
        traj.validate().unwrap();
    }

    #[test]
    fn finalize_step_limit_without_answer() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("search", tool_action("text_search"), Some("o".into()))
            .unwrap();
        let traj = b
            .finalize(Termination::StepLimit, None, 0.1, None)
            .unwrap();
        assert_eq!(traj.termination, Termination::StepLimit);
        traj.validate().unwrap();
    }

    #[test]
    fn finalize_answered_without_answer_fails() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("done", answer_action("x"), None).unwrap();
        let err = b
            .finalize(Termination::Answered, None, 0.0, None)
            .unwrap_err();
        assert_eq!(err, TrajectoryError::AnswerMissing);
    }

    #[test]
    fn finalize_answer_on_non_answered_fails() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("search", tool_action("text_search"), Some("o".into()))
            .unwrap();
        let err = b
            .finalize(Termination::Timeout, Some("x".into()), 0.0, None)
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::AnswerOnNonAnswered(_)));
    }

    #[test]
    fn finalize_answered_without_answer_step_fails() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("search", tool_action("text_search"), Some("o".into()))
            .unwrap();
        let err = b
            .finalize(Termination::Answered, Some("x".into()), 0.0, None)
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::TerminalStepMismatch(_)));
    }

    #[test]
    fn round_trip_identity() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("s1", tool_action("image_search"), Some("obs 1".into()))
            .unwrap();
        b.append_step("s2", answer_action("Yes."), None).unwrap();
        let traj = b
            .finalize(
                Termination::Answered,
                Some("Yes.".into()),
                2.0,
                Some(TokenAccounting {
                    prompt_tokens: 100,
                    response_tokens: 50,
                }),
            )
            .unwrap();
        let line = traj.to_line();
        let back = Trajectory::from_line(&line, 1).unwrap();
        assert_eq!(traj, back);
        assert_eq!(line, back.to_line());
    }

    #[test]
    fn unknown_termination_is_schema_mismatch() {
        let mut b = TrajectoryBuilder::new("t1");
        b.append_step("s", tool_action("text_search"), Some("o".into()))
            .unwrap();
        let traj = b.finalize(Termination::StepLimit, None, 0.0, None).unwrap();
        let line = traj.to_line().replace("step_limit", "gave_up");
        let err = Trajectory::from_line(&line, 7).unwrap_err();
        assert!(matches!(
            err,
            LineCodecError::SchemaVersionMismatch { line: 7, .. }
        ));
    }

    #[test]
    fn broken_json_is_malformed_line() {
        let err = Trajectory::from_line("{not json", 3).unwrap_err();
        assert!(matches!(err, LineCodecError::MalformedLine { line: 3, .. }));
    }

    #[test]
    fn tampered_invariant_is_invalid_record() {
        // Hand-built line where termination says answered but no final_answer.
        let line = r#"{"task_id":"t","steps":[{"index":0,"thought":"x","action":{"kind":"final_answer","text":"a"}}],"termination":"answered","wall_time":0.0}"#;
        let err = Trajectory::from_line(line, 1).unwrap_err();
        assert!(matches!(err, LineCodecError::InvalidRecord { .. }));
    }
}
