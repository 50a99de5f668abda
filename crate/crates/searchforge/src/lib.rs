//! searchforge: a desk-scale post-training toolkit for multimodal search agents.
//!
//! The crate covers the full pipeline: synthesizing multi-hop browsing tasks over a
//! knowledge base, rolling out ReAct trajectories against pluggable web tools under a
//! strict response grammar, judging and rejection-filtering trajectories, and computing
//! GRPO rewards, advantages, and objectives for an external trainer. A deterministic
//! simulated web ([`sim`]) provides ground-truth oracles so every stage is verifiable
//! without live backends.

pub mod config;
pub mod eval;
pub mod grammar;
pub mod judge;
pub mod llm;
pub mod pipeline;
pub mod react;
pub mod sim;
pub mod synthesis;
pub mod tools;
pub mod training;
pub mod trajectory;
