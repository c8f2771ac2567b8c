//! Simulation kernel, text observations, the action protocol, evaluation
//! metrics and fine-tuning dataset construction for an LLM-vs-bot RTS arena.

pub mod dataset;
pub mod metrics;
pub mod obs;
pub mod protocol;
pub mod sim;
pub mod trace;
