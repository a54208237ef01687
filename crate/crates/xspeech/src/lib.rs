//! Batch experimentation toolkit for three-way extreme speech classification
//! with large language models.
//!
//! The pipeline runs in composable stages, each usable as a library call or a
//! CLI subcommand:
//!
//! ```text
//! corpus.csv ──split──▶ split.csv ──infer──▶ runs/<name>/records.jsonl
//!                                     │
//!                  ┌──────────────────┼──────────────────┐
//!              export-sft         build-dpo        eval / ensemble
//!                  │                  │                   │
//!              sft.jsonl          dpo.jsonl        report.json ──report──▶ tables
//! ```
//!
//! * [`corpus`] — ingest a labelled corpus, deduplicate, encode labels, and
//!   produce deterministic stratified train/dev/test splits.
//! * [`prompt`] — render classification prompts in two styles and parse model
//!   output back into labels and justifications.
//! * [`client`] — chat-completion requests with logprobs against any
//!   OpenAI-compatible endpoint, with retries, a persistent cache, and
//!   bounded-concurrency batch runs.
//! * [`probability`] — turn label-token logprobs into a normalized
//!   probability distribution over the three classes.
//! * [`trainsets`] — export SFT datasets and mine DPO preference pairs.
//! * [`ensemble`] — combine per-model predictions with two F1-macro-weighted
//!   fusion rules.
//! * [`metrics`] — per-class F1, F1-macro, confusion matrices, inter-model
//!   agreement, and table rendering.
//! * [`runs`] — the on-disk run-artifact format shared by all stages.
//! * [`mock`] — a deterministic scripted mock of the chat-completions wire
//!   protocol, used by the test suite and available as `xspeech mock-llm`.
//!
//! The `book/` directory of the repository walks through every stage with
//! runnable snippets; the same snippets appear as doc-tests on the modules
//! below.

pub mod cli;
pub mod client;
pub mod corpus;
pub mod ensemble;
pub mod metrics;
pub mod mock;
pub mod probability;
pub mod prompt;
pub mod runs;
pub mod trainsets;

pub use corpus::{ClassLabel, Sample, SampleId, SplitAssignment, SplitConfig, SplitTag};
pub use probability::ClassDistribution;
pub use prompt::{Message, ParsedOutput, ParseStatus, PromptStyle, TemplateSet};
pub use runs::InferenceRecord;
