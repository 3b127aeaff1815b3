//! Generate PDDL actions from natural-language descriptions with a language
//! model and grade the results against ground-truth domains.
//!
//! The pipeline: [`describe`] renders an action as text, [`prompt`] builds
//! few-shot prompts and fetches completions, [`eval`] classifies each
//! completion, and [`experiment`] and [`report`] run and summarise whole
//! corpora. [`pddl`], [`grounding`] and [`planner`] are the planning
//! substrate underneath.

pub mod corpus;
pub mod describe;
pub mod eval;
pub mod experiment;
pub mod grounding;
pub mod pddl;
pub mod planner;
pub mod prompt;
pub mod report;

pub use corpus::{ActionRef, Corpus, CorpusDomain};
pub use describe::{DescriptionClass, DomainAnnotation};
pub use eval::{are, Classification, Evaluator, ResultClass};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, ExperimentRecord};
pub use grounding::{validate_plan, Plan, PlanStep, State, ValidationOutcome};
pub use pddl::{ActionSchema, Atom, Domain, Problem};
pub use planner::{top_k_plans, PlannerConfig, TopKResult};
pub use prompt::{CompletionConfig, PromptRecord, ReplayStore};
pub use report::{aggregate, emit_reports, AggregateTable};
