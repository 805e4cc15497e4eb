//! LLM-in-the-loop optimization of BWR fuel-lattice designs.
//!
//! The crate covers the lattice problem definition ([`lattice`]), the
//! objective ([`objective`]), lattice evaluators ([`evaluator`]), meta-prompt
//! building and response parsing ([`prompt`]), candidate generators
//! ([`llm`]), the optimization engines ([`optimize`]) and multi-trial
//! experiment reporting ([`trials`]).

pub mod evaluator;
pub mod lattice;
pub mod objective;
pub mod prompt;
pub mod llm;
pub mod optimize;
pub mod trials;
pub mod cli;
