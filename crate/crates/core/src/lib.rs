//! Grammar fuzzer compiler toolkit.
//!
//! A context-free grammar is loaded ([`grammar`]), analyzed for minimum
//! expansion depth and string pools ([`analysis`]), and then turned into a
//! producer of valid strings by one of several engines:
//!
//! * the reference interpreters in [`interp`] (depth-limited and pooled),
//! * the producer IR in [`codegen`], with partial evaluation,
//!   supercompilation and source emission for standalone programs,
//! * the production virtual machine in [`vm`], with switch and threaded
//!   dispatch.
//!
//! Every engine draws its decisions from the same [`choice`] stream, so for a
//! fixed seed the pooled interpreter, the IR at every optimization level and
//! both VM dispatch strategies produce byte-identical output.

pub mod analysis;
pub mod bench;
pub mod choice;
pub mod cli;
pub mod codegen;
pub mod engine;
pub mod grammar;
pub mod interp;
pub mod sink;
pub mod vm;

pub use analysis::{analyze, AnalyzedGrammar, Depth, PoolCap};
pub use choice::{ChoiceStream, Chooser, RandPolicy};
pub use engine::{Engine, EngineError, Producer, RunReport};
pub use grammar::{load_grammar, Grammar, Rule, Symbol};
pub use interp::ProductionConfig;
pub use sink::Sink;

/// The arithmetic expression grammar shipped as `grammars/expr.json`.
pub const EXPR_GRAMMAR: &str = include_str!("../grammars/expr.json");

/// Grammars bundled with the crate, by name.
pub const CORPUS: [(&str, &str); 4] = [
    ("expr", EXPR_GRAMMAR),
    ("json", include_str!("../grammars/json.json")),
    ("css-subset", include_str!("../grammars/css-subset.json")),
    ("html-subset", include_str!("../grammars/html-subset.json")),
];
