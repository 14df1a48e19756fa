//! Compiling grammars into producer programs: lowering to an IR, partial
//! evaluation, supercompilation and source emission.

pub mod emit;
pub mod ir;
pub mod passes;

use std::fmt;
use std::str::FromStr;

pub use emit::{emit, EmitError, SourceUnit, Target};
pub use ir::{lower, run_ir, ProducerIR, Step, Unit};
pub use passes::{partial_eval, supercompile};

use crate::analysis::AnalyzedGrammar;

pub const DEFAULT_INLINE_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptLevel {
    None,
    Pe,
    #[default]
    Super,
}

impl OptLevel {
    pub const ALL: [OptLevel; 3] = [OptLevel::None, OptLevel::Pe, OptLevel::Super];

    pub fn name(self) -> &'static str {
        match self {
            OptLevel::None => "none",
            OptLevel::Pe => "pe",
            OptLevel::Super => "super",
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptLevel::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown optimization level {s:?} (expected none, pe or super)"))
    }
}

/// Lowers and optimizes.
pub fn compile_ir(ag: &AnalyzedGrammar, opt: OptLevel, inline_depth: usize) -> ProducerIR {
    let ir = lower(ag);
    match opt {
        OptLevel::None => ir,
        OptLevel::Pe => partial_eval(&ir),
        OptLevel::Super => supercompile(&ir, inline_depth),
    }
}
