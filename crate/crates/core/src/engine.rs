//! Engine selection and the shared run contract.

use std::fmt;
use std::io;
use std::str::FromStr;

use crate::analysis::AnalyzedGrammar;
use crate::choice::{ChoiceError, Chooser};
use crate::codegen::{self, OptLevel, ProducerIR};
use crate::interp::{self, ProductionConfig};
use crate::sink::Sink;
use crate::vm::{self, Program};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Choice(#[from] ChoiceError),
    #[error("output error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("return stack overflow at depth {0}")]
    StackOverflow(usize),
    #[error("output limit of {0} bytes exceeded")]
    OutputLimit(u64),
    #[error("engine {0} is unsupported on this build")]
    Unsupported(&'static str),
}

/// Statistics of one production run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunReport {
    pub inputs: u64,
    /// Output bytes, separators included.
    pub bytes: u64,
    /// Time spent in the production loop.
    pub seconds: f64,
    /// Deepest nesting of expansion frames.
    pub stack_high_water: usize,
    /// Tallest derivation tree produced, counting pool emissions by the
    /// μ-depth of their key.
    pub max_height: usize,
}

impl RunReport {
    pub fn kib_per_second(&self) -> f64 {
        if self.seconds > 0.0 {
            self.bytes as f64 / 1024.0 / self.seconds
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Limit,
    Pooled,
    VmSwitch,
    VmThreaded,
    /// Call/return-paired dispatch. Not available: Rust cannot emit naked
    /// call/return transfers without a foreign assembly layer.
    VmContextThreaded,
    Compiled,
}

impl Engine {
    pub const ALL: [Engine; 6] = [
        Engine::Limit,
        Engine::Pooled,
        Engine::VmSwitch,
        Engine::VmThreaded,
        Engine::VmContextThreaded,
        Engine::Compiled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Limit => "limit",
            Engine::Pooled => "pooled",
            Engine::VmSwitch => "vm-switch",
            Engine::VmThreaded => "vm-threaded",
            Engine::VmContextThreaded => "vm-ct",
            Engine::Compiled => "compiled",
        }
    }

    pub fn is_supported(self) -> bool {
        self != Engine::VmContextThreaded
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine {s:?}"))
    }
}

/// Options for engines that compile the grammar first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub opt: OptLevel,
    pub inline_depth: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { opt: OptLevel::Super, inline_depth: codegen::DEFAULT_INLINE_DEPTH }
    }
}

enum Prepared {
    Interp,
    Program(Program),
    Ir(ProducerIR),
}

/// An engine with its compiled artifacts, ready to run many times.
pub struct Producer<'a> {
    engine: Engine,
    ag: &'a AnalyzedGrammar,
    prepared: Prepared,
}

impl<'a> Producer<'a> {
    pub fn new(
        ag: &'a AnalyzedGrammar,
        engine: Engine,
        opts: CompileOptions,
    ) -> Result<Producer<'a>, EngineError> {
        let prepared = match engine {
            Engine::Limit | Engine::Pooled => Prepared::Interp,
            Engine::VmSwitch | Engine::VmThreaded => Prepared::Program(vm::assemble(ag)),
            Engine::VmContextThreaded => return Err(EngineError::Unsupported("vm-ct")),
            Engine::Compiled => {
                Prepared::Ir(codegen::compile_ir(ag, opts.opt, opts.inline_depth))
            }
        };
        Ok(Producer { engine, ag, prepared })
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn program(&self) -> Option<&Program> {
        match &self.prepared {
            Prepared::Program(p) => Some(p),
            _ => None,
        }
    }

    pub fn run<C: Chooser>(
        &self,
        cfg: &ProductionConfig,
        chooser: &mut C,
        sink: &mut Sink,
    ) -> Result<RunReport, EngineError> {
        match (&self.prepared, self.engine) {
            (Prepared::Interp, Engine::Limit) => interp::produce_limit(self.ag, cfg, chooser, sink),
            (Prepared::Interp, _) => interp::produce_pooled(self.ag, cfg, chooser, sink),
            (Prepared::Program(p), Engine::VmThreaded) => vm::run_threaded(p, cfg, chooser, sink),
            (Prepared::Program(p), _) => vm::run_switch(p, cfg, chooser, sink),
            (Prepared::Ir(ir), _) => codegen::run_ir(ir, cfg, chooser, sink),
        }
    }
}
