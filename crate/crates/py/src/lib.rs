use std::path::PathBuf;

use fastfuzz::analysis::{analyze, AnalyzedGrammar, Depth, PoolCap};
use fastfuzz::choice::{self, ChoiceStream};
use fastfuzz::codegen::{compile_ir, emit, OptLevel, Target};
use fastfuzz::engine::{CompileOptions, Engine, EngineError, Producer, RunReport};
use fastfuzz::grammar::load_grammar;
use fastfuzz::interp::{self, BudgetMode, ProductionConfig};
use fastfuzz::sink::{Sink, SinkSpec};
use fastfuzz::vm;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn engine_err(e: EngineError) -> PyErr {
    match e {
        EngineError::Unsupported(_) | EngineError::Config(_) => value_err(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(value_err)
}

/// An analyzed grammar: depths, min rules and pools are computed on load.
#[pyclass(name = "Grammar", module = "fastfuzz_py", frozen)]
pub struct PyGrammar {
    ag: AnalyzedGrammar,
}

#[pymethods]
impl PyGrammar {
    #[new]
    #[pyo3(signature = (text, start=None, pool_cap=65_536))]
    fn new(text: &str, start: Option<&str>, pool_cap: usize) -> PyResult<Self> {
        let mut g = load_grammar(text).map_err(value_err)?;
        if let Some(s) = start {
            g = g.with_start(s).map_err(value_err)?;
        }
        let ag = analyze(&g, PoolCap::strings(pool_cap)).map_err(value_err)?;
        Ok(PyGrammar { ag })
    }

    #[staticmethod]
    #[pyo3(signature = (path, start=None, pool_cap=65_536))]
    fn load(path: PathBuf, start: Option<&str>, pool_cap: usize) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", path.display())))?;
        Self::new(&text, start, pool_cap)
    }

    #[getter]
    fn start(&self) -> &str {
        self.ag.start()
    }

    #[getter]
    fn max_mu_depth(&self) -> u32 {
        self.ag.max_mu()
    }

    fn keys(&self) -> Vec<String> {
        self.ag.grammar.keys().map(str::to_string).collect()
    }

    /// `None` for keys that never terminate or do not exist.
    fn mu_depth(&self, key: &str) -> Option<u32> {
        self.ag.depths.mu_depth(key).and_then(Depth::finite)
    }

    fn min_rules(&self, key: &str) -> Vec<usize> {
        self.ag.min_rules(key).to_vec()
    }

    fn is_overflowed(&self, key: &str) -> bool {
        self.ag.pools.is_overflowed(key)
    }

    /// Pool strings in enumeration order, or `None` when overflowed.
    fn pool<'py>(&self, py: Python<'py>, key: &str) -> Option<Vec<Bound<'py, PyBytes>>> {
        self.ag.pools.pool(key).map(|p| p.iter().map(|s| PyBytes::new(py, s)).collect())
    }

    fn warnings(&self) -> Vec<String> {
        self.ag.warnings.iter().map(ToString::to_string).collect()
    }

    /// Produces `count` inputs and returns them concatenated, separators included.
    #[pyo3(signature = (engine="pooled", depth=8, count=1, seed=0, separator=b"\n".to_vec(), start=None, opt="super", inline_depth=4, max_bytes=None))]
    #[allow(clippy::too_many_arguments)]
    fn produce<'py>(
        &self,
        py: Python<'py>,
        engine: &str,
        depth: usize,
        count: usize,
        seed: u64,
        separator: Vec<u8>,
        start: Option<String>,
        opt: &str,
        inline_depth: usize,
        max_bytes: Option<u64>,
    ) -> PyResult<Bound<'py, PyBytes>> {
        let cfg = ProductionConfig { max_depth: depth, inputs: count, separator, start_key: start, max_bytes };
        let mut sink = Sink::memory();
        self.run(engine, &cfg, seed, opt, inline_depth, &mut sink)?;
        Ok(PyBytes::new(py, &sink.into_contents().unwrap_or_default()))
    }

    /// Writes inputs to `out` (a path, `mmap:PATH`, `null:` or `-`) and
    /// returns the run statistics.
    #[pyo3(signature = (out, engine="pooled", depth=8, count=1, seed=0, opt="super", inline_depth=4))]
    #[allow(clippy::too_many_arguments)]
    fn produce_to<'py>(
        &self,
        py: Python<'py>,
        out: &str,
        engine: &str,
        depth: usize,
        count: usize,
        seed: u64,
        opt: &str,
        inline_depth: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut sink = Sink::open(&SinkSpec::parse(out)).map_err(|e| PyRuntimeError::new_err(format!("{out}: {e}")))?;
        let r = self.run(engine, &ProductionConfig::new(depth, count), seed, opt, inline_depth, &mut sink)?;
        sink.finish().map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let d = PyDict::new(py);
        d.set_item("inputs", r.inputs)?;
        d.set_item("bytes", r.bytes)?;
        d.set_item("seconds", r.seconds)?;
        d.set_item("kibps", r.kib_per_second())?;
        d.set_item("stack_high_water", r.stack_high_water)?;
        d.set_item("max_height", r.max_height)?;
        Ok(d)
    }

    /// One input with its derivation tree as a JSON string.
    #[pyo3(signature = (depth=8, seed=0, limit=false))]
    fn derive<'py>(&self, py: Python<'py>, depth: usize, seed: u64, limit: bool) -> PyResult<(Bound<'py, PyBytes>, String)> {
        let mode = if limit { BudgetMode::Limit } else { BudgetMode::Pooled };
        let (text, tree) =
            interp::derive(&self.ag, mode, depth, self.ag.start(), &mut ChoiceStream::new(seed)).map_err(engine_err)?;
        Ok((PyBytes::new(py, &text), tree.to_json().to_string()))
    }

    fn disassemble(&self) -> String {
        vm::disassemble(&vm::assemble(&self.ag))
    }

    /// Emitted producer source for `target` ("c" or "self").
    #[pyo3(signature = (target="c", opt="super", inline_depth=4))]
    fn compile(&self, target: &str, opt: &str, inline_depth: usize) -> PyResult<String> {
        let target: Target = parse(target)?;
        Ok(emit(&compile_ir(&self.ag, parse::<OptLevel>(opt)?, inline_depth), target).text)
    }

    #[pyo3(signature = (opt="super", inline_depth=4))]
    fn ir(&self, opt: &str, inline_depth: usize) -> PyResult<String> {
        Ok(compile_ir(&self.ag, parse::<OptLevel>(opt)?, inline_depth).to_string())
    }

    fn __repr__(&self) -> String {
        format!("Grammar(start={:?}, keys={})", self.ag.start(), self.ag.grammar.len())
    }
}

impl PyGrammar {
    fn run(&self, engine: &str, cfg: &ProductionConfig, seed: u64, opt: &str, inline_depth: usize, sink: &mut Sink) -> PyResult<RunReport> {
        let engine: Engine = parse(engine)?;
        let opts = CompileOptions { opt: parse(opt)?, inline_depth };
        let producer = Producer::new(&self.ag, engine, opts).map_err(engine_err)?;
        producer.run(cfg, &mut ChoiceStream::new(seed), sink).map_err(engine_err)
    }
}

/// Index chosen for byte `b` among `n` alternatives.
#[pyfunction]
fn map_range(b: u8, n: usize) -> usize {
    choice::map_range(b, n)
}

#[pyfunction]
fn engines() -> Vec<&'static str> {
    Engine::ALL.iter().map(|e| e.name()).collect()
}

#[pymodule]
fn fastfuzz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrammar>()?;
    m.add_function(wrap_pyfunction!(map_range, m)?)?;
    m.add_function(wrap_pyfunction!(engines, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
