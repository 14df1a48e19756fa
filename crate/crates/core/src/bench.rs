//! Throughput benchmark harness: engines × grammars × depths × seeds, with a
//! CSV of per-seed runs and a per-cell summary (mean and 95% Student-t
//! interval over seeds).

use std::fmt::Write as _;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analysis::AnalyzedGrammar;
use crate::choice::ChoiceStream;
use crate::engine::{CompileOptions, Engine, EngineError, Producer};
use crate::interp::ProductionConfig;
use crate::sink::Sink;

pub const CSV_HEADER: &str = "engine,grammar,depth,seed,inputs,bytes,seconds,kibps";
pub const CSV_COMMENT: &str =
    "# timing: monotonic wall clock around production and sink writes; analysis, compilation and warmup excluded";

/// Default per-run output budget. Deep cells of grammars whose expected
/// output grows exponentially with depth would otherwise never finish.
pub const DEFAULT_MAX_BYTES: u64 = 64 << 20;

/// Warmup runs draw from a stream unrelated to the measured one.
const WARMUP_SEED_MIX: u64 = 0x5bd1_e995_9e37_79b9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenchSink {
    #[default]
    Null,
    Memory,
    /// Buffered file in a fresh temporary directory.
    File,
    Mmap,
}

impl std::str::FromStr for BenchSink {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "null" | "null:" => Ok(BenchSink::Null),
            "mem" | "mem:" => Ok(BenchSink::Memory),
            "file" => Ok(BenchSink::File),
            "mmap" => Ok(BenchSink::Mmap),
            other => Err(format!("unknown bench sink {other:?} (expected null, mem, file or mmap)")),
        }
    }
}

pub struct BenchGrammar {
    pub name: String,
    pub ag: AnalyzedGrammar,
}

pub struct BenchPlan {
    pub grammars: Vec<BenchGrammar>,
    pub engines: Vec<Engine>,
    pub depths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub inputs: usize,
    pub warmup: usize,
    pub sink: BenchSink,
    pub compile: CompileOptions,
    /// Worker threads; 1 runs cells one after another.
    pub parallel: usize,
    /// Output budget per run; a run that exceeds it becomes an error row.
    pub max_bytes: Option<u64>,
}

impl BenchPlan {
    pub fn new(grammars: Vec<BenchGrammar>, engines: Vec<Engine>) -> BenchPlan {
        BenchPlan {
            grammars,
            engines,
            depths: vec![8, 32, 128],
            seeds: (0..10).collect(),
            inputs: 1000,
            warmup: 100,
            sink: BenchSink::Null,
            compile: CompileOptions::default(),
            parallel: 1,
            max_bytes: Some(DEFAULT_MAX_BYTES),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.grammars.is_empty() || self.engines.is_empty() || self.depths.is_empty() || self.seeds.is_empty()
        {
            return Err("bench plan needs at least one grammar, engine, depth and seed".into());
        }
        if self.inputs == 0 || self.depths.contains(&0) {
            return Err("inputs and depths must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub engine: Engine,
    pub grammar: String,
    pub depth: usize,
    pub seed: u64,
    pub inputs: usize,
    pub outcome: Result<Measured, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub bytes: u64,
    pub seconds: f64,
    pub kibps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub engine: Engine,
    pub grammar: String,
    pub depth: usize,
    pub runs: usize,
    pub errors: usize,
    pub mean_kibps: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
    /// Expected-ordering violations, one line each.
    pub flags: Vec<String>,
}

/// Mean and 95% Student-t half-width. Half-width is 0 for fewer than two
/// values.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

fn open_sink(kind: BenchSink, dir: Option<&tempfile::TempDir>, tag: &str) -> Result<Sink, EngineError> {
    let path = || dir.expect("file sinks get a directory").path().join(tag);
    Ok(match kind {
        BenchSink::Null => Sink::null(),
        BenchSink::Memory => Sink::memory(),
        BenchSink::File => Sink::file(&path())?,
        BenchSink::Mmap => Sink::mmap(&path(), 1 << 26)?,
    })
}

fn run_cell(
    plan: &BenchPlan,
    g: &BenchGrammar,
    engine: Engine,
    depth: usize,
) -> Vec<BenchRow> {
    let row = |seed, outcome| BenchRow {
        engine,
        grammar: g.name.clone(),
        depth,
        seed,
        inputs: plan.inputs,
        outcome,
    };
    let producer = match Producer::new(&g.ag, engine, plan.compile) {
        Ok(p) => p,
        Err(e) => return plan.seeds.iter().map(|&s| row(s, Err(e.to_string()))).collect(),
    };
    let dir = match plan.sink {
        BenchSink::File | BenchSink::Mmap => match tempfile::tempdir() {
            Ok(d) => Some(d),
            Err(e) => return plan.seeds.iter().map(|&s| row(s, Err(e.to_string()))).collect(),
        },
        _ => None,
    };
    plan.seeds
        .iter()
        .map(|&seed| {
            let measure = || -> Result<Measured, EngineError> {
                if plan.warmup > 0 {
                    let cfg = ProductionConfig { max_bytes: plan.max_bytes, ..ProductionConfig::new(depth, plan.warmup) };
                    let mut cs = ChoiceStream::new(seed ^ WARMUP_SEED_MIX);
                    producer.run(&cfg, &mut cs, &mut Sink::null())?;
                }
                let tag = format!("{}-{}-{depth}-{seed}.out", engine.name(), g.name);
                let mut sink = open_sink(plan.sink, dir.as_ref(), &tag)?;
                let cfg = ProductionConfig { max_bytes: plan.max_bytes, ..ProductionConfig::new(depth, plan.inputs) };
                let report = producer.run(&cfg, &mut ChoiceStream::new(seed), &mut sink)?;
                sink.finish()?;
                Ok(Measured { bytes: report.bytes, seconds: report.seconds, kibps: report.kib_per_second() })
            };
            row(seed, measure().map_err(|e| e.to_string()))
        })
        .collect()
}

pub fn run_plan(plan: &BenchPlan) -> Result<BenchReport, String> {
    plan.check()?;
    let cells: Vec<(&BenchGrammar, Engine, usize)> = plan
        .grammars
        .iter()
        .flat_map(|g| {
            plan.engines.iter().flat_map(move |&e| plan.depths.iter().map(move |&d| (g, e, d)))
        })
        .collect();
    let rows: Vec<Vec<BenchRow>> = if plan.parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.parallel)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| cells.par_iter().map(|&(g, e, d)| run_cell(plan, g, e, d)).collect())
    } else {
        cells.iter().map(|&(g, e, d)| run_cell(plan, g, e, d)).collect()
    };

    let summary: Vec<SummaryRow> = rows
        .iter()
        .map(|cell| {
            let ok: Vec<f64> = cell.iter().filter_map(|r| r.outcome.as_ref().ok().map(|m| m.kibps)).collect();
            let (mean, half) = mean_ci(&ok);
            SummaryRow {
                engine: cell[0].engine,
                grammar: cell[0].grammar.clone(),
                depth: cell[0].depth,
                runs: ok.len(),
                errors: cell.len() - ok.len(),
                mean_kibps: mean,
                ci_half_width: half,
            }
        })
        .collect();

    let mut flags = Vec::new();
    let find = |e: Engine, g: &str, d: usize| {
        summary.iter().find(|s| s.engine == e && s.grammar == g && s.depth == d && s.runs > 0)
    };
    for s in summary.iter().filter(|s| s.engine == Engine::VmSwitch) {
        if let Some(p) = find(Engine::Pooled, &s.grammar, s.depth) {
            if s.mean_kibps < p.mean_kibps {
                flags.push(format!(
                    "ordering: vm-switch ({:.1} KiB/s) below pooled ({:.1} KiB/s) on {} at depth {}",
                    s.mean_kibps, p.mean_kibps, s.grammar, s.depth
                ));
            }
        }
    }

    Ok(BenchReport { rows: rows.into_iter().flatten().collect(), summary, flags })
}

pub fn csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_COMMENT}\n{CSV_HEADER}\n");
    for r in rows {
        let _ = write!(out, "{},{},{},{},{},", r.engine, r.grammar, r.depth, r.seed, r.inputs);
        let _ = match &r.outcome {
            Ok(m) => writeln!(out, "{},{:.6},{:.2}", m.bytes, m.seconds, m.kibps),
            Err(_) => writeln!(out, "ERROR,,"),
        };
    }
    out
}

pub fn summary_text(report: &BenchReport) -> String {
    let mut out = format!(
        "{:<12} {:<14} {:>6} {:>5} {:>14} {:>12}\n",
        "engine", "grammar", "depth", "runs", "mean KiB/s", "95% CI"
    );
    for s in &report.summary {
        let (mean, ci) = if s.runs > 0 {
            (format!("{:.1}", s.mean_kibps), format!("± {:.1}", s.ci_half_width))
        } else {
            ("-".to_string(), "-".to_string())
        };
        let _ = writeln!(
            out,
            "{:<12} {:<14} {:>6} {:>5} {:>14} {:>12}",
            s.engine.name(),
            s.grammar,
            s.depth,
            s.runs,
            mean,
            ci
        );
        if s.errors > 0 {
            let _ = writeln!(out, "  {} run(s) failed", s.errors);
        }
    }
    for f in &report.flags {
        let _ = writeln!(out, "{f}");
    }
    out
}
