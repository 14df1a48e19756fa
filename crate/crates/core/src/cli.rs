//! Command-line front end: `analyze`, `fuzz`, `compile`, `disasm`, `bench`.
//!
//! Exit codes: 0 success, 1 usage error, 2 grammar or validation error,
//! 3 runtime or I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{analyze, AnalyzedGrammar, PoolCap};
use crate::bench::{self, BenchGrammar, BenchPlan, BenchSink};
use crate::choice::{ChoiceStream, ChoiceTrace, Chooser, RandPolicy, Recorder, Replay};
use crate::codegen::{self, OptLevel, Target, DEFAULT_INLINE_DEPTH};
use crate::engine::{CompileOptions, Engine, EngineError, Producer, RunReport};
use crate::grammar::load_grammar;
use crate::interp::{self, BudgetMode, ProductionConfig};
use crate::sink::{Sink, SinkSpec};
use crate::vm;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GRAMMAR: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fastfuzz", version, about = "Compile grammars into fast producers of valid inputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print μ-depths, minimum rules and pool sizes.
    Analyze {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Produce inputs.
    Fuzz(FuzzArgs),
    /// Emit a standalone producer program.
    Compile {
        #[command(flatten)]
        grammar: GrammarArgs,
        #[arg(long, default_value = "c")]
        target: String,
        #[arg(long, default_value_t = OptLevel::Super)]
        opt: OptLevel,
        #[arg(long, default_value_t = DEFAULT_INLINE_DEPTH)]
        inline_depth: usize,
        /// Output directory; source goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the optimized producer IR instead of source.
        #[arg(long)]
        print_ir: bool,
    },
    /// Print the VM program for a grammar.
    Disasm {
        #[command(flatten)]
        grammar: GrammarArgs,
    },
    /// Measure throughput over engines, grammars, depths and seeds.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GrammarArgs {
    /// Grammar file (JSON).
    #[arg(short = 'g', long = "grammar")]
    grammar: PathBuf,
    /// Start key; defaults to <start>.
    #[arg(long)]
    start: Option<String>,
    /// Maximum strings per pool.
    #[arg(long)]
    pool_cap: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Measure {
    /// Time the production loop only.
    Production,
    /// Time the whole command including analysis and compilation.
    Wall,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[command(flatten)]
    grammar: GrammarArgs,
    #[arg(long, default_value = "pooled")]
    engine: Engine,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// FILE, `-`, `null:`, `mem:` or `mmap:FILE`.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "refill")]
    rand_policy: RandPolicy,
    /// Record every choice to FILE.
    #[arg(long, conflicts_with = "trace_in")]
    trace_out: Option<PathBuf>,
    /// Replay the choices recorded in FILE instead of drawing from the seed.
    #[arg(long)]
    trace_in: Option<PathBuf>,
    /// Write one derivation tree per input as JSON lines (stderr without FILE).
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    trace_derivations: Option<String>,
    /// Report throughput on stderr.
    #[arg(long, value_enum)]
    measure: Option<Measure>,
    #[arg(long, default_value_t = OptLevel::Super)]
    opt: OptLevel,
    #[arg(long, default_value_t = DEFAULT_INLINE_DEPTH)]
    inline_depth: usize,
    /// Fail once output would exceed this many bytes.
    #[arg(long)]
    max_bytes: Option<u64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Grammar files; the bundled corpus when omitted.
    #[arg(short = 'g', long = "grammar")]
    grammars: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "limit,pooled,vm-switch,vm-threaded,compiled")]
    engines: Vec<Engine>,
    #[arg(long, value_delimiter = ',', default_value = "8,32,128")]
    depths: Vec<usize>,
    /// `A..B` (inclusive) or a comma list.
    #[arg(long, default_value = "0..9")]
    seeds: String,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 100)]
    warmup: usize,
    /// null, mem, file or mmap.
    #[arg(long, default_value = "null")]
    sink: BenchSink,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = OptLevel::Super)]
    opt: OptLevel,
    #[arg(long, default_value_t = DEFAULT_INLINE_DEPTH)]
    inline_depth: usize,
    /// Output budget per run, in bytes; 0 removes it. Runs that exceed it
    /// are reported as ERROR rows.
    #[arg(long, default_value_t = bench::DEFAULT_MAX_BYTES)]
    max_bytes: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Grammar(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Grammar(_) => EXIT_GRAMMAR,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Grammar(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Unsupported(_) | EngineError::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn io_context(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("fastfuzz: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { grammar, format } => cmd_analyze(&grammar, format),
        Command::Fuzz(args) => cmd_fuzz(&args),
        Command::Compile { grammar, target, opt, inline_depth, out, print_ir } => {
            let ag = load(&grammar)?;
            let ir = codegen::compile_ir(&ag, opt, inline_depth);
            if print_ir {
                return write_stdout(ir.to_string().as_bytes());
            }
            let target: Target = target.parse().map_err(|e: codegen::EmitError| Failure::Usage(e.to_string()))?;
            let unit = codegen::emit(&ir, target);
            match out {
                None => write_stdout(unit.text.as_bytes()),
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(io_context(&dir))?;
                    let path = dir.join(unit.file_name);
                    fs::write(&path, &unit.text).map_err(io_context(&path))?;
                    println!("{}", path.display());
                    Ok(())
                }
            }
        }
        Command::Disasm { grammar } => {
            let ag = load(&grammar)?;
            write_stdout(vm::disassemble(&vm::assemble(&ag)).as_bytes())
        }
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn write_stdout(data: &[u8]) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(data)?;
    out.flush()?;
    Ok(())
}

fn analyze_text(text: &str, start: Option<&str>, cap: Option<usize>) -> Result<AnalyzedGrammar, Failure> {
    let mut g = load_grammar(text).map_err(|e| Failure::Grammar(e.to_string()))?;
    if let Some(start) = start {
        g = g.with_start(start).map_err(|e| Failure::Grammar(e.to_string()))?;
    }
    let cap = cap.map(PoolCap::strings).unwrap_or_default();
    analyze(&g, cap).map_err(|e| Failure::Grammar(e.to_string()))
}

fn load(args: &GrammarArgs) -> Result<AnalyzedGrammar, Failure> {
    let text = fs::read_to_string(&args.grammar).map_err(io_context(&args.grammar))?;
    let ag = analyze_text(&text, args.start.as_deref(), args.pool_cap)?;
    for w in &ag.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ag)
}

fn cmd_analyze(args: &GrammarArgs, format: Format) -> Result<(), Failure> {
    let ag = load(args)?;
    let keys: Vec<&str> = ag.grammar.keys().collect();
    match format {
        Format::Json => {
            let entries: Vec<_> = keys
                .iter()
                .map(|&k| {
                    json!({
                        "key": k,
                        "mu_depth": ag.mu(k).finite(),
                        "min_rules": ag.min_rules(k),
                        "pool_size": ag.pools.pool(k).filter(|_| !ag.pools.is_overflowed(k)).map(<[_]>::len),
                        "overflow": ag.pools.is_overflowed(k),
                        "reachable": ag.reachable.contains(k),
                    })
                })
                .collect();
            let doc = json!({
                "start": ag.start(),
                "max_mu_depth": ag.max_mu(),
                "keys": entries,
                "warnings": ag.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            });
            let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
            write_stdout(format!("{text}\n").as_bytes())
        }
        Format::Table => {
            let width = keys.iter().map(|k| k.len()).max().unwrap_or(3).max(3);
            let mut out = format!("{:<width$}  {:>4}  {:<12}  {:>8}\n", "key", "mu", "min rules", "pool");
            for k in keys {
                let min = compact_indices(ag.min_rules(k));
                let pool = if ag.pools.is_overflowed(k) {
                    "OVERFLOW".to_string()
                } else {
                    ag.pools.pool(k).map_or("-".to_string(), |p| p.len().to_string())
                };
                let note = if ag.reachable.contains(k) { "" } else { "  (unreachable)" };
                out.push_str(&format!(
                    "{k:<width$}  {:>4}  {:<12}  {pool:>8}{note}\n",
                    ag.mu(k).to_string(),
                    min
                ));
            }
            out.push_str(&format!("start {}  max mu {}\n", ag.start(), ag.max_mu()));
            write_stdout(out.as_bytes())
        }
    }
}

/// `0,1,2,5` becomes `0-2,5`.
fn compact_indices(xs: &[usize]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[j] + 1 {
            j += 1;
        }
        parts.push(if j > i + 1 { format!("{}-{}", xs[i], xs[j]) } else if j == i + 1 { format!("{},{}", xs[i], xs[j]) } else { xs[i].to_string() });
        i = j + 1;
    }
    parts.join(",")
}

fn cmd_fuzz(args: &FuzzArgs) -> Result<(), Failure> {
    let wall = Instant::now();
    if !args.engine.is_supported() {
        return Err(EngineError::Unsupported(args.engine.name()).into());
    }
    let ag = load(&args.grammar)?;
    let cfg = ProductionConfig { max_bytes: args.max_bytes, ..ProductionConfig::new(args.depth, args.count) };
    cfg.check()?;
    let spec = SinkSpec::parse(&args.out);
    let mut sink = Sink::open(&spec).map_err(|e| Failure::Runtime(format!("{spec}: {e}")))?;
    let stream = ChoiceStream::with_policy(args.seed, args.rand_policy);

    let report = if let Some(dest) = &args.trace_derivations {
        let mode = match args.engine {
            Engine::Limit => BudgetMode::Limit,
            Engine::Pooled => BudgetMode::Pooled,
            other => {
                return Err(Failure::Usage(format!(
                    "--trace-derivations needs the limit or pooled engine, not {other}"
                )))
            }
        };
        let mut chooser: Box<dyn Chooser> = match &args.trace_in {
            Some(path) => Box::new(Replay::new(read_trace(path)?)),
            None => Box::new(stream),
        };
        trace_derivations(&ag, &cfg, mode, &mut chooser.as_mut(), &mut sink, dest)?
    } else {
        let producer = Producer::new(&ag, args.engine, CompileOptions { opt: args.opt, inline_depth: args.inline_depth })?;
        match (&args.trace_in, &args.trace_out) {
            (Some(path), _) => {
                let mut replay = Replay::new(read_trace(path)?);
                let report = producer.run(&cfg, &mut replay, &mut sink)?;
                if !replay.is_finished() {
                    eprintln!("warning: {} recorded choices left unused", path.display());
                }
                report
            }
            (None, Some(path)) => {
                let mut rec = Recorder::new(stream);
                let report = producer.run(&cfg, &mut rec, &mut sink)?;
                fs::write(path, rec.trace().encode()).map_err(io_context(path))?;
                report
            }
            (None, None) => producer.run(&cfg, &mut { stream }, &mut sink)?,
        }
    };
    sink.finish()?;
    if let Some(measure) = args.measure {
        let seconds = match measure {
            Measure::Production => report.seconds,
            Measure::Wall => wall.elapsed().as_secs_f64(),
        };
        let r = RunReport { seconds, ..report };
        eprintln!(
            "engine={} inputs={} bytes={} seconds={:.6} kibps={:.2} stack={}",
            args.engine,
            r.inputs,
            r.bytes,
            r.seconds,
            r.kib_per_second(),
            r.stack_high_water
        );
    }
    Ok(())
}

fn read_trace(path: &Path) -> Result<ChoiceTrace, Failure> {
    let data = fs::read(path).map_err(io_context(path))?;
    ChoiceTrace::decode(&data).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn trace_derivations<C: Chooser>(
    ag: &AnalyzedGrammar,
    cfg: &ProductionConfig,
    mode: BudgetMode,
    chooser: &mut C,
    sink: &mut Sink,
    dest: &str,
) -> Result<RunReport, Failure> {
    let mut trace_out: Box<dyn Write> = if dest == "-" {
        Box::new(io::stderr())
    } else {
        let path = Path::new(dest);
        Box::new(io::BufWriter::new(fs::File::create(path).map_err(io_context(path))?))
    };
    let start = cfg.start_key.clone().unwrap_or_else(|| ag.start().to_string());
    let before = sink.bytes_written();
    let t0 = Instant::now();
    let mut max_height = 0;
    for _ in 0..cfg.inputs {
        let (text, tree) = interp::derive(ag, mode, cfg.max_depth, &start, chooser)?;
        let height = tree.height(ag);
        max_height = max_height.max(height);
        let line = json!({
            "input": String::from_utf8_lossy(&text),
            "height": height,
            "valid": interp::check_derivation(ag, &tree, &text),
            "tree": tree.to_json(),
        });
        writeln!(trace_out, "{line}")?;
        let mut record = text;
        record.extend_from_slice(&cfg.separator);
        sink.write(&record)?;
    }
    trace_out.flush()?;
    Ok(RunReport {
        inputs: cfg.inputs as u64,
        bytes: sink.bytes_written() - before,
        seconds: t0.elapsed().as_secs_f64(),
        stack_high_water: 0,
        max_height,
    })
}

/// Parses `A..B` (inclusive) or `a,b,c`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid seed list {s:?} (expected A..B or a,b,c)");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let seeds = parse_seeds(&args.seeds).map_err(Failure::Usage)?;
    let mut grammars = Vec::new();
    if args.grammars.is_empty() {
        for (name, text) in crate::CORPUS {
            grammars.push(BenchGrammar { name: name.to_string(), ag: analyze_text(text, None, None)? });
        }
    } else {
        for path in &args.grammars {
            let text = fs::read_to_string(path).map_err(io_context(path))?;
            let name = path.file_stem().map_or("grammar".into(), |s| s.to_string_lossy().into_owned());
            grammars.push(BenchGrammar { name, ag: analyze_text(&text, None, None)? });
        }
    }
    let plan = BenchPlan {
        depths: args.depths.clone(),
        seeds,
        inputs: args.count,
        warmup: args.warmup,
        sink: args.sink,
        compile: CompileOptions { opt: args.opt, inline_depth: args.inline_depth },
        parallel: args.parallel.max(1),
        max_bytes: (args.max_bytes > 0).then_some(args.max_bytes),
        ..BenchPlan::new(grammars, args.engines.clone())
    };
    let report = bench::run_plan(&plan).map_err(Failure::Usage)?;
    for r in &report.rows {
        if let Err(e) = &r.outcome {
            eprintln!("error: {} {} depth {} seed {}: {e}", r.engine, r.grammar, r.depth, r.seed);
        }
    }
    let csv = bench::csv(&report.rows);
    let summary = bench::summary_text(&report);
    match &args.csv {
        Some(path) => {
            fs::write(path, csv).map_err(io_context(path))?;
            write_stdout(summary.as_bytes())
        }
        None => {
            write_stdout(csv.as_bytes())?;
            eprint!("{summary}");
            Ok(())
        }
    }
}
