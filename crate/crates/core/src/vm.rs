//! Bytecode virtual machine for producers.
//!
//! Every reachable rule becomes an entry: a run of `EMIT`/`INVOKE` ending in
//! `RET`. `INVOKE` carries the depth check, the choice and the call, so the
//! depth counter is simply the return-stack height. Two dispatch loops share
//! the program: a central `match` and a threaded image of handler cells.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use crate::analysis::AnalyzedGrammar;
use crate::choice::Chooser;
use crate::engine::{EngineError, RunReport};
use crate::grammar::Symbol;
use crate::interp::ProductionConfig;
use crate::sink::Sink;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Emit(u32),
    Invoke(u32),
    Ret,
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMeta {
    pub name: String,
    pub mu: u32,
    pub rule_count: u32,
    /// Index of the key's first string in `pool_spans`.
    pub pool_start: u32,
    pub pool_count: u32,
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub code: Vec<Instr>,
    pub literals: Vec<Vec<u8>>,
    /// Code offset of every rule, per key.
    pub rule_entries: Vec<Vec<u32>>,
    /// Rule indices of minimum cost, per key.
    pub min_rules: Vec<Vec<u32>>,
    pub pool_arena: Vec<u8>,
    /// `(offset, length)` of each pool string in `pool_arena`.
    pub pool_spans: Vec<(u32, u32)>,
    pub key_meta: Vec<KeyMeta>,
    pub start: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("malformed program: {0}")]
pub struct ProgramError(pub String);

struct Builder {
    code: Vec<Instr>,
    literals: Vec<Vec<u8>>,
    literal_ids: HashMap<Vec<u8>, u32>,
}

impl Builder {
    fn literal(&mut self, bytes: Vec<u8>) -> u32 {
        if let Some(&id) = self.literal_ids.get(&bytes) {
            return id;
        }
        let id = self.literals.len() as u32;
        self.literals.push(bytes.clone());
        self.literal_ids.insert(bytes, id);
        id
    }

    fn flush(&mut self, pending: &mut Vec<u8>) {
        if !pending.is_empty() {
            let id = self.literal(std::mem::take(pending));
            self.code.push(Instr::Emit(id));
        }
    }
}

/// Assembles the reachable part of an analyzed grammar. Keys keep grammar
/// order; adjacent terminals of a rule share one `EMIT`.
pub fn assemble(ag: &AnalyzedGrammar) -> Program {
    let keys: Vec<&str> = ag.grammar.keys().filter(|k| ag.reachable.contains(*k)).collect();
    let ids: HashMap<&str, u32> = keys.iter().enumerate().map(|(i, k)| (*k, i as u32)).collect();
    let mut b = Builder { code: Vec::new(), literals: Vec::new(), literal_ids: HashMap::new() };
    let mut rule_entries = Vec::with_capacity(keys.len());
    let mut min_rules = Vec::with_capacity(keys.len());
    let mut pool_arena = Vec::new();
    let mut pool_spans = Vec::new();
    let mut key_meta = Vec::with_capacity(keys.len());

    for &key in &keys {
        let rules = ag.grammar.rules(key).expect("reachable keys are defined");
        let mut entries = Vec::with_capacity(rules.len());
        for rule in rules {
            entries.push(b.code.len() as u32);
            let mut pending = Vec::new();
            for sym in &rule.symbols {
                match sym {
                    Symbol::Terminal(t) => pending.extend_from_slice(t),
                    Symbol::Nonterminal(n) => {
                        b.flush(&mut pending);
                        b.code.push(Instr::Invoke(ids[n.as_str()]));
                    }
                }
            }
            b.flush(&mut pending);
            b.code.push(Instr::Ret);
        }
        rule_entries.push(entries);
        min_rules.push(ag.min_rules(key).iter().map(|&r| r as u32).collect());

        let pool_start = pool_spans.len() as u32;
        let pool = if ag.pools.is_overflowed(key) { &[][..] } else { ag.pools.pool(key).unwrap_or(&[]) };
        for s in pool {
            pool_spans.push((pool_arena.len() as u32, s.len() as u32));
            pool_arena.extend_from_slice(s);
        }
        key_meta.push(KeyMeta {
            name: key.to_string(),
            mu: ag.mu(key).finite().expect("reachable keys terminate"),
            rule_count: rules.len() as u32,
            pool_start,
            pool_count: pool.len() as u32,
            overflow: ag.pools.is_overflowed(key),
        });
    }

    Program {
        code: b.code,
        literals: b.literals,
        rule_entries,
        min_rules,
        pool_arena,
        pool_spans,
        key_meta,
        start: ids[ag.start()],
    }
}

impl Program {
    pub fn max_mu(&self) -> u32 {
        self.key_meta.iter().map(|m| m.mu).max().unwrap_or(0)
    }

    /// Return-stack capacity needed for `max_depth`.
    pub fn stack_bound(&self, max_depth: usize) -> usize {
        max_depth + self.max_mu() as usize + 1
    }

    pub fn key_id(&self, name: &str) -> Option<u32> {
        self.key_meta.iter().position(|m| m.name == name).map(|i| i as u32)
    }

    pub fn pool_string(&self, key: u32, index: u32) -> &[u8] {
        let (off, len) = self.pool_spans[(self.key_meta[key as usize].pool_start + index) as usize];
        &self.pool_arena[off as usize..(off + len) as usize]
    }

    /// Code followed by the per-input driver: `INVOKE start; HALT`.
    fn image(&self, start: u32) -> Vec<Instr> {
        let mut image = self.code.clone();
        image.push(Instr::Invoke(start));
        image.push(Instr::Halt);
        image
    }

    fn start_for(&self, cfg: &ProductionConfig) -> Result<u32, EngineError> {
        match &cfg.start_key {
            None => Ok(self.start),
            Some(k) => self
                .key_id(k)
                .ok_or_else(|| EngineError::Config(format!("start key {k} is not in the program"))),
        }
    }

    /// Checks table ranges and that every entry runs into a `RET`.
    pub fn check(&self) -> Result<(), ProgramError> {
        let err = |m: String| Err(ProgramError(m));
        let n = self.key_meta.len();
        if self.rule_entries.len() != n || self.min_rules.len() != n {
            return err("per-key tables disagree in length".into());
        }
        if self.start as usize >= n {
            return err(format!("start key {} out of range", self.start));
        }
        for (pc, ins) in self.code.iter().enumerate() {
            match *ins {
                Instr::Emit(l) if l as usize >= self.literals.len() => {
                    return err(format!("{pc:04}: literal {l} out of range"))
                }
                Instr::Invoke(k) if k as usize >= n => {
                    return err(format!("{pc:04}: key {k} out of range"))
                }
                Instr::Halt => return err(format!("{pc:04}: HALT inside code")),
                _ => {}
            }
        }
        let mut reached = vec![false; self.code.len()];
        for (k, meta) in self.key_meta.iter().enumerate() {
            if self.rule_entries[k].len() != meta.rule_count as usize || meta.rule_count == 0 {
                return err(format!("key {k}: rule count mismatch"));
            }
            if self.min_rules[k].is_empty()
                || self.min_rules[k].iter().any(|&r| r >= meta.rule_count)
            {
                return err(format!("key {k}: bad min rules"));
            }
            let pool_end = meta.pool_start as usize + meta.pool_count as usize;
            if pool_end > self.pool_spans.len() || (!meta.overflow && meta.pool_count == 0) {
                return err(format!("key {k}: bad pool reference"));
            }
            for &entry in &self.rule_entries[k] {
                let mut pc = entry as usize;
                loop {
                    match self.code.get(pc) {
                        None => return err(format!("key {k}: entry {entry:04} runs off the code")),
                        Some(Instr::Ret) => {
                            reached[pc] = true;
                            break;
                        }
                        Some(_) => reached[pc] = true,
                    }
                    pc += 1;
                }
            }
        }
        if let Some(pc) = reached.iter().position(|r| !r) {
            return err(format!("{pc:04}: unreachable instruction"));
        }
        for &(off, len) in &self.pool_spans {
            if off as usize + len as usize > self.pool_arena.len() {
                return err("pool span out of range".into());
            }
        }
        Ok(())
    }
}

struct Stats {
    high_water: usize,
    max_height: usize,
}

/// Runs with a central fetch-decode loop.
pub fn run_switch<C: Chooser>(
    p: &Program,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
) -> Result<RunReport, EngineError> {
    cfg.check()?;
    let start = p.start_for(cfg)?;
    let image = p.image(start);
    let entry = p.code.len();
    let max_depth = cfg.max_depth;
    let bound = p.stack_bound(max_depth);
    let mut stack: Vec<usize> = Vec::with_capacity(bound);
    let mut stats = Stats { high_water: 0, max_height: 0 };
    let mut item = Vec::new();
    let before = sink.bytes_written();
    let begin = Instant::now();

    for _ in 0..cfg.inputs {
        item.clear();
        let budget = cfg.budget(sink.bytes_written() - before);
        let mut pc = entry;
        loop {
            match image[pc] {
                Instr::Emit(l) => {
                    item.extend_from_slice(&p.literals[l as usize]);
                    pc += 1;
                }
                Instr::Invoke(k) => {
                    if item.len() > budget {
                        return Err(cfg.over_budget());
                    }
                    let depth = stack.len();
                    let meta = &p.key_meta[k as usize];
                    let rule = if depth < max_depth {
                        chooser.choose(meta.rule_count as usize)?
                    } else if !meta.overflow {
                        let c = chooser.choose(meta.pool_count as usize)?;
                        item.extend_from_slice(p.pool_string(k, c as u32));
                        stats.max_height = stats.max_height.max(depth + meta.mu as usize);
                        pc += 1;
                        continue;
                    } else {
                        let mins = &p.min_rules[k as usize];
                        mins[chooser.choose(mins.len())?] as usize
                    };
                    if depth >= bound {
                        return Err(EngineError::StackOverflow(depth));
                    }
                    stack.push(pc + 1);
                    stats.high_water = stats.high_water.max(depth + 1);
                    stats.max_height = stats.max_height.max(depth + 1);
                    pc = p.rule_entries[k as usize][rule] as usize;
                }
                Instr::Ret => pc = stack.pop().expect("RET with empty return stack"),
                Instr::Halt => break,
            }
        }
        item.extend_from_slice(&cfg.separator);
        if item.len() > budget {
            return Err(cfg.over_budget());
        }
        sink.write(&item)?;
    }

    Ok(RunReport {
        inputs: cfg.inputs as u64,
        bytes: sink.bytes_written() - before,
        seconds: begin.elapsed().as_secs_f64(),
        stack_high_water: stats.high_water,
        max_height: stats.max_height,
    })
}

const STOP: usize = usize::MAX;

/// Per-key tables flattened for the threaded loop.
#[derive(Clone, Copy)]
struct KeyRt {
    entries: u32,
    rule_count: u32,
    mins: u32,
    min_count: u32,
    pools: u32,
    pool_count: u32,
    overflow: bool,
    mu: u32,
}

struct Thread<'p, C> {
    chooser: C,
    item: Vec<u8>,
    stack: Vec<usize>,
    max_depth: usize,
    bound: usize,
    budget: usize,
    keys: Vec<KeyRt>,
    entries: Vec<u32>,
    mins: Vec<u32>,
    prog: &'p Program,
    stats: Stats,
    error: Option<EngineError>,
}

type Handler<C> = for<'p> fn(&mut Thread<'p, C>, &Cell<C>, usize) -> usize;

/// One threaded instruction: its handler and pre-resolved operands.
struct Cell<C> {
    run: Handler<C>,
    a: u32,
    b: u32,
}

fn op_emit<C: Chooser>(t: &mut Thread<'_, C>, cell: &Cell<C>, pc: usize) -> usize {
    let (off, len) = (cell.a as usize, cell.b as usize);
    t.item.extend_from_slice(&t.prog.pool_arena[off..off + len]);
    pc + 1
}

fn op_invoke<C: Chooser>(t: &mut Thread<'_, C>, cell: &Cell<C>, pc: usize) -> usize {
    if t.item.len() > t.budget {
        t.error = Some(EngineError::OutputLimit(0));
        return STOP;
    }
    let k = t.keys[cell.a as usize];
    let depth = t.stack.len();
    let choose = |t: &mut Thread<'_, C>, n: u32| match t.chooser.choose(n as usize) {
        Ok(c) => Some(c),
        Err(e) => {
            t.error = Some(e.into());
            None
        }
    };
    let rule = if depth < t.max_depth {
        match choose(t, k.rule_count) {
            Some(c) => c,
            None => return STOP,
        }
    } else if !k.overflow {
        let Some(c) = choose(t, k.pool_count) else { return STOP };
        let (off, len) = t.prog.pool_spans[k.pools as usize + c];
        t.item.extend_from_slice(&t.prog.pool_arena[off as usize..(off + len) as usize]);
        t.stats.max_height = t.stats.max_height.max(depth + k.mu as usize);
        return pc + 1;
    } else {
        let Some(c) = choose(t, k.min_count) else { return STOP };
        t.mins[k.mins as usize + c] as usize
    };
    if depth >= t.bound {
        t.error = Some(EngineError::StackOverflow(depth));
        return STOP;
    }
    t.stack.push(pc + 1);
    t.stats.high_water = t.stats.high_water.max(depth + 1);
    t.stats.max_height = t.stats.max_height.max(depth + 1);
    t.entries[k.entries as usize + rule] as usize
}

fn op_ret<C: Chooser>(t: &mut Thread<'_, C>, _: &Cell<C>, _: usize) -> usize {
    t.stack.pop().expect("RET with empty return stack")
}

fn op_halt<C: Chooser>(_: &mut Thread<'_, C>, _: &Cell<C>, _: usize) -> usize {
    STOP
}

/// Runs the threaded image: every instruction is a handler cell that returns
/// the index of its successor, and a bare trampoline transfers control.
pub fn run_threaded<C: Chooser>(
    p: &Program,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
) -> Result<RunReport, EngineError> {
    cfg.check()?;
    let start = p.start_for(cfg)?;

    // EMIT operands become spans of one arena: pool strings, then literals.
    let mut arena = p.pool_arena.clone();
    let lit_spans: Vec<(u32, u32)> = p
        .literals
        .iter()
        .map(|l| {
            let off = arena.len() as u32;
            arena.extend_from_slice(l);
            (off, l.len() as u32)
        })
        .collect();
    let prog = Program { pool_arena: arena, ..p.clone() };

    let mut entries = Vec::new();
    let mut mins = Vec::new();
    let keys: Vec<KeyRt> = p
        .key_meta
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let rt = KeyRt {
                entries: entries.len() as u32,
                rule_count: m.rule_count,
                mins: mins.len() as u32,
                min_count: p.min_rules[k].len() as u32,
                pools: m.pool_start,
                pool_count: m.pool_count,
                overflow: m.overflow,
                mu: m.mu,
            };
            entries.extend_from_slice(&p.rule_entries[k]);
            mins.extend_from_slice(&p.min_rules[k]);
            rt
        })
        .collect();

    let cells: Vec<Cell<&mut C>> = p
        .image(start)
        .into_iter()
        .map(|ins| match ins {
            Instr::Emit(l) => {
                let (a, b) = lit_spans[l as usize];
                Cell { run: op_emit::<&mut C> as Handler<&mut C>, a, b }
            }
            Instr::Invoke(k) => Cell { run: op_invoke::<&mut C>, a: k, b: 0 },
            Instr::Ret => Cell { run: op_ret::<&mut C>, a: 0, b: 0 },
            Instr::Halt => Cell { run: op_halt::<&mut C>, a: 0, b: 0 },
        })
        .collect();

    let bound = p.stack_bound(cfg.max_depth);
    let mut t = Thread {
        chooser,
        item: Vec::new(),
        stack: Vec::with_capacity(bound),
        max_depth: cfg.max_depth,
        bound,
        budget: usize::MAX,
        keys,
        entries,
        mins,
        prog: &prog,
        stats: Stats { high_water: 0, max_height: 0 },
        error: None,
    };
    let entry = p.code.len();
    let before = sink.bytes_written();
    let begin = Instant::now();

    for _ in 0..cfg.inputs {
        t.item.clear();
        t.budget = cfg.budget(sink.bytes_written() - before);
        let mut pc = entry;
        while pc != STOP {
            let cell = &cells[pc];
            pc = (cell.run)(&mut t, cell, pc);
        }
        match t.error.take() {
            Some(EngineError::OutputLimit(_)) => return Err(cfg.over_budget()),
            Some(e) => return Err(e),
            None => {}
        }
        t.item.extend_from_slice(&cfg.separator);
        if t.item.len() > t.budget {
            return Err(cfg.over_budget());
        }
        sink.write(&t.item)?;
    }

    Ok(RunReport {
        inputs: cfg.inputs as u64,
        bytes: sink.bytes_written() - before,
        seconds: begin.elapsed().as_secs_f64(),
        stack_high_water: t.stats.high_water,
        max_height: t.stats.max_height,
    })
}

/// Quotes bytes as `'...'`: printable ASCII verbatim, `\'`, `\\` and `\xHH`
/// for everything else.
pub fn quote(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() + 2);
    s.push('\'');
    for &b in bytes {
        match b {
            b'\'' => s.push_str("\\'"),
            b'\\' => s.push_str("\\\\"),
            0x20..=0x7e => s.push(b as char),
            _ => {
                let _ = write!(s, "\\x{b:02x}");
            }
        }
    }
    s.push('\'');
    s
}

/// Parses one quoted string at the start of `s`, returning it and the rest.
fn unquote(s: &str) -> Result<(Vec<u8>, &str), ProgramError> {
    let bad = || ProgramError(format!("bad quoted string near {:?}", truncate(s)));
    let bytes = s.as_bytes();
    if bytes.first() != Some(&b'\'') {
        return Err(bad());
    }
    let mut out = Vec::new();
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\'' => return Ok((out, &s[i + 1..])),
            b'\\' => {
                match bytes.get(i + 1) {
                    Some(b'\'') => out.push(b'\''),
                    Some(b'\\') => out.push(b'\\'),
                    Some(b'x') => {
                        let hex = s.get(i + 2..i + 4).ok_or_else(bad)?;
                        out.push(u8::from_str_radix(hex, 16).map_err(|_| bad())?);
                        i += 2;
                    }
                    _ => return Err(bad()),
                }
                i += 2;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    Err(bad())
}

fn truncate(s: &str) -> &str {
    s.char_indices().nth(24).map_or(s, |(i, _)| &s[..i])
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Textual listing: code, then the start key, per-key tables and pools.
/// [`parse_listing`] reads it back into an identical program.
pub fn disassemble(p: &Program) -> String {
    let mut out = String::new();
    for (pc, ins) in p.code.iter().enumerate() {
        let _ = match *ins {
            Instr::Emit(l) => writeln!(out, "{pc:04} EMIT {}", quote(&p.literals[l as usize])),
            Instr::Invoke(k) => {
                writeln!(out, "{pc:04} INVOKE {k} {}", p.key_meta[k as usize].name)
            }
            Instr::Ret => writeln!(out, "{pc:04} RET"),
            Instr::Halt => writeln!(out, "{pc:04} HALT"),
        };
    }
    out.push('\n');
    let _ = writeln!(out, "start {}", p.start);
    for (k, m) in p.key_meta.iter().enumerate() {
        let pool = if m.overflow { "overflow".to_string() } else { m.pool_count.to_string() };
        let entries = join(p.rule_entries[k].iter().map(|e| format!("{e:04}")));
        let _ = writeln!(
            out,
            "key {k} mu={} rules={} pool={pool} min={} entries={entries} {}",
            m.mu,
            m.rule_count,
            join(&p.min_rules[k]),
            m.name
        );
    }
    for (k, m) in p.key_meta.iter().enumerate() {
        if m.overflow {
            continue;
        }
        let _ = write!(out, "pool {k}");
        for i in 0..m.pool_count {
            let _ = write!(out, " {}", quote(p.pool_string(k as u32, i)));
        }
        out.push('\n');
    }
    out
}

fn field<'a>(token: Option<&'a str>, name: &str) -> Result<&'a str, ProgramError> {
    token
        .and_then(|t| t.strip_prefix(name)?.strip_prefix('='))
        .ok_or_else(|| ProgramError(format!("expected {name}=")))
}

fn number<T: std::str::FromStr>(s: &str) -> Result<T, ProgramError> {
    s.parse().map_err(|_| ProgramError(format!("bad number {s:?}")))
}

fn numbers(s: &str) -> Result<Vec<u32>, ProgramError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(number).collect()
}

/// Reads a listing produced by [`disassemble`].
pub fn parse_listing(text: &str) -> Result<Program, ProgramError> {
    let mut b = Builder { code: Vec::new(), literals: Vec::new(), literal_ids: HashMap::new() };
    let mut start = None;
    let mut key_meta = Vec::new();
    let mut rule_entries = Vec::new();
    let mut min_rules = Vec::new();
    let mut pools: HashMap<u32, Vec<Vec<u8>>> = HashMap::new();

    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        match head {
            "start" => start = Some(number::<u32>(rest)?),
            "key" => {
                let mut it = rest.splitn(7, ' ');
                let id: usize = number(it.next().unwrap_or(""))?;
                if id != key_meta.len() {
                    return Err(ProgramError(format!("key {id} out of order")));
                }
                let mu = number(field(it.next(), "mu")?)?;
                let rule_count = number(field(it.next(), "rules")?)?;
                let pool = field(it.next(), "pool")?;
                let (overflow, pool_count) =
                    if pool == "overflow" { (true, 0) } else { (false, number(pool)?) };
                min_rules.push(numbers(field(it.next(), "min")?)?);
                rule_entries.push(numbers(field(it.next(), "entries")?)?);
                let name = it.next().ok_or_else(|| ProgramError("missing key name".into()))?;
                key_meta.push(KeyMeta {
                    name: name.to_string(),
                    mu,
                    rule_count,
                    pool_start: 0,
                    pool_count,
                    overflow,
                });
            }
            "pool" => {
                let (id, mut s) = rest.split_once(' ').unwrap_or((rest, ""));
                let mut strings = Vec::new();
                while !s.is_empty() {
                    let (bytes, tail) = unquote(s)?;
                    strings.push(bytes);
                    s = tail.strip_prefix(' ').unwrap_or(tail);
                }
                pools.insert(number(id)?, strings);
            }
            _ => {
                let pc: usize = number(head)?;
                if pc != b.code.len() {
                    return Err(ProgramError(format!("offset {pc:04} out of sequence")));
                }
                let (op, operand) = rest.split_once(' ').unwrap_or((rest, ""));
                let ins = match op {
                    "EMIT" => {
                        let (bytes, tail) = unquote(operand)?;
                        if !tail.is_empty() {
                            return Err(ProgramError(format!("{pc:04}: trailing text")));
                        }
                        Instr::Emit(b.literal(bytes))
                    }
                    "INVOKE" => Instr::Invoke(number(operand.split(' ').next().unwrap_or(""))?),
                    "RET" => Instr::Ret,
                    "HALT" => Instr::Halt,
                    _ => return Err(ProgramError(format!("{pc:04}: unknown mnemonic {op:?}"))),
                };
                b.code.push(ins);
            }
        }
    }

    let mut pool_arena = Vec::new();
    let mut pool_spans = Vec::new();
    for (k, meta) in key_meta.iter_mut().enumerate() {
        meta.pool_start = pool_spans.len() as u32;
        let strings = pools.remove(&(k as u32)).unwrap_or_default();
        if strings.len() != meta.pool_count as usize {
            return Err(ProgramError(format!("key {k}: pool size mismatch")));
        }
        for s in strings {
            pool_spans.push((pool_arena.len() as u32, s.len() as u32));
            pool_arena.extend_from_slice(&s);
        }
    }
    if !pools.is_empty() {
        return Err(ProgramError("pool for an unknown key".into()));
    }

    let p = Program {
        code: b.code,
        literals: b.literals,
        rule_entries,
        min_rules,
        pool_arena,
        pool_spans,
        key_meta,
        start: start.ok_or_else(|| ProgramError("missing start line".into()))?,
    };
    p.check()?;
    Ok(p)
}
