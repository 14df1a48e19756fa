//! Producer IR: one unit per key (or per rule after supercompilation), with
//! explicit depth checks, choices and pool emissions.

use std::fmt;
use std::time::Instant;

use crate::analysis::AnalyzedGrammar;
use crate::choice::Chooser;
use crate::engine::{EngineError, RunReport};
use crate::grammar::{Rule, Symbol};
use crate::interp::ProductionConfig;
use crate::sink::Sink;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Step {
    Emit(Vec<u8>),
    /// At least two arms.
    Choose(Vec<Vec<Step>>),
    /// Runs `unit` at the current depth plus `delta`.
    Call { unit: usize, delta: i32 },
    /// Emits one string of a pool, chosen uniformly.
    PoolEmit(usize),
    /// `under` when the current depth plus `offset` is below the budget.
    DepthCheck { offset: i32, under: Vec<Step>, over: Vec<Step> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub name: String,
    pub body: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    pub key: String,
    pub strings: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProducerIR {
    pub units: Vec<Unit>,
    /// Runs once per input at depth 0.
    pub entry: Vec<Step>,
    pub pools: Vec<Pool>,
    pub start: String,
    /// Depth counts up from `-max_depth`, so checks compare against zero.
    pub rebased: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid IR: {0}")]
pub struct IrError(pub String);

/// C-like identifier for a key: `<foo-bar>` becomes `foo_bar`.
pub fn unit_name(key: &str) -> String {
    let inner = key.strip_prefix('<').and_then(|k| k.strip_suffix('>')).unwrap_or(key);
    let mut name: String =
        inner.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
        name.insert(0, 'k');
    }
    name
}

/// One unit per reachable key: a depth check choosing between the rules and
/// the key's pool (or its min rules when the pool overflowed).
pub fn lower(ag: &AnalyzedGrammar) -> ProducerIR {
    let keys: Vec<&str> = ag.grammar.keys().filter(|k| ag.reachable.contains(*k)).collect();
    let id = |k: &str| keys.iter().position(|x| *x == k).expect("reachable key");
    let rule_body = |rule: &Rule| -> Vec<Step> {
        rule.symbols
            .iter()
            .map(|s| match s {
                Symbol::Terminal(t) => Step::Emit(t.clone()),
                Symbol::Nonterminal(n) => Step::Call { unit: id(n), delta: 1 },
            })
            .collect()
    };
    let choice = |mut arms: Vec<Vec<Step>>| -> Vec<Step> {
        if arms.len() == 1 {
            arms.pop().unwrap()
        } else {
            vec![Step::Choose(arms)]
        }
    };

    let mut names: Vec<String> = Vec::new();
    let mut units = Vec::new();
    let mut pools = Vec::new();
    for &key in &keys {
        let rules = ag.grammar.rules(key).expect("reachable keys are defined");
        let under = choice(rules.iter().map(rule_body).collect());
        let over = if ag.pools.is_overflowed(key) {
            choice(ag.min_rules(key).iter().map(|&r| rule_body(&rules[r])).collect())
        } else {
            pools.push(Pool { key: key.to_string(), strings: ag.pools.pool(key).unwrap().to_vec() });
            vec![Step::PoolEmit(pools.len() - 1)]
        };
        let mut name = unit_name(key);
        while names.contains(&name) {
            name.push('_');
        }
        names.push(name.clone());
        units.push(Unit { name, body: vec![Step::DepthCheck { offset: 0, under, over }] });
    }
    ProducerIR {
        units,
        entry: vec![Step::Call { unit: id(ag.start()), delta: 0 }],
        pools,
        start: ag.start().to_string(),
        rebased: false,
    }
}

pub(crate) fn visit<'a>(body: &'a [Step], f: &mut impl FnMut(&'a Step)) {
    for step in body {
        f(step);
        match step {
            Step::Choose(arms) => arms.iter().for_each(|a| visit(a, f)),
            Step::DepthCheck { under, over, .. } => {
                visit(under, f);
                visit(over, f);
            }
            _ => {}
        }
    }
}

pub(crate) fn visit_mut(body: &mut [Step], f: &mut impl FnMut(&mut Step)) {
    for step in body {
        f(step);
        match step {
            Step::Choose(arms) => arms.iter_mut().for_each(|a| visit_mut(a, f)),
            Step::DepthCheck { under, over, .. } => {
                visit_mut(under, f);
                visit_mut(over, f);
            }
            _ => {}
        }
    }
}

impl ProducerIR {
    pub fn unit_index(&self, name: &str) -> Option<usize> {
        self.units.iter().position(|u| u.name == name)
    }

    /// Steps in the entry and all units.
    pub fn size(&self) -> usize {
        let mut n = 0;
        visit(&self.entry, &mut |_| n += 1);
        for u in &self.units {
            visit(&u.body, &mut |_| n += 1);
        }
        n
    }

    pub fn check(&self) -> Result<(), IrError> {
        let mut problem = None;
        let mut check_body = |body: &[Step]| {
            visit(body, &mut |s| match s {
                Step::Choose(arms) if arms.len() < 2 => {
                    problem.get_or_insert_with(|| "choice with fewer than two arms".to_string());
                }
                Step::Call { unit, .. } if *unit >= self.units.len() => {
                    problem.get_or_insert_with(|| format!("call to undefined unit {unit}"));
                }
                Step::PoolEmit(p) if self.pools.get(*p).is_none_or(|p| p.strings.is_empty()) => {
                    problem.get_or_insert_with(|| format!("pool {p} missing or empty"));
                }
                _ => {}
            })
        };
        check_body(&self.entry);
        for u in &self.units {
            check_body(&u.body);
        }
        match problem {
            Some(p) => Err(IrError(p)),
            None => Ok(()),
        }
    }

    fn write_body(&self, f: &mut fmt::Formatter<'_>, body: &[Step], indent: usize) -> fmt::Result {
        let pad = "  ".repeat(indent);
        for step in body {
            match step {
                Step::Emit(b) => writeln!(f, "{pad}emit {}", crate::vm::quote(b))?,
                Step::Call { unit, delta } => {
                    writeln!(f, "{pad}call {} {delta:+}", self.units[*unit].name)?
                }
                Step::PoolEmit(p) => {
                    let pool = &self.pools[*p];
                    writeln!(f, "{pad}pool {} ({} strings)", pool.key, pool.strings.len())?
                }
                Step::Choose(arms) => {
                    writeln!(f, "{pad}choose {}", arms.len())?;
                    for (i, arm) in arms.iter().enumerate() {
                        writeln!(f, "{pad}  arm {i}")?;
                        self.write_body(f, arm, indent + 2)?;
                    }
                }
                Step::DepthCheck { offset, under, over } => {
                    writeln!(f, "{pad}if depth{offset:+} under budget")?;
                    self.write_body(f, under, indent + 1)?;
                    writeln!(f, "{pad}else")?;
                    self.write_body(f, over, indent + 1)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ProducerIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entry{}", if self.rebased { " (rebased)" } else { "" })?;
        self.write_body(f, &self.entry, 1)?;
        for u in &self.units {
            writeln!(f, "unit {}", u.name)?;
            self.write_body(f, &u.body, 1)?;
        }
        Ok(())
    }
}

struct Frame<'a> {
    body: &'a [Step],
    next: usize,
    depth: i64,
}

/// Reference interpreter for the IR, with an explicit frame stack.
pub fn run_ir<C: Chooser>(
    ir: &ProducerIR,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
) -> Result<RunReport, EngineError> {
    cfg.check()?;
    if let Some(k) = cfg.start_key.as_deref().filter(|k| *k != ir.start) {
        return Err(EngineError::Config(format!(
            "compiled producer starts at {}, not {k}",
            ir.start
        )));
    }
    let max_depth = cfg.max_depth as i64;
    let (base, limit) = if ir.rebased { (-max_depth, 0) } else { (0, max_depth) };
    let mut frames: Vec<Frame<'_>> = Vec::new();
    let mut high_water = 0;
    let mut item = Vec::new();
    let before = sink.bytes_written();
    let begin = Instant::now();

    for _ in 0..cfg.inputs {
        item.clear();
        let budget = cfg.budget(sink.bytes_written() - before);
        frames.push(Frame { body: &ir.entry, next: 0, depth: base });
        while let Some(frame) = frames.last_mut() {
            let Some(step) = frame.body.get(frame.next) else {
                frames.pop();
                continue;
            };
            frame.next += 1;
            let depth = frame.depth;
            let pushed = match step {
                Step::Emit(b) => {
                    item.extend_from_slice(b);
                    None
                }
                Step::Choose(arms) => Some((&arms[chooser.choose(arms.len())?][..], depth)),
                Step::Call { unit, delta } => {
                    if item.len() > budget {
                        return Err(cfg.over_budget());
                    }
                    Some((&ir.units[*unit].body[..], depth + *delta as i64))
                }
                Step::PoolEmit(p) => {
                    let strings = &ir.pools[*p].strings;
                    item.extend_from_slice(&strings[chooser.choose(strings.len())?]);
                    None
                }
                Step::DepthCheck { offset, under, over } => {
                    let body = if depth + (*offset as i64) < limit { under } else { over };
                    Some((&body[..], depth))
                }
            };
            if let Some((body, depth)) = pushed {
                frames.push(Frame { body, next: 0, depth });
                high_water = high_water.max(frames.len());
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
        stack_high_water: high_water,
        max_height: 0,
    })
}
