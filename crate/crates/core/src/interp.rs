//! Reference interpreters: the depth-limited textbook fuzzer and its pooled
//! variant. They walk the grammar by key name, like a dictionary-driven
//! fuzzer would, and serve as semantic oracles for the compiled engines.
//!
//! Depth counts expansion frames from the start key, which sits at depth 0.
//! Below `max_depth` any rule may be chosen; at or beyond it only
//! minimum-cost expansions are used. The limit interpreter walks the min
//! rules, the pooled one emits a precomputed pool string in one step.

use std::time::Instant;

use serde_json::{json, Value};

use crate::analysis::AnalyzedGrammar;
use crate::choice::Chooser;
use crate::engine::{EngineError, RunReport};
use crate::grammar::{Rule, Symbol};
use crate::sink::Sink;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionConfig {
    /// Free-stack budget.
    pub max_depth: usize,
    pub inputs: usize,
    /// Appended after every input and counted in the output bytes.
    pub separator: Vec<u8>,
    /// Overrides the grammar's start key.
    pub start_key: Option<String>,
    /// Stops the run with [`EngineError::OutputLimit`] once its output would
    /// exceed this many bytes.
    pub max_bytes: Option<u64>,
}

impl Default for ProductionConfig {
    fn default() -> Self {
        ProductionConfig { max_depth: 8, inputs: 1, separator: b"\n".to_vec(), start_key: None, max_bytes: None }
    }
}

impl ProductionConfig {
    pub fn new(max_depth: usize, inputs: usize) -> ProductionConfig {
        ProductionConfig { max_depth, inputs, ..ProductionConfig::default() }
    }

    pub fn check(&self) -> Result<(), EngineError> {
        if self.max_depth < 1 {
            return Err(EngineError::Config("max_depth must be at least 1".into()));
        }
        if self.inputs < 1 {
            return Err(EngineError::Config("inputs must be at least 1".into()));
        }
        Ok(())
    }

    /// Bytes the next input may occupy, separator included, given `written`
    /// bytes so far.
    #[inline]
    pub(crate) fn budget(&self, written: u64) -> usize {
        match self.max_bytes {
            Some(limit) => usize::try_from(limit.saturating_sub(written)).unwrap_or(usize::MAX),
            None => usize::MAX,
        }
    }

    pub(crate) fn over_budget(&self) -> EngineError {
        EngineError::OutputLimit(self.max_bytes.unwrap_or(u64::MAX))
    }

    pub(crate) fn start<'a>(&'a self, ag: &'a AnalyzedGrammar) -> Result<&'a str, EngineError> {
        let key = self.start_key.as_deref().unwrap_or(ag.start());
        if !ag.mu(key).is_finite() {
            return Err(EngineError::Config(format!("start key {key} cannot be expanded")));
        }
        Ok(key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetMode {
    /// Walk min rules beyond the budget.
    Limit,
    /// Emit pool strings beyond the budget.
    Pooled,
}

/// A node of a recorded derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivationNode {
    Terminal(Vec<u8>),
    Expansion { key: String, rule: usize, children: Vec<DerivationNode> },
    Pool { key: String, index: usize, text: Vec<u8> },
}

impl DerivationNode {
    /// Concatenated leaf bytes.
    pub fn text(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.collect_text(&mut out);
        out
    }

    fn collect_text(&self, out: &mut Vec<u8>) {
        match self {
            DerivationNode::Terminal(t) | DerivationNode::Pool { text: t, .. } => {
                out.extend_from_slice(t)
            }
            DerivationNode::Expansion { children, .. } => {
                children.iter().for_each(|c| c.collect_text(out))
            }
        }
    }

    /// Tree height; a pool leaf stands for a min-rule subtree of its key's
    /// μ-depth.
    pub fn height(&self, ag: &AnalyzedGrammar) -> usize {
        match self {
            DerivationNode::Terminal(_) => 0,
            DerivationNode::Pool { key, .. } => ag.mu(key).finite().unwrap_or(0) as usize,
            DerivationNode::Expansion { children, .. } => {
                1 + children.iter().map(|c| c.height(ag)).max().unwrap_or(0)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            DerivationNode::Terminal(t) => json!(String::from_utf8_lossy(t)),
            DerivationNode::Expansion { key, rule, children } => json!({
                "key": key,
                "rule": rule,
                "children": children.iter().map(DerivationNode::to_json).collect::<Vec<_>>(),
            }),
            DerivationNode::Pool { key, index, text } => json!({
                "key": key,
                "pool": index,
                "text": String::from_utf8_lossy(text),
            }),
        }
    }
}

trait Observer {
    fn expand(&mut self, parent: usize, key: &str, rule: usize) -> usize;
    fn pool(&mut self, parent: usize, key: &str, index: usize, text: &[u8]);
    fn terminal(&mut self, parent: usize, bytes: &[u8]);
}

impl Observer for () {
    #[inline(always)]
    fn expand(&mut self, _: usize, _: &str, _: usize) -> usize {
        0
    }
    #[inline(always)]
    fn pool(&mut self, _: usize, _: &str, _: usize, _: &[u8]) {}
    #[inline(always)]
    fn terminal(&mut self, _: usize, _: &[u8]) {}
}

#[derive(Default)]
struct TreeBuilder {
    nodes: Vec<(DerivationNode, Vec<usize>)>,
}

impl TreeBuilder {
    fn add(&mut self, parent: usize, node: DerivationNode) -> usize {
        let id = self.nodes.len();
        self.nodes.push((node, Vec::new()));
        if id > 0 {
            self.nodes[parent].1.push(id);
        }
        id
    }

    fn build(mut self) -> Option<DerivationNode> {
        fn take(nodes: &mut [(DerivationNode, Vec<usize>)], id: usize) -> DerivationNode {
            let children = std::mem::take(&mut nodes[id].1);
            let mut node = std::mem::replace(&mut nodes[id].0, DerivationNode::Terminal(Vec::new()));
            if let DerivationNode::Expansion { children: out, .. } = &mut node {
                *out = children.into_iter().map(|c| take(nodes, c)).collect();
            }
            node
        }
        (!self.nodes.is_empty()).then(|| take(&mut self.nodes, 0))
    }
}

impl Observer for TreeBuilder {
    fn expand(&mut self, parent: usize, key: &str, rule: usize) -> usize {
        self.add(parent, DerivationNode::Expansion { key: key.to_string(), rule, children: Vec::new() })
    }

    fn pool(&mut self, parent: usize, key: &str, index: usize, text: &[u8]) {
        self.add(parent, DerivationNode::Pool { key: key.to_string(), index, text: text.to_vec() });
    }

    fn terminal(&mut self, parent: usize, bytes: &[u8]) {
        self.add(parent, DerivationNode::Terminal(bytes.to_vec()));
    }
}

enum Task<'g> {
    Expand { key: &'g str, depth: usize, parent: usize },
    Emit { bytes: &'g [u8], parent: usize },
}

struct Interpreter<'g, C> {
    ag: &'g AnalyzedGrammar,
    mode: BudgetMode,
    max_depth: usize,
    chooser: C,
    stack: Vec<Task<'g>>,
    high_water: usize,
    max_height: usize,
    budget: usize,
}

impl<'g, C: Chooser> Interpreter<'g, C> {
    fn new(ag: &'g AnalyzedGrammar, mode: BudgetMode, max_depth: usize, chooser: C) -> Self {
        Interpreter {
            ag,
            mode,
            max_depth,
            chooser,
            stack: Vec::new(),
            high_water: 0,
            max_height: 0,
            budget: usize::MAX,
        }
    }

    fn push_rule(&mut self, rule: &'g Rule, depth: usize, parent: usize) {
        for sym in rule.symbols.iter().rev() {
            self.stack.push(match sym {
                Symbol::Terminal(bytes) => Task::Emit { bytes, parent },
                Symbol::Nonterminal(key) => Task::Expand { key, depth, parent },
            });
        }
    }

    fn produce_one<O: Observer>(
        &mut self,
        start: &'g str,
        out: &mut Vec<u8>,
        obs: &mut O,
    ) -> Result<(), EngineError> {
        let g = &self.ag.grammar;
        let pools = &self.ag.pools;
        self.stack.push(Task::Expand { key: start, depth: 0, parent: 0 });
        while let Some(task) = self.stack.pop() {
            let (key, depth, parent) = match task {
                Task::Emit { bytes, parent } => {
                    out.extend_from_slice(bytes);
                    if out.len() > self.budget {
                        self.stack.clear();
                        return Err(EngineError::OutputLimit(0));
                    }
                    obs.terminal(parent, bytes);
                    continue;
                }
                Task::Expand { key, depth, parent } => (key, depth, parent),
            };
            let rules = g.rules(key).expect("analyzed grammars define every key");
            let rule = if depth < self.max_depth {
                self.chooser.choose(rules.len())?
            } else if self.mode == BudgetMode::Pooled && !pools.is_overflowed(key) {
                let pool = pools.pool(key).expect("finite keys have pools");
                let c = self.chooser.choose(pool.len())?;
                out.extend_from_slice(&pool[c]);
                if out.len() > self.budget {
                    self.stack.clear();
                    return Err(EngineError::OutputLimit(0));
                }
                obs.pool(parent, key, c, &pool[c]);
                let mu = self.ag.mu(key).finite().unwrap_or(0) as usize;
                self.max_height = self.max_height.max(depth + mu);
                continue;
            } else {
                let mins = self.ag.min_rules(key);
                mins[self.chooser.choose(mins.len())?]
            };
            self.high_water = self.high_water.max(depth + 1);
            self.max_height = self.max_height.max(depth + 1);
            let node = obs.expand(parent, key, rule);
            self.push_rule(&rules[rule], depth + 1, node);
        }
        Ok(())
    }
}

fn produce<C: Chooser>(
    ag: &AnalyzedGrammar,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
    mode: BudgetMode,
) -> Result<RunReport, EngineError> {
    cfg.check()?;
    let start = cfg.start(ag)?;
    let mut interp = Interpreter::new(ag, mode, cfg.max_depth, chooser);
    let mut item = Vec::new();
    let before = sink.bytes_written();
    let begin = Instant::now();
    for _ in 0..cfg.inputs {
        item.clear();
        interp.budget = cfg.budget(sink.bytes_written() - before);
        interp.produce_one(start, &mut item, &mut ()).map_err(|e| match e {
            EngineError::OutputLimit(_) => cfg.over_budget(),
            e => e,
        })?;
        item.extend_from_slice(&cfg.separator);
        if item.len() > interp.budget {
            return Err(cfg.over_budget());
        }
        sink.write(&item)?;
    }
    Ok(RunReport {
        inputs: cfg.inputs as u64,
        bytes: sink.bytes_written() - before,
        seconds: begin.elapsed().as_secs_f64(),
        stack_high_water: interp.high_water,
        max_height: interp.max_height,
    })
}

/// Depth-limited interpreter: min-rule walks beyond the budget.
pub fn produce_limit<C: Chooser>(
    ag: &AnalyzedGrammar,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
) -> Result<RunReport, EngineError> {
    produce(ag, cfg, chooser, sink, BudgetMode::Limit)
}

/// Pooled interpreter: one pool emission per key beyond the budget, or a
/// min-rule walk for keys whose pool overflowed.
pub fn produce_pooled<C: Chooser>(
    ag: &AnalyzedGrammar,
    cfg: &ProductionConfig,
    chooser: &mut C,
    sink: &mut Sink,
) -> Result<RunReport, EngineError> {
    produce(ag, cfg, chooser, sink, BudgetMode::Pooled)
}

/// Produces one input (without separator) and records its derivation.
pub fn derive<C: Chooser>(
    ag: &AnalyzedGrammar,
    mode: BudgetMode,
    max_depth: usize,
    start: &str,
    chooser: &mut C,
) -> Result<(Vec<u8>, DerivationNode), EngineError> {
    let mut interp = Interpreter::new(ag, mode, max_depth, chooser);
    let mut builder = TreeBuilder::default();
    let mut out = Vec::new();
    let start = ag
        .grammar
        .definitions()
        .get_key_value(start)
        .map(|(k, _)| k.as_str())
        .ok_or_else(|| EngineError::Config(format!("unknown start key {start}")))?;
    interp.produce_one(start, &mut out, &mut builder)?;
    let tree = builder.build().expect("start expansion always records a node");
    Ok((out, tree))
}

/// True iff every expansion matches one of its key's rules, every pool leaf
/// is the recorded entry of its key's pool, and the leaves spell `output`.
pub fn check_derivation(ag: &AnalyzedGrammar, node: &DerivationNode, output: &[u8]) -> bool {
    fn valid(ag: &AnalyzedGrammar, node: &DerivationNode) -> bool {
        match node {
            DerivationNode::Terminal(_) => true,
            DerivationNode::Pool { key, index, text } => ag
                .pools
                .pool(key)
                .and_then(|p| p.get(*index))
                .is_some_and(|entry| entry == text),
            DerivationNode::Expansion { key, rule, children } => {
                let Some(rule) = ag.grammar.rules(key).and_then(|r| r.get(*rule)) else {
                    return false;
                };
                rule.symbols.len() == children.len()
                    && rule.symbols.iter().zip(children).all(|(sym, child)| match (sym, child) {
                        (Symbol::Terminal(t), DerivationNode::Terminal(c)) => t == c,
                        (Symbol::Nonterminal(k), DerivationNode::Expansion { key, .. })
                        | (Symbol::Nonterminal(k), DerivationNode::Pool { key, .. }) => {
                            k == key && valid(ag, child)
                        }
                        _ => false,
                    })
            }
        }
    }
    matches!(node, DerivationNode::Expansion { .. } | DerivationNode::Pool { .. })
        && valid(ag, node)
        && node.text() == output
}
