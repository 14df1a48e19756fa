//! μ-depth analysis and precomputed minimal-expansion string pools.
//!
//! The μ-depth of a key is the minimum height of a derivation tree that
//! expands it to terminals only. Terminals have depth 0, a rule costs one
//! more than the deepest of its symbols (an empty rule costs 1), and a key
//! costs the minimum over its rules. Keys that cannot terminate get
//! [`Depth::Infinite`].
//!
//! Once the free expansion budget is exhausted, engines only expand the
//! minimum-cost rules of a key. The language of that restricted grammar is
//! finite, so it can be enumerated ahead of time into a pool per key.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use indexmap::{IndexMap, IndexSet};

use crate::grammar::{validate, Grammar, Issue, KeyIndex, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Depth {
    Finite(u32),
    Infinite,
}

impl Depth {
    pub fn finite(self) -> Option<u32> {
        match self {
            Depth::Finite(d) => Some(d),
            Depth::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Depth::Finite(_))
    }

    fn succ(self) -> Depth {
        match self {
            Depth::Finite(d) => Depth::Finite(d + 1),
            Depth::Infinite => Depth::Infinite,
        }
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthTable {
    pub mu: IndexMap<String, Depth>,
    /// Cost of every rule, indexed like the grammar's rules.
    pub rule: IndexMap<String, Vec<Depth>>,
}

impl DepthTable {
    pub fn mu_depth(&self, key: &str) -> Option<Depth> {
        self.mu.get(key).copied()
    }

    /// Rules of `key` whose cost equals its μ-depth, in rule order. Empty for
    /// infinite keys.
    pub fn min_rules(&self, key: &str) -> Vec<usize> {
        let Some(Depth::Finite(mu)) = self.mu_depth(key) else {
            return Vec::new();
        };
        self.rule[key]
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == Depth::Finite(mu))
            .map(|(i, _)| i)
            .collect()
    }
}

fn symbol_depth(g: &Grammar, mu: &IndexMap<String, Depth>, sym: &Symbol) -> Depth {
    match sym {
        Symbol::Terminal(_) => Depth::Finite(0),
        // An undefined nonterminal can never be expanded.
        Symbol::Nonterminal(name) if !g.contains_key(name) => Depth::Infinite,
        Symbol::Nonterminal(name) => mu[name.as_str()],
    }
}

fn rule_cost(g: &Grammar, mu: &IndexMap<String, Depth>, symbols: &[Symbol]) -> Depth {
    symbols
        .iter()
        .map(|s| symbol_depth(g, mu, s))
        .max()
        .unwrap_or(Depth::Finite(0))
        .succ()
}

/// Computes the μ-depth table by relaxation from "everything infinite" until
/// no key improves. Each pass can only lower finite values, which are bounded
/// below by one, so the iteration terminates at the least fixed point.
pub fn mu_depth(g: &Grammar) -> DepthTable {
    let mut mu: IndexMap<String, Depth> =
        g.keys().map(|k| (k.to_string(), Depth::Infinite)).collect();
    loop {
        let mut changed = false;
        for (key, rules) in g.definitions() {
            let best = rules
                .iter()
                .map(|r| rule_cost(g, &mu, &r.symbols))
                .min()
                .unwrap_or(Depth::Infinite);
            if best < mu[key.as_str()] {
                mu[key.as_str()] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let rule = g
        .definitions()
        .iter()
        .map(|(k, rules)| (k.clone(), rules.iter().map(|r| rule_cost(g, &mu, &r.symbols)).collect()))
        .collect();
    DepthTable { mu, rule }
}

/// Pool size limits per key; whichever is hit first marks the key overflowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolCap {
    pub max_strings: usize,
    pub max_bytes: usize,
}

impl Default for PoolCap {
    fn default() -> Self {
        PoolCap { max_strings: 65_536, max_bytes: 1 << 20 }
    }
}

impl PoolCap {
    pub fn strings(max_strings: usize) -> PoolCap {
        PoolCap { max_strings, ..PoolCap::default() }
    }

    // Enumeration visits at most this many (possibly duplicate) strings.
    fn visit_budget(&self) -> usize {
        self.max_strings.saturating_mul(64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PoolTable {
    /// Distinct minimal-expansion strings per finite key, in enumeration
    /// order. Empty for overflowed and infinite keys.
    pub pools: IndexMap<String, Vec<Vec<u8>>>,
    pub min_rules: IndexMap<String, Vec<usize>>,
    pub overflowed: BTreeSet<String>,
}

impl PoolTable {
    pub fn pool(&self, key: &str) -> Option<&[Vec<u8>]> {
        self.pools.get(key).map(Vec::as_slice)
    }

    pub fn is_overflowed(&self, key: &str) -> bool {
        self.overflowed.contains(key)
    }
}

struct Enumerator<'a> {
    pools: &'a IndexMap<String, Vec<Vec<u8>>>,
    seen: HashSet<Vec<u8>>,
    out: Vec<Vec<u8>>,
    bytes: usize,
    visits: usize,
    cap: PoolCap,
}

impl Enumerator<'_> {
    /// Depth-first product over the rule's symbols, leftmost symbol varying
    /// slowest. Returns false once a cap is exceeded.
    fn walk(&mut self, symbols: &[Symbol], prefix: &mut Vec<u8>) -> bool {
        let Some((first, rest)) = symbols.split_first() else {
            self.visits += 1;
            if self.visits > self.cap.visit_budget() {
                return false;
            }
            if !self.seen.contains(prefix.as_slice()) {
                self.seen.insert(prefix.clone());
                self.bytes += prefix.len();
                self.out.push(prefix.clone());
                if self.out.len() > self.cap.max_strings || self.bytes > self.cap.max_bytes {
                    return false;
                }
            }
            return true;
        };
        let mark = prefix.len();
        let ok = match first {
            Symbol::Terminal(bytes) => {
                prefix.extend_from_slice(bytes);
                self.walk(rest, prefix)
            }
            Symbol::Nonterminal(name) => {
                let pools = self.pools;
                let pool = &pools[name.as_str()];
                let mut ok = true;
                for s in pool {
                    prefix.truncate(mark);
                    prefix.extend_from_slice(s);
                    if !self.walk(rest, prefix) {
                        ok = false;
                        break;
                    }
                }
                ok
            }
        };
        prefix.truncate(mark);
        ok
    }
}

/// Enumerates, for every finite key, all strings derivable using only
/// minimum-cost rules. Keys are processed in increasing μ-depth so the pools
/// of every symbol a min rule mentions are ready. A key whose min rules
/// mention an overflowed key is itself overflowed.
pub fn compute_pools(g: &Grammar, d: &DepthTable, cap: PoolCap) -> PoolTable {
    let mut table = PoolTable::default();
    let mut order: Vec<(&str, u32)> = d
        .mu
        .iter()
        .filter_map(|(k, depth)| depth.finite().map(|v| (k.as_str(), v)))
        .collect();
    order.sort_by_key(|&(_, v)| v);

    let mut pools: IndexMap<String, Vec<Vec<u8>>> = IndexMap::new();
    for (key, _) in order {
        let min_rules = d.min_rules(key);
        let rules = g.rules(key).expect("depth table keys come from the grammar");
        let depends_on_overflow = min_rules.iter().any(|&r| {
            rules[r].nonterminals().any(|nt| table.overflowed.contains(nt))
        });
        let mut overflow = depends_on_overflow;
        let mut out = Vec::new();
        if !overflow {
            let mut en = Enumerator {
                pools: &pools,
                seen: HashSet::new(),
                out: Vec::new(),
                bytes: 0,
                visits: 0,
                cap,
            };
            let mut prefix = Vec::new();
            for &r in &min_rules {
                if !en.walk(&rules[r].symbols, &mut prefix) {
                    overflow = true;
                    break;
                }
            }
            out = en.out;
        }
        if overflow {
            table.overflowed.insert(key.to_string());
            out.clear();
        }
        pools.insert(key.to_string(), out);
        table.min_rules.insert(key.to_string(), min_rules);
    }
    // Present results in grammar order.
    for key in g.keys() {
        if let Some(pool) = pools.swap_remove(key) {
            table.pools.insert(key.to_string(), pool);
        }
        if let Some(m) = table.min_rules.swap_remove(key) {
            table.min_rules.insert(key.to_string(), m);
        }
    }
    table
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid grammar: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
    #[error("reachable key {0} has infinite μ-depth")]
    InfiniteDepth(String),
}

impl AnalysisError {
    /// Keys named by the error.
    pub fn keys(&self) -> Vec<&str> {
        match self {
            AnalysisError::Invalid(issues) => issues.iter().map(Issue::key).collect(),
            AnalysisError::InfiniteDepth(k) => vec![k],
        }
    }
}

/// A grammar together with everything engines need: stable indexing, depth
/// tables, pools and the reachable key set.
#[derive(Debug, Clone)]
pub struct AnalyzedGrammar {
    pub grammar: Grammar,
    pub index: KeyIndex,
    pub depths: DepthTable,
    pub pools: PoolTable,
    pub reachable: IndexSet<String>,
    pub warnings: Vec<Issue>,
}

impl AnalyzedGrammar {
    pub fn start(&self) -> &str {
        self.grammar.start()
    }

    pub fn mu(&self, key: &str) -> Depth {
        self.depths.mu_depth(key).unwrap_or(Depth::Infinite)
    }

    /// Largest μ-depth over reachable keys.
    pub fn max_mu(&self) -> u32 {
        self.reachable.iter().filter_map(|k| self.mu(k).finite()).max().unwrap_or(0)
    }

    pub fn min_rules(&self, key: &str) -> &[usize] {
        self.pools.min_rules.get(key).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Validates, computes depths and pools. Fails on validation errors, with an
/// [`AnalysisError::InfiniteDepth`] for the first reachable key that cannot
/// terminate.
pub fn analyze(g: &Grammar, cap: PoolCap) -> Result<AnalyzedGrammar, AnalysisError> {
    let issues = validate(g);
    let (errors, warnings): (Vec<Issue>, Vec<Issue>) =
        issues.into_iter().partition(Issue::is_error);
    let only_infinite =
        errors.iter().all(|i| matches!(i.kind, crate::grammar::IssueKind::InfiniteDepth(_)));
    if let (true, Some(first)) = (only_infinite, errors.first()) {
        return Err(AnalysisError::InfiniteDepth(first.key().to_string()));
    }
    if !errors.is_empty() {
        return Err(AnalysisError::Invalid(errors));
    }
    let depths = mu_depth(g);
    let pools = compute_pools(g, &depths, cap);
    Ok(AnalyzedGrammar {
        index: g.index(),
        reachable: g.reachable(),
        grammar: g.clone(),
        depths,
        pools,
        warnings,
    })
}
