//! Shared oracles for the integration tests. Nothing here calls into the
//! crate's analysis code; each oracle is a separate, simpler computation.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use fastfuzz::analysis::{analyze, AnalyzedGrammar, PoolCap};
use fastfuzz::grammar::{load_grammar, Grammar, Symbol};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

pub const TERMINALS: [&str; 4] = ["a", "b", "c", "xy"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawSym {
    T(usize),
    N(usize),
}

/// Keys, each a list of rules, each a list of symbols. Key 0 is `<start>`.
pub type RawGrammar = Vec<Vec<Vec<RawSym>>>;

pub fn key_name(i: usize) -> String {
    if i == 0 {
        "<start>".to_string()
    } else {
        format!("<k{i}>")
    }
}

/// Grammars of up to `max_keys` keys with up to `max_alts` rules of up to
/// `max_syms` symbols. Some keys may be undefined-free but non-terminating.
pub fn raw_grammar(max_keys: usize, max_alts: usize, max_syms: usize) -> impl Strategy<Value = RawGrammar> {
    (1..=max_keys).prop_flat_map(move |n| {
        let sym = prop_oneof![
            (0..TERMINALS.len()).prop_map(RawSym::T),
            (0..n).prop_map(RawSym::N),
        ];
        let rule = prop::collection::vec(sym, 0..=max_syms);
        prop::collection::vec(prop::collection::vec(rule, 1..=max_alts), n)
    })
}

/// Like [`raw_grammar`] but every key terminates: rule 0 of key `i` only
/// refers to keys after `i`.
pub fn terminating_grammar(max_keys: usize, max_alts: usize, max_syms: usize) -> impl Strategy<Value = RawGrammar> {
    raw_grammar(max_keys, max_alts, max_syms).prop_map(|mut g| {
        let n = g.len();
        for (i, rules) in g.iter_mut().enumerate() {
            for sym in rules[0].iter_mut() {
                if let RawSym::N(j) = *sym {
                    if j <= i {
                        *sym = if i + 1 < n { RawSym::N(i + 1 + j % (n - i - 1)) } else { RawSym::T(j % TERMINALS.len()) };
                    }
                }
            }
        }
        g
    })
}

pub fn to_json(g: &RawGrammar) -> String {
    let defs: Vec<String> = g
        .iter()
        .enumerate()
        .map(|(i, rules)| {
            let rules: Vec<Vec<String>> = rules
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|s| match s {
                            RawSym::T(t) => TERMINALS[*t].to_string(),
                            RawSym::N(k) => key_name(*k),
                        })
                        .collect()
                })
                .collect();
            format!("{}: {}", serde_json::to_string(&key_name(i)).unwrap(), serde_json::to_string(&rules).unwrap())
        })
        .collect();
    format!("{{{}}}", defs.join(", "))
}

pub fn to_grammar(g: &RawGrammar) -> Grammar {
    load_grammar(&to_json(g)).expect("generated grammars load")
}

/// Draws `count` values from `strategy` with a fixed seed.
pub fn sample<S: Strategy>(strategy: S, count: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(Config::default(), proptest::test_runner::TestRng::deterministic_rng(
        proptest::test_runner::RngAlgorithm::ChaCha,
    ));
    (0..count).map(|_| strategy.new_tree(&mut runner).expect("strategy yields").current()).collect()
}

pub fn corpus() -> Vec<(&'static str, AnalyzedGrammar)> {
    fastfuzz::CORPUS
        .iter()
        .map(|&(name, text)| (name, analyze(&load_grammar(text).unwrap(), PoolCap::default()).unwrap()))
        .collect()
}

pub fn expr() -> AnalyzedGrammar {
    analyze(&load_grammar(fastfuzz::EXPR_GRAMMAR).unwrap(), PoolCap::default()).unwrap()
}

/// Minimum derivation height per key, found level by level: a key joins
/// level `h` when one of its rules uses only terminals and keys from earlier
/// levels. Searches up to `bound` levels; `None` means not found.
pub fn height_oracle(g: &RawGrammar, bound: u32) -> Vec<Option<u32>> {
    let mut found: Vec<Option<u32>> = vec![None; g.len()];
    for h in 1..=bound {
        let prev = found.clone();
        for (k, rules) in g.iter().enumerate() {
            if found[k].is_some() {
                continue;
            }
            let derivable = rules.iter().any(|r| {
                r.iter().all(|s| match s {
                    RawSym::T(_) => true,
                    RawSym::N(j) => prev[*j].is_some(),
                })
            });
            if derivable {
                found[k] = Some(h);
            }
        }
    }
    found
}

/// Rules of `k` achieving its minimum height.
pub fn min_rules_oracle(g: &RawGrammar, mu: &[Option<u32>], k: usize) -> Vec<usize> {
    let Some(target) = mu[k] else { return vec![] };
    g[k].iter()
        .enumerate()
        .filter(|(_, r)| {
            let mut h = 0;
            for s in r.iter() {
                if let RawSym::N(j) = s {
                    match mu[*j] {
                        Some(d) => h = h.max(d),
                        None => return false,
                    }
                }
            }
            h + 1 == target
        })
        .map(|(i, _)| i)
        .collect()
}

/// The language of the min-rule subgrammar from `k`, or `None` when it has
/// more than `limit` strings or more than `byte_limit` bytes.
pub fn min_language(
    g: &RawGrammar,
    mu: &[Option<u32>],
    k: usize,
    limit: usize,
    byte_limit: usize,
    memo: &mut HashMap<usize, Option<BTreeSet<Vec<u8>>>>,
) -> Option<BTreeSet<Vec<u8>>> {
    if let Some(v) = memo.get(&k) {
        return v.clone();
    }
    let mut out = BTreeSet::new();
    let mut ok = true;
    'rules: for r in min_rules_oracle(g, mu, k) {
        let mut partial: BTreeSet<Vec<u8>> = [Vec::new()].into();
        for s in &g[k][r] {
            let next: BTreeSet<Vec<u8>> = match s {
                RawSym::T(t) => [TERMINALS[*t].as_bytes().to_vec()].into(),
                RawSym::N(j) => match min_language(g, mu, *j, limit, byte_limit, memo) {
                    Some(l) => l,
                    None => {
                        ok = false;
                        break 'rules;
                    }
                },
            };
            if partial.len().saturating_mul(next.len()) > limit {
                ok = false;
                break 'rules;
            }
            partial = partial.iter().flat_map(|a| next.iter().map(move |b| [a.as_slice(), b].concat())).collect();
        }
        out.extend(partial);
        if out.len() > limit || out.iter().map(Vec::len).sum::<usize>() > byte_limit {
            ok = false;
            break;
        }
    }
    let result = ok.then_some(out);
    memo.insert(k, result.clone());
    result
}

/// Strings derivable from `key` by trees of height at most `h`, or `None`
/// when some intermediate set grows beyond `limit`.
pub fn bounded_language(g: &Grammar, key: &str, h: usize, limit: usize) -> Option<BTreeSet<Vec<u8>>> {
    let keys: Vec<&str> = g.keys().collect();
    let mut level: HashMap<&str, BTreeSet<Vec<u8>>> = keys.iter().map(|&k| (k, BTreeSet::new())).collect();
    for _ in 0..h {
        let mut next = HashMap::new();
        for &k in &keys {
            let mut set = BTreeSet::new();
            for rule in g.rules(k).unwrap() {
                let mut partial: BTreeSet<Vec<u8>> = [Vec::new()].into();
                for sym in &rule.symbols {
                    let empty = BTreeSet::new();
                    let single;
                    let options = match sym {
                        Symbol::Terminal(t) => {
                            single = [t.clone()].into();
                            &single
                        }
                        Symbol::Nonterminal(n) => level.get(n.as_str()).unwrap_or(&empty),
                    };
                    if partial.len().saturating_mul(options.len()) > limit {
                        return None;
                    }
                    partial = partial.iter().flat_map(|a| options.iter().map(move |b| [a.as_slice(), b].concat())).collect();
                }
                set.extend(partial);
            }
            if set.len() > limit {
                return None;
            }
            next.insert(k, set);
        }
        level = next;
    }
    level.remove(key)
}

/// Earley recognizer over bytes, with multi-byte terminals and epsilon
/// rules.
pub struct Earley<'g> {
    g: &'g Grammar,
    nullable: HashSet<String>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Item<'g> {
    key: &'g str,
    rule: usize,
    dot: usize,
    origin: usize,
}

impl<'g> Earley<'g> {
    pub fn new(g: &'g Grammar) -> Earley<'g> {
        let mut nullable = HashSet::new();
        loop {
            let before = nullable.len();
            for k in g.keys() {
                let n = g.rules(k).unwrap().iter().any(|r| {
                    r.symbols.iter().all(|s| matches!(s, Symbol::Nonterminal(n) if nullable.contains(n)))
                });
                if n {
                    nullable.insert(k.to_string());
                }
            }
            if nullable.len() == before {
                break;
            }
        }
        Earley { g, nullable }
    }

    pub fn accepts(&self, start: &str, input: &[u8]) -> bool {
        let n = input.len();
        let mut sets: Vec<Vec<Item<'g>>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item<'g>>> = vec![HashSet::new(); n + 1];
        let g = self.g;
        let (start, _) = g.definitions().get_key_value(start).unwrap();
        let push = |sets: &mut Vec<Vec<Item<'g>>>, seen: &mut Vec<HashSet<Item<'g>>>, i: usize, it: Item<'g>| {
            if seen[i].insert(it.clone()) {
                sets[i].push(it);
            }
        };
        for r in 0..g.rules(start).unwrap().len() {
            push(&mut sets, &mut seen, 0, Item { key: start, rule: r, dot: 0, origin: 0 });
        }
        for i in 0..=n {
            let mut j = 0;
            while j < sets[i].len() {
                let it = sets[i][j].clone();
                j += 1;
                let rule = &g.definitions()[it.key][it.rule];
                match rule.symbols.get(it.dot) {
                    None => {
                        let waiting: Vec<Item<'g>> = sets[it.origin]
                            .iter()
                            .filter(|w| {
                                matches!(g.definitions()[w.key][w.rule].symbols.get(w.dot),
                                    Some(Symbol::Nonterminal(nt)) if nt == it.key)
                            })
                            .cloned()
                            .collect();
                        for w in waiting {
                            push(&mut sets, &mut seen, i, Item { dot: w.dot + 1, ..w });
                        }
                    }
                    Some(Symbol::Terminal(t)) => {
                        if input[i..].starts_with(t) {
                            push(&mut sets, &mut seen, i + t.len(), Item { dot: it.dot + 1, ..it });
                        }
                    }
                    Some(Symbol::Nonterminal(nt)) => {
                        let (name, rules) = g.definitions().get_key_value(nt.as_str()).unwrap();
                        for r in 0..rules.len() {
                            push(&mut sets, &mut seen, i, Item { key: name, rule: r, dot: 0, origin: i });
                        }
                        if self.nullable.contains(nt) {
                            push(&mut sets, &mut seen, i, Item { dot: it.dot + 1, ..it.clone() });
                        }
                    }
                }
            }
        }
        sets[n].iter().any(|it| {
            it.key == start && it.origin == 0 && it.dot == g.definitions()[it.key][it.rule].symbols.len()
        })
    }
}

/// Hand-written recursive-descent recognizer for the arithmetic expression
/// language: expr = term (('+'|'-') expr)?, term = factor (('*'|'/') term)?,
/// factor = ('+'|'-') factor | '(' expr ')' | integer ('.' integer)?.
pub fn expr_accepts(input: &[u8]) -> bool {
    struct P<'a> {
        s: &'a [u8],
        i: usize,
    }
    impl P<'_> {
        fn peek(&self) -> Option<u8> {
            self.s.get(self.i).copied()
        }
        fn eat(&mut self, c: u8) -> bool {
            if self.peek() == Some(c) {
                self.i += 1;
                true
            } else {
                false
            }
        }
        fn expr(&mut self) -> bool {
            if !self.term() {
                return false;
            }
            if self.eat(b'+') || self.eat(b'-') {
                return self.expr();
            }
            true
        }
        fn term(&mut self) -> bool {
            if !self.factor() {
                return false;
            }
            if self.eat(b'*') || self.eat(b'/') {
                return self.term();
            }
            true
        }
        fn factor(&mut self) -> bool {
            if self.eat(b'+') || self.eat(b'-') {
                return self.factor();
            }
            if self.eat(b'(') {
                return self.expr() && self.eat(b')');
            }
            if !self.integer() {
                return false;
            }
            if self.eat(b'.') {
                return self.integer();
            }
            true
        }
        fn integer(&mut self) -> bool {
            let start = self.i;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1;
            }
            self.i > start
        }
    }
    let mut p = P { s: input, i: 0 };
    p.expr() && p.i == input.len()
}

/// Separator for tests that split output back into inputs; no corpus
/// terminal contains it.
pub const SEP: u8 = 0;

/// Splits output produced with separator [`SEP`] into inputs.
pub fn split_inputs(out: &[u8]) -> Vec<&[u8]> {
    let mut v: Vec<&[u8]> = out.split(|&b| b == SEP).collect();
    assert_eq!(v.pop(), Some(&b""[..]), "output ends with a separator");
    v
}
