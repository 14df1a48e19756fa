//! Grammar definitions: loading from the JSON file format, validation,
//! stable key indexing, and one-level unrolling.
//!
//! The file format is a JSON object mapping `"<key>"` names to arrays of
//! rules, each rule an array of strings. A string is a nonterminal iff it
//! starts with `<` and ends with `>`; everything else is a terminal stored as
//! its UTF-8 bytes. An empty rule `[]` is an epsilon rule.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use crate::analysis::{self, Depth};

/// Default start key.
pub const DEFAULT_START: &str = "<start>";

/// Default per-key rule cap for [`unroll`].
pub const DEFAULT_UNROLL_CAP: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate definition of key {0}")]
    DuplicateKey(String),
    #[error("missing start key {0}")]
    MissingStart(String),
    #[error("definition name {0:?} is not a nonterminal (expected <name>)")]
    NotANonterminal(String),
    #[error("unrolling key {key} produces more than {cap} rules")]
    UnrollLimit { key: String, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(Vec<u8>),
    Nonterminal(String),
}

impl Symbol {
    /// Classifies a token from the file format.
    pub fn from_token(token: &str) -> Symbol {
        if is_nonterminal(token) {
            Symbol::Nonterminal(token.to_string())
        } else {
            Symbol::Terminal(token.as_bytes().to_vec())
        }
    }

    /// The token as it appears in a grammar file.
    pub fn to_token(&self) -> String {
        match self {
            Symbol::Terminal(bytes) => String::from_utf8_lossy(bytes).into_owned(),
            Symbol::Nonterminal(name) => name.clone(),
        }
    }

    pub fn nonterminal(&self) -> Option<&str> {
        match self {
            Symbol::Nonterminal(name) => Some(name),
            Symbol::Terminal(_) => None,
        }
    }
}

pub fn is_nonterminal(token: &str) -> bool {
    token.len() >= 2 && token.starts_with('<') && token.ends_with('>')
}

/// One alternative of a key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Rule {
    pub symbols: Vec<Symbol>,
}

impl Rule {
    pub fn new(symbols: Vec<Symbol>) -> Rule {
        Rule { symbols }
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Rule {
        Rule::new(tokens.iter().map(|t| Symbol::from_token(t.as_ref())).collect())
    }

    pub fn is_epsilon(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().filter_map(Symbol::nonterminal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    definitions: IndexMap<String, Vec<Rule>>,
    start: String,
}

impl Grammar {
    /// Builds a grammar from definitions in their intended order.
    ///
    /// Undefined nonterminals are accepted here and reported by [`validate`].
    pub fn new(
        definitions: IndexMap<String, Vec<Rule>>,
        start: impl Into<String>,
    ) -> Result<Grammar, GrammarError> {
        let start = start.into();
        if let Some(bad) = definitions.keys().find(|k| !is_nonterminal(k)) {
            return Err(GrammarError::NotANonterminal(bad.clone()));
        }
        if !definitions.contains_key(&start) {
            return Err(GrammarError::MissingStart(start));
        }
        Ok(Grammar { definitions, start })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// Same definitions, different start key.
    pub fn with_start(&self, start: &str) -> Result<Grammar, GrammarError> {
        Grammar::new(self.definitions.clone(), start)
    }

    pub fn rules(&self, key: &str) -> Option<&[Rule]> {
        self.definitions.get(key).map(Vec::as_slice)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.definitions.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.definitions.keys().map(String::as_str)
    }

    pub fn definitions(&self) -> &IndexMap<String, Vec<Rule>> {
        &self.definitions
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn index(&self) -> KeyIndex {
        KeyIndex::new(self)
    }

    /// Keys reachable from the start key, in definition order.
    pub fn reachable(&self) -> IndexSet<String> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([self.start.as_str()]);
        seen.insert(self.start.as_str());
        while let Some(key) = queue.pop_front() {
            for rule in self.definitions.get(key).into_iter().flatten() {
                for nt in rule.nonterminals() {
                    if self.definitions.contains_key(nt) && seen.insert(nt) {
                        queue.push_back(nt);
                    }
                }
            }
        }
        self.keys().filter(|k| seen.contains(k)).map(str::to_string).collect()
    }

    /// Serializes to the grammar file format, one key per line.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (key, rules)) in self.definitions.iter().enumerate() {
            let tokens: Vec<Vec<String>> = rules
                .iter()
                .map(|r| r.symbols.iter().map(Symbol::to_token).collect())
                .collect();
            out.push_str("  ");
            out.push_str(&serde_json::to_string(key).expect("string serializes"));
            out.push_str(": ");
            out.push_str(&serde_json::to_string(&tokens).expect("rules serialize"));
            if i + 1 < self.definitions.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("}\n");
        out
    }
}

/// Stable integer numbering of keys and their rule counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyIndex {
    pub key_order: Vec<String>,
    pub rule_counts: Vec<usize>,
    ids: HashMap<String, usize>,
}

impl KeyIndex {
    pub fn new(g: &Grammar) -> KeyIndex {
        let key_order: Vec<String> = g.keys().map(str::to_string).collect();
        let rule_counts = g.definitions.values().map(Vec::len).collect();
        let ids = key_order.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        KeyIndex { key_order, rule_counts, ids }
    }

    pub fn id(&self, key: &str) -> Option<usize> {
        self.ids.get(key).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.key_order[id]
    }

    pub fn len(&self) -> usize {
        self.key_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.key_order.is_empty()
    }
}

struct RawGrammar(Vec<(String, Vec<Vec<String>>)>);

impl<'de> Deserialize<'de> for RawGrammar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RawVisitor;

        impl<'de> Visitor<'de> for RawVisitor {
            type Value = RawGrammar;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping keys to arrays of rules")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawGrammar, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, rules)) = map.next_entry::<String, RulesSeq>()? {
                    entries.push((key, rules.0));
                }
                Ok(RawGrammar(entries))
            }
        }

        deserializer.deserialize_map(RawVisitor)
    }
}

struct RulesSeq(Vec<Vec<String>>);

impl<'de> Deserialize<'de> for RulesSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SeqVisitor;

        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = RulesSeq;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of rules, each an array of strings")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<RulesSeq, A::Error> {
                let mut rules = Vec::new();
                while let Some(rule) = seq.next_element::<Vec<String>>()? {
                    rules.push(rule);
                }
                Ok(RulesSeq(rules))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<RulesSeq, E> {
                Err(E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        deserializer.deserialize_seq(SeqVisitor)
    }
}

/// Parses a grammar document with the default `<start>` key.
pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    load_grammar_with_start(text, DEFAULT_START)
}

pub fn load_grammar_with_start(text: &str, start: &str) -> Result<Grammar, GrammarError> {
    let raw: RawGrammar =
        serde_json::from_str(text).map_err(|e| GrammarError::Syntax(e.to_string()))?;
    let mut definitions = IndexMap::with_capacity(raw.0.len());
    for (key, rules) in raw.0 {
        if definitions.contains_key(&key) {
            return Err(GrammarError::DuplicateKey(key));
        }
        let rules = rules.iter().map(|r| Rule::from_tokens(r)).collect();
        definitions.insert(key, rules);
    }
    Grammar::new(definitions, start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IssueKind {
    UndefinedNonterminal { name: String, used_in: String },
    UnreachableKey(String),
    InfiniteDepth(String),
    EmptyDefinition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
}

impl Issue {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// The key the issue is about.
    pub fn key(&self) -> &str {
        match &self.kind {
            IssueKind::UndefinedNonterminal { name, .. } => name,
            IssueKind::UnreachableKey(k)
            | IssueKind::InfiniteDepth(k)
            | IssueKind::EmptyDefinition(k) => k,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match &self.kind {
            IssueKind::UndefinedNonterminal { name, used_in } => {
                write!(f, "{level}: undefined nonterminal {name} (used in {used_in})")
            }
            IssueKind::UnreachableKey(k) => write!(f, "{level}: unreachable key {k}"),
            IssueKind::InfiniteDepth(k) => write!(f, "{level}: key {k} has infinite μ-depth"),
            IssueKind::EmptyDefinition(k) => write!(f, "{level}: key {k} has no rules"),
        }
    }
}

/// Reports undefined nonterminals, empty definitions, keys without a finite
/// expansion and unreachable keys. Unreachable keys are warnings; an infinite
/// key is an error only when it is reachable.
pub fn validate(g: &Grammar) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut undefined = HashSet::new();
    for (key, rules) in &g.definitions {
        if rules.is_empty() {
            issues.push(Issue {
                severity: Severity::Error,
                kind: IssueKind::EmptyDefinition(key.clone()),
            });
        }
        for nt in rules.iter().flat_map(Rule::nonterminals) {
            if !g.contains_key(nt) && undefined.insert(nt.to_string()) {
                issues.push(Issue {
                    severity: Severity::Error,
                    kind: IssueKind::UndefinedNonterminal {
                        name: nt.to_string(),
                        used_in: key.clone(),
                    },
                });
            }
        }
    }

    let reachable = g.reachable();
    let depths = analysis::mu_depth(g);
    for (key, depth) in &depths.mu {
        if *depth == Depth::Infinite && !g.definitions[key].is_empty() {
            let severity =
                if reachable.contains(key) { Severity::Error } else { Severity::Warning };
            issues.push(Issue { severity, kind: IssueKind::InfiniteDepth(key.clone()) });
        }
    }
    for key in g.keys().filter(|k| !reachable.contains(*k)) {
        issues.push(Issue {
            severity: Severity::Warning,
            kind: IssueKind::UnreachableKey(key.to_string()),
        });
    }
    issues
}

/// Substitutes every nonterminal of every rule by each of its alternatives,
/// one level deep, deduplicating the resulting rules per key in first-seen
/// order. The generated language is unchanged.
pub fn unroll(g: &Grammar) -> Result<Grammar, GrammarError> {
    unroll_with_cap(g, DEFAULT_UNROLL_CAP)
}

pub fn unroll_with_cap(g: &Grammar, cap: usize) -> Result<Grammar, GrammarError> {
    let mut definitions = IndexMap::with_capacity(g.len());
    for (key, rules) in &g.definitions {
        let mut unrolled: IndexSet<Rule> = IndexSet::new();
        for rule in rules {
            let choices: Vec<Vec<&[Symbol]>> = rule
                .symbols
                .iter()
                .map(|sym| match sym.nonterminal().and_then(|nt| g.rules(nt)) {
                    Some(alts) => alts.iter().map(|r| r.symbols.as_slice()).collect(),
                    None => vec![std::slice::from_ref(sym)],
                })
                .collect();
            if choices.iter().any(Vec::is_empty) {
                continue;
            }
            // Odometer over the cartesian product, leftmost position slowest.
            let mut picks = vec![0usize; choices.len()];
            'product: loop {
                let symbols: Vec<Symbol> = picks
                    .iter()
                    .zip(&choices)
                    .flat_map(|(&p, alts)| alts[p].iter().cloned())
                    .collect();
                unrolled.insert(Rule::new(symbols));
                if unrolled.len() > cap {
                    return Err(GrammarError::UnrollLimit { key: key.clone(), cap });
                }
                let mut pos = choices.len();
                loop {
                    if pos == 0 {
                        break 'product;
                    }
                    pos -= 1;
                    picks[pos] += 1;
                    if picks[pos] < choices[pos].len() {
                        continue 'product;
                    }
                    picks[pos] = 0;
                }
            }
        }
        definitions.insert(key.clone(), unrolled.into_iter().collect());
    }
    Grammar::new(definitions, g.start.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr() -> Grammar {
        load_grammar(crate::EXPR_GRAMMAR).unwrap()
    }

    #[test]
    fn loads_expression_grammar() {
        let g = expr();
        assert_eq!(g.len(), 6);
        assert_eq!(g.rules("<digit>").unwrap().len(), 10);
        assert_eq!(
            g.keys().collect::<Vec<_>>(),
            ["<start>", "<expr>", "<term>", "<factor>", "<integer>", "<digit>"]
        );
        assert_eq!(g.rules("<factor>").unwrap()[2], Rule::from_tokens(&["(", "<expr>", ")"]));
    }

    #[test]
    fn smallest_grammar() {
        let g = load_grammar(r#"{"<start>": [["a"]]}"#).unwrap();
        assert_eq!(g.len(), 1);
        let rules = g.rules("<start>").unwrap();
        assert_eq!(rules, [Rule::new(vec![Symbol::Terminal(b"a".to_vec())])]);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(load_grammar("{"), Err(GrammarError::Syntax(_))));
        assert!(matches!(load_grammar(r#"{"<start>": "a"}"#), Err(GrammarError::Syntax(_))));
        assert!(matches!(
            load_grammar(r#"{"<start>": [["a"]], "<start>": [["b"]]}"#),
            Err(GrammarError::DuplicateKey(k)) if k == "<start>"
        ));
        assert!(matches!(
            load_grammar(r#"{"<begin>": [["a"]]}"#),
            Err(GrammarError::MissingStart(k)) if k == "<start>"
        ));
        assert!(matches!(
            load_grammar(r#"{"<start>": [["a"]], "x": [["b"]]}"#),
            Err(GrammarError::NotANonterminal(_))
        ));
        assert!(load_grammar_with_start(r#"{"<begin>": [["a"]]}"#, "<begin>").is_ok());
    }

    #[test]
    fn epsilon_and_empty_terminal() {
        let g = load_grammar(r#"{"<start>": [[], [""], ["<", ">", "<>"]]}"#).unwrap();
        let rules = g.rules("<start>").unwrap();
        assert!(rules[0].is_epsilon());
        assert_eq!(rules[1].symbols, [Symbol::Terminal(vec![])]);
        assert_eq!(
            rules[2].symbols,
            [
                Symbol::Terminal(b"<".to_vec()),
                Symbol::Terminal(b">".to_vec()),
                Symbol::Nonterminal("<>".into())
            ]
        );
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&expr()).is_empty());

        let g = load_grammar(r#"{"<start>": [["<missing>"]]}"#).unwrap();
        let issues = validate(&g);
        assert!(issues.iter().any(|i| i.is_error()
            && i.to_string().contains("undefined nonterminal <missing>")));

        let g = load_grammar(r#"{"<start>": [["<start>"]]}"#).unwrap();
        let issues = validate(&g);
        assert_eq!(issues.len(), 1);
        assert!(issues[0].is_error());
        assert!(issues[0].to_string().contains("key <start> has infinite μ-depth"));

        let g = load_grammar(r#"{"<start>": [["a"]], "<orphan>": [["b"]]}"#).unwrap();
        let issues = validate(&g);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert_eq!(issues[0].to_string(), "warning: unreachable key <orphan>");

        let g = load_grammar(r#"{"<start>": [["a"]], "<e>": []}"#).unwrap();
        assert!(validate(&g)
            .iter()
            .any(|i| i.kind == IssueKind::EmptyDefinition("<e>".into()) && i.is_error()));
    }

    #[test]
    fn unreachable_infinite_key_is_a_warning() {
        let g = load_grammar(r#"{"<start>": [["a"]], "<loop>": [["<loop>"]]}"#).unwrap();
        let issues = validate(&g);
        assert!(issues.iter().all(|i| !i.is_error()));
        assert!(issues.iter().any(|i| i.kind == IssueKind::InfiniteDepth("<loop>".into())));
    }

    #[test]
    fn key_index_is_file_order() {
        let idx = expr().index();
        assert_eq!(idx.key_order[3], "<factor>");
        assert_eq!(idx.rule_counts, [1, 3, 3, 5, 2, 10]);
        assert_eq!(idx.id("<digit>"), Some(5));
        assert_eq!(idx.id("<nope>"), None);
    }

    #[test]
    fn unroll_single_substitution() {
        let g = load_grammar(r#"{"<start>": [["<a>"]], "<a>": [["x"], ["y"]]}"#).unwrap();
        let u = unroll(&g).unwrap();
        assert_eq!(
            u.rules("<start>").unwrap(),
            [Rule::from_tokens(&["x"]), Rule::from_tokens(&["y"])]
        );
        assert_eq!(u.rules("<a>").unwrap(), g.rules("<a>").unwrap());
    }

    #[test]
    fn unroll_all_terminal_grammar_only_dedups() {
        let g = load_grammar(r#"{"<start>": [["a", "b"], ["c"], ["a", "b"], []]}"#).unwrap();
        let u = unroll(&g).unwrap();
        assert_eq!(
            u.rules("<start>").unwrap(),
            [Rule::from_tokens(&["a", "b"]), Rule::from_tokens(&["c"]), Rule::default()]
        );
    }

    #[test]
    fn unroll_epsilon_substitution() {
        let g = load_grammar(r#"{"<start>": [["x", "<e>", "y"]], "<e>": [[], ["z"]]}"#).unwrap();
        let u = unroll(&g).unwrap();
        assert_eq!(
            u.rules("<start>").unwrap(),
            [Rule::from_tokens(&["x", "y"]), Rule::from_tokens(&["x", "z", "y"])]
        );
    }

    #[test]
    fn unroll_cap_names_key() {
        let g = load_grammar(crate::EXPR_GRAMMAR).unwrap();
        match unroll_with_cap(&g, 20) {
            Err(GrammarError::UnrollLimit { key, cap }) => {
                assert_eq!(cap, 20);
                assert!(g.contains_key(&key));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let g = expr();
        let text = g.to_json();
        assert_eq!(load_grammar(&text).unwrap(), g);
        assert!(text.lines().nth(1).unwrap().starts_with("  \"<start>\": [[\"<expr>\"]]"));
    }
}
