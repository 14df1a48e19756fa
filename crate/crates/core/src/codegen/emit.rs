//! Source emission: a standalone producer program in C or in Rust.
//!
//! The emitted program takes `SEED MAX_DEPTH COUNT OUTPATH`, carries its own
//! generator and byte pool, and writes exactly what the toolkit engines
//! write for the same parameters.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::ir::{visit, ProducerIR, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    C,
    /// Rust, the toolkit's own language.
    SelfLang,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::C => "c",
            Target::SelfLang => "self",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Target::C => "producer.c",
            Target::SelfLang => "producer.rs",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("unsupported target {0:?} (expected c or self)")]
    UnsupportedTarget(String),
}

impl FromStr for Target {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(Target::C),
            "self" | "rust" => Ok(Target::SelfLang),
            other => Err(EmitError::UnsupportedTarget(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub target: Target,
    pub file_name: String,
    pub text: String,
}

/// Emits for a target named on the command line.
pub fn emit_named(ir: &ProducerIR, target: &str) -> Result<SourceUnit, EmitError> {
    Ok(emit(ir, target.parse()?))
}

pub fn emit(ir: &ProducerIR, target: Target) -> SourceUnit {
    let mut e = Emitter::new(ir, target);
    let entry = e.function("entry", &ir.entry);
    let units: Vec<String> =
        (0..ir.units.len()).map(|u| e.function(&e.unit_fn(u), &ir.units[u].body)).collect();
    let text = match target {
        Target::C => e.assemble_c(entry, units),
        Target::SelfLang => e.assemble_rust(entry, units),
    };
    SourceUnit { target, file_name: target.file_name().to_string(), text }
}

struct Emitter<'a> {
    ir: &'a ProducerIR,
    target: Target,
    literals: Vec<Vec<u8>>,
    literal_ids: HashMap<Vec<u8>, usize>,
    tables: Vec<Vec<usize>>,
    pools: Vec<usize>,
}

fn uses_depth(body: &[Step]) -> bool {
    let mut used = false;
    visit(body, &mut |s| used |= matches!(s, Step::Call { .. } | Step::DepthCheck { .. }));
    used
}

fn plus(v: i32) -> String {
    match v {
        0 => "d".to_string(),
        v if v > 0 => format!("d + {v}"),
        v => format!("d - {}", -(v as i64)),
    }
}

fn rust_bytes(b: &[u8]) -> String {
    let mut s = String::from("b\"");
    for &c in b {
        match c {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            0x20..=0x7e => s.push(c as char),
            _ => {
                let _ = write!(s, "\\x{c:02x}");
            }
        }
    }
    s.push('"');
    s
}

fn c_bytes(b: &[u8]) -> String {
    let mut s = String::new();
    for (i, c) in b.iter().enumerate() {
        if i > 0 {
            s.push_str(if i % 16 == 0 { ",\n    " } else { ", " });
        }
        let _ = write!(s, "{c}");
    }
    s
}

fn numbers(v: impl IntoIterator<Item = u32>) -> String {
    let mut s = String::new();
    for (i, n) in v.into_iter().enumerate() {
        if i > 0 {
            s.push_str(if i % 16 == 0 { ",\n    " } else { ", " });
        }
        let _ = write!(s, "{n}");
    }
    s
}

impl<'a> Emitter<'a> {
    fn new(ir: &'a ProducerIR, target: Target) -> Self {
        Emitter {
            ir,
            target,
            literals: Vec::new(),
            literal_ids: HashMap::new(),
            tables: Vec::new(),
            pools: Vec::new(),
        }
    }

    fn unit_fn(&self, u: usize) -> String {
        format!("u{u}_{}", self.ir.units[u].name.to_ascii_lowercase())
    }

    fn literal(&mut self, b: &[u8]) -> usize {
        if let Some(&id) = self.literal_ids.get(b) {
            return id;
        }
        self.literals.push(b.to_vec());
        self.literal_ids.insert(b.to_vec(), self.literals.len() - 1);
        self.literals.len() - 1
    }

    fn table(&mut self, units: Vec<usize>) -> usize {
        if let Some(t) = self.tables.iter().position(|t| *t == units) {
            return t;
        }
        self.tables.push(units);
        self.tables.len() - 1
    }

    fn pool(&mut self, p: usize) {
        if !self.pools.contains(&p) {
            self.pools.push(p);
        }
    }

    fn limit(&self) -> &'static str {
        match (self.ir.rebased, self.target) {
            (true, _) => "0",
            (false, Target::C) => "max_depth",
            (false, Target::SelfLang) => "g.max_depth",
        }
    }

    fn function(&mut self, name: &str, body: &[Step]) -> String {
        let mut out = String::new();
        let used = uses_depth(body);
        match self.target {
            Target::C => {
                let _ = writeln!(out, "static void {name}(int64_t d) {{");
                if !used {
                    out.push_str("    (void)d;\n");
                }
            }
            Target::SelfLang => {
                let d = if used { "d" } else { "_d" };
                let g = if body.is_empty() { "_g" } else { "g" };
                let _ = writeln!(out, "fn {name}({g}: &mut G, {d}: i64) {{");
            }
        }
        self.body(&mut out, body, 1);
        out.push_str("}\n");
        out
    }

    fn body(&mut self, out: &mut String, body: &[Step], indent: usize) {
        let pad = "    ".repeat(indent);
        let c = self.target == Target::C;
        for step in body {
            match step {
                Step::Emit(b) => {
                    let l = self.literal(b);
                    if c {
                        let _ = writeln!(out, "{pad}emit(L{l}, {});", b.len());
                    } else {
                        let _ = writeln!(out, "{pad}g.emit(L{l});");
                    }
                }
                Step::Call { unit, delta } => {
                    let f = self.unit_fn(*unit);
                    let d = plus(*delta);
                    if c {
                        let _ = writeln!(out, "{pad}{f}({d});");
                    } else {
                        let _ = writeln!(out, "{pad}{f}(g, {d});");
                    }
                }
                Step::PoolEmit(p) => {
                    self.pool(*p);
                    let n = self.ir.pools[*p].strings.len();
                    if c {
                        let _ = writeln!(out, "{pad}emit_pool(P{p}_data, P{p}_off, P{p}_len, {n});");
                    } else {
                        let _ = writeln!(out, "{pad}g.emit_pool(P{p}_DATA, &P{p}_OFF, &P{p}_LEN);");
                    }
                }
                Step::Choose(arms) => self.choose(out, arms, indent),
                Step::DepthCheck { offset, under, over } => {
                    let cond = format!("{} < {}", plus(*offset), self.limit());
                    if c {
                        let _ = writeln!(out, "{pad}if ({cond}) {{");
                    } else {
                        let _ = writeln!(out, "{pad}if {cond} {{");
                    }
                    self.body(out, under, indent + 1);
                    let _ = writeln!(out, "{pad}}} else {{");
                    self.body(out, over, indent + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
        }
    }

    fn choose(&mut self, out: &mut String, arms: &[Vec<Step>], indent: usize) {
        let pad = "    ".repeat(indent);
        let c = self.target == Target::C;
        let n = arms.len();
        let calls: Option<Vec<(usize, i32)>> = arms
            .iter()
            .map(|a| match &a[..] {
                [Step::Call { unit, delta }] => Some((*unit, *delta)),
                _ => None,
            })
            .collect();
        if let Some(calls) = calls.filter(|cs| cs.iter().all(|&(_, d)| d == cs[0].1)) {
            let d = plus(calls[0].1);
            let t = self.table(calls.into_iter().map(|(u, _)| u).collect());
            if c {
                let _ = writeln!(out, "{pad}T{t}[choose({n})]({d});");
            } else {
                let _ = writeln!(out, "{pad}let f = T{t}[g.choose({n})];");
                let _ = writeln!(out, "{pad}f(g, {d});");
            }
            return;
        }
        if c {
            let _ = writeln!(out, "{pad}switch (choose({n})) {{");
        } else {
            let _ = writeln!(out, "{pad}match g.choose({n}) {{");
        }
        for (i, arm) in arms.iter().enumerate() {
            let last = i + 1 == n;
            match (c, last) {
                (true, false) => writeln!(out, "{pad}case {i}: {{"),
                (true, true) => writeln!(out, "{pad}default: {{"),
                (false, false) => writeln!(out, "{pad}    {i} => {{"),
                (false, true) => writeln!(out, "{pad}    _ => {{"),
            }
            .unwrap();
            self.body(out, arm, indent + 2);
            if c {
                let _ = writeln!(out, "{pad}    break;\n{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}    }}");
            }
        }
        let _ = writeln!(out, "{pad}}}");
    }

    fn sorted_pools(&self) -> Vec<usize> {
        let mut pools = self.pools.clone();
        pools.sort_unstable();
        pools
    }

    fn pool_layout(&self, p: usize) -> (Vec<u8>, Vec<u32>, Vec<u32>) {
        let mut data = Vec::new();
        let mut offs = Vec::new();
        let mut lens = Vec::new();
        for s in &self.ir.pools[p].strings {
            offs.push(data.len() as u32);
            lens.push(s.len() as u32);
            data.extend_from_slice(s);
        }
        (data, offs, lens)
    }

    fn assemble_c(&self, entry: String, units: Vec<String>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "/* producer for {}, generated by fastfuzz */", self.ir.start);
        s.push_str(C_PRELUDE);
        s.push('\n');
        for (i, l) in self.literals.iter().enumerate() {
            let _ = writeln!(s, "static const unsigned char L{i}[] = {{{}}};", c_bytes(l));
        }
        for p in self.sorted_pools() {
            let (data, offs, lens) = self.pool_layout(p);
            let _ = writeln!(s, "\n/* pool of {} */", self.ir.pools[p].key);
            // A pool of empty strings still needs a non-empty array.
            let data = if data.is_empty() { "0".to_string() } else { c_bytes(&data) };
            let _ = writeln!(s, "static const unsigned char P{p}_data[] = {{\n    {data}}};");
            let _ = writeln!(s, "static const uint32_t P{p}_off[] = {{\n    {}}};", numbers(offs));
            let _ = writeln!(s, "static const uint32_t P{p}_len[] = {{\n    {}}};", numbers(lens));
        }
        s.push('\n');
        for u in 0..self.ir.units.len() {
            let _ = writeln!(s, "static void {}(int64_t d);", self.unit_fn(u));
        }
        for (t, units) in self.tables.iter().enumerate() {
            let names: Vec<String> = units.iter().map(|&u| self.unit_fn(u)).collect();
            let _ = writeln!(s, "static void (*const T{t}[])(int64_t) = {{{}}};", names.join(", "));
        }
        for f in units.iter().chain([&entry]) {
            s.push('\n');
            s.push_str(f);
        }
        let start = if self.ir.rebased { "-max_depth" } else { "0" };
        s.push('\n');
        s.push_str(&C_MAIN.replace("@START@", start));
        s
    }

    fn assemble_rust(&self, entry: String, units: Vec<String>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "// producer for {}, generated by fastfuzz", self.ir.start);
        s.push_str(RUST_PRELUDE);
        s.push('\n');
        for (i, l) in self.literals.iter().enumerate() {
            let _ = writeln!(s, "static L{i}: &[u8] = {};", rust_bytes(l));
        }
        for p in self.sorted_pools() {
            let (data, offs, lens) = self.pool_layout(p);
            let n = offs.len();
            let _ = writeln!(s, "\n// pool of {}", self.ir.pools[p].key);
            let _ = writeln!(s, "static P{p}_DATA: &[u8] = {};", rust_bytes(&data));
            let _ = writeln!(s, "static P{p}_OFF: [u32; {n}] = [\n    {}];", numbers(offs));
            let _ = writeln!(s, "static P{p}_LEN: [u32; {n}] = [\n    {}];", numbers(lens));
        }
        for (t, units) in self.tables.iter().enumerate() {
            let names: Vec<String> = units.iter().map(|&u| self.unit_fn(u)).collect();
            let _ = writeln!(
                s,
                "static T{t}: [fn(&mut G, i64); {}] = [{}];",
                names.len(),
                names.join(", ")
            );
        }
        for f in units.iter().chain([&entry]) {
            s.push('\n');
            s.push_str(f);
        }
        let start = if self.ir.rebased { "-g.max_depth" } else { "0" };
        s.push('\n');
        s.push_str(&RUST_MAIN.replace("@START@", start));
        s
    }
}

const C_PRELUDE: &str = r#"#include <errno.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define BYTE_POOL 65536

static uint64_t rng[4];
static unsigned char byte_pool[BYTE_POOL];
static size_t cursor = BYTE_POOL;
static int64_t max_depth;
static unsigned char *out;
static size_t out_len, out_cap;

static inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

static inline uint64_t next_u64(void) {
    uint64_t result = rotl(rng[1] * 5, 7) * 9;
    uint64_t t = rng[1] << 17;
    rng[2] ^= rng[0];
    rng[3] ^= rng[1];
    rng[1] ^= rng[2];
    rng[0] ^= rng[3];
    rng[2] ^= t;
    rng[3] = rotl(rng[3], 45);
    return result;
}

static inline uint64_t splitmix64(uint64_t *x) {
    uint64_t z = (*x += UINT64_C(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)) * UINT64_C(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94d049bb133111eb);
    return z ^ (z >> 31);
}

static inline void seed_rng(uint64_t seed) {
    int i;
    for (i = 0; i < 4; i++)
        rng[i] = splitmix64(&seed);
    if ((rng[0] | rng[1] | rng[2] | rng[3]) == 0)
        rng[0] = 1;
}

static inline void refill(void) {
    size_t i;
    int j;
    for (i = 0; i < BYTE_POOL; i += 8) {
        uint64_t w = next_u64();
        for (j = 0; j < 8; j++)
            byte_pool[i + j] = (unsigned char)(w >> (8 * j));
    }
    cursor = 0;
}

static inline unsigned next_byte(void) {
    if (cursor == BYTE_POOL)
        refill();
    return byte_pool[cursor++];
}

/* upper 64 bits of x * n */
static inline uint64_t mulhi(uint64_t x, uint64_t n) {
    uint64_t xl = x & 0xffffffffu, xh = x >> 32;
    uint64_t nl = n & 0xffffffffu, nh = n >> 32;
    uint64_t ll = xl * nl, lh = xl * nh, hl = xh * nl, hh = xh * nh;
    uint64_t mid = (ll >> 32) + (lh & 0xffffffffu) + (hl & 0xffffffffu);
    return hh + (lh >> 32) + (hl >> 32) + (mid >> 32);
}

static inline size_t choose(size_t n) {
    uint64_t x = 0;
    int j;
    if (n <= 1)
        return 0;
    if (n <= 256)
        return ((size_t)next_byte() * n) >> 8;
    for (j = 0; j < 8; j++)
        x |= (uint64_t)next_byte() << (8 * j);
    return (size_t)mulhi(x, (uint64_t)n);
}

static inline void emit(const unsigned char *s, size_t n) {
    if (out_len + n > out_cap) {
        size_t cap = out_cap ? out_cap : 4096;
        while (cap < out_len + n)
            cap *= 2;
        out = realloc(out, cap);
        if (!out) {
            fputs("out of memory\n", stderr);
            exit(3);
        }
        out_cap = cap;
    }
    memcpy(out + out_len, s, n);
    out_len += n;
}

static inline void emit_pool(const unsigned char *data, const uint32_t *off, const uint32_t *len, size_t n) {
    size_t c = choose(n);
    emit(data + off[c], len[c]);
}
"#;

const C_MAIN: &str = r#"static int parse_u64(const char *s, uint64_t *v) {
    char *end;
    unsigned long long x;
    if (*s == '\0' || *s == '-')
        return 0;
    errno = 0;
    x = strtoull(s, &end, 10);
    if (errno != 0 || *end != '\0')
        return 0;
    *v = (uint64_t)x;
    return 1;
}

int main(int argc, char **argv) {
    uint64_t seed, depth, count, i;
    FILE *f;
    if (argc != 5 || !parse_u64(argv[1], &seed) || !parse_u64(argv[2], &depth)
        || !parse_u64(argv[3], &count) || depth < 1 || depth > INT32_MAX) {
        fprintf(stderr, "usage: %s SEED MAX_DEPTH COUNT OUTPATH\n", argc > 0 ? argv[0] : "producer");
        return 1;
    }
    max_depth = (int64_t)depth;
    f = strcmp(argv[4], "-") == 0 ? stdout : fopen(argv[4], "wb");
    if (!f) {
        perror(argv[4]);
        return 3;
    }
    seed_rng(seed);
    for (i = 0; i < count; i++) {
        out_len = 0;
        entry(@START@);
        emit((const unsigned char *)"\n", 1);
        if (fwrite(out, 1, out_len, f) != out_len) {
            perror(argv[4]);
            return 3;
        }
    }
    if (fflush(f) != 0 || (f != stdout && fclose(f) != 0)) {
        perror(argv[4]);
        return 3;
    }
    free(out);
    return 0;
}
"#;

const RUST_PRELUDE: &str = r#"#![allow(dead_code)]

use std::io::Write;

const BYTE_POOL: usize = 65536;

struct G {
    s: [u64; 4],
    bytes: Vec<u8>,
    cursor: usize,
    max_depth: i64,
    out: Vec<u8>,
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl G {
    fn new(mut seed: u64, max_depth: i64) -> G {
        let mut s = [0u64; 4];
        for w in &mut s {
            *w = splitmix64(&mut seed);
        }
        if s == [0; 4] {
            s[0] = 1;
        }
        G { s, bytes: vec![0; BYTE_POOL], cursor: BYTE_POOL, max_depth, out: Vec::new() }
    }

    fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    fn next_byte(&mut self) -> u8 {
        if self.cursor == BYTE_POOL {
            for i in (0..BYTE_POOL).step_by(8) {
                let w = self.next_u64();
                self.bytes[i..i + 8].copy_from_slice(&w.to_le_bytes());
            }
            self.cursor = 0;
        }
        self.cursor += 1;
        self.bytes[self.cursor - 1]
    }

    fn choose(&mut self, n: usize) -> usize {
        if n <= 1 {
            return 0;
        }
        if n <= 256 {
            return (self.next_byte() as usize * n) >> 8;
        }
        let mut b = [0u8; 8];
        for x in &mut b {
            *x = self.next_byte();
        }
        ((u64::from_le_bytes(b) as u128 * n as u128) >> 64) as usize
    }

    fn emit(&mut self, b: &[u8]) {
        self.out.extend_from_slice(b);
    }

    fn emit_pool(&mut self, data: &[u8], off: &[u32], len: &[u32]) {
        let c = self.choose(off.len());
        let o = off[c] as usize;
        self.out.extend_from_slice(&data[o..o + len[c] as usize]);
    }
}
"#;

const RUST_MAIN: &str = r#"fn run() -> Result<(), i32> {
    let args: Vec<String> = std::env::args().collect();
    let usage = || {
        eprintln!("usage: {} SEED MAX_DEPTH COUNT OUTPATH", args.first().map_or("producer", |s| s));
        1
    };
    if args.len() != 5 {
        return Err(usage());
    }
    let seed: u64 = args[1].parse().map_err(|_| usage())?;
    let depth: i64 = args[2].parse().map_err(|_| usage())?;
    let count: u64 = args[3].parse().map_err(|_| usage())?;
    if !(1..=i32::MAX as i64).contains(&depth) {
        return Err(usage());
    }
    let io_error = |e: std::io::Error| {
        eprintln!("{}: {e}", args[4]);
        3
    };
    let mut sink: Box<dyn Write> = if args[4] == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::fs::File::create(&args[4]).map_err(io_error)?)
    };
    let mut g = G::new(seed, depth);
    for _ in 0..count {
        g.out.clear();
        let start = @START@;
        entry(&mut g, start);
        g.out.push(b'\n');
        sink.write_all(&g.out).map_err(io_error)?;
    }
    sink.flush().map_err(io_error)
}

fn main() {
    if let Err(code) = run() {
        std::process::exit(code);
    }
}
"#;

#[cfg(test)]
mod tests {
    use super::super::ir::lower;
    use super::*;
    use crate::analysis::{analyze, PoolCap};
    use crate::grammar::load_grammar;

    fn ir(text: &str) -> ProducerIR {
        lower(&analyze(&load_grammar(text).unwrap(), PoolCap::default()).unwrap())
    }

    #[test]
    fn unknown_target() {
        let ir = ir(r#"{"<start>": [["a"]]}"#);
        assert_eq!(emit_named(&ir, "x"), Err(EmitError::UnsupportedTarget("x".into())));
        assert!(emit_named(&ir, "c").is_ok());
        assert!(emit_named(&ir, "self").is_ok());
    }

    #[test]
    fn rule_tables_for_call_only_choices() {
        let ir = super::super::supercompile(&ir(crate::EXPR_GRAMMAR), 1);
        let c = emit(&ir, Target::C).text;
        assert!(c.contains("static void (*const T0[])(int64_t)"), "{c}");
        let r = emit(&ir, Target::SelfLang).text;
        assert!(r.contains("static T0: [fn(&mut G, i64); "), "{r}");
    }

    #[test]
    fn byte_escapes() {
        assert_eq!(rust_bytes(b"a\"\\\n"), r#"b"a\"\\\x0a""#);
        assert_eq!(c_bytes(b"ab"), "97, 98");
        assert_eq!(plus(0), "d");
        assert_eq!(plus(2), "d + 2");
        assert_eq!(plus(-3), "d - 3");
    }
}
