//! Seeded randomness and the choice-stream contract shared by all engines.
//!
//! A [`ChoiceStream`] turns xoshiro256** output into bounded choices. Each
//! 64-bit output is split into eight bytes (lowest byte first) held in a
//! prefilled byte pool, and a byte is mapped onto `0..n` by keeping the upper
//! half of `byte * n`. Bounds above 256 take eight bytes and a widening
//! multiply.
//!
//! A choice among a single alternative never consumes randomness. Every
//! engine relies on this: removing single-alternative choices at compile time
//! leaves the consumed byte sequence unchanged.

use std::fmt;

/// Advances a splitmix64 state and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** state. Never all-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    s: [u64; 4],
}

impl RngState {
    /// Expands a 64-bit seed with splitmix64.
    pub fn seed(seed: u64) -> RngState {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for word in &mut s {
            *word = splitmix64(&mut sm);
        }
        if s == [0; 4] {
            s[0] = 1;
        }
        RngState { s }
    }

    /// Returns `None` for the all-zero state.
    pub fn from_words(s: [u64; 4]) -> Option<RngState> {
        (s != [0; 4]).then_some(RngState { s })
    }

    pub fn words(&self) -> [u64; 4] {
        self.s
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
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

    /// Pure form of [`RngState::next_u64`].
    pub fn step(self) -> (u64, RngState) {
        let mut next = self;
        let out = next.next_u64();
        (out, next)
    }
}

/// Maps a random byte onto `0..n` using the upper half of `b * n`.
#[inline]
pub fn map_range(b: u8, n: usize) -> usize {
    debug_assert!((1..=256).contains(&n));
    (b as usize * n) >> 8
}

/// What happens when the byte pool runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RandPolicy {
    /// Draw fresh bytes from the generator.
    #[default]
    Refill,
    /// Wrap around and reuse the bytes already drawn.
    Reuse,
}

impl std::str::FromStr for RandPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "refill" => Ok(RandPolicy::Refill),
            "reuse" => Ok(RandPolicy::Reuse),
            other => Err(format!("unknown random policy {other:?} (expected refill or reuse)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChoiceError {
    #[error("choice trace exhausted at position {position}")]
    TraceExhausted { position: usize },
    #[error("choice bound mismatch at position {position}: trace has {expected}, engine asked for {actual}")]
    BoundMismatch { position: usize, expected: usize, actual: usize },
}

/// A source of bounded choices.
pub trait Chooser {
    /// Picks an index in `0..n` for `n >= 2`.
    fn choose_among(&mut self, n: usize) -> Result<usize, ChoiceError>;

    /// Picks an index in `0..n`. `n == 1` returns 0 without consuming anything.
    #[inline]
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
        debug_assert!(n >= 1, "choice among zero alternatives");
        if n <= 1 {
            Ok(0)
        } else {
            self.choose_among(n)
        }
    }
}

impl<C: Chooser + ?Sized> Chooser for &mut C {
    #[inline]
    fn choose_among(&mut self, n: usize) -> Result<usize, ChoiceError> {
        (**self).choose_among(n)
    }
}

pub const DEFAULT_BYTE_POOL: usize = 65_536;

/// Bounded choices from a seeded xoshiro256** generator via a byte pool.
#[derive(Clone)]
pub struct ChoiceStream {
    rng: RngState,
    buf: Box<[u8]>,
    cursor: usize,
    policy: RandPolicy,
    filled: bool,
    draws: u64,
}

impl fmt::Debug for ChoiceStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChoiceStream")
            .field("rng", &self.rng)
            .field("pool_len", &self.buf.len())
            .field("cursor", &self.cursor)
            .field("policy", &self.policy)
            .field("draws", &self.draws)
            .finish()
    }
}

impl ChoiceStream {
    pub fn new(seed: u64) -> ChoiceStream {
        ChoiceStream::with_pool(RngState::seed(seed), DEFAULT_BYTE_POOL, RandPolicy::Refill)
    }

    pub fn with_policy(seed: u64, policy: RandPolicy) -> ChoiceStream {
        ChoiceStream::with_pool(RngState::seed(seed), DEFAULT_BYTE_POOL, policy)
    }

    /// `pool_len` must be a positive multiple of 8.
    pub fn with_pool(rng: RngState, pool_len: usize, policy: RandPolicy) -> ChoiceStream {
        assert!(pool_len >= 8 && pool_len.is_multiple_of(8), "byte pool must be a positive multiple of 8");
        ChoiceStream {
            rng,
            buf: vec![0; pool_len].into_boxed_slice(),
            cursor: pool_len,
            policy,
            filled: false,
            draws: 0,
        }
    }

    /// Position of the next byte in the pool.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Number of 64-bit generator outputs drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn rng(&self) -> RngState {
        self.rng
    }

    #[cold]
    fn refill(&mut self) {
        if self.policy == RandPolicy::Reuse && self.filled {
            self.cursor = 0;
            return;
        }
        for chunk in self.buf.chunks_exact_mut(8) {
            chunk.copy_from_slice(&self.rng.next_u64().to_le_bytes());
        }
        self.draws += (self.buf.len() / 8) as u64;
        self.filled = true;
        self.cursor = 0;
    }

    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        if self.cursor == self.buf.len() {
            self.refill();
        }
        let b = self.buf[self.cursor];
        self.cursor += 1;
        b
    }

    #[inline]
    pub fn next_choice(&mut self, n: usize) -> usize {
        match n {
            0 | 1 => 0,
            2..=256 => map_range(self.next_byte(), n),
            _ => {
                let mut bytes = [0u8; 8];
                for b in &mut bytes {
                    *b = self.next_byte();
                }
                let x = u64::from_le_bytes(bytes);
                ((x as u128 * n as u128) >> 64) as usize
            }
        }
    }
}

impl Chooser for ChoiceStream {
    #[inline]
    fn choose_among(&mut self, n: usize) -> Result<usize, ChoiceError> {
        Ok(self.next_choice(n))
    }

    #[inline]
    fn choose(&mut self, n: usize) -> Result<usize, ChoiceError> {
        Ok(self.next_choice(n))
    }
}

/// A recorded sequence of `(bound, chosen)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChoiceTrace {
    pub recorded: Vec<(usize, usize)>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceFormatError {
    #[error("truncated choice trace")]
    Truncated,
    #[error("varint overflows 64 bits")]
    Overflow,
    #[error("entry {0}: choice is not below its bound")]
    OutOfRange(usize),
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn get_varint(data: &[u8], pos: &mut usize) -> Result<u64, TraceFormatError> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *data.get(*pos).ok_or(TraceFormatError::Truncated)?;
        *pos += 1;
        let bits = (b & 0x7f) as u64;
        if shift == 63 && bits > 1 {
            return Err(TraceFormatError::Overflow);
        }
        v |= bits << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(TraceFormatError::Overflow)
}

impl ChoiceTrace {
    pub fn new(recorded: Vec<(usize, usize)>) -> ChoiceTrace {
        ChoiceTrace { recorded }
    }

    pub fn len(&self) -> usize {
        self.recorded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recorded.is_empty()
    }

    /// Binary form: LEB128 varint bound followed by varint choice, per entry.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.recorded.len() * 2);
        for &(bound, chosen) in &self.recorded {
            put_varint(&mut out, bound as u64);
            put_varint(&mut out, chosen as u64);
        }
        out
    }

    pub fn decode(data: &[u8]) -> Result<ChoiceTrace, TraceFormatError> {
        let mut pos = 0;
        let mut recorded = Vec::new();
        while pos < data.len() {
            let bound = get_varint(data, &mut pos)? as usize;
            let chosen = get_varint(data, &mut pos)? as usize;
            if chosen >= bound {
                return Err(TraceFormatError::OutOfRange(recorded.len()));
            }
            recorded.push((bound, chosen));
        }
        Ok(ChoiceTrace { recorded })
    }
}

/// Wraps a chooser and records every choice it makes.
#[derive(Debug)]
pub struct Recorder<C> {
    inner: C,
    trace: ChoiceTrace,
}

impl<C: Chooser> Recorder<C> {
    pub fn new(inner: C) -> Recorder<C> {
        Recorder { inner, trace: ChoiceTrace::default() }
    }

    pub fn trace(&self) -> &ChoiceTrace {
        &self.trace
    }

    pub fn into_parts(self) -> (C, ChoiceTrace) {
        (self.inner, self.trace)
    }
}

impl<C: Chooser> Chooser for Recorder<C> {
    fn choose_among(&mut self, n: usize) -> Result<usize, ChoiceError> {
        let c = self.inner.choose_among(n)?;
        self.trace.recorded.push((n, c));
        Ok(c)
    }
}

/// Serves the choices of a recorded trace, failing when the consumer asks
/// for a different bound than was recorded.
#[derive(Debug, Clone)]
pub struct Replay {
    trace: ChoiceTrace,
    position: usize,
}

impl Replay {
    pub fn new(trace: ChoiceTrace) -> Replay {
        Replay { trace, position: 0 }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_finished(&self) -> bool {
        self.position == self.trace.len()
    }
}

impl Chooser for Replay {
    fn choose_among(&mut self, n: usize) -> Result<usize, ChoiceError> {
        let position = self.position;
        let &(bound, chosen) = self
            .trace
            .recorded
            .get(position)
            .ok_or(ChoiceError::TraceExhausted { position })?;
        if bound != n {
            return Err(ChoiceError::BoundMismatch { position, expected: bound, actual: n });
        }
        self.position += 1;
        Ok(chosen)
    }
}
