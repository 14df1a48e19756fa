// producer for <start>, generated by fastfuzz
#![allow(dead_code)]

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

static L0: &[u8] = b"+";
static L1: &[u8] = b"-";
static L2: &[u8] = b"*";
static L3: &[u8] = b"/";
static L4: &[u8] = b"(";
static L5: &[u8] = b")";
static L6: &[u8] = b".";
static L7: &[u8] = b"0";
static L8: &[u8] = b"1";
static L9: &[u8] = b"2";
static L10: &[u8] = b"3";
static L11: &[u8] = b"4";
static L12: &[u8] = b"5";
static L13: &[u8] = b"6";
static L14: &[u8] = b"7";
static L15: &[u8] = b"8";
static L16: &[u8] = b"9";

// pool of <expr>
static P1_DATA: &[u8] = b"0.00.10.20.30.40.50.60.70.80.91.01.11.21.31.41.51.61.71.81.92.02.12.22.32.42.52.62.72.82.93.03.13.23.33.43.53.63.73.83.94.04.14.24.34.44.54.64.74.84.95.05.15.25.35.45.55.65.75.85.96.06.16.26.36.46.56.66.76.86.97.07.17.27.37.47.57.67.77.87.98.08.18.28.38.48.58.68.78.88.99.09.19.29.39.49.59.69.79.89.90123456789";
static P1_OFF: [u32; 110] = [
    0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45,
    48, 51, 54, 57, 60, 63, 66, 69, 72, 75, 78, 81, 84, 87, 90, 93,
    96, 99, 102, 105, 108, 111, 114, 117, 120, 123, 126, 129, 132, 135, 138, 141,
    144, 147, 150, 153, 156, 159, 162, 165, 168, 171, 174, 177, 180, 183, 186, 189,
    192, 195, 198, 201, 204, 207, 210, 213, 216, 219, 222, 225, 228, 231, 234, 237,
    240, 243, 246, 249, 252, 255, 258, 261, 264, 267, 270, 273, 276, 279, 282, 285,
    288, 291, 294, 297, 300, 301, 302, 303, 304, 305, 306, 307, 308, 309];
static P1_LEN: [u32; 110] = [
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];

// pool of <term>
static P2_DATA: &[u8] = b"0.00.10.20.30.40.50.60.70.80.91.01.11.21.31.41.51.61.71.81.92.02.12.22.32.42.52.62.72.82.93.03.13.23.33.43.53.63.73.83.94.04.14.24.34.44.54.64.74.84.95.05.15.25.35.45.55.65.75.85.96.06.16.26.36.46.56.66.76.86.97.07.17.27.37.47.57.67.77.87.98.08.18.28.38.48.58.68.78.88.99.09.19.29.39.49.59.69.79.89.90123456789";
static P2_OFF: [u32; 110] = [
    0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45,
    48, 51, 54, 57, 60, 63, 66, 69, 72, 75, 78, 81, 84, 87, 90, 93,
    96, 99, 102, 105, 108, 111, 114, 117, 120, 123, 126, 129, 132, 135, 138, 141,
    144, 147, 150, 153, 156, 159, 162, 165, 168, 171, 174, 177, 180, 183, 186, 189,
    192, 195, 198, 201, 204, 207, 210, 213, 216, 219, 222, 225, 228, 231, 234, 237,
    240, 243, 246, 249, 252, 255, 258, 261, 264, 267, 270, 273, 276, 279, 282, 285,
    288, 291, 294, 297, 300, 301, 302, 303, 304, 305, 306, 307, 308, 309];
static P2_LEN: [u32; 110] = [
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];

// pool of <factor>
static P3_DATA: &[u8] = b"0.00.10.20.30.40.50.60.70.80.91.01.11.21.31.41.51.61.71.81.92.02.12.22.32.42.52.62.72.82.93.03.13.23.33.43.53.63.73.83.94.04.14.24.34.44.54.64.74.84.95.05.15.25.35.45.55.65.75.85.96.06.16.26.36.46.56.66.76.86.97.07.17.27.37.47.57.67.77.87.98.08.18.28.38.48.58.68.78.88.99.09.19.29.39.49.59.69.79.89.90123456789";
static P3_OFF: [u32; 110] = [
    0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30, 33, 36, 39, 42, 45,
    48, 51, 54, 57, 60, 63, 66, 69, 72, 75, 78, 81, 84, 87, 90, 93,
    96, 99, 102, 105, 108, 111, 114, 117, 120, 123, 126, 129, 132, 135, 138, 141,
    144, 147, 150, 153, 156, 159, 162, 165, 168, 171, 174, 177, 180, 183, 186, 189,
    192, 195, 198, 201, 204, 207, 210, 213, 216, 219, 222, 225, 228, 231, 234, 237,
    240, 243, 246, 249, 252, 255, 258, 261, 264, 267, 270, 273, 276, 279, 282, 285,
    288, 291, 294, 297, 300, 301, 302, 303, 304, 305, 306, 307, 308, 309];
static P3_LEN: [u32; 110] = [
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3,
    3, 3, 3, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];

// pool of <integer>
static P4_DATA: &[u8] = b"0123456789";
static P4_OFF: [u32; 10] = [
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
static P4_LEN: [u32; 10] = [
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1];

// pool of <digit>
static P5_DATA: &[u8] = b"0123456789";
static P5_OFF: [u32; 10] = [
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9];
static P5_LEN: [u32; 10] = [
    1, 1, 1, 1, 1, 1, 1, 1, 1, 1];

fn u0_expr(g: &mut G, d: i64) {
    if d < g.max_depth {
        match g.choose(3) {
            0 => {
                u1_term(g, d + 1);
                g.emit(L0);
                u0_expr(g, d + 1);
            }
            1 => {
                u1_term(g, d + 1);
                g.emit(L1);
                u0_expr(g, d + 1);
            }
            _ => {
                u1_term(g, d + 1);
            }
        }
    } else {
        g.emit_pool(P1_DATA, &P1_OFF, &P1_LEN);
    }
}

fn u1_term(g: &mut G, d: i64) {
    if d < g.max_depth {
        match g.choose(3) {
            0 => {
                u2_factor(g, d + 1);
                g.emit(L2);
                u1_term(g, d + 1);
            }
            1 => {
                u2_factor(g, d + 1);
                g.emit(L3);
                u1_term(g, d + 1);
            }
            _ => {
                u2_factor(g, d + 1);
            }
        }
    } else {
        g.emit_pool(P2_DATA, &P2_OFF, &P2_LEN);
    }
}

fn u2_factor(g: &mut G, d: i64) {
    if d < g.max_depth {
        match g.choose(5) {
            0 => {
                g.emit(L0);
                u2_factor(g, d + 1);
            }
            1 => {
                g.emit(L1);
                u2_factor(g, d + 1);
            }
            2 => {
                g.emit(L4);
                u0_expr(g, d + 1);
                g.emit(L5);
            }
            3 => {
                u3_integer(g, d + 1);
                g.emit(L6);
                u3_integer(g, d + 1);
            }
            _ => {
                u3_integer(g, d + 1);
            }
        }
    } else {
        g.emit_pool(P3_DATA, &P3_OFF, &P3_LEN);
    }
}

fn u3_integer(g: &mut G, d: i64) {
    if d < g.max_depth {
        match g.choose(2) {
            0 => {
                u4_digit(g, d + 1);
                u3_integer(g, d + 1);
            }
            _ => {
                u4_digit(g, d + 1);
            }
        }
    } else {
        g.emit_pool(P4_DATA, &P4_OFF, &P4_LEN);
    }
}

fn u4_digit(g: &mut G, d: i64) {
    if d < g.max_depth {
        match g.choose(10) {
            0 => {
                g.emit(L7);
            }
            1 => {
                g.emit(L8);
            }
            2 => {
                g.emit(L9);
            }
            3 => {
                g.emit(L10);
            }
            4 => {
                g.emit(L11);
            }
            5 => {
                g.emit(L12);
            }
            6 => {
                g.emit(L13);
            }
            7 => {
                g.emit(L14);
            }
            8 => {
                g.emit(L15);
            }
            _ => {
                g.emit(L16);
            }
        }
    } else {
        g.emit_pool(P5_DATA, &P5_OFF, &P5_LEN);
    }
}

fn entry(g: &mut G, d: i64) {
    u0_expr(g, d + 1);
}

fn run() -> Result<(), i32> {
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
        let start = 0;
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
