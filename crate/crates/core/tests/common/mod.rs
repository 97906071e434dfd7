// SPDX-License-Identifier: Apache-2.0

//! Test oracles written without the library's code paths.

#![allow(dead_code)]

/// Textbook RC4, all arithmetic in `usize` with explicit `% 256`.
pub fn oracle_keystream(key: &[u8], n: usize) -> Vec<u8> {
    let mut s: Vec<usize> = (0..256).collect();
    let mut j = 0usize;
    for i in 0..256 {
        j = (j + s[i] + key[i % key.len()] as usize) % 256;
        s.swap(i, j);
    }
    oracle_prga(s, n).into_iter().map(|(_, _, z)| z).collect()
}

/// `(i, j, z)` for each PRGA step.
pub fn oracle_steps(key: &[u8], n: usize) -> Vec<(u8, u8, u8)> {
    let mut s: Vec<usize> = (0..256).collect();
    let mut j = 0usize;
    for i in 0..256 {
        j = (j + s[i] + key[i % key.len()] as usize) % 256;
        s.swap(i, j);
    }
    oracle_prga(s, n)
}

fn oracle_prga(mut s: Vec<usize>, n: usize) -> Vec<(u8, u8, u8)> {
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        i = (i + 1) % 256;
        j = (j + s[i]) % 256;
        s.swap(i, j);
        let z = s[(s[i] + s[j]) % 256];
        out.push((i as u8, j as u8, z as u8));
    }
    out
}

pub fn golden_hex(name: &str) -> Vec<u8> {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    hex::decode(text.trim()).expect("golden file is hex")
}

/// Composite Simpson rule on `[a, b]` with `intervals` (even) pieces.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Probability that a fair ±1 walk of `n` steps reaches `|S| >= z`, by
/// dynamic programming over the absorbing strip.
pub fn walk_excursion_tail(z: usize, n: usize) -> f64 {
    let width = 2 * z - 1;
    let mut p = vec![0.0f64; width];
    p[z - 1] = 1.0;
    for _ in 0..n {
        let mut q = vec![0.0f64; width];
        for s in 0..width {
            let half = p[s] / 2.0;
            if s > 0 {
                q[s - 1] += half;
            }
            if s + 1 < width {
                q[s + 1] += half;
            }
        }
        p = q;
    }
    1.0 - p.iter().sum::<f64>()
}
