// SPDX-License-Identifier: Apache-2.0

//! The core statistical tests. Each public test checks its length and
//! parameter preconditions and then defers to a function over unpacked bits
//! (one `u8` per bit, 0 or 1).

use super::special::{erfc, igamc, normal_cdf};
use super::{BitSample, RandomnessError, Result};

/// Shortest sample accepted by the frequency, runs and cumulative sums tests.
pub const MIN_BITS: usize = 100;

pub(crate) fn check_len(n: usize, need: usize) -> Result<()> {
    if n < need {
        return Err(RandomnessError::TooShort { need, got: n });
    }
    Ok(())
}

fn require_len(sample: &BitSample, need: usize) -> Result<()> {
    check_len(sample.len(), need)
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.max(1).leading_zeros()) as usize
}

/// Monobit test.
pub fn test_frequency(sample: &BitSample) -> Result<f64> {
    require_len(sample, MIN_BITS)?;
    Ok(frequency(&sample.unpack()))
}

pub(crate) fn frequency(bits: &[u8]) -> f64 {
    let ones = bits.iter().filter(|&&b| b == 1).count() as i64;
    let s_n = 2 * ones - bits.len() as i64;
    let s_obs = s_n.unsigned_abs() as f64 / (bits.len() as f64).sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

pub(crate) fn check_block_frequency(n: usize, block_len: usize) -> Result<()> {
    if block_len < 2 {
        return Err(RandomnessError::InvalidArgument(format!(
            "block length {block_len} must be at least 2"
        )));
    }
    if n < block_len {
        return Err(RandomnessError::TooShort { need: block_len, got: n });
    }
    Ok(())
}

/// Frequency within blocks of `block_len` bits; trailing bits are dropped.
pub fn test_block_frequency(sample: &BitSample, block_len: usize) -> Result<f64> {
    check_block_frequency(sample.len(), block_len)?;
    block_frequency(&sample.unpack(), block_len)
}

pub(crate) fn block_frequency(bits: &[u8], block_len: usize) -> Result<f64> {
    let blocks = bits.len() / block_len;
    let m = block_len as f64;
    let chi_sq: f64 = bits
        .chunks_exact(block_len)
        .map(|block| {
            let pi = block.iter().map(|&b| b as u32).sum::<u32>() as f64 / m;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum::<f64>()
        * 4.0
        * m;
    Ok(igamc(blocks as f64 / 2.0, chi_sq / 2.0)?)
}

/// Runs test. A sample failing the frequency pretest gets P = 0.
pub fn test_runs(sample: &BitSample) -> Result<f64> {
    require_len(sample, MIN_BITS)?;
    Ok(runs(&sample.unpack()))
}

pub(crate) fn runs(bits: &[u8]) -> f64 {
    let n = bits.len() as f64;
    let pi = bits.iter().filter(|&&b| b == 1).count() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v_obs as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    erfc(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CusumMode {
    Forward,
    Backward,
}

/// Cumulative sums test in one direction.
pub fn test_cusum(sample: &BitSample, mode: CusumMode) -> Result<f64> {
    require_len(sample, MIN_BITS)?;
    Ok(cusum(&sample.unpack(), mode))
}

/// Largest excursion of the ±1 random walk.
pub(crate) fn max_excursion(bits: &[u8], mode: CusumMode) -> u64 {
    let step = |b: &u8| if *b == 1 { 1i64 } else { -1 };
    let mut s = 0i64;
    let mut z = 0u64;
    let mut visit = |b: &u8| {
        s += step(b);
        z = z.max(s.unsigned_abs());
    };
    match mode {
        CusumMode::Forward => bits.iter().for_each(&mut visit),
        CusumMode::Backward => bits.iter().rev().for_each(&mut visit),
    }
    z
}

pub(crate) fn cusum(bits: &[u8], mode: CusumMode) -> f64 {
    let z = max_excursion(bits, mode);
    cusum_pvalue(bits.len(), z)
}

/// Summation bounds are truncated toward zero, as in the reference code.
pub(crate) fn cusum_pvalue(n: usize, z: u64) -> f64 {
    if z == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let zf = z as f64;
    let sqrt_n = nf.sqrt();
    let bound = |v: f64| v.trunc() as i64;

    let mut sum1 = 0.0;
    for k in bound((-nf / zf + 1.0) / 4.0)..=bound((nf / zf - 1.0) / 4.0) {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * zf / sqrt_n) - normal_cdf((4.0 * k - 1.0) * zf / sqrt_n);
    }
    let mut sum2 = 0.0;
    for k in bound((-nf / zf - 3.0) / 4.0)..=bound((nf / zf - 1.0) / 4.0) {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * zf / sqrt_n) - normal_cdf((4.0 * k + 1.0) * zf / sqrt_n);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

pub(crate) fn check_serial(n: usize, m: usize) -> Result<()> {
    if m < 2 || m + 2 >= floor_log2(n) {
        return Err(RandomnessError::InvalidArgument(format!(
            "serial pattern length {m} outside 2..floor(log2 {n}) - 2"
        )));
    }
    Ok(())
}

/// Serial test: both P-values for pattern length `m`.
pub fn test_serial(sample: &BitSample, m: usize) -> Result<(f64, f64)> {
    check_serial(sample.len(), m)?;
    serial(&sample.unpack(), m)
}

/// Counts of every `k`-bit pattern over the cyclically extended sequence,
/// indexed by the pattern's value (first bit most significant).
pub(crate) fn cyclic_pattern_counts(bits: &[u8], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << k];
    if k == 0 || bits.is_empty() {
        return counts;
    }
    let n = bits.len();
    let mask = (1usize << k) - 1;
    let mut window = 0usize;
    for &b in bits.iter().take(k - 1) {
        window = (window << 1) | b as usize;
    }
    for idx in (k - 1)..(n + k - 1) {
        window = ((window << 1) | bits[idx % n] as usize) & mask;
        counts[window] += 1;
    }
    counts
}

/// psi^2_k = (2^k / n) * sum(counts^2) - n, with psi^2_0 = 0.
pub(crate) fn psi_sq(bits: &[u8], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let n = bits.len() as i128;
    let sum_sq: i128 = cyclic_pattern_counts(bits, k).iter().map(|&c| (c as i128) * (c as i128)).sum();
    // exact integer numerator keeps the cancellation out of floating point
    ((sum_sq << k) - n * n) as f64 / n as f64
}

pub(crate) fn serial(bits: &[u8], m: usize) -> Result<(f64, f64)> {
    let psi_m = psi_sq(bits, m);
    let psi_m1 = psi_sq(bits, m - 1);
    let psi_m2 = psi_sq(bits, m.saturating_sub(2));
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    let p1 = igamc(2f64.powi(m as i32 - 2), (del1 / 2.0).max(0.0))?;
    let p2 = igamc(2f64.powi(m as i32 - 3), (del2 / 2.0).max(0.0))?;
    Ok((p1, p2))
}

pub(crate) fn check_apen(n: usize, m: usize) -> Result<()> {
    if m < 1 || m + 5 >= floor_log2(n) {
        return Err(RandomnessError::InvalidArgument(format!(
            "approximate entropy block length {m} outside 1..floor(log2 {n}) - 5"
        )));
    }
    Ok(())
}

/// Approximate entropy test with block length `m`.
pub fn test_apen(sample: &BitSample, m: usize) -> Result<f64> {
    check_apen(sample.len(), m)?;
    apen(&sample.unpack(), m)
}

fn phi(bits: &[u8], k: usize) -> f64 {
    let n = bits.len() as f64;
    cyclic_pattern_counts(bits, k)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

pub(crate) fn apen_statistic(bits: &[u8], m: usize) -> (f64, f64) {
    let ap_en = phi(bits, m) - phi(bits, m + 1);
    let chi_sq = 2.0 * bits.len() as f64 * (std::f64::consts::LN_2 - ap_en);
    (ap_en, chi_sq)
}

pub(crate) fn apen(bits: &[u8], m: usize) -> Result<f64> {
    let (_, chi_sq) = apen_statistic(bits, m);
    Ok(igamc(2f64.powi(m as i32 - 1), (chi_sq / 2.0).max(0.0))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<u8> {
        BitSample::from_bit_str(s).unwrap().unpack()
    }

    fn sample(s: &str) -> BitSample {
        BitSample::from_bit_str(s).unwrap()
    }

    fn repeat(pattern: &str, n: usize) -> BitSample {
        sample(&pattern.repeat(n / pattern.len()))
    }

    const EPSILON_100: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

    #[test]
    fn frequency_examples() {
        assert!((frequency(&bits("1011010101")) - 0.527_089).abs() < 1e-6);
        assert!(test_frequency(&repeat("0", 100)).unwrap() < 1e-20);
        assert_eq!(test_frequency(&repeat("01", 100)).unwrap(), 1.0);
        assert!((test_frequency(&sample(EPSILON_100)).unwrap() - 0.109_599).abs() < 1e-6);
        assert!(matches!(
            test_frequency(&sample("1011010101")),
            Err(RandomnessError::TooShort { need: 100, got: 10 })
        ));
    }

    #[test]
    fn block_frequency_examples() {
        let p = test_block_frequency(&sample("0110011010"), 3).unwrap();
        assert!((p - 0.801_252).abs() < 1e-6);
        assert_eq!(test_block_frequency(&repeat("01", 100), 10).unwrap(), 1.0);
        assert!(test_block_frequency(&repeat("0", 100), 10).unwrap() < 1e-10);
        assert!(test_block_frequency(&sample("0110"), 5).is_err());
        assert!(test_block_frequency(&sample("0110"), 1).is_err());
        assert!((test_block_frequency(&sample(EPSILON_100), 10).unwrap() - 0.706_438).abs() < 1e-6);
    }

    #[test]
    fn runs_examples() {
        assert!((runs(&bits("1001101011")) - 0.147_232).abs() < 1e-6);
        assert_eq!(test_runs(&repeat("1", 100)).unwrap(), 0.0);
        assert!((runs(&bits("0101010101")) - 0.001_565_402).abs() < 1e-8);
        assert!((test_runs(&sample(EPSILON_100)).unwrap() - 0.500_798).abs() < 1e-6);
    }

    #[test]
    fn cusum_examples() {
        let b = bits("1011010111");
        assert_eq!(max_excursion(&b, CusumMode::Forward), 4);
        assert!((cusum(&b, CusumMode::Forward) - 0.411_658_8).abs() < 1e-6);
        let all_ones = repeat("1", 100);
        assert_eq!(max_excursion(&all_ones.unpack(), CusumMode::Forward), 100);
        assert!(test_cusum(&all_ones, CusumMode::Forward).unwrap() < 1e-20);
        let s = sample(EPSILON_100);
        assert!((test_cusum(&s, CusumMode::Forward).unwrap() - 0.219_194).abs() < 1e-6);
        assert!((test_cusum(&s, CusumMode::Backward).unwrap() - 0.114_866).abs() < 1e-6);
    }

    #[test]
    fn cusum_palindrome_symmetry() {
        let half = &EPSILON_100[..50];
        let pal: String = half.chars().chain(half.chars().rev()).collect();
        let s = sample(&pal);
        assert_eq!(
            test_cusum(&s, CusumMode::Forward).unwrap(),
            test_cusum(&s, CusumMode::Backward).unwrap()
        );
    }

    #[test]
    fn pattern_counts_wrap() {
        let b = bits("0011011101");
        assert_eq!(cyclic_pattern_counts(&b, 1), vec![4, 6]);
        assert_eq!(cyclic_pattern_counts(&b, 2), vec![1, 3, 3, 3]);
        assert_eq!(cyclic_pattern_counts(&b, 3), vec![0, 1, 1, 2, 1, 2, 2, 1]);
    }

    #[test]
    fn serial_examples() {
        let b = bits("0011011101");
        let psi3 = psi_sq(&b, 3);
        let psi2 = psi_sq(&b, 2);
        let psi1 = psi_sq(&b, 1);
        assert!((psi3 - psi2 - 1.6).abs() < 1e-12);
        assert!((psi3 - 2.0 * psi2 + psi1 - 0.8).abs() < 1e-12);
        let (p1, p2) = serial(&b, 3).unwrap();
        assert!((p1 - 0.808_792).abs() < 1e-6);
        assert!((p2 - 0.670_320).abs() < 1e-6);

        let (p1, _) = test_serial(&repeat("00010111", 1024), 3).unwrap();
        assert_eq!(p1, 1.0);
        let (p1, p2) = test_serial(&repeat("0", 1024), 3).unwrap();
        assert!(p1 < 1e-100 && p2 < 1e-100);
        assert!(test_serial(&repeat("0", 1024), 8).is_err());
        assert!(test_serial(&repeat("0", 1024), 1).is_err());
    }

    #[test]
    fn apen_examples() {
        assert!((apen(&bits("0100110101"), 3).unwrap() - 0.261_961).abs() < 1e-6);
        let uniform = repeat("0011", 128);
        let (ap_en, chi_sq) = apen_statistic(&uniform.unpack(), 1);
        assert!((ap_en - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(chi_sq.abs() < 1e-9);
        assert!((test_apen(&uniform, 1).unwrap() - 1.0).abs() < 1e-9);

        let constant = repeat("1", 128);
        let (ap_en, chi_sq) = apen_statistic(&constant.unpack(), 1);
        assert_eq!(ap_en, 0.0);
        assert!((chi_sq - 256.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert!(test_apen(&constant, 1).unwrap() < 1e-30);
        assert!(test_apen(&constant, 2).is_err());
        assert!(test_apen(&constant, 0).is_err());
    }
}
