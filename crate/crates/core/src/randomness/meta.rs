// SPDX-License-Identifier: Apache-2.0

//! Second-level analysis over the P-values of one test.

use num_rational::Ratio;

use super::special::igamc;
use super::{RandomnessError, Result};

/// Significance level used throughout.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Threshold on the P-value of P-values for calling a distribution uniform.
pub const UNIFORMITY_THRESHOLD: f64 = 1e-4;

const DECILE_EDGES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const RANGE_EDGES: [f64; 10] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Lower end of the acceptable proportion: `(1 - a) - 3 sqrt(a (1 - a) / m)`.
pub fn expected_lower(alpha: f64, m: usize) -> f64 {
    let p = 1.0 - alpha;
    p - 3.0 * (p * alpha / m as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProportionReport {
    pub m: usize,
    pub failures: usize,
    pub observed: Ratio<u64>,
    pub expected_lower: f64,
    pub passed: bool,
}

impl ProportionReport {
    pub fn observed_f64(&self) -> f64 {
        *self.observed.numer() as f64 / *self.observed.denom() as f64
    }
}

/// Fraction of P-values at or above `alpha`, against the 3-sigma bound.
pub fn proportion_of_passing(pvalues: &[f64], alpha: f64) -> Result<ProportionReport> {
    if pvalues.is_empty() {
        return Err(RandomnessError::Empty);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RandomnessError::InvalidArgument(format!("alpha {alpha} not in (0, 1)")));
    }
    let m = pvalues.len();
    let failures = pvalues.iter().filter(|&&p| p < alpha).count();
    Ok(proportion_from_counts(m, failures, alpha))
}

pub fn proportion_from_counts(m: usize, failures: usize, alpha: f64) -> ProportionReport {
    let observed = Ratio::new((m - failures) as u64, m as u64);
    let expected_lower = expected_lower(alpha, m);
    let passed = (*observed.numer() as f64 / *observed.denom() as f64) >= expected_lower;
    ProportionReport { m, failures, observed, expected_lower, passed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    pub bin_counts: [u64; 10],
    pub chi_square: f64,
    pub pop: f64,
    pub uniform: bool,
}

impl UniformityReport {
    /// Chi-square over ten equiprobable bins, 9 degrees of freedom.
    pub fn from_bins(bin_counts: [u64; 10]) -> Result<Self> {
        let m: u64 = bin_counts.iter().sum();
        if m == 0 {
            return Err(RandomnessError::Empty);
        }
        let expected = m as f64 / 10.0;
        let chi_square = bin_counts
            .iter()
            .map(|&f| {
                let d = f as f64 - expected;
                d * d / expected
            })
            .sum::<f64>();
        let pop = igamc(4.5, chi_square / 2.0)?;
        Ok(Self { bin_counts, chi_square, pop, uniform: pop >= UNIFORMITY_THRESHOLD })
    }
}

fn bin_of(p: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| p >= e).count()
}

/// Uniformity of P-values over [0, 1] (ten bins, last one closed).
pub fn pvalue_uniformity(pvalues: &[f64]) -> Result<UniformityReport> {
    if pvalues.is_empty() {
        return Err(RandomnessError::Empty);
    }
    let mut bins = [0u64; 10];
    for &p in pvalues {
        bins[bin_of(p, &DECILE_EDGES)] += 1;
    }
    UniformityReport::from_bins(bins)
}

/// Counts over [0,.01), [.01,.1), [.1,.2), ..., [.9,1].
pub fn histogram_ranges(pvalues: &[f64]) -> [u64; 11] {
    let mut bins = [0u64; 11];
    for &p in pvalues {
        bins[bin_of(p, &RANGE_EDGES)] += 1;
    }
    bins
}

/// Folds the 11-range histogram into ten deciles (first two ranges merge).
pub fn deciles(ranges: &[u64; 11]) -> [u64; 10] {
    let mut out = [0u64; 10];
    out[0] = ranges[0] + ranges[1];
    out[1..].copy_from_slice(&ranges[2..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_lower_values() {
        for (m, want) in [(300, 0.972766), (600, 0.977814), (2400, 0.983907), (5400, 0.985938)] {
            assert!((expected_lower(0.01, m) - want).abs() < 1e-6, "m = {m}");
        }
    }

    #[test]
    fn six_of_three_hundred() {
        let mut p = vec![0.5; 300];
        p[..6].fill(0.001);
        let r = proportion_of_passing(&p, DEFAULT_ALPHA).unwrap();
        assert_eq!(r.failures, 6);
        assert_eq!(r.observed, Ratio::new(294, 300));
        assert_eq!(format!("{:.6}", r.observed_f64()), "0.980000");
        assert!(r.passed);
    }

    #[test]
    fn proportion_errors() {
        assert!(matches!(proportion_of_passing(&[], 0.01), Err(RandomnessError::Empty)));
        assert!(proportion_of_passing(&[0.5], 0.0).is_err());
        assert!(proportion_of_passing(&[0.5], 1.0).is_err());
    }

    #[test]
    fn alpha_boundary_counts_as_pass() {
        let r = proportion_of_passing(&[0.01, 0.009_999], 0.01).unwrap();
        assert_eq!(r.failures, 1);
    }

    #[test]
    fn uniform_bins() {
        let r = UniformityReport::from_bins([30; 10]).unwrap();
        assert_eq!(r.chi_square, 0.0);
        assert_eq!(r.pop, 1.0);
        assert!(r.uniform);
        assert!(pvalue_uniformity(&[]).is_err());
    }

    #[test]
    fn bin_edges() {
        let h = histogram_ranges(&[0.0, 0.005, 0.01, 0.099, 0.1, 0.3, 0.9, 1.0]);
        assert_eq!(h, [2, 2, 1, 0, 1, 0, 0, 0, 0, 0, 2]);
        assert_eq!(histogram_ranges(&[]), [0; 11]);
        let u = pvalue_uniformity(&[0.0, 0.099_999, 0.1, 0.999, 1.0]).unwrap();
        assert_eq!(u.bin_counts, [2, 1, 0, 0, 0, 0, 0, 0, 0, 2]);
        assert_eq!(deciles(&h), [4, 1, 0, 1, 0, 0, 0, 0, 0, 2]);
    }
}
