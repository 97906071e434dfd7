// SPDX-License-Identifier: Apache-2.0

//! Statistical randomness harness for RC4 keystreams.
//!
//! Corpus generation from deterministic keys, a core battery of the
//! SP 800-22 tests (frequency, block frequency, runs, cumulative sums,
//! serial, approximate entropy) and the second-level analysis over many
//! samples: proportion of passing sequences and uniformity of P-values.

pub mod battery;
pub mod corpus;
pub mod meta;
pub mod special;
pub mod suite;

use thiserror::Error;

pub use battery::{
    test_apen, test_block_frequency, test_cusum, test_frequency, test_runs, test_serial,
    CusumMode,
};
pub use corpus::{derive_sample_key, generate_corpus, Lcg64};
pub use meta::{
    expected_lower, histogram_ranges, proportion_of_passing, pvalue_uniformity, ProportionReport,
    UniformityReport,
};
pub use special::{erfc, igamc};
pub use suite::{run_suite, SuiteConfig, SuiteReport, TestKind};

#[derive(Debug, Error)]
pub enum RandomnessError {
    #[error("sample has {got} bits, the test needs at least {need}")]
    TooShort { need: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no P-values to analyse")]
    Empty,
    #[error(transparent)]
    Special(#[from] special::SpecialError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T, E = RandomnessError> = std::result::Result<T, E>;

/// A bit sequence stored packed, most significant bit first in each octet.
#[derive(Clone, PartialEq, Eq)]
pub struct BitSample {
    bytes: Vec<u8>,
    len: usize,
    pub sample_index: usize,
}

impl BitSample {
    /// All `8 * bytes.len()` bits of `bytes`.
    pub fn from_bytes(bytes: Vec<u8>, sample_index: usize) -> Self {
        let len = bytes.len() * 8;
        Self { bytes, len, sample_index }
    }

    /// The first `len` bits of `bytes`.
    pub fn from_bytes_truncated(mut bytes: Vec<u8>, len: usize, sample_index: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(RandomnessError::InvalidArgument(format!(
                "{len} bits requested from {} octets",
                bytes.len()
            )));
        }
        bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            let keep = 0xFFu8 << (8 - len % 8);
            if let Some(last) = bytes.last_mut() {
                *last &= keep;
            }
        }
        Ok(Self { bytes, len, sample_index })
    }

    /// Packs a sequence of 0/1 values.
    pub fn from_bits(bits: &[u8], sample_index: usize) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (k, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                bytes[k / 8] |= 0x80 >> (k % 8);
            }
        }
        Self { bytes, len: bits.len(), sample_index }
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(RandomnessError::InvalidArgument(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self::from_bits(&bits, 0))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, k: usize) -> u8 {
        (self.bytes[k / 8] >> (7 - k % 8)) & 1
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// One `u8` (0 or 1) per bit.
    pub fn unpack(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len);
        for &byte in &self.bytes {
            for shift in (0..8).rev() {
                out.push((byte >> shift) & 1);
            }
        }
        out.truncate(self.len);
        out
    }
}

impl std::fmt::Debug for BitSample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitSample(#{}, {} bits)", self.sample_index, self.len)
    }
}

/// One P-value produced by (or ingested for) a named test.
#[derive(Debug, Clone, PartialEq)]
pub struct PValue {
    pub value: f64,
    pub test_name: String,
    pub sample_index: usize,
}
