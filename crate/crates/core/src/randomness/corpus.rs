// SPDX-License-Identifier: Apache-2.0

//! Keystream corpus: per-sample key derivation, generation, and the on-disk
//! layout (`sample_<index>.bin` files plus a `manifest.csv`).

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::{BitSample, RandomnessError, Result};
use crate::rc4::{self, Rc4Key};

/// Samples in the full-size corpus.
pub const CANONICAL_SAMPLES: usize = 300;
/// Bits per sample in the full-size corpus.
pub const CANONICAL_BITS: usize = 1_342_400;

pub const MANIFEST_NAME: &str = "manifest.csv";
const SAMPLE_KEY_LEN: usize = 16;

/// 64-bit LCG (Knuth's MMIX constants).
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
    pub const INCREMENT: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_state(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Top octet of the next state.
    pub fn next_byte(&mut self) -> u8 {
        (self.next_state() >> 56) as u8
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_byte();
        }
    }
}

/// The 16-octet key of sample `index`: seed `index + 1`, one LCG step per
/// octet, each octet the top 8 bits of the state.
pub fn derive_sample_key(index: usize) -> Rc4Key {
    let mut lcg = Lcg64::new(index as u64 + 1);
    let mut bytes = [0u8; SAMPLE_KEY_LEN];
    lcg.fill_bytes(&mut bytes);
    Rc4Key::new(bytes.to_vec()).expect("16-octet key is valid")
}

/// Keystream samples `0..num_samples`, each `bits_per_sample` bits long.
pub fn generate_corpus(num_samples: usize, bits_per_sample: usize) -> Result<Vec<BitSample>> {
    if !bits_per_sample.is_multiple_of(8) {
        return Err(RandomnessError::InvalidArgument(format!(
            "{bits_per_sample} bits is not a whole number of octets"
        )));
    }
    let octets = bits_per_sample / 8;
    Ok((0..num_samples)
        .into_par_iter()
        .map(|s| BitSample::from_bytes(rc4::keystream(&derive_sample_key(s), octets), s))
        .collect())
}

/// One manifest line: `index,key_hex,bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub index: usize,
    pub key_hex: String,
    pub bits: usize,
}

impl FromStr for ManifestEntry {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, Self::Err> {
        let mut fields = line.trim_end_matches('\r').split(',');
        let (Some(index), Some(key_hex), Some(bits), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err("expected `index,key_hex,bits`".into());
        };
        let number = |s: &str, what: &str| {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("bad {what}: {s:?}"));
            }
            s.parse::<usize>().map_err(|e| format!("bad {what}: {e}"))
        };
        let index = number(index, "index")?;
        let bits = number(bits, "bit count")?;
        Rc4Key::from_hex(key_hex).map_err(|e| e.to_string())?;
        Ok(Self { index, key_hex: key_hex.to_ascii_lowercase(), bits })
    }
}

impl std::fmt::Display for ManifestEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.index, self.key_hex, self.bits)
    }
}

/// Parses a manifest; blank lines are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| l.parse().map_err(|reason| RandomnessError::Parse { line: k + 1, reason }))
        .collect()
}

pub fn sample_file_name(index: usize) -> String {
    format!("sample_{index}.bin")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RandomnessError + '_ {
    move |source| RandomnessError::Io { path: path.display().to_string(), source }
}

/// Writes one file per sample and the manifest. Keys are recomputed from
/// each sample's index.
pub fn write_corpus(dir: &Path, samples: &[BitSample]) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::new();
    for s in samples {
        let path = dir.join(sample_file_name(s.sample_index));
        fs::write(&path, s.as_bytes()).map_err(io_err(&path))?;
        let entry = ManifestEntry {
            index: s.sample_index,
            key_hex: derive_sample_key(s.sample_index).to_hex(),
            bits: s.len(),
        };
        manifest.push_str(&entry.to_string());
        manifest.push('\n');
    }
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest).map_err(io_err(&path))
}

/// Loads a corpus written by [`write_corpus`] (or any directory in the same
/// layout), in manifest order.
pub fn read_corpus(dir: &Path) -> Result<Vec<BitSample>> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    parse_manifest(&text)?
        .into_iter()
        .map(|e| {
            let path = dir.join(sample_file_name(e.index));
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            if bytes.len() != e.bits.div_ceil(8) {
                return Err(RandomnessError::InvalidArgument(format!(
                    "{}: {} octets on disk, manifest says {} bits",
                    path.display(),
                    bytes.len(),
                    e.bits
                )));
            }
            BitSample::from_bytes_truncated(bytes, e.bits, e.index)
        })
        .collect()
}
