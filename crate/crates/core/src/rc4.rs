// SPDX-License-Identifier: Apache-2.0

//! Reference RC4: key scheduling (KSA) and keystream generation (PRGA).
//!
//! This is the software oracle the hardware model in [`crate::hw`] is checked
//! against. It follows the textbook algorithm byte for byte, with the key
//! array `K[i] = key[i mod l]` materialised explicitly so that the software
//! and hardware paths share the same structure.

use std::fmt;

use thiserror::Error;

/// Number of entries in the S-box.
pub const SBOX_LEN: usize = 256;

/// Longest accepted key.
pub const MAX_KEY_LEN: usize = 256;

/// Conventional key lengths used in practice (5..=16 octets).
pub const CANONICAL_KEY_LEN: std::ops::RangeInclusive<usize> = 5..=16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("RC4 key must not be empty")]
    Empty,
    #[error("RC4 key is {0} octets long, at most 256 are allowed")]
    TooLong(usize),
    #[error("invalid hex key: {0}")]
    Hex(String),
}

/// A secret key of 1..=256 octets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rc4Key(Vec<u8>);

impl Rc4Key {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, KeyError> {
        let bytes = bytes.into();
        match bytes.len() {
            0 => Err(KeyError::Empty),
            l if l > MAX_KEY_LEN => Err(KeyError::TooLong(l)),
            _ => Ok(Self(bytes)),
        }
    }

    /// Parses a key given as hex digits (either case, no separators).
    pub fn from_hex(text: &str) -> Result<Self, KeyError> {
        let bytes = hex::decode(text.trim()).map_err(|e| KeyError::Hex(e.to_string()))?;
        Self::new(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_canonical_length(&self) -> bool {
        CANONICAL_KEY_LEN.contains(&self.0.len())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

// Keys are secrets; keep them out of debug output.
impl fmt::Debug for Rc4Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rc4Key({} octets)", self.0.len())
    }
}

/// The 256-entry permutation at the heart of RC4.
#[derive(Clone, PartialEq, Eq)]
pub struct SBox(pub(crate) [u8; SBOX_LEN]);

impl SBox {
    pub fn identity() -> Self {
        let mut cells = [0u8; SBOX_LEN];
        for (i, c) in cells.iter_mut().enumerate() {
            *c = i as u8;
        }
        Self(cells)
    }

    pub fn as_array(&self) -> &[u8; SBOX_LEN] {
        &self.0
    }

    pub fn get(&self, index: u8) -> u8 {
        self.0[index as usize]
    }

    pub fn swap(&mut self, a: u8, b: u8) {
        self.0.swap(a as usize, b as usize);
    }

    /// True when every value 0..=255 occurs exactly once.
    pub fn is_permutation(&self) -> bool {
        is_permutation(&self.0)
    }
}

impl fmt::Debug for SBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SBox({})", hex::encode(self.0))
    }
}

pub(crate) fn is_permutation(cells: &[u8; SBOX_LEN]) -> bool {
    let mut seen = [false; SBOX_LEN];
    for &c in cells {
        if std::mem::replace(&mut seen[c as usize], true) {
            return false;
        }
    }
    true
}

/// The key expanded to 256 entries: `entries[i] == key[i mod l]`.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyArray([u8; SBOX_LEN]);

impl KeyArray {
    pub fn expand(key: &Rc4Key) -> Self {
        let bytes = key.as_bytes();
        let mut entries = [0u8; SBOX_LEN];
        for (i, e) in entries.iter_mut().enumerate() {
            *e = bytes[i % bytes.len()];
        }
        Self(entries)
    }

    pub fn get(&self, index: u8) -> u8 {
        self.0[index as usize]
    }

    pub fn as_array(&self) -> &[u8; SBOX_LEN] {
        &self.0
    }
}

impl fmt::Debug for KeyArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyArray(..)")
    }
}

/// Result of the initialisation module: identity S-box and expanded key.
pub fn initialize(key: &Rc4Key) -> (SBox, KeyArray) {
    (SBox::identity(), KeyArray::expand(key))
}

/// Cipher state: S-box plus the two PRGA indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rc4State {
    sbox: SBox,
    i: u8,
    j: u8,
}

/// Key scheduling. The returned state is ready for [`Rc4State::next_byte`].
pub fn ksa(key: &Rc4Key) -> Rc4State {
    let (mut sbox, k) = initialize(key);
    let mut j = 0u8;
    for i in 0..=255u8 {
        j = j.wrapping_add(sbox.get(i)).wrapping_add(k.get(i));
        sbox.swap(i, j);
    }
    Rc4State { sbox, i: 0, j: 0 }
}

impl Rc4State {
    pub fn new(key: &Rc4Key) -> Self {
        ksa(key)
    }

    pub fn sbox(&self) -> &SBox {
        &self.sbox
    }

    pub fn i(&self) -> u8 {
        self.i
    }

    pub fn j(&self) -> u8 {
        self.j
    }

    /// One PRGA iteration. The output is read after the swap.
    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        self.i = self.i.wrapping_add(1);
        self.j = self.j.wrapping_add(self.sbox.get(self.i));
        self.sbox.swap(self.i, self.j);
        let t = self.sbox.get(self.i).wrapping_add(self.sbox.get(self.j));
        self.sbox.get(t)
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.next_byte();
        }
    }

    /// XORs the next `data.len()` keystream octets into `data`.
    pub fn apply_keystream(&mut self, data: &mut [u8]) {
        for b in data {
            *b ^= self.next_byte();
        }
    }

    /// Encrypts or decrypts `data`; the two are the same operation.
    pub fn xor_cipher(&mut self, data: &[u8]) -> Vec<u8> {
        let mut out = data.to_vec();
        self.apply_keystream(&mut out);
        out
    }
}

/// The first `n` keystream octets for `key`.
pub fn keystream(key: &Rc4Key, n: usize) -> Vec<u8> {
    let mut state = ksa(key);
    let mut out = vec![0u8; n];
    state.fill(&mut out);
    out
}
