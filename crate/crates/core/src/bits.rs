//! Compact bit-strings.
//!
//! Bits are packed most-significant-first into `u64` words and the unused
//! tail of the last word is always zero, so derived equality and hashing
//! agree with bitwise equality. Strings of up to 64 bits live inline.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;
use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid bit-string: unexpected character {found:?} at position {position}")]
pub struct ParseBitsError {
    pub position: usize,
    pub found: char,
}

/// A finite string over {0, 1}.
///
/// `Ord` is the standard enumeration order: shorter strings first, then
/// lexicographic. Use [`BitString::dictionary_cmp`] for plain lexicographic
/// order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: SmallVec<[u64; 1]>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        let mut words = SmallVec::new();
        words.resize(len.div_ceil(WORD), 0);
        Self { len, words }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_uint(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_uint supports at most 64 bits");
        let mut words = SmallVec::new();
        if len > 0 {
            let masked = if len == WORD {
                value
            } else {
                value & ((1u64 << len) - 1)
            };
            words.push(masked << (WORD - len));
        }
        Self { len, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.bit(i))
    }

    #[inline]
    fn bit(&self, i: usize) -> bool {
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        if bit {
            let i = self.len;
            self.words[i / WORD] |= 1 << (WORD - 1 - i % WORD);
        }
        self.len += 1;
    }

    pub fn extend_from(&mut self, other: &BitString) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = bool> + ExactSizeIterator + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    /// Bits `start..end` as a new string.
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        assert!(start <= end && end <= self.len, "slice out of range");
        BitString::from_bools((start..end).map(|i| self.bit(i)))
    }

    /// Interprets the whole string as an unsigned binary numeral.
    /// Returns `None` if it does not fit in 64 bits.
    pub fn to_uint(&self) -> Option<u64> {
        if self.len > WORD {
            return None;
        }
        Some(self.words.first().map_or(0, |w| w >> (WORD - self.len)))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True iff `self` is a prefix of `other` (including equality).
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        if self.len > other.len {
            return false;
        }
        let full = self.len / WORD;
        if self.words[..full] != other.words[..full] {
            return false;
        }
        let rem = self.len % WORD;
        if rem == 0 {
            return true;
        }
        let mask = !0u64 << (WORD - rem);
        self.words[full] == other.words[full] & mask
    }

    /// Plain lexicographic order, in which a proper prefix sorts first.
    pub fn dictionary_cmp(&self, other: &BitString) -> Ordering {
        let n = self.len.min(other.len);
        let full = n / WORD;
        for i in 0..full {
            match self.words[i].cmp(&other.words[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        let rem = n % WORD;
        if rem > 0 {
            let mask = !0u64 << (WORD - rem);
            match (self.words[full] & mask).cmp(&(other.words[full] & mask)) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.len.cmp(&other.len)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.as_slice().cmp(other.words.as_slice()))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.pad(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::new();
        for (position, c) in s.chars().enumerate() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                found => return Err(ParseBitsError { position, found }),
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for literals in tests and examples. Panics on bad input.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit-string")
}

/// All strings of length exactly `len` in lexicographic order.
pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
    assert!(len < WORD, "enumerating 2^64 strings is not supported");
    (0..1u64 << len).map(move |v| BitString::from_uint(v, len))
}
