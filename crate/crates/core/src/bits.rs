//! Finite bit-strings and windows `[0, H)` of ω.
//!
//! A [`BitString`] is stored sparsely as the sorted positions of its one
//! bits. Tree nodes and guesses are overwhelmingly zero (the canonical
//! extensions zero-pad), so a node at level ten million costs a handful of
//! words. A [`SetWindow`] is a compressed bitset over `[0, H)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use roaring::RoaringBitmap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary string, read as the characteristic string of a subset of its
/// length. Ordered lexicographically with a proper prefix before its
/// extensions.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    len: u32,
    ones: Vec<u32>,
}

impl BitString {
    pub fn zeros(len: u32) -> Self {
        BitString {
            len,
            ones: Vec::new(),
        }
    }

    /// Builds a string from one positions; positions at or past `len` are rejected.
    pub fn from_ones(len: u32, ones: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut ones: Vec<u32> = ones.into_iter().collect();
        ones.sort_unstable();
        ones.dedup();
        if let Some(&last) = ones.last() {
            if last >= len {
                return Err(Error::OutOfHorizon {
                    value: u64::from(last),
                    horizon: u64::from(len),
                });
            }
        }
        Ok(BitString { len, ones })
    }

    /// The `len` low bits of `word`, bit `i` of the word at position `i`.
    pub fn from_word(len: u32, word: u64) -> Self {
        let ones = (0..len.min(64)).filter(|&i| word >> i & 1 == 1).collect();
        BitString { len, ones }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    pub fn count_ones(&self) -> usize {
        self.ones.len()
    }

    pub fn get(&self, i: u32) -> bool {
        self.ones.binary_search(&i).is_ok()
    }

    /// Returns a copy with bit `i` set; `i` must be below the length.
    pub fn with_bit(&self, i: u32) -> Self {
        assert!(i < self.len, "bit {i} outside string of length {}", self.len);
        let mut out = self.clone();
        if let Err(at) = out.ones.binary_search(&i) {
            out.ones.insert(at, i);
        }
        out
    }

    /// `X ∩ k` as a string of length `k`: truncates, or pads with zeros.
    pub fn cut(&self, k: u32) -> Self {
        let keep = self.ones.partition_point(|&p| p < k);
        BitString {
            len: k,
            ones: self.ones[..keep].to_vec(),
        }
    }

    /// Whether `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        if self.len > other.len {
            return false;
        }
        let below = other.ones.partition_point(|&p| p < self.len);
        other.ones[..below] == self.ones[..]
    }

    pub fn is_comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Low 64 bits packed into a word (bit `i` at position `i`).
    pub fn to_word(&self) -> u64 {
        self.ones
            .iter()
            .take_while(|&&p| p < 64)
            .fold(0u64, |w, &p| w | 1 << p)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        // Walk the one positions in step; the first disagreement decides.
        for (a, b) in self.ones.iter().zip(&other.ones) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                // self has a one where other has a zero (other's next one is later)
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        match self.ones.len().cmp(&other.ones.len()) {
            Ordering::Equal => self.len.cmp(&other.len),
            // The shorter list ran out: either a zero meets a one, or self is
            // a prefix of other. Both sort self first.
            Ordering::Less => Ordering::Less,
            Ordering::Greater => Ordering::Greater,
        }
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = vec![b'0'; self.len as usize];
        for &p in &self.ones {
            s[p as usize] = b'1';
        }
        f.write_str(std::str::from_utf8(&s).expect("ascii"))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString(len={}, ones={:?})", self.len, self.ones)
        }
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let len = u32::try_from(s.len())
            .map_err(|_| Error::InvalidInput("bit-string longer than 2^32".into()))?;
        let mut ones = Vec::new();
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => ones.push(i as u32),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "bit-string contains `{}` at {i}",
                        c as char
                    )))
                }
            }
        }
        Ok(BitString { len, ones })
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of `[0, horizon)`, standing for a subset of ω cut at the horizon.
#[derive(Clone, PartialEq)]
pub struct SetWindow {
    horizon: u32,
    bits: RoaringBitmap,
}

impl Eq for SetWindow {}

impl SetWindow {
    pub fn empty(horizon: u32) -> Self {
        SetWindow {
            horizon,
            bits: RoaringBitmap::new(),
        }
    }

    pub fn full(horizon: u32) -> Self {
        let mut bits = RoaringBitmap::new();
        bits.insert_range(0..horizon);
        SetWindow { horizon, bits }
    }

    pub fn from_members(horizon: u32, members: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut bits = RoaringBitmap::new();
        for m in members {
            if m >= horizon {
                return Err(Error::OutOfHorizon {
                    value: u64::from(m),
                    horizon: u64::from(horizon),
                });
            }
            bits.insert(m);
        }
        Ok(SetWindow { horizon, bits })
    }

    /// Members of `[0, horizon)` satisfying `pred`.
    pub fn from_predicate(horizon: u32, mut pred: impl FnMut(u32) -> bool) -> Self {
        let bits = (0..horizon).filter(|&n| pred(n)).collect();
        SetWindow { horizon, bits }
    }

    /// The zero-extension of a string to `horizon`.
    pub fn from_bitstring(horizon: u32, s: &BitString) -> Result<Self> {
        if s.len() > horizon {
            return Err(Error::HorizonMismatch {
                needed: u64::from(s.len()),
                got: u64::from(horizon),
            });
        }
        Ok(SetWindow {
            horizon,
            bits: s.ones().iter().copied().collect(),
        })
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, n: u32) -> bool {
        self.bits.contains(n)
    }

    /// Inserts `n`; returns false (and leaves the window unchanged) when `n`
    /// lies outside the horizon.
    pub fn insert(&mut self, n: u32) -> bool {
        n < self.horizon && self.bits.insert(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter()
    }

    pub fn min(&self) -> Option<u32> {
        self.bits.min()
    }

    pub fn max(&self) -> Option<u32> {
        self.bits.max()
    }

    pub fn bitmap(&self) -> &RoaringBitmap {
        &self.bits
    }

    /// Number of members below `k`.
    pub fn count_below(&self, k: u32) -> u64 {
        if k == 0 {
            0
        } else {
            self.bits.rank(k - 1)
        }
    }

    pub fn intersection(&self, other: &SetWindow) -> SetWindow {
        SetWindow {
            horizon: self.horizon.min(other.horizon),
            bits: &self.bits & &other.bits,
        }
    }

    pub fn union(&self, other: &SetWindow) -> SetWindow {
        SetWindow {
            horizon: self.horizon.max(other.horizon),
            bits: &self.bits | &other.bits,
        }
    }

    /// Members of `[0, horizon)` not in the window.
    pub fn complement(&self) -> SetWindow {
        let mut bits = RoaringBitmap::new();
        bits.insert_range(0..self.horizon);
        bits -= &self.bits;
        SetWindow {
            horizon: self.horizon,
            bits,
        }
    }

    pub fn is_subset(&self, other: &SetWindow) -> bool {
        self.bits.is_subset(&other.bits)
    }

    /// Members at or above `from`.
    pub fn tail(&self, from: u32) -> SetWindow {
        let mut bits = self.bits.clone();
        if from > 0 {
            bits.remove_range(0..from);
        }
        SetWindow {
            horizon: self.horizon,
            bits,
        }
    }

    /// `X ∩ k` as a length-`k` string; `k` may not exceed the horizon.
    pub fn prefix(&self, k: u32) -> Result<BitString> {
        if k > self.horizon {
            return Err(Error::HorizonMismatch {
                needed: u64::from(k),
                got: u64::from(self.horizon),
            });
        }
        Ok(BitString {
            len: k,
            ones: self.bits.iter().take_while(|&p| p < k).collect(),
        })
    }

    /// Whether `X ∩ |s| = s`, without materializing the prefix.
    pub fn prefix_equals(&self, s: &BitString) -> bool {
        s.len() <= self.horizon
            && self.count_below(s.len()) == s.count_ones() as u64
            && s.ones().iter().all(|&p| self.bits.contains(p))
    }

    /// Little-endian bytes (member `i` is bit `i % 8` of byte `i / 8`) as hex.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; (self.horizon as usize).div_ceil(8)];
        for m in &self.bits {
            bytes[(m / 8) as usize] |= 1 << (m % 8);
        }
        hex::encode(bytes)
    }

    pub fn from_hex(horizon: u32, text: &str) -> Result<Self> {
        let bytes = hex::decode(text.trim()).map_err(|e| Error::InvalidInput(format!("bad hex window: {e}")))?;
        if bytes.len() != (horizon as usize).div_ceil(8) {
            return Err(Error::InvalidInput(format!(
                "hex window has {} bytes, horizon {horizon} needs {}",
                bytes.len(),
                (horizon as usize).div_ceil(8)
            )));
        }
        let mut members = Vec::new();
        for (i, byte) in bytes.iter().enumerate() {
            for j in 0..8 {
                if byte >> j & 1 == 1 {
                    members.push((i * 8 + j) as u32);
                }
            }
        }
        SetWindow::from_members(horizon, members)
    }
}

#[derive(Serialize, Deserialize)]
struct WindowRecord {
    horizon: u32,
    members: Vec<u32>,
}

impl Serialize for SetWindow {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        WindowRecord {
            horizon: self.horizon,
            members: self.bits.iter().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SetWindow {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let record = WindowRecord::deserialize(deserializer)?;
        SetWindow::from_members(record.horizon, record.members).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for SetWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.len() <= 32 {
            write!(f, "SetWindow(H={}, {:?})", self.horizon, self.bits.iter().collect::<Vec<_>>())
        } else {
            write!(f, "SetWindow(H={}, |X|={})", self.horizon, self.bits.len())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        let s = bs("0010110");
        assert_eq!(s.len(), 7);
        assert_eq!(s.ones(), &[2, 4, 5]);
        assert_eq!(s.to_string(), "0010110");
        assert!("01x".parse::<BitString>().is_err());
        assert_eq!(bs(""), BitString::zeros(0));
    }

    #[test]
    fn cut_and_prefix() {
        let s = bs("0110");
        assert_eq!(s.cut(2), bs("01"));
        assert_eq!(s.cut(6), bs("011000"));
        assert!(bs("01").is_prefix_of(&s));
        assert!(!bs("00").is_prefix_of(&s));
        assert!(BitString::zeros(0).is_prefix_of(&s));
        assert!(!s.is_prefix_of(&bs("01")));
        assert!(bs("011").is_comparable(&s));
        assert!(!bs("000").is_comparable(&bs("001")));
    }

    #[test]
    fn window_prefix_checks() {
        let w = SetWindow::from_members(8, [1, 2, 6]).unwrap();
        assert_eq!(w.prefix(4).unwrap(), bs("0110"));
        assert!(w.prefix_equals(&bs("0110")));
        assert!(!w.prefix_equals(&bs("0100")));
        assert!(w.prefix_equals(&bs("")));
        assert!(w.prefix(9).is_err());
        assert!(SetWindow::from_members(4, [4]).is_err());
    }

    #[test]
    fn hex_layout() {
        let w = SetWindow::from_members(12, [0, 3, 9]).unwrap();
        assert_eq!(w.to_hex(), "0902");
        assert_eq!(SetWindow::from_hex(12, "0902").unwrap(), w);
        assert!(SetWindow::from_hex(12, "09").is_err());
        assert!(SetWindow::from_hex(4, "10").is_err());
    }

    fn arb_bits(max_len: u32) -> impl Strategy<Value = String> {
        proptest::collection::vec(prop::bool::ANY, 0..max_len as usize)
            .prop_map(|v| v.into_iter().map(|b| if b { '1' } else { '0' }).collect())
    }

    proptest! {
        #[test]
        fn order_matches_string_order(a in arb_bits(12), b in arb_bits(12)) {
            prop_assert_eq!(bs(&a).cmp(&bs(&b)), a.cmp(&b));
        }

        #[test]
        fn prefix_matches_string_prefix(a in arb_bits(10), b in arb_bits(10)) {
            prop_assert_eq!(bs(&a).is_prefix_of(&bs(&b)), b.starts_with(&a));
        }

        #[test]
        fn hex_round_trip(h in 1u32..200, members in proptest::collection::vec(0u32..200, 0..40)) {
            let w = SetWindow::from_members(h, members.into_iter().filter(|&m| m < h)).unwrap();
            prop_assert_eq!(SetWindow::from_hex(h, &w.to_hex()).unwrap(), w);
        }
    }
}
