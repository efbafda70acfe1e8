//! Measurement outcomes as fixed-width bit strings.
//!
//! Qubit `q` of a `len`-qubit register is bit `q` of the stored index
//! (little-endian). Text form lists qubit 0 as the first character, so
//! the basis index 6 on four qubits prints as `"0110"`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    len: u8,
    index: u64,
}

impl BitString {
    pub fn new(index: u64, len: usize) -> Self {
        assert!(len <= 64, "at most 64 qubits");
        debug_assert!(len == 64 || index < (1 << len));
        Self {
            len: len as u8,
            index,
        }
    }

    /// Basis-state index with qubit 0 as the least significant bit.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Value (0 or 1) of qubit `q`.
    pub fn bit(&self, q: usize) -> u8 {
        ((self.index >> q) & 1) as u8
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(|q| self.bit(q))
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for q in 0..self.len() {
            write!(f, "{}", self.bit(q))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bitstring {0:?}: expected only '0'/'1', at most 64 characters")]
pub struct ParseBitStringError(String);

impl std::str::FromStr for BitString {
    type Err = ParseBitStringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() > 64 || s.is_empty() {
            return Err(ParseBitStringError(s.to_string()));
        }
        let mut index = 0u64;
        for (q, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => index |= 1 << q,
                _ => return Err(ParseBitStringError(s.to_string())),
            }
        }
        Ok(Self {
            len: s.len() as u8,
            index,
        })
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
        s.parse().map_err(D::Error::custom)
    }
}
