// SPDX-License-Identifier: Apache-2.0

//! Bit-vector helpers shared by the codec, the harness and the circuits.
//!
//! Bit sequences are `[bool]` in transmission order: index 0 is the first bit
//! shifted out, which is also the most significant bit when a sequence is
//! read as an integer or printed as hex.

use crate::error::{Error, Result};

/// `width` low bits of `value`, most significant first.
pub fn from_u64(value: u64, width: usize) -> Vec<bool> {
    (0..width)
        .rev()
        .map(|i| i < 64 && (value >> i) & 1 == 1)
        .collect()
}

pub fn to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub fn from_u128(value: u128, width: usize) -> Vec<bool> {
    (0..width)
        .rev()
        .map(|i| i < 128 && (value >> i) & 1 == 1)
        .collect()
}

pub fn to_u128(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

pub fn parity(bits: &[bool]) -> bool {
    bits.iter().fold(false, |acc, &b| acc ^ b)
}

/// Hex rendering, left-padded with zero bits to a whole number of nibbles.
pub fn to_hex(bits: &[bool]) -> String {
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<bool> = std::iter::repeat_n(false, pad)
        .chain(bits.iter().copied())
        .collect();
    padded
        .chunks(4)
        .map(|nib| {
            let v = nib.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            char::from_digit(v, 16).unwrap()
        })
        .collect()
}

/// Parses a big-endian hex string into exactly `width` bits. Leading zero
/// bits beyond `width` are accepted; any set bit beyond `width` is an error.
pub fn from_hex(s: &str, width: usize) -> Result<Vec<bool>> {
    let s = s.trim();
    let s = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    if s.is_empty() {
        return Err(Error::parse("hex bit vector", s));
    }
    let mut bits = Vec::with_capacity(s.len() * 4);
    for c in s.chars() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| Error::parse("hex bit vector", s))?;
        bits.extend((0..4).rev().map(|i| (v >> i) & 1 == 1));
    }
    if bits.len() < width {
        let mut out = vec![false; width - bits.len()];
        out.extend(bits);
        return Ok(out);
    }
    let excess = bits.len() - width;
    if bits[..excess].iter().any(|&b| b) {
        return Err(Error::WidthMismatch {
            what: "hex value",
            expected: width,
            actual: bits.len() - bits.iter().position(|&b| b).unwrap_or(bits.len()),
        });
    }
    Ok(bits[excess..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let bits = from_u64(0xA5, 8);
        assert_eq!(to_hex(&bits), "a5");
        assert_eq!(from_hex("A5", 8).unwrap(), bits);
        assert_eq!(from_hex("0x005", 4).unwrap(), from_u64(5, 4));
    }

    #[test]
    fn odd_widths_pad_on_the_left() {
        assert_eq!(to_hex(&from_u64(0b101, 3)), "5");
        assert_eq!(to_hex(&from_u64(0x1ff, 9)), "1ff");
    }

    #[test]
    fn hex_rejects_overflow_and_garbage() {
        assert!(from_hex("1ff", 8).is_err());
        assert!(from_hex("zz", 8).is_err());
        assert!(from_hex("", 8).is_err());
    }

    #[test]
    fn parity_counts_ones() {
        assert!(!parity(&[]));
        assert!(parity(&from_u64(0b111, 3)));
        assert!(!parity(&from_u64(0b101, 3)));
    }
}
