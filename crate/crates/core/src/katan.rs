// SPDX-License-Identifier: Apache-2.0

//! KATAN-32: 32-bit block, 80-bit key, 254 rounds.
//!
//! Bit conventions: plaintext/ciphertext bit `i` is bit `i` of the `u32`
//! (bit 0 is the least significant bit of the last hex digit). Bits 0..19
//! load L2, bits 19..32 load L1. Key bit `i` is bit `i` of the 80-bit key
//! value and is the `i`-th output of the key LFSR.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const ROUNDS: usize = 254;
pub const BLOCK_BITS: usize = 32;
pub const KEY_BITS: usize = 80;

const L1_BITS: u32 = 13;
const L2_BITS: u32 = 19;
const L1_MASK: u32 = (1 << L1_BITS) - 1;
const L2_MASK: u32 = (1 << L2_BITS) - 1;
const KEY_MASK: u128 = (1u128 << KEY_BITS) - 1;

/// Irregular-update round constants. Output of the 8-bit LFSR
/// x^8 + x^7 + x^5 + x^3 + 1 started at all ones, first output discarded.
pub const IR: [u8; ROUNDS] = [
    1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, //
    0, 1, 0, 1, 1, 1, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, //
    1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, //
    0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, //
    0, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 1, 1, //
    1, 1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, //
    0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 1, 0, //
    1, 1, 1, 1, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1, //
    0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 1, //
    1, 0, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 0, 1, 1, 1, //
    1, 0, 0, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1, //
    0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0, 0, 1, //
    1, 1, 0, 0, 0, 1, 0, 0, 1, 1, 1, 1, 0, 1, 0, 0, //
    0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 1, //
    0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 1, //
    1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0,
];

/// 80-bit key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Key80(u128);

impl Key80 {
    pub const ZERO: Key80 = Key80(0);
    pub const ONES: Key80 = Key80(KEY_MASK);

    pub fn new(value: u128) -> Result<Self> {
        if value & !KEY_MASK != 0 {
            return Err(Error::config("KATAN key wider than 80 bits"));
        }
        Ok(Key80(value))
    }

    /// Keeps the low 80 bits.
    pub fn truncating(value: u128) -> Self {
        Key80(value & KEY_MASK)
    }

    pub fn value(self) -> u128 {
        self.0
    }

    pub fn bit(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("0x");
        if digits.len() != KEY_BITS / 4 {
            return Err(Error::parse("80-bit key (20 hex digits)", s));
        }
        let v = u128::from_str_radix(digits, 16).map_err(|_| Error::parse("80-bit key", s))?;
        Key80::new(v)
    }
}

impl fmt::Display for Key80 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:020x}", self.0)
    }
}

impl fmt::Debug for Key80 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key80({self})")
    }
}

impl FromStr for Key80 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Key80::from_hex(s)
    }
}

pub fn block_from_hex(s: &str) -> Result<u32> {
    let digits = s.trim().trim_start_matches("0x");
    if digits.len() != BLOCK_BITS / 4 {
        return Err(Error::parse("32-bit block (8 hex digits)", s));
    }
    u32::from_str_radix(digits, 16).map_err(|_| Error::parse("32-bit block", s))
}

pub fn block_to_hex(block: u32) -> String {
    format!("{block:08x}")
}

/// Cipher registers between rounds. `key_window` holds the next 80 key
/// stream bits, bit `j` = k[2 * round + j].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KatanState {
    l1: u32,
    l2: u32,
    key_window: u128,
    round: usize,
}

impl KatanState {
    pub fn new(plaintext: u32, key: Key80) -> Self {
        KatanState {
            l1: (plaintext >> L2_BITS) & L1_MASK,
            l2: plaintext & L2_MASK,
            key_window: key.value(),
            round: 0,
        }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn l1(&self) -> u32 {
        self.l1
    }

    pub fn l2(&self) -> u32 {
        self.l2
    }

    pub fn key_window(&self) -> u128 {
        self.key_window
    }

    /// L1 || L2 as a block.
    pub fn block(&self) -> u32 {
        (self.l1 << L2_BITS) | self.l2
    }

    pub fn is_done(&self) -> bool {
        self.round >= ROUNDS
    }

    /// One encryption round. Panics past the last round.
    pub fn step(&mut self) {
        assert!(!self.is_done(), "KATAN-32 has only {ROUNDS} rounds");
        let l1 = |i: u32| (self.l1 >> i) & 1;
        let l2 = |i: u32| (self.l2 >> i) & 1;
        let ka = (self.key_window & 1) as u32;
        let kb = ((self.key_window >> 1) & 1) as u32;
        let ir = IR[self.round] as u32;

        let fa = l1(12) ^ l1(7) ^ (l1(8) & l1(5)) ^ (l1(3) & ir) ^ ka;
        let fb = l2(18) ^ l2(7) ^ (l2(12) & l2(10)) ^ (l2(8) & l2(3)) ^ kb;

        self.l1 = ((self.l1 << 1) | fb) & L1_MASK;
        self.l2 = ((self.l2 << 1) | fa) & L2_MASK;
        self.key_window = advance_key(self.key_window);
        self.round += 1;
    }

    /// Register bits that change in the next round: 32 state bits plus the
    /// 80-bit key register.
    pub fn step_toggles(&mut self) -> u32 {
        let before = *self;
        self.step();
        (before.l1 ^ self.l1).count_ones()
            + (before.l2 ^ self.l2).count_ones()
            + (before.key_window ^ self.key_window).count_ones()
    }
}

/// Two LFSR steps: k[i] = k[i-80] ^ k[i-61] ^ k[i-50] ^ k[i-13].
fn advance_key(w: u128) -> u128 {
    let bit = |j: u32| (w >> j) & 1;
    let n0 = bit(0) ^ bit(19) ^ bit(30) ^ bit(67);
    let n1 = bit(1) ^ bit(20) ^ bit(31) ^ bit(68);
    (w >> 2) | (n0 << 78) | (n1 << 79)
}

/// The 508 round-key bits, k[0..2*ROUNDS].
pub fn key_stream(key: Key80) -> Vec<bool> {
    let mut w = key.value();
    let mut out = Vec::with_capacity(2 * ROUNDS);
    for _ in 0..ROUNDS {
        out.push(w & 1 == 1);
        out.push((w >> 1) & 1 == 1);
        w = advance_key(w);
    }
    out
}

pub fn encrypt32(plaintext: u32, key: Key80) -> u32 {
    let mut s = KatanState::new(plaintext, key);
    while !s.is_done() {
        s.step();
    }
    s.block()
}

pub fn decrypt32(ciphertext: u32, key: Key80) -> u32 {
    let ks = key_stream(key);
    let mut l1 = (ciphertext >> L2_BITS) & L1_MASK;
    let mut l2 = ciphertext & L2_MASK;
    for r in (0..ROUNDS).rev() {
        let fb = l1 & 1;
        let fa = l2 & 1;
        // Registers before the round, minus their top bit.
        let p1 = l1 >> 1;
        let p2 = l2 >> 1;
        let b1 = |i: u32| (p1 >> i) & 1;
        let b2 = |i: u32| (p2 >> i) & 1;
        let ka = ks[2 * r] as u32;
        let kb = ks[2 * r + 1] as u32;
        let ir = IR[r] as u32;
        let top1 = fa ^ b1(7) ^ (b1(8) & b1(5)) ^ (b1(3) & ir) ^ ka;
        let top2 = fb ^ b2(7) ^ (b2(12) & b2(10)) ^ (b2(8) & b2(3)) ^ kb;
        l1 = p1 | (top1 << 12);
        l2 = p2 | (top2 << 18);
    }
    (l1 << L2_BITS) | l2
}

/// Per-round Hamming distance of the cipher registers (state and key), one
/// entry per round.
pub fn round_toggle_trace(plaintext: u32, key: Key80) -> Vec<u32> {
    let mut s = KatanState::new(plaintext, key);
    (0..ROUNDS).map(|_| s.step_toggles()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pairs(n: usize, seed: u64) -> Vec<(u32, Key80)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (rng.random(), Key80::truncating(rng.random())))
            .collect()
    }

    #[test]
    fn published_vectors() {
        assert_eq!(encrypt32(0x0000_0000, Key80::ONES), 0x7e1f_f945);
        assert_eq!(encrypt32(0xffff_ffff, Key80::ZERO), 0x432e_61da);
    }

    #[test]
    fn ir_table_matches_lfsr_rule() {
        let mut s = vec![1u8; 8];
        while s.len() < ROUNDS + 1 {
            let n = s.len() - 8;
            s.push(s[n] ^ s[n + 1] ^ s[n + 3] ^ s[n + 5]);
        }
        assert_eq!(&s[1..], &IR[..]);
    }

    #[test]
    fn round_trip() {
        assert_eq!(decrypt32(encrypt32(0, Key80::ZERO), Key80::ZERO), 0);
        for (p, k) in random_pairs(1000, 7) {
            let c = encrypt32(p, k);
            assert_eq!(decrypt32(c, k), p);
            assert_ne!(c, p, "fixed point at p={p:08x} k={k}");
        }
    }

    #[test]
    fn wrong_key_fails_to_decrypt() {
        for (i, (p, k)) in random_pairs(200, 11).into_iter().enumerate() {
            let flipped = Key80::truncating(k.value() ^ (1u128 << (i % KEY_BITS)));
            assert_ne!(decrypt32(encrypt32(p, k), flipped), p);
        }
    }

    #[test]
    fn toggle_trace_shape_and_bounds() {
        for (p, k) in random_pairs(20, 3) {
            let t = round_toggle_trace(p, k);
            assert_eq!(t.len(), ROUNDS);
            assert!(t.iter().all(|&x| x as usize <= BLOCK_BITS + KEY_BITS));
            assert_eq!(t, round_toggle_trace(p, k));
        }
    }

    #[test]
    fn state_stays_32_bits() {
        let mut s = KatanState::new(u32::MAX, Key80::ONES);
        while !s.is_done() {
            s.step();
            assert_eq!(s.l1() & !L1_MASK, 0);
            assert_eq!(s.l2() & !L2_MASK, 0);
            assert_eq!(s.key_window() & !KEY_MASK, 0);
        }
        assert_eq!(s.round(), ROUNDS);
    }

    #[test]
    fn hex_io() {
        let k = Key80::from_hex("ffffffffffffffffffff").unwrap();
        assert_eq!(k, Key80::ONES);
        assert_eq!(k.to_string(), "ffffffffffffffffffff");
        assert!(Key80::from_hex("fff").is_err());
        assert_eq!(block_from_hex("7e1ff945").unwrap(), 0x7e1f_f945);
        assert_eq!(block_to_hex(0x1f), "0000001f");
        assert!(block_from_hex("7e1ff94").is_err());
        assert!(Key80::new(1u128 << 80).is_err());
    }
}
