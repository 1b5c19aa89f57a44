// SPDX-License-Identifier: Apache-2.0

//! Hardware-Trojan models for the two circuits under test.
//!
//! Both triggers are an AND of two XOR-reduction trees. The CRC decoder
//! Trojan watches the received data and its check value and corrupts the
//! error signal; the KATAN Trojan watches a slice of the key and of the
//! plaintext and flips the first (bit 31) and last (bit 0) ciphertext bits.

use std::fmt;
use std::str::FromStr;

use crate::bits;
use crate::crc::{CrcConfig, Message};
use crate::error::{Error, Result};
use crate::katan::{self, Key80};

/// XOR mask applied to a triggered KATAN ciphertext.
pub const KATAN_PAYLOAD_MASK: u32 = 0x8000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrojanTarget {
    CrcDecoder,
    Katan32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// Error signal inverted while triggered.
    ErrorSignalInvert,
    /// Error signal forced to a constant while triggered.
    ErrorSignalStuckAt(bool),
    FlipFirstAndLastCipherBits,
}

impl Payload {
    pub fn target(self) -> TrojanTarget {
        match self {
            Payload::FlipFirstAndLastCipherBits => TrojanTarget::Katan32,
            _ => TrojanTarget::CrcDecoder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrojanSpec {
    pub target: TrojanTarget,
    /// Key bit positions feeding the key-side XOR tree (KATAN only).
    pub trigger_key_bits: Vec<usize>,
    /// Plaintext bit positions feeding the plaintext-side XOR tree (KATAN only).
    pub trigger_pt_bits: Vec<usize>,
    pub payload: Payload,
}

impl TrojanSpec {
    pub fn crc_default() -> Self {
        TrojanSpec {
            target: TrojanTarget::CrcDecoder,
            trigger_key_bits: Vec::new(),
            trigger_pt_bits: Vec::new(),
            payload: Payload::ErrorSignalInvert,
        }
    }

    pub fn katan_default() -> Self {
        TrojanSpec {
            target: TrojanTarget::Katan32,
            trigger_key_bits: (0..8).collect(),
            trigger_pt_bits: (0..8).collect(),
            payload: Payload::FlipFirstAndLastCipherBits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.payload.target() != self.target {
            return Err(Error::config(format!(
                "payload {} does not apply to target {}",
                self.payload, self.target
            )));
        }
        if self.target == TrojanTarget::Katan32 {
            if self.trigger_key_bits.is_empty() || self.trigger_pt_bits.is_empty() {
                return Err(Error::Empty("KATAN trigger bit set"));
            }
            if let Some(&i) = self
                .trigger_key_bits
                .iter()
                .find(|&&i| i >= katan::KEY_BITS)
            {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: katan::KEY_BITS,
                });
            }
            if let Some(&i) = self
                .trigger_pt_bits
                .iter()
                .find(|&&i| i >= katan::BLOCK_BITS)
            {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: katan::BLOCK_BITS,
                });
            }
        }
        Ok(())
    }
}

/// parity(data) AND parity(check).
pub fn crc_trigger(message: &Message) -> bool {
    bits::parity(message.data()) && bits::parity(message.check())
}

/// Infected decoder with the default payload (error signal inverted).
pub fn crc_verify_trojan(message: &Message, crc: &CrcConfig) -> bool {
    crc_verify_with_payload(message, crc, Payload::ErrorSignalInvert)
}

pub fn crc_verify_with_payload(message: &Message, crc: &CrcConfig, payload: Payload) -> bool {
    let clean = crc.verify(message);
    if !crc_trigger(message) {
        return clean;
    }
    match payload {
        Payload::ErrorSignalInvert => !clean,
        Payload::ErrorSignalStuckAt(level) => level,
        Payload::FlipFirstAndLastCipherBits => clean,
    }
}

/// Trigger evaluated on live registers: `key_window` bit `j` is the key
/// register tap `j`, `block` bit `i` the state tap `i`. At round 0 these are
/// the key and the plaintext.
pub fn katan_trigger_on(block: u32, key_window: u128, spec: &TrojanSpec) -> bool {
    let key_par = spec
        .trigger_key_bits
        .iter()
        .fold(false, |acc, &i| acc ^ ((key_window >> i) & 1 == 1));
    let pt_par = spec
        .trigger_pt_bits
        .iter()
        .fold(false, |acc, &i| acc ^ ((block >> i) & 1 == 1));
    key_par && pt_par
}

pub fn katan_trigger(plaintext: u32, key: Key80, spec: &TrojanSpec) -> bool {
    katan_trigger_on(plaintext, key.value(), spec)
}

pub fn encrypt32_trojan(plaintext: u32, key: Key80, spec: &TrojanSpec) -> u32 {
    let c = katan::encrypt32(plaintext, key);
    if katan_trigger(plaintext, key, spec) {
        c ^ KATAN_PAYLOAD_MASK
    } else {
        c
    }
}

impl fmt::Display for TrojanTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrojanTarget::CrcDecoder => "crc",
            TrojanTarget::Katan32 => "katan",
        })
    }
}

impl FromStr for TrojanTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "crc" | "crc_decoder" => Ok(TrojanTarget::CrcDecoder),
            "katan" | "katan32" => Ok(TrojanTarget::Katan32),
            _ => Err(Error::parse("trojan target (crc|katan)", s)),
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Payload::ErrorSignalInvert => "invert",
            Payload::ErrorSignalStuckAt(false) => "stuck0",
            Payload::ErrorSignalStuckAt(true) => "stuck1",
            Payload::FlipFirstAndLastCipherBits => "flip_first_last",
        })
    }
}

impl FromStr for Payload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "invert" => Ok(Payload::ErrorSignalInvert),
            "stuck0" => Ok(Payload::ErrorSignalStuckAt(false)),
            "stuck1" => Ok(Payload::ErrorSignalStuckAt(true)),
            "flip_first_last" => Ok(Payload::FlipFirstAndLastCipherBits),
            _ => Err(Error::parse(
                "trojan payload (invert|stuck0|stuck1|flip_first_last)",
                s,
            )),
        }
    }
}

/// Parses `0..8`, `0-7`, or `1,3,5` style index lists.
pub fn parse_index_set(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part
            .split_once("..")
            .map(|(a, b)| (a, b, false))
            .or_else(|| part.split_once('-').map(|(a, b)| (a, b, true)));
        match range {
            Some((a, b, inclusive)) => {
                let a: usize = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("index range", part))?;
                let b: usize = b
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse("index range", part))?;
                let end = if inclusive { b + 1 } else { b };
                out.extend(a..end);
            }
            None => out.push(part.parse().map_err(|_| Error::parse("index", part))?),
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("index set"));
    }
    Ok(out)
}
