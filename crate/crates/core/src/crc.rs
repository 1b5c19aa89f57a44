// SPDX-License-Identifier: Apache-2.0

//! CRC encoder and decoder used as the integrity check of a BIST round.
//!
//! The polynomial is given by its coefficient bits below the leading term, so
//! `0x07` with `width = 8` is x^8 + x^2 + x + 1. Bits are processed MSB first
//! with a zero initial register. A message is valid iff the remainder of
//! `data ++ check` is zero.

use crate::bits;
use crate::error::{Error, Result};

pub const MAX_WIDTH: usize = 32;
pub const MAX_DATA_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrcConfig {
    poly: u64,
    width: usize,
    data_width: usize,
    receiver_init: u64,
}

impl Default for CrcConfig {
    /// CRC-8, x^8 + x^2 + x + 1, over 8-bit test patterns.
    fn default() -> Self {
        CrcConfig::new(0x07, 8, 8).expect("default CRC config is valid")
    }
}

impl CrcConfig {
    pub fn new(poly: u64, width: usize, data_width: usize) -> Result<Self> {
        if !(1..=MAX_WIDTH).contains(&width) {
            return Err(Error::config(format!(
                "CRC width must be in 1..={MAX_WIDTH}, got {width}"
            )));
        }
        if !(1..=MAX_DATA_WIDTH).contains(&data_width) {
            return Err(Error::config(format!(
                "CRC data width must be in 1..={MAX_DATA_WIDTH}, got {data_width}"
            )));
        }
        let mask = low_mask(width);
        if poly & !mask != 0 {
            return Err(Error::config(format!(
                "polynomial {poly:#x} has bits above degree {width}"
            )));
        }
        Ok(CrcConfig {
            poly,
            width,
            data_width,
            receiver_init: mask,
        })
    }

    /// Width is taken from the number of hex digits unless given explicitly.
    pub fn from_hex(poly_hex: &str, width: Option<usize>, data_width: usize) -> Result<Self> {
        let digits = poly_hex
            .trim()
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        let width = width.unwrap_or(digits.len() * 4);
        let poly = u64::from_str_radix(digits, 16)
            .map_err(|_| Error::parse("CRC polynomial", poly_hex))?;
        CrcConfig::new(poly, width, data_width)
    }

    pub fn with_receiver_init(mut self, init: u64) -> Result<Self> {
        if init & !low_mask(self.width) != 0 {
            return Err(Error::config("receiver init wider than the CRC register"));
        }
        self.receiver_init = init;
        Ok(self)
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    pub fn poly_hex(&self) -> String {
        format!("{:0w$x}", self.poly, w = self.width.div_ceil(4))
    }

    /// Check width g.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Data width d.
    pub fn data_width(&self) -> usize {
        self.data_width
    }

    pub fn message_width(&self) -> usize {
        self.data_width + self.width
    }

    /// Value the receiver remainder register is preset to during reset.
    pub fn receiver_init(&self) -> u64 {
        self.receiver_init
    }

    pub fn mask(&self) -> u64 {
        low_mask(self.width)
    }

    /// One shift of the division register with input bit `bit`.
    pub fn step(&self, reg: u64, bit: bool) -> u64 {
        let top = ((reg >> (self.width - 1)) & 1 == 1) ^ bit;
        let shifted = (reg << 1) & self.mask();
        if top {
            shifted ^ self.poly
        } else {
            shifted
        }
    }

    /// Remainder of `bits * x^g` divided by the generator polynomial.
    pub fn remainder(&self, bits: &[bool]) -> u64 {
        bits.iter().fold(0, |reg, &b| self.step(reg, b))
    }

    pub fn encode(&self, pattern: &[bool]) -> Result<Message> {
        if pattern.len() != self.data_width {
            return Err(Error::WidthMismatch {
                what: "test pattern",
                expected: self.data_width,
                actual: pattern.len(),
            });
        }
        let check = bits::from_u64(self.remainder(pattern), self.width);
        Ok(Message {
            data: pattern.to_vec(),
            check,
        })
    }

    /// Decoder error flag: `true` (logic one) when the message is corrupted.
    pub fn verify(&self, message: &Message) -> bool {
        let reg = message
            .data
            .iter()
            .chain(&message.check)
            .fold(0, |reg, &b| self.step(reg, b));
        reg != 0
    }
}

fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Free-function form of [`CrcConfig::remainder`].
pub fn crc_remainder(bits: &[bool], config: &CrcConfig) -> u64 {
    config.remainder(bits)
}

/// Data bits followed by their check value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    data: Vec<bool>,
    check: Vec<bool>,
}

impl Message {
    pub fn new(data: Vec<bool>, check: Vec<bool>, config: &CrcConfig) -> Result<Self> {
        if data.len() != config.data_width() {
            return Err(Error::WidthMismatch {
                what: "message data",
                expected: config.data_width(),
                actual: data.len(),
            });
        }
        if check.len() != config.width() {
            return Err(Error::WidthMismatch {
                what: "message check",
                expected: config.width(),
                actual: check.len(),
            });
        }
        Ok(Message { data, check })
    }

    /// Splits a serialized message (data first).
    pub fn from_bits(bits: &[bool], config: &CrcConfig) -> Result<Self> {
        if bits.len() != config.message_width() {
            return Err(Error::WidthMismatch {
                what: "message",
                expected: config.message_width(),
                actual: bits.len(),
            });
        }
        let (data, check) = bits.split_at(config.data_width());
        Message::new(data.to_vec(), check.to_vec(), config)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn check(&self) -> &[bool] {
        &self.check
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut out = self.data.clone();
        out.extend_from_slice(&self.check);
        out
    }
}
