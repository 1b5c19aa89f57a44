// SPDX-License-Identifier: Apache-2.0

//! Reference implementations used only by the integration tests. Each one is
//! written from the textbook definition, with no code shared with the crate.

#![allow(dead_code)]

/// KATAN-32 on explicit bit arrays.
pub mod katan_oracle {
    pub const ROUNDS: usize = 254;

    /// Round constants: s[n+8] = s[n] ^ s[n+1] ^ s[n+3] ^ s[n+5] from an
    /// all-ones seed, skipping the first output.
    pub fn ir_sequence() -> Vec<bool> {
        let mut s: Vec<bool> = vec![true; 8];
        while s.len() < ROUNDS + 1 {
            let n = s.len() - 8;
            let next = s[n] ^ s[n + 1] ^ s[n + 3] ^ s[n + 5];
            s.push(next);
        }
        s[1..=ROUNDS].to_vec()
    }

    /// k_0..k_79 are the key bits, later bits follow the linear recurrence.
    /// Runs 80 bits past the last round so the final key register is known.
    pub fn subkeys(key: u128) -> Vec<bool> {
        let mut k: Vec<bool> = (0..80).map(|i| (key >> i) & 1 == 1).collect();
        for i in 80..2 * ROUNDS + 80 {
            let b = k[i - 80] ^ k[i - 61] ^ k[i - 50] ^ k[i - 13];
            k.push(b);
        }
        k
    }

    pub struct Registers {
        pub l1: [bool; 13],
        pub l2: [bool; 19],
    }

    impl Registers {
        pub fn load(block: u32) -> Self {
            let bit = |i: usize| (block >> i) & 1 == 1;
            let mut l1 = [false; 13];
            let mut l2 = [false; 19];
            for (i, b) in l2.iter_mut().enumerate() {
                *b = bit(i);
            }
            for (i, b) in l1.iter_mut().enumerate() {
                *b = bit(i + 19);
            }
            Registers { l1, l2 }
        }

        pub fn block(&self) -> u32 {
            let mut out = 0u32;
            for (i, &b) in self.l2.iter().enumerate() {
                out |= (b as u32) << i;
            }
            for (i, &b) in self.l1.iter().enumerate() {
                out |= (b as u32) << (i + 19);
            }
            out
        }

        pub fn round(&mut self, ka: bool, kb: bool, ir: bool) {
            let (l1, l2) = (&self.l1, &self.l2);
            let fa = l1[12] ^ l1[7] ^ (l1[8] & l1[5]) ^ (l1[3] & ir) ^ ka;
            let fb = l2[18] ^ l2[7] ^ (l2[12] & l2[10]) ^ (l2[8] & l2[3]) ^ kb;
            for i in (1..13).rev() {
                self.l1[i] = self.l1[i - 1];
            }
            self.l1[0] = fb;
            for i in (1..19).rev() {
                self.l2[i] = self.l2[i - 1];
            }
            self.l2[0] = fa;
        }
    }

    /// Block value after each round (254 entries).
    pub fn encrypt_rounds(plaintext: u32, key: u128) -> Vec<u32> {
        let ir = ir_sequence();
        let k = subkeys(key);
        let mut regs = Registers::load(plaintext);
        (0..ROUNDS)
            .map(|r| {
                regs.round(k[2 * r], k[2 * r + 1], ir[r]);
                regs.block()
            })
            .collect()
    }

    pub fn encrypt(plaintext: u32, key: u128) -> u32 {
        *encrypt_rounds(plaintext, key).last().expect("254 rounds")
    }
}

/// `max_lag |sum_i a[i] * b[i + lag]|` by brute force.
pub fn naive_relational(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as i64;
    let mut best = 0.0f64;
    for lag in -(n - 1)..n {
        let mut s = 0.0;
        for i in 0..n {
            let j = i + lag;
            if j >= 0 && j < n {
                s += a[i as usize] * b[j as usize];
            }
        }
        if s.abs() > best {
            best = s.abs();
        }
    }
    best
}

/// Remainder of `data * x^g` modulo the generator, by schoolbook division.
pub fn crc_long_division(data: &[bool], poly: u64, g: usize) -> Vec<bool> {
    let mut rem: Vec<bool> = data.to_vec();
    rem.extend(std::iter::repeat_n(false, g));
    let mut divisor = vec![true];
    divisor.extend((0..g).rev().map(|i| (poly >> i) & 1 == 1));
    for i in 0..data.len() {
        if rem[i] {
            for (j, d) in divisor.iter().enumerate() {
                rem[i + j] ^= d;
            }
        }
    }
    rem[data.len()..].to_vec()
}

/// Recursively lists files under `dir` relative to it, sorted.
pub fn list_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_owned());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
