// SPDX-License-Identifier: Apache-2.0

mod common;

use common::katan_oracle;
use mtj_bist::katan::{self, KatanState, Key80};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn round_constants_agree() {
    let ir = katan_oracle::ir_sequence();
    let table: Vec<bool> = katan::IR.iter().map(|&b| b == 1).collect();
    assert_eq!(ir, table);
}

#[test]
fn published_vectors() {
    assert_eq!(katan_oracle::encrypt(0, (1u128 << 80) - 1), 0x7e1f_f945);
    assert_eq!(katan_oracle::encrypt(0xffff_ffff, 0), 0x432e_61da);
}

#[test]
fn matches_oracle_round_by_round() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_7461);
    let mut inputs = vec![(0u32, Key80::ONES), (0xffff_ffff, Key80::ZERO)];
    inputs.extend((0..100).map(|_| (rng.random::<u32>(), Key80::truncating(rng.random()))));
    for (pt, key) in inputs {
        let expected = katan_oracle::encrypt_rounds(pt, key.value());
        let mut state = KatanState::new(pt, key);
        for (r, want) in expected.iter().enumerate() {
            state.step();
            assert_eq!(state.block(), *want, "pt={pt:08x} key={key} round {r}");
        }
        assert_eq!(katan::encrypt32(pt, key), expected[katan::ROUNDS - 1]);
    }
}

#[test]
fn toggle_trace_matches_oracle_state_diffs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (pt, key) = (rng.random::<u32>(), Key80::truncating(rng.random()));
        let blocks = katan_oracle::encrypt_rounds(pt, key.value());
        let k = katan_oracle::subkeys(key.value());
        let trace = katan::round_toggle_trace(pt, key);
        let mut prev = pt;
        for (r, &b) in blocks.iter().enumerate() {
            // the key register drops two bits and takes in two each round
            let window = |start: usize| -> u128 {
                (0..80).fold(0, |acc, i| acc | (u128::from(k[start + i]) << i))
            };
            let key_flips = (window(2 * r) ^ window(2 * r + 2)).count_ones();
            assert_eq!(trace[r], (prev ^ b).count_ones() + key_flips, "round {r}");
            prev = b;
        }
    }
}

#[test]
fn injective_on_sampled_plaintexts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let key = Key80::truncating(rng.random());
    let mut pts: Vec<u32> = (0..100_000).map(|_| rng.random()).collect();
    pts.sort_unstable();
    pts.dedup();
    let mut cts: Vec<u32> = pts.iter().map(|&p| katan::encrypt32(p, key)).collect();
    cts.sort_unstable();
    cts.dedup();
    assert_eq!(cts.len(), pts.len());
}
