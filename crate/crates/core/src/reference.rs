//! Single-phase reference implementation for differential testing.
//!
//! Written directly against the `aes`, `chacha20`, `ghash`, `poly1305`,
//! `sha2` and `aes-gcm` crates with no offline/online split and no shared
//! code with the main implementation beyond the configuration types.

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockEncrypt, KeyInit, KeyIvInit, StreamCipherCore, StreamCipherSeekCore};
use aes_gcm::aead::AeadInPlace;
use ghash::universal_hash::UniversalHash;
use sha2::{Digest, Sha256};

use crate::diamond::{InitialSecret, SchemeConfig};
use crate::famac::AggMode;
use crate::primitives::{KeyUpdatePolicy, PrfAlgorithm, UhAlgorithm};

fn aes(key: &[u8], x: u128) -> [u8; 16] {
    let c = aes::Aes128::new(GenericArray::from_slice(key));
    let mut b = GenericArray::clone_from_slice(&x.to_be_bytes());
    c.encrypt_block(&mut b);
    b.into()
}

enum Chain {
    Fprg([u8; 16]),
    Hash(Vec<u8>, u8),
}

impl Chain {
    fn next(&mut self, key_len: usize) -> Vec<u8> {
        match self {
            Chain::Fprg(seed) => {
                let mut k = aes(seed, 1).to_vec();
                if key_len == 32 {
                    k.extend_from_slice(&aes(seed, 2));
                }
                *seed = aes(seed, 0);
                k
            }
            Chain::Hash(cur, label) => {
                let mut h = Sha256::new();
                h.update(&cur);
                h.update([*label]);
                let k = h.finalize()[..key_len].to_vec();
                *cur = k.clone();
                k
            }
        }
    }
}

/// Sender-side oracle: `seal` produces the ciphertext and tag of the next period.
pub struct ReferenceSender {
    config: SchemeConfig,
    fse: Chain,
    mac_prf: Chain,
    mac_uh: Chain,
    ctr: u128,
    period: u64,
}

impl ReferenceSender {
    pub fn new(config: SchemeConfig, secret: &InitialSecret, ctr: u128) -> Self {
        let chain = |seed: [u8; 16], label: u8| match config.profile().policy {
            KeyUpdatePolicy::Fprg => Chain::Fprg(seed),
            KeyUpdatePolicy::Sha256 => Chain::Hash(seed.to_vec(), label),
        };
        Self {
            config,
            fse: chain(secret.fse_seed, 1),
            mac_prf: chain(secret.prf_seed, 2),
            mac_uh: chain(secret.uh_seed, 3),
            ctr,
            period: 0,
        }
    }

    pub fn seal(&mut self, message: &[u8]) -> (Vec<u8>, [u8; 16]) {
        assert_eq!(message.len(), self.config.msg_len);
        self.period += 1;
        let p = self.config.profile();
        if p.integrated_gcm {
            let key = self.fse.next(16);
            let mut nonce = [0u8; 12];
            nonce[4..].copy_from_slice(&self.period.to_be_bytes());
            let mut buf = message.to_vec();
            let tag = aes_gcm::Aes128Gcm::new_from_slice(&key)
                .unwrap()
                .encrypt_in_place_detached(GenericArray::from_slice(&nonce), b"", &mut buf)
                .unwrap();
            return (buf, tag.into());
        }

        let mut ct = message.to_vec();
        match p.prf.algorithm {
            PrfAlgorithm::Aes128 => {
                let key = self.fse.next(16);
                for chunk in ct.chunks_mut(16) {
                    self.ctr = self.ctr.wrapping_add(1);
                    for (c, k) in chunk.iter_mut().zip(aes(&key, self.ctr)) {
                        *c ^= k;
                    }
                }
            }
            PrfAlgorithm::ChaCha20Block => {
                let key = self.fse.next(32);
                for chunk in ct.chunks_mut(64) {
                    self.ctr = self.ctr.wrapping_add(1);
                    let x = self.ctr.to_be_bytes();
                    let mut core = chacha20::ChaChaCore::<chacha20::cipher::consts::U10>::new(
                        GenericArray::from_slice(&key),
                        GenericArray::from_slice(&x[..12]),
                    );
                    core.set_block_pos(u32::from_be_bytes(x[12..].try_into().unwrap()));
                    let mut block = GenericArray::default();
                    core.write_keystream_block(&mut block);
                    for (c, k) in chunk.iter_mut().zip(block) {
                        *c ^= k;
                    }
                }
            }
        }

        let k_prf = self.mac_prf.next(16);
        let k_uh = self.mac_uh.next(16);
        let mask = aes(&k_prf, self.period as u128);
        let tag = match p.uh.algorithm {
            UhAlgorithm::Ghash => {
                let mut g = ghash::GHash::new(GenericArray::from_slice(&k_uh));
                g.update_padded(&ct);
                let h: [u8; 16] = g.finalize().into();
                std::array::from_fn(|i| mask[i] ^ h[i])
            }
            UhAlgorithm::Poly1305 => {
                // The crate clamps r itself; s = 0 leaves h mod 2^128.
                let mut key = [0u8; 32];
                key[..16].copy_from_slice(&k_uh);
                let h: [u8; 16] = poly1305::Poly1305::new(GenericArray::from_slice(&key))
                    .compute_unpadded(&ct)
                    .into();
                u128::from_le_bytes(mask).wrapping_add(u128::from_le_bytes(h)).to_le_bytes()
            }
        };
        (ct, tag)
    }
}

/// Folds tags with the given aggregation mode.
pub fn fold(mode: AggMode, tags: &[[u8; 16]]) -> Vec<u8> {
    match mode {
        AggMode::Hash => {
            let mut acc = vec![0u8; 32];
            for t in tags {
                let mut h = Sha256::new();
                h.update(&acc);
                h.update(t);
                acc = h.finalize().to_vec();
            }
            acc
        }
        AggMode::Xor => tags
            .iter()
            .fold([0u8; 16], |a, t| std::array::from_fn(|i| a[i] ^ t[i]))
            .to_vec(),
        AggMode::AddQ => tags
            .iter()
            .fold(0u128, |a, t| a.wrapping_add(u128::from_le_bytes(*t)))
            .to_le_bytes()
            .to_vec(),
    }
}
