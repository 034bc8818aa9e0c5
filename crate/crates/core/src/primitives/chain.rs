//! Forward-secure key chains.
//!
//! [`FprgState`] is the PRF-based generator: `(S_{i+1}, K_i) = (PRF₂(S_i, 0), PRF₂(S_i, 1))`.
//! [`HashChain`] is the hash-based evolution `K_{i+1} = SHA-256(K_i ‖ label)`.
//! Both refuse to produce more than `max_periods` keys and wipe superseded
//! material as they go.

use zeroize::{Zeroize, ZeroizeOnDrop};

use super::{hash_concat, prf2_many, SecretBytes};
use crate::{Error, Result};

/// Chain label for the encryption key chain.
pub const LABEL_FSE: u8 = 0x01;
/// Chain label for the MAC mask (PRF) key chain.
pub const LABEL_MAC_PRF: u8 = 0x02;
/// Chain label for the universal-hash key chain.
pub const LABEL_MAC_UH: u8 = 0x03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyUpdatePolicy {
    /// FPRG over AES-128.
    Fprg,
    /// SHA-256 hash chain.
    Sha256,
}

impl KeyUpdatePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            KeyUpdatePolicy::Fprg => "FPRG(AES-128)",
            KeyUpdatePolicy::Sha256 => "HASH(SHA-256)",
        }
    }

    pub fn chain(
        self,
        seed: &[u8; 16],
        label: u8,
        max_periods: u64,
        key_len: usize,
    ) -> Result<KeyChain> {
        Ok(match self {
            KeyUpdatePolicy::Fprg => KeyChain::Fprg(FprgState::new(*seed, max_periods, key_len)?),
            KeyUpdatePolicy::Sha256 => {
                KeyChain::Hash(HashChain::new(seed, label, max_periods, key_len)?)
            }
        })
    }
}

fn check_key_len(key_len: usize) -> Result<()> {
    match key_len {
        16 | 32 => Ok(()),
        n => Err(Error::InvalidArgument(format!("chain key length must be 16 or 32, got {n}"))),
    }
}

/// FPRG state: the seed for the next update and the index of the key it will
/// produce.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct FprgState {
    seed: [u8; 16],
    period: u64,
    max_periods: u64,
    key_len: usize,
}

impl FprgState {
    /// `key_len` of 32 emits `PRF₂(S,1) ‖ PRF₂(S,2)`.
    pub fn new(seed: [u8; 16], max_periods: u64, key_len: usize) -> Result<Self> {
        check_key_len(key_len)?;
        Ok(Self { seed, period: 1, max_periods, key_len })
    }

    /// Index of the key the next update yields.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn max_periods(&self) -> u64 {
        self.max_periods
    }

    pub fn is_exhausted(&self) -> bool {
        self.period > self.max_periods
    }

    /// Advances to the next seed and returns the period key.
    pub fn update(&mut self) -> Result<SecretBytes> {
        if self.is_exhausted() {
            return Err(Error::Exhausted { max_periods: self.max_periods });
        }
        let mut key = Vec::with_capacity(self.key_len);
        if self.key_len == 16 {
            let [s, k] = prf2_many(&self.seed, [0, 1]);
            self.seed = s;
            key.extend_from_slice(&k);
        } else {
            let [s, k1, k2] = prf2_many(&self.seed, [0, 1, 2]);
            self.seed = s;
            key.extend_from_slice(&k1);
            key.extend_from_slice(&k2);
        }
        self.period += 1;
        if self.is_exhausted() {
            self.seed.zeroize();
        }
        Ok(SecretBytes::new(key))
    }

    pub(crate) fn retained(&self) -> Vec<Vec<u8>> {
        vec![self.seed.to_vec()]
    }
}

impl std::fmt::Debug for FprgState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FprgState")
            .field("period", &self.period)
            .field("max_periods", &self.max_periods)
            .finish_non_exhaustive()
    }
}

/// Hash-chain state. Holds the value the next key is hashed from: the seed
/// before the first update, afterwards the last emitted key.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct HashChain {
    current: Vec<u8>,
    label: u8,
    period: u64,
    max_periods: u64,
    key_len: usize,
}

impl HashChain {
    pub fn new(seed: &[u8; 16], label: u8, max_periods: u64, key_len: usize) -> Result<Self> {
        check_key_len(key_len)?;
        Ok(Self { current: seed.to_vec(), label, period: 1, max_periods, key_len })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn is_exhausted(&self) -> bool {
        self.period > self.max_periods
    }

    pub fn update(&mut self) -> Result<SecretBytes> {
        if self.is_exhausted() {
            return Err(Error::Exhausted { max_periods: self.max_periods });
        }
        let mut digest = hash_concat(&[&self.current, &[self.label]]);
        let key = digest[..self.key_len].to_vec();
        digest.zeroize();
        self.current.zeroize();
        self.period += 1;
        if !self.is_exhausted() {
            self.current = key.clone();
        }
        Ok(SecretBytes::new(key))
    }

    pub(crate) fn retained(&self) -> Vec<Vec<u8>> {
        vec![self.current.clone()]
    }
}

impl std::fmt::Debug for HashChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HashChain")
            .field("label", &self.label)
            .field("period", &self.period)
            .field("max_periods", &self.max_periods)
            .finish_non_exhaustive()
    }
}

/// A key chain under either update policy.
#[derive(Debug)]
pub enum KeyChain {
    Fprg(FprgState),
    Hash(HashChain),
}

impl KeyChain {
    pub fn update(&mut self) -> Result<SecretBytes> {
        match self {
            KeyChain::Fprg(s) => s.update(),
            KeyChain::Hash(s) => s.update(),
        }
    }

    pub fn period(&self) -> u64 {
        match self {
            KeyChain::Fprg(s) => s.period(),
            KeyChain::Hash(s) => s.period(),
        }
    }

    pub fn is_exhausted(&self) -> bool {
        match self {
            KeyChain::Fprg(s) => s.is_exhausted(),
            KeyChain::Hash(s) => s.is_exhausted(),
        }
    }

    pub(crate) fn retained(&self) -> Vec<Vec<u8>> {
        match self {
            KeyChain::Fprg(s) => s.retained(),
            KeyChain::Hash(s) => s.retained(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
    use sha2::{Digest, Sha256};

    fn aes_oracle(key: &[u8; 16], x: u128) -> [u8; 16] {
        let c = aes::Aes128Enc::new(GenericArray::from_slice(key));
        let mut b = GenericArray::clone_from_slice(&x.to_be_bytes());
        c.encrypt_block(&mut b);
        b.into()
    }

    #[test]
    fn fprg_step_is_two_prf_calls() {
        let seed: [u8; 16] = hex::decode("000102030405060708090a0b0c0d0e0f").unwrap().try_into().unwrap();
        let mut st = FprgState::new(seed, 4, 16).unwrap();
        let k1 = st.update().unwrap();
        assert_eq!(k1.as_bytes(), aes_oracle(&seed, 1));
        assert_eq!(hex::encode(k1.as_bytes()), "7346139595c0b41e497bbde365f42d0a");
        assert_eq!(st.retained()[0], aes_oracle(&seed, 0));
        assert_eq!(hex::encode(&st.retained()[0]), "c6a13b37878f5b826f4f8162a1c8d879");
        assert_eq!(st.period(), 2);
    }

    #[test]
    fn fprg_wide_key_concatenates_blocks() {
        let seed = [0x42u8; 16];
        let mut st = FprgState::new(seed, 1, 32).unwrap();
        let k = st.update().unwrap();
        assert_eq!(&k.as_bytes()[..16], aes_oracle(&seed, 1));
        assert_eq!(&k.as_bytes()[16..], aes_oracle(&seed, 2));
    }

    #[test]
    fn fprg_exhausts_after_n() {
        let mut st = FprgState::new([1u8; 16], 3, 16).unwrap();
        for _ in 0..3 {
            st.update().unwrap();
        }
        assert_eq!(st.period(), 4);
        assert!(matches!(st.update(), Err(Error::Exhausted { max_periods: 3 })));
        assert_eq!(st.retained()[0], [0u8; 16]);
    }

    #[test]
    fn chains_are_reproducible() {
        for policy in [KeyUpdatePolicy::Fprg, KeyUpdatePolicy::Sha256] {
            let mut a = policy.chain(&[9u8; 16], LABEL_FSE, 50, 16).unwrap();
            let mut b = policy.chain(&[9u8; 16], LABEL_FSE, 50, 16).unwrap();
            for _ in 0..50 {
                assert_eq!(a.update().unwrap(), b.update().unwrap());
            }
        }
    }

    #[test]
    fn hash_chain_matches_definition() {
        let seed = [3u8; 16];
        let mut chain = HashChain::new(&seed, LABEL_MAC_UH, 10, 16).unwrap();
        let mut prev = seed.to_vec();
        for _ in 0..10 {
            let mut h = Sha256::new();
            h.update(&prev);
            h.update([LABEL_MAC_UH]);
            let expect = h.finalize()[..16].to_vec();
            assert_eq!(chain.update().unwrap().as_bytes(), &expect[..]);
            prev = expect;
        }
        assert!(chain.update().is_err());
    }

    #[test]
    fn policies_diverge() {
        let mut a = KeyUpdatePolicy::Fprg.chain(&[5u8; 16], LABEL_FSE, 2, 16).unwrap();
        let mut b = KeyUpdatePolicy::Sha256.chain(&[5u8; 16], LABEL_FSE, 2, 16).unwrap();
        assert_ne!(a.update().unwrap(), b.update().unwrap());
    }
}
