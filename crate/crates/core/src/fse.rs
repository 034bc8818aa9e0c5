//! CTR-based forward-secure symmetric encryption with offline keystream
//! precomputation.
//!
//! Period `i` encrypts one `m`-byte message under `K_i` with the counter
//! blocks `ctr+1 ..= ctr+⌈m/ℓ⌉`. The offline phase produces the keystream and
//! immediately evolves the key; the online phase is an XOR.

use rand_core::{CryptoRng, RngCore};
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::primitives::chain::LABEL_FSE;
use crate::primitives::{prf_blocks, xor_in_place, KeyChain, KeyUpdatePolicy, PrfSpec, SecretBytes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FseParams {
    pub prf: PrfSpec,
    pub policy: KeyUpdatePolicy,
    /// Maximum number of periods `n`.
    pub max_periods: u64,
    /// Fixed message length `m` in bytes.
    pub msg_len: usize,
}

impl FseParams {
    /// `⌈m/ℓ⌉`: PRF blocks (and counter increments) per period.
    pub fn blocks_per_period(&self) -> usize {
        self.msg_len.div_ceil(self.prf.block_len())
    }

    pub fn keystream_len(&self) -> usize {
        self.blocks_per_period() * self.prf.block_len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_periods == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.msg_len == 0 {
            return Err(Error::Config("message length must be at least 1".into()));
        }
        // The counter must not wrap into reuse within one key lifetime.
        if (self.max_periods as u128)
            .checked_mul(self.blocks_per_period() as u128)
            .is_none()
        {
            return Err(Error::Config("n·⌈m/ℓ⌉ exceeds the counter space".into()));
        }
        Ok(())
    }
}

/// Evolving encryption key state.
pub struct FseKeyState {
    params: FseParams,
    /// `K_i`; `None` once the last period has been precomputed.
    key: Option<SecretBytes>,
    chain: KeyChain,
    period: u64,
    ctr: u128,
}

impl FseKeyState {
    /// Draws `S_1` (16 bytes) and then `ctr` (16 bytes, big-endian) from `rng`.
    pub fn generate<R: RngCore + CryptoRng>(params: FseParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let mut seed = [0u8; 16];
        rng.fill_bytes(&mut seed);
        let mut ctr = [0u8; 16];
        rng.fill_bytes(&mut ctr);
        let state = Self::from_seed(params, &seed, u128::from_be_bytes(ctr));
        seed.zeroize();
        state
    }

    /// Builds the period-1 state from a shared seed and initial counter.
    pub fn from_seed(params: FseParams, seed: &[u8; 16], ctr: u128) -> Result<Self> {
        params.validate()?;
        let mut chain = params
            .policy
            .chain(seed, LABEL_FSE, params.max_periods, params.prf.key_len())?;
        let key = chain.update()?;
        Ok(Self { params, key: Some(key), chain, period: 1, ctr })
    }

    pub fn params(&self) -> &FseParams {
        &self.params
    }

    /// Period of the key currently held.
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn ctr(&self) -> u128 {
        self.ctr
    }

    pub fn is_exhausted(&self) -> bool {
        self.key.is_none()
    }

    /// Evolves `K_i → K_{i+1}` and advances the counter by `⌈m/ℓ⌉`.
    pub fn update(&mut self) -> Result<()> {
        if self.is_exhausted() || self.period >= self.params.max_periods {
            return Err(Error::Exhausted { max_periods: self.params.max_periods });
        }
        // Assigning drops (and wipes) the previous key.
        self.key = Some(self.chain.update()?);
        self.ctr = self.ctr.wrapping_add(self.params.blocks_per_period() as u128);
        self.period += 1;
        Ok(())
    }

    /// Computes the period keystream, then evolves the key. After the final
    /// period the key is wiped and the state is exhausted.
    pub fn enc_offline(&mut self) -> Result<PreBlock> {
        let key = self
            .key
            .as_ref()
            .ok_or(Error::Exhausted { max_periods: self.params.max_periods })?;
        let mut keystream = Vec::with_capacity(self.params.keystream_len());
        prf_blocks(
            self.params.prf,
            key.as_bytes(),
            self.ctr.wrapping_add(1),
            self.params.blocks_per_period(),
            &mut keystream,
        );
        let pre = PreBlock {
            period: self.period,
            keystream,
            msg_len: self.params.msg_len,
            consumed: false,
        };
        if self.period < self.params.max_periods {
            self.update()?;
        } else {
            self.key = None;
        }
        Ok(pre)
    }

    /// Evolves the key without producing keystream until the held key is
    /// for `period`, wiping it entirely when `period > n`.
    pub(crate) fn skip_to(&mut self, period: u64) -> Result<()> {
        while self.period < period && !self.is_exhausted() {
            if self.period < self.params.max_periods {
                self.update()?;
            } else {
                self.key = None;
            }
        }
        Ok(())
    }

    /// Decryption keystream; identical to [`enc_offline`](Self::enc_offline).
    pub fn dec_offline(&mut self) -> Result<PreBlock> {
        self.enc_offline()
    }

    /// Every secret byte string the state still holds.
    pub fn retained_secrets(&self) -> Vec<Vec<u8>> {
        let mut out = self.chain.retained();
        if let Some(k) = &self.key {
            out.push(k.as_bytes().to_vec());
        }
        out
    }
}

impl std::fmt::Debug for FseKeyState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FseKeyState")
            .field("params", &self.params)
            .field("period", &self.period)
            .field("ctr", &self.ctr)
            .field("exhausted", &self.is_exhausted())
            .finish_non_exhaustive()
    }
}

/// Precomputed keystream `C̃_i` for one period. Usable once.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct PreBlock {
    period: u64,
    keystream: Vec<u8>,
    msg_len: usize,
    consumed: bool,
}

impl PreBlock {
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn keystream(&self) -> &[u8] {
        &self.keystream
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    /// Bytes of offline storage this precomputation occupies.
    pub fn storage_len(&self) -> usize {
        self.keystream.len()
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.keystream);
    }

    fn apply(&mut self, input: &[u8]) -> Result<Vec<u8>> {
        if self.consumed {
            return Err(Error::Reuse { period: self.period });
        }
        if input.len() != self.msg_len {
            return Err(Error::InvalidArgument(format!(
                "expected {} bytes, got {}",
                self.msg_len,
                input.len()
            )));
        }
        let mut out = input.to_vec();
        xor_in_place(&mut out, &self.keystream);
        self.consumed = true;
        self.keystream.zeroize();
        Ok(out)
    }

    /// `C_i = M_i ⊕ C̃_i[..m]`.
    pub fn enc_online(&mut self, message: &[u8]) -> Result<Vec<u8>> {
        self.apply(message)
    }

    pub fn dec_online(&mut self, ciphertext: &[u8]) -> Result<Vec<u8>> {
        self.apply(ciphertext)
    }
}

impl std::fmt::Debug for PreBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PreBlock")
            .field("period", &self.period)
            .field("len", &self.keystream.len())
            .field("consumed", &self.consumed)
            .finish()
    }
}
