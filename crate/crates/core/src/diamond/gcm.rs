//! Integrated AES-128-GCM baseline with a SHA-256 key chain.
//!
//! Only the key evolution is precomputable: encryption, hashing and tag
//! masking all depend on the per-period key and run together online.

use aes_gcm::aead::AeadInPlace;
use aes_gcm::{Aes128Gcm, KeyInit, Nonce};
use ghash::universal_hash::UniversalHash;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::primitives::chain::LABEL_FSE;
use crate::primitives::{aes128_encrypt_blocks, KeyChain, KeyUpdatePolicy, SecretBytes};
use crate::{Error, Result};

/// Period `i` uses the 96-bit nonce `i` (big-endian).
pub fn period_nonce(period: u64) -> [u8; 12] {
    let mut n = [0u8; 12];
    n[4..].copy_from_slice(&period.to_be_bytes());
    n
}

/// Standard GCM tag over `aad` and `ciphertext`, computed from the block
/// cipher and GHASH directly.
pub fn gcm_tag(key: &[u8; 16], nonce: &[u8; 12], aad: &[u8], ciphertext: &[u8]) -> [u8; 16] {
    let mut j0 = [0u8; 16];
    j0[..12].copy_from_slice(nonce);
    j0[15] = 1;
    let mut blocks = [[0u8; 16], j0];
    aes128_encrypt_blocks(key, &mut blocks);
    let [h, ek_j0] = blocks;

    let mut len_block = [0u8; 16];
    len_block[..8].copy_from_slice(&((aad.len() as u64) * 8).to_be_bytes());
    len_block[8..].copy_from_slice(&((ciphertext.len() as u64) * 8).to_be_bytes());

    let mut gh = ghash::GHash::new(&h.into());
    gh.update_padded(aad);
    gh.update_padded(ciphertext);
    gh.update_padded(&len_block);
    let s: [u8; 16] = gh.finalize().into();
    std::array::from_fn(|i| s[i] ^ ek_j0[i])
}

pub(crate) struct GcmEngine {
    chain: KeyChain,
    key: Option<SecretBytes>,
    offline_period: u64,
    online_period: u64,
    max_periods: u64,
    msg_len: usize,
}

impl GcmEngine {
    pub(crate) fn new(seed: &[u8; 16], max_periods: u64, msg_len: usize) -> Result<Self> {
        let mut chain = KeyUpdatePolicy::Sha256.chain(seed, LABEL_FSE, max_periods, 16)?;
        let key = chain.update()?;
        Ok(Self { chain, key: Some(key), offline_period: 1, online_period: 1, max_periods, msg_len })
    }

    pub(crate) fn period(&self) -> u64 {
        self.online_period
    }

    pub(crate) fn offline_period(&self) -> u64 {
        self.offline_period
    }

    fn exhausted(&self) -> Error {
        Error::Exhausted { max_periods: self.max_periods }
    }

    fn advance(&mut self) -> Result<()> {
        if self.offline_period < self.max_periods {
            self.key = Some(self.chain.update()?);
        } else {
            self.key = None;
        }
        self.offline_period += 1;
        Ok(())
    }

    pub(crate) fn update(&mut self) -> Result<()> {
        if self.key.is_none() || self.offline_period >= self.max_periods {
            return Err(self.exhausted());
        }
        self.advance()?;
        self.online_period = self.offline_period;
        Ok(())
    }

    pub(crate) fn offline(&mut self) -> Result<GcmPre> {
        let key = self.key.as_ref().ok_or_else(|| self.exhausted())?.to_array16();
        let pre = GcmPre { period: self.offline_period, key, consumed: false };
        self.advance()?;
        Ok(pre)
    }

    pub(crate) fn check_online(&self, pre: &GcmPre) -> Result<()> {
        if pre.consumed {
            return Err(Error::Reuse { period: pre.period });
        }
        if pre.period != self.online_period {
            return Err(Error::Desync { expected: self.online_period, got: pre.period });
        }
        Ok(())
    }

    pub(crate) fn online(&mut self, pre: &mut GcmPre, message: &[u8]) -> Result<(Vec<u8>, [u8; 16])> {
        self.check_online(pre)?;
        if message.len() != self.msg_len {
            return Err(Error::InvalidArgument(format!(
                "expected {} bytes, got {}",
                self.msg_len,
                message.len()
            )));
        }
        let cipher = Aes128Gcm::new(&pre.key.into());
        let mut buf = message.to_vec();
        let tag = cipher
            .encrypt_in_place_detached(Nonce::from_slice(&period_nonce(pre.period)), b"", &mut buf)
            .map_err(|_| Error::InvalidArgument("GCM encryption failed".into()))?;
        pre.burn();
        self.online_period += 1;
        Ok((buf, tag.into()))
    }

    /// Tag the sender would have produced for `ciphertext` in this period.
    pub(crate) fn expected_tag(pre: &GcmPre, ciphertext: &[u8]) -> [u8; 16] {
        gcm_tag(&pre.key, &period_nonce(pre.period), b"", ciphertext)
    }

    /// Decrypts after the aggregate has been accepted.
    pub(crate) fn open(pre: &mut GcmPre, ciphertext: &[u8], tag: &[u8; 16]) -> Result<Vec<u8>> {
        let cipher = Aes128Gcm::new(&pre.key.into());
        let mut buf = ciphertext.to_vec();
        let res = cipher.decrypt_in_place_detached(
            Nonce::from_slice(&period_nonce(pre.period)),
            b"",
            &mut buf,
            tag.into(),
        );
        pre.burn();
        res.map_err(|_| Error::AuthenticationFailed)?;
        Ok(buf)
    }

    pub(crate) fn advance_online(&mut self, count: u64) {
        self.online_period += count;
    }

    /// GCM under `K_1` with nonce 0 (never a message nonce) over `body` as
    /// associated data.
    pub(crate) fn confirmation_tag(&self, body: &[u8]) -> Result<[u8; 16]> {
        if self.offline_period != 1 || self.online_period != 1 {
            return Err(Error::Desync { expected: 1, got: self.online_period.max(self.offline_period) });
        }
        let key = self.key.as_ref().ok_or_else(|| self.exhausted())?;
        let cipher = Aes128Gcm::new_from_slice(key.as_bytes()).expect("16-byte key");
        let tag = cipher
            .encrypt_in_place_detached(Nonce::from_slice(&[0u8; 12]), body, &mut [])
            .map_err(|_| Error::InvalidArgument("GCM encryption failed".into()))?;
        Ok(tag.into())
    }

    pub(crate) fn skip_to(&mut self, period: u64) -> Result<()> {
        while self.offline_period < period && self.key.is_some() {
            self.advance()?;
        }
        self.online_period = self.online_period.max(period.min(self.max_periods + 1));
        Ok(())
    }

    pub(crate) fn retained(&self) -> Vec<Vec<u8>> {
        let mut out = self.chain.retained();
        if let Some(k) = &self.key {
            out.push(k.as_bytes().to_vec());
        }
        out
    }
}

/// Precomputed period key for the GCM baseline.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct GcmPre {
    period: u64,
    key: [u8; 16],
    consumed: bool,
}

impl GcmPre {
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn storage_len(&self) -> usize {
        self.key.len()
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.key);
    }

    fn burn(&mut self) {
        self.key.zeroize();
        self.consumed = true;
    }
}

impl std::fmt::Debug for GcmPre {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GcmPre")
            .field("period", &self.period)
            .field("consumed", &self.consumed)
            .finish()
    }
}
