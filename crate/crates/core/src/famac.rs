//! Universal forward-secure sequential-aggregate MAC.
//!
//! Per period `i` the tag is `σ_i = PRF₂(K_i^PRF, i) ∘ UH(K_i^UH, M_i)` where
//! `∘` is the universal hash's native group operation. Tags of an epoch of
//! `b` consecutive periods fold into one [`AggregateTag`].
//!
//! Offline work covers everything that does not depend on the message: the
//! PRF mask and the period's hash key (both chains evolve offline). The
//! online phase is one universal-hash evaluation and one group operation.

use std::fmt;
use std::str::FromStr;

use subtle::ConstantTimeEq;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::primitives::chain::{LABEL_MAC_PRF, LABEL_MAC_UH};
use crate::primitives::{
    hash_concat, prf2, uh_eval, KeyChain, KeyUpdatePolicy, SecretBytes, TagGroup, UhSpec,
};
use crate::{Error, Result};

/// Tag aggregation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggMode {
    /// Sequential hash chaining, `σ ← SHA-256(σ ‖ σ_next)`, seeded with 32 zero bytes.
    Hash,
    Xor,
    /// Addition modulo q = 2^128 on little-endian integers.
    AddQ,
}

impl AggMode {
    pub const ALL: [AggMode; 3] = [AggMode::Hash, AggMode::Xor, AggMode::AddQ];

    pub fn code(self) -> u8 {
        match self {
            AggMode::Hash => 0x01,
            AggMode::Xor => 0x02,
            AggMode::AddQ => 0x03,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0x01 => Ok(AggMode::Hash),
            0x02 => Ok(AggMode::Xor),
            0x03 => Ok(AggMode::AddQ),
            c => Err(Error::Structural(format!("unknown aggregation mode {c:#04x}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AggMode::Hash => "hash",
            AggMode::Xor => "xor",
            AggMode::AddQ => "addq",
        }
    }

    /// Length of an aggregate value in bytes.
    pub fn value_len(self) -> usize {
        match self {
            AggMode::Hash => 32,
            AggMode::Xor | AggMode::AddQ => 16,
        }
    }

    /// The group the aggregate lives in, for the homomorphic modes.
    pub fn group(self) -> Option<TagGroup> {
        match self {
            AggMode::Hash => None,
            AggMode::Xor => Some(TagGroup::Xor),
            AggMode::AddQ => Some(TagGroup::AddMod2_128),
        }
    }

    fn seed(self, tag: &[u8; 16]) -> Vec<u8> {
        match self {
            AggMode::Hash => hash_concat(&[&[0u8; 32], tag]).to_vec(),
            AggMode::Xor | AggMode::AddQ => tag.to_vec(),
        }
    }

    fn fold(self, acc: &mut Vec<u8>, tag: &[u8; 16]) {
        match self {
            AggMode::Hash => *acc = hash_concat(&[acc, tag]).to_vec(),
            AggMode::Xor | AggMode::AddQ => {
                let cur: [u8; 16] = acc[..].try_into().expect("16-byte aggregate");
                let group = self.group().unwrap();
                acc.copy_from_slice(&group.op(&cur, tag));
            }
        }
    }

    /// Folds a sequence of tags from scratch.
    pub fn fold_all<'a>(self, tags: impl IntoIterator<Item = &'a [u8; 16]>) -> Option<Vec<u8>> {
        let mut it = tags.into_iter();
        let mut acc = self.seed(it.next()?);
        for t in it {
            self.fold(&mut acc, t);
        }
        Some(acc)
    }
}

impl fmt::Display for AggMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hash" | "h" => Ok(AggMode::Hash),
            "xor" => Ok(AggMode::Xor),
            "addq" | "add_q" | "add" => Ok(AggMode::AddQ),
            other => Err(Error::InvalidArgument(format!("unknown aggregation mode '{other}'"))),
        }
    }
}

/// A single-period tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag {
    pub period: u64,
    pub value: [u8; 16],
}

/// Constant-size authenticator over periods `start..=end` of one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateTag {
    pub start: u64,
    pub end: u64,
    pub mode: AggMode,
    pub value: Vec<u8>,
}

impl AggregateTag {
    pub fn count(&self) -> u64 {
        self.end - self.start + 1
    }

    /// Checks epoch alignment (`start mod b = 1`), span and value length.
    pub fn check_shape(&self, epoch_size: u64) -> Result<()> {
        if epoch_size == 0 {
            return Err(Error::Config("epoch size must be at least 1".into()));
        }
        if self.start == 0 || (self.start - 1) % epoch_size != 0 {
            return Err(Error::EpochBoundary(format!(
                "epoch start {} is not aligned to b = {epoch_size}",
                self.start
            )));
        }
        if self.end < self.start || self.end - self.start >= epoch_size {
            return Err(Error::EpochBoundary(format!(
                "span {}..={} does not fit in one epoch of {epoch_size}",
                self.start, self.end
            )));
        }
        if self.value.len() != self.mode.value_len() {
            return Err(Error::Structural(format!(
                "{} aggregate must be {} bytes, got {}",
                self.mode,
                self.mode.value_len(),
                self.value.len()
            )));
        }
        Ok(())
    }
}

/// Folds `tag` into the epoch accumulator (`None` starts a new epoch).
pub fn aggregate(
    acc: Option<AggregateTag>,
    tag: &Tag,
    mode: AggMode,
    epoch_size: u64,
) -> Result<AggregateTag> {
    match acc {
        None => {
            let agg = AggregateTag { start: tag.period, end: tag.period, mode, value: mode.seed(&tag.value) };
            agg.check_shape(epoch_size)?;
            Ok(agg)
        }
        Some(mut agg) => {
            if agg.mode != mode {
                return Err(Error::Structural(format!(
                    "accumulator mode {} does not match {mode}",
                    agg.mode
                )));
            }
            if tag.period != agg.end + 1 {
                return Err(Error::Desync { expected: agg.end + 1, got: tag.period });
            }
            if tag.period - agg.start >= epoch_size {
                return Err(Error::EpochBoundary(format!(
                    "period {} would overflow the epoch starting at {} (b = {epoch_size})",
                    tag.period, agg.start
                )));
            }
            mode.fold(&mut agg.value, &tag.value);
            agg.end = tag.period;
            Ok(agg)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamacParams {
    pub uh: UhSpec,
    pub policy: KeyUpdatePolicy,
    pub max_periods: u64,
    /// Epoch size `b`.
    pub epoch_size: u64,
    pub agg_mode: AggMode,
}

impl FamacParams {
    pub fn validate(&self) -> Result<()> {
        if self.epoch_size == 0 {
            return Err(Error::Config("epoch size b must be at least 1".into()));
        }
        if self.max_periods < self.epoch_size {
            return Err(Error::Config(format!(
                "n = {} is smaller than b = {}",
                self.max_periods, self.epoch_size
            )));
        }
        Ok(())
    }

    /// Whether aggregate verification may fold masks and hashes separately.
    pub fn homomorphic_split(&self) -> bool {
        self.agg_mode.group() == Some(self.uh.tag_group())
    }
}

/// Which sub-chain an update advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSelect {
    PrfOnly,
    UhOnly,
    Both,
}

/// A key and its chain. `period` is the period of `key`.
struct SubChain {
    key: Option<SecretBytes>,
    chain: KeyChain,
    period: u64,
}

impl SubChain {
    fn new(policy: KeyUpdatePolicy, seed: &[u8; 16], label: u8, n: u64) -> Result<Self> {
        let mut chain = policy.chain(seed, label, n, 16)?;
        let key = chain.update()?;
        Ok(Self { key: Some(key), chain, period: 1 })
    }

    fn key(&self, n: u64) -> Result<[u8; 16]> {
        self.key
            .as_ref()
            .map(SecretBytes::to_array16)
            .ok_or(Error::Exhausted { max_periods: n })
    }

    fn advance(&mut self, n: u64) -> Result<()> {
        if self.key.is_none() || self.period >= n {
            return Err(Error::Exhausted { max_periods: n });
        }
        self.key = Some(self.chain.update()?);
        self.period += 1;
        Ok(())
    }

    /// Advances, or wipes the key if this was the last period.
    fn advance_or_retire(&mut self, n: u64) -> Result<()> {
        if self.period < n {
            self.advance(n)
        } else {
            self.key = None;
            self.period = n + 1;
            Ok(())
        }
    }

    fn retained(&self) -> Vec<Vec<u8>> {
        let mut out = self.chain.retained();
        if let Some(k) = &self.key {
            out.push(k.as_bytes().to_vec());
        }
        out
    }
}

/// Evolving MAC key state: the mask-PRF chain, the hash-key chain, and the
/// online cursor (next period expected by the online phase).
pub struct FamacKeyState {
    params: FamacParams,
    prf: SubChain,
    uh: SubChain,
    online_period: u64,
}

impl FamacKeyState {
    pub fn from_seeds(params: FamacParams, prf_seed: &[u8; 16], uh_seed: &[u8; 16]) -> Result<Self> {
        params.validate()?;
        let n = params.max_periods;
        Ok(Self {
            params,
            prf: SubChain::new(params.policy, prf_seed, LABEL_MAC_PRF, n)?,
            uh: SubChain::new(params.policy, uh_seed, LABEL_MAC_UH, n)?,
            online_period: 1,
        })
    }

    /// Draws the PRF-chain seed, then the UH-chain seed.
    pub fn generate<R: rand_core::RngCore + rand_core::CryptoRng>(
        params: FamacParams,
        rng: &mut R,
    ) -> Result<Self> {
        let mut prf_seed = [0u8; 16];
        let mut uh_seed = [0u8; 16];
        rng.fill_bytes(&mut prf_seed);
        rng.fill_bytes(&mut uh_seed);
        let st = Self::from_seeds(params, &prf_seed, &uh_seed);
        prf_seed.zeroize();
        uh_seed.zeroize();
        st
    }

    pub fn params(&self) -> &FamacParams {
        &self.params
    }

    /// Next period the online phase will consume.
    pub fn period(&self) -> u64 {
        self.online_period
    }

    /// Next period the offline phase will precompute.
    pub fn offline_period(&self) -> u64 {
        self.prf.period
    }

    pub fn prf_period(&self) -> u64 {
        self.prf.period
    }

    pub fn uh_period(&self) -> u64 {
        self.uh.period
    }

    pub fn is_exhausted(&self) -> bool {
        self.prf.key.is_none()
    }

    pub fn update(&mut self, which: ChainSelect) -> Result<()> {
        let n = self.params.max_periods;
        match which {
            ChainSelect::PrfOnly => self.prf.advance(n)?,
            ChainSelect::UhOnly => self.uh.advance(n)?,
            ChainSelect::Both => {
                if self.prf.period != self.uh.period {
                    return Err(Error::Desync { expected: self.prf.period, got: self.uh.period });
                }
                if self.prf.period >= n {
                    return Err(Error::Exhausted { max_periods: n });
                }
                self.prf.advance(n)?;
                self.uh.advance(n)?;
            }
        }
        self.online_period = self.online_period.max(self.prf.period.min(self.uh.period));
        Ok(())
    }

    /// Key-confirmation tag over `body` under the period-1 keys, masked with
    /// `PRF₂(K_1^PRF, 0)` (index 0 never masks a message).
    pub fn confirmation_tag(&self, body: &[u8]) -> Result<[u8; 16]> {
        if self.prf.period != 1 || self.uh.period != 1 || self.online_period != 1 {
            return Err(Error::Desync { expected: 1, got: self.online_period.max(self.prf.period) });
        }
        let n = self.params.max_periods;
        let mask = prf2(&self.prf.key(n)?, 0);
        let hk = self.params.uh.derive_key(&self.uh.key(n)?);
        Ok(self.params.uh.combine(&mask, &uh_eval(self.params.uh, &hk, body)))
    }

    /// `σ̃_i = PRF₂(K_i^PRF, i)` plus the period hash key; evolves both chains.
    pub fn sign_offline(&mut self) -> Result<PreTag> {
        let n = self.params.max_periods;
        if self.prf.period != self.uh.period {
            return Err(Error::Desync { expected: self.prf.period, got: self.uh.period });
        }
        let period = self.prf.period;
        let mut prf_key = self.prf.key(n)?;
        let mut raw_uh = self.uh.key(n)?;
        let pre = PreTag {
            period,
            mask: prf2(&prf_key, period as u128),
            uh_key: self.params.uh.derive_key(&raw_uh),
            consumed: false,
        };
        prf_key.zeroize();
        raw_uh.zeroize();
        self.prf.advance_or_retire(n)?;
        self.uh.advance_or_retire(n)?;
        Ok(pre)
    }

    /// `σ_i = σ̃_i ∘ UH(K_i^UH, M_i)`.
    pub fn sign_online(&mut self, message: &[u8], pre: &mut PreTag) -> Result<Tag> {
        if pre.consumed {
            return Err(Error::Reuse { period: pre.period });
        }
        if pre.period != self.online_period {
            return Err(Error::Desync { expected: self.online_period, got: pre.period });
        }
        let uh = self.params.uh;
        let value = uh.combine(&pre.mask, &uh_eval(uh, &pre.uh_key, message));
        pre.burn();
        self.online_period += 1;
        Ok(Tag { period: pre.period, value })
    }

    pub fn sign(&mut self, message: &[u8]) -> Result<Tag> {
        let mut pre = self.sign_offline()?;
        self.sign_online(message, &mut pre)
    }

    fn check_batch(&self, start: u64, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::Structural("empty batch".into()));
        }
        if self.online_period != start {
            return Err(Error::Desync { expected: self.online_period, got: start });
        }
        if self.prf.period != start || self.uh.period != start {
            return Err(Error::Desync { expected: start, got: self.prf.period });
        }
        Ok(())
    }

    /// Offline half of aggregate verification for `count` periods from the
    /// current one: masks, hash keys and (homomorphic modes) the folded mask.
    pub fn averify_offline(&mut self, count: u64) -> Result<VerifyPrecomputation> {
        let start = self.online_period;
        self.check_batch(start, count)?;
        if start + count - 1 > self.params.max_periods {
            return Err(Error::Exhausted { max_periods: self.params.max_periods });
        }
        let mut tags = Vec::with_capacity(count as usize);
        for _ in 0..count {
            tags.push(self.sign_offline()?);
        }
        let mask_aggregate = if self.params.homomorphic_split() {
            let group = self.params.uh.tag_group();
            let mut acc = tags[0].mask;
            for t in &tags[1..] {
                acc = group.op(&acc, &t.mask);
            }
            Some(acc)
        } else {
            None
        };
        Ok(VerifyPrecomputation { start, tags, mask_aggregate })
    }

    /// Online half: hashes the messages, recombines and compares in constant
    /// time. The online cursor advances whatever the outcome.
    pub fn averify_online<M: AsRef<[u8]>>(
        &mut self,
        mut pre: VerifyPrecomputation,
        messages: &[M],
        agg: &AggregateTag,
    ) -> Result<bool> {
        agg.check_shape(self.params.epoch_size)?;
        if agg.mode != self.params.agg_mode {
            return Err(Error::Structural(format!(
                "aggregate mode {} does not match configured {}",
                agg.mode, self.params.agg_mode
            )));
        }
        if pre.start != self.online_period || agg.start != pre.start {
            return Err(Error::Desync { expected: self.online_period, got: agg.start });
        }
        if messages.len() != pre.tags.len() || agg.count() != pre.tags.len() as u64 {
            return Err(Error::Structural(format!(
                "{} messages for an aggregate over {} periods",
                messages.len(),
                agg.count()
            )));
        }

        let uh = self.params.uh;
        let expected = match pre.mask_aggregate {
            Some(mask_agg) => {
                let group = uh.tag_group();
                let mut hashes = pre
                    .tags
                    .iter()
                    .zip(messages)
                    .map(|(t, m)| uh_eval(uh, &t.uh_key, m.as_ref()));
                let first = hashes.next().unwrap();
                let hash_agg = hashes.fold(first, |acc, h| group.op(&acc, &h));
                group.op(&mask_agg, &hash_agg).to_vec()
            }
            None => {
                let full: Vec<[u8; 16]> = pre
                    .tags
                    .iter()
                    .zip(messages)
                    .map(|(t, m)| uh.combine(&t.mask, &uh_eval(uh, &t.uh_key, m.as_ref())))
                    .collect();
                self.params.agg_mode.fold_all(&full).unwrap()
            }
        };
        for t in pre.tags.iter_mut() {
            t.burn();
        }
        self.online_period += pre.tags.len() as u64;
        Ok(bool::from(expected.ct_eq(&agg.value)))
    }

    /// Verifies `messages` against `agg`; both chains advance by the batch
    /// size whatever the outcome.
    pub fn averify<M: AsRef<[u8]>>(&mut self, messages: &[M], agg: &AggregateTag) -> Result<bool> {
        agg.check_shape(self.params.epoch_size)?;
        if agg.start != self.online_period {
            return Err(Error::Desync { expected: self.online_period, got: agg.start });
        }
        if messages.len() as u64 != agg.count() {
            return Err(Error::Structural(format!(
                "{} messages for an aggregate over {} periods",
                messages.len(),
                agg.count()
            )));
        }
        let pre = self.averify_offline(agg.count())?;
        self.averify_online(pre, messages, agg)
    }

    /// Moves every cursor forward to `period` without producing tags.
    pub(crate) fn skip_to(&mut self, period: u64) -> Result<()> {
        let n = self.params.max_periods;
        while self.prf.period < period && self.prf.key.is_some() {
            self.prf.advance_or_retire(n)?;
            self.uh.advance_or_retire(n)?;
        }
        self.online_period = self.online_period.max(period.min(n + 1));
        Ok(())
    }

    pub fn retained_secrets(&self) -> Vec<Vec<u8>> {
        let mut out = self.prf.retained();
        out.extend(self.uh.retained());
        out
    }
}

impl fmt::Debug for FamacKeyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamacKeyState")
            .field("params", &self.params)
            .field("prf_period", &self.prf.period)
            .field("uh_period", &self.uh.period)
            .field("online_period", &self.online_period)
            .finish_non_exhaustive()
    }
}

/// Offline part of one period's tag: the PRF mask and the derived hash key.
#[derive(Zeroize, ZeroizeOnDrop)]
pub struct PreTag {
    period: u64,
    mask: [u8; 16],
    uh_key: [u8; 16],
    consumed: bool,
}

impl PreTag {
    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn mask(&self) -> &[u8; 16] {
        &self.mask
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn storage_len(&self) -> usize {
        self.mask.len() + self.uh_key.len()
    }

    pub(crate) fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.mask);
        out.extend_from_slice(&self.uh_key);
    }

    fn burn(&mut self) {
        self.mask.zeroize();
        self.uh_key.zeroize();
        self.consumed = true;
    }
}

impl fmt::Debug for PreTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreTag")
            .field("period", &self.period)
            .field("consumed", &self.consumed)
            .finish()
    }
}

/// Offline output of aggregate verification for one batch.
pub struct VerifyPrecomputation {
    start: u64,
    tags: Vec<PreTag>,
    mask_aggregate: Option<[u8; 16]>,
}

impl VerifyPrecomputation {
    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

impl Drop for VerifyPrecomputation {
    fn drop(&mut self) {
        if let Some(m) = self.mask_aggregate.as_mut() {
            m.zeroize();
        }
    }
}
