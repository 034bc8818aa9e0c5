//! Encrypt-then-MAC composition of [`fse`](crate::fse) and
//! [`famac`](crate::famac), the scheme registry, and the AES-GCM baseline.

pub mod gcm;
pub mod storage;

use std::fmt;
use std::str::FromStr;

use rand_core::{CryptoRng, RngCore};
use subtle::ConstantTimeEq;
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::famac::{
    AggMode, AggregateTag, ChainSelect, FamacKeyState, FamacParams, PreTag, Tag,
    VerifyPrecomputation,
};
use crate::fse::{FseKeyState, FseParams, PreBlock};
use crate::primitives::{KeyUpdatePolicy, PrfSpec, UhSpec, KAPPA_BITS};
use crate::{Error, Result};

use gcm::{GcmEngine, GcmPre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    Diamond1,
    Diamond2,
    Graphene1,
    Graphene2,
    Faae1,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Diamond1,
        SchemeId::Diamond2,
        SchemeId::Graphene1,
        SchemeId::Graphene2,
        SchemeId::Faae1,
    ];

    pub fn code(self) -> u8 {
        match self {
            SchemeId::Diamond1 => 0x01,
            SchemeId::Diamond2 => 0x02,
            SchemeId::Graphene1 => 0x11,
            SchemeId::Graphene2 => 0x12,
            SchemeId::Faae1 => 0x21,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.code() == code)
            .ok_or(Error::UnknownScheme(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Diamond1 => "diamond1",
            SchemeId::Diamond2 => "diamond2",
            SchemeId::Graphene1 => "graphene1",
            SchemeId::Graphene2 => "graphene2",
            SchemeId::Faae1 => "faae1",
        }
    }

    pub fn profile(self) -> SchemeProfile {
        lookup(self)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|id| id.name() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'")))
    }
}

/// The primitives wired into one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeProfile {
    pub id: SchemeId,
    pub prf: PrfSpec,
    pub uh: UhSpec,
    pub policy: KeyUpdatePolicy,
    pub default_agg: AggMode,
    /// AES-128-GCM as one integrated AE instead of a composition.
    pub integrated_gcm: bool,
}

impl SchemeProfile {
    /// Internal state size of the encryption PRF in bits.
    pub fn prf_state_bits(&self) -> u32 {
        self.prf.block_bits()
    }

    pub fn universality_eps(&self) -> f64 {
        self.uh.universality_eps()
    }
}

/// Returns the registry entry for `id`.
pub fn lookup(id: SchemeId) -> SchemeProfile {
    let (prf, uh, policy, integrated_gcm) = match id {
        SchemeId::Diamond1 => (PrfSpec::AES128, UhSpec::GHASH, KeyUpdatePolicy::Fprg, false),
        SchemeId::Diamond2 => (PrfSpec::CHACHA20, UhSpec::POLY1305, KeyUpdatePolicy::Fprg, false),
        SchemeId::Graphene1 => (PrfSpec::AES128, UhSpec::GHASH, KeyUpdatePolicy::Sha256, false),
        SchemeId::Graphene2 => (PrfSpec::CHACHA20, UhSpec::POLY1305, KeyUpdatePolicy::Sha256, false),
        SchemeId::Faae1 => (PrfSpec::AES128, UhSpec::GHASH, KeyUpdatePolicy::Sha256, true),
    };
    SchemeProfile { id, prf, uh, policy, default_agg: AggMode::Xor, integrated_gcm }
}

/// Looks up a scheme by its wire code.
pub fn lookup_code(code: u8) -> Result<SchemeProfile> {
    SchemeId::from_code(code).map(lookup)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeConfig {
    pub scheme: SchemeId,
    /// Maximum number of messages (periods).
    pub n: u64,
    /// Epoch size.
    pub b: u64,
    pub msg_len: usize,
    pub agg_mode: AggMode,
}

impl SchemeConfig {
    pub const KAPPA_BITS: u32 = KAPPA_BITS;

    /// Config with the scheme's default aggregation mode.
    pub fn new(scheme: SchemeId, n: u64, b: u64, msg_len: usize) -> Result<Self> {
        let cfg = Self { scheme, n, b, msg_len, agg_mode: lookup(scheme).default_agg };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_agg_mode(mut self, agg_mode: AggMode) -> Self {
        self.agg_mode = agg_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.msg_len == 0 {
            return Err(Error::Config("msg_len must be at least 1".into()));
        }
        if self.b == 0 {
            return Err(Error::Config("b must be at least 1".into()));
        }
        if self.n < self.b {
            return Err(Error::Config(format!("n = {} must be at least b = {}", self.n, self.b)));
        }
        self.fse_params().validate()
    }

    pub fn profile(&self) -> SchemeProfile {
        lookup(self.scheme)
    }

    pub fn fse_params(&self) -> FseParams {
        let p = self.profile();
        FseParams { prf: p.prf, policy: p.policy, max_periods: self.n, msg_len: self.msg_len }
    }

    pub fn famac_params(&self) -> FamacParams {
        let p = self.profile();
        FamacParams {
            uh: p.uh,
            policy: p.policy,
            max_periods: self.n,
            epoch_size: self.b,
            agg_mode: self.agg_mode,
        }
    }

    /// Number of epochs, counting a trailing partial one.
    pub fn epochs(&self) -> u64 {
        self.n.div_ceil(self.b)
    }
}

/// The pre-shared initial secret: one seed per key chain.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct InitialSecret {
    pub fse_seed: [u8; 16],
    pub prf_seed: [u8; 16],
    pub uh_seed: [u8; 16],
}

impl InitialSecret {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut s = Self { fse_seed: [0; 16], prf_seed: [0; 16], uh_seed: [0; 16] };
        rng.fill_bytes(&mut s.fse_seed);
        rng.fill_bytes(&mut s.prf_seed);
        rng.fill_bytes(&mut s.uh_seed);
        s
    }
}

impl fmt::Debug for InitialSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("InitialSecret(..)")
    }
}

#[allow(clippy::large_enum_variant)]
enum Engine {
    Composed { fse: FseKeyState, famac: FamacKeyState },
    Gcm(GcmEngine),
}

/// Offline output for one period.
#[derive(Debug)]
pub enum Precomputed {
    Composed { block: PreBlock, tag: PreTag },
    Gcm(GcmPre),
}

impl Precomputed {
    pub fn period(&self) -> u64 {
        match self {
            Precomputed::Composed { block, .. } => block.period(),
            Precomputed::Gcm(p) => p.period(),
        }
    }

    /// Serialized size of the record.
    pub fn storage_len(&self) -> usize {
        match self {
            Precomputed::Composed { block, tag } => block.storage_len() + tag.storage_len(),
            Precomputed::Gcm(p) => p.storage_len(),
        }
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Precomputed::Composed { block, tag } => {
                block.encode_into(out);
                tag.encode_into(out);
            }
            Precomputed::Gcm(p) => p.encode_into(out),
        }
    }
}

/// Offline output of batch decryption.
pub struct DecPrecomputation {
    start: u64,
    count: u64,
    inner: DecInner,
}

enum DecInner {
    Composed { blocks: Vec<PreBlock>, tags: VerifyPrecomputation },
    Gcm(Vec<GcmPre>),
}

impl DecPrecomputation {
    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Key state of one direction of a session.
pub struct DiamondKeyState {
    config: SchemeConfig,
    ctr: u128,
    engine: Engine,
}

impl DiamondKeyState {
    /// Draws a fresh initial secret and counter and returns the state along
    /// with both, for sharing with the peer.
    pub fn generate<R: RngCore + CryptoRng>(
        config: SchemeConfig,
        rng: &mut R,
    ) -> Result<(Self, InitialSecret, u128)> {
        config.validate()?;
        let secret = InitialSecret::generate(rng);
        let mut ctr = [0u8; 16];
        rng.fill_bytes(&mut ctr);
        let ctr = u128::from_be_bytes(ctr);
        let state = Self::from_secret(config, &secret, ctr)?;
        Ok((state, secret, ctr))
    }

    pub fn from_secret(config: SchemeConfig, secret: &InitialSecret, ctr: u128) -> Result<Self> {
        config.validate()?;
        let engine = if config.profile().integrated_gcm {
            Engine::Gcm(GcmEngine::new(&secret.fse_seed, config.n, config.msg_len)?)
        } else {
            Engine::Composed {
                fse: FseKeyState::from_seed(config.fse_params(), &secret.fse_seed, ctr)?,
                famac: FamacKeyState::from_seeds(config.famac_params(), &secret.prf_seed, &secret.uh_seed)?,
            }
        };
        Ok(Self { config, ctr, engine })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Initial counter the state was created with.
    pub fn initial_ctr(&self) -> u128 {
        self.ctr
    }

    /// Next period the online phase consumes.
    pub fn period(&self) -> u64 {
        match &self.engine {
            Engine::Composed { famac, .. } => famac.period(),
            Engine::Gcm(g) => g.period(),
        }
    }

    /// Next period the offline phase precomputes.
    pub fn offline_period(&self) -> u64 {
        match &self.engine {
            Engine::Composed { fse, .. } if fse.is_exhausted() => self.config.n + 1,
            Engine::Composed { fse, .. } => fse.period(),
            Engine::Gcm(g) => g.offline_period(),
        }
    }

    /// `(fse period, famac offline period)`; equal outside of a call.
    pub fn sub_periods(&self) -> (u64, u64) {
        match &self.engine {
            Engine::Composed { fse, famac } => {
                let f = if fse.is_exhausted() { self.config.n + 1 } else { fse.period() };
                (f, famac.offline_period())
            }
            Engine::Gcm(g) => (g.offline_period(), g.offline_period()),
        }
    }

    /// Current CTR-mode counter (composed schemes).
    pub fn ctr(&self) -> Option<u128> {
        match &self.engine {
            Engine::Composed { fse, .. } => Some(fse.ctr()),
            Engine::Gcm(_) => None,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        self.period() > self.config.n
    }

    fn remaining(&self) -> u64 {
        (self.config.n + 1).saturating_sub(self.period())
    }

    /// Advances every key one period. Only allowed while nothing is
    /// precomputed ahead of the online phase.
    pub fn update(&mut self) -> Result<()> {
        if self.offline_period() != self.period() {
            return Err(Error::Desync { expected: self.period(), got: self.offline_period() });
        }
        match &mut self.engine {
            Engine::Composed { fse, famac } => {
                if fse.period() >= self.config.n {
                    return Err(Error::Exhausted { max_periods: self.config.n });
                }
                fse.update()?;
                famac.update(ChainSelect::Both)
            }
            Engine::Gcm(g) => g.update(),
        }
    }

    /// Moves both cursors to `period`, discarding the skipped periods.
    pub fn skip_to(&mut self, period: u64) -> Result<()> {
        match &mut self.engine {
            Engine::Composed { fse, famac } => {
                fse.skip_to(period)?;
                famac.skip_to(period)
            }
            Engine::Gcm(g) => g.skip_to(period),
        }
    }

    /// Key-confirmation tag over `body` under the period-1 keys.
    pub fn confirmation_tag(&self, body: &[u8]) -> Result<[u8; 16]> {
        match &self.engine {
            Engine::Composed { famac, .. } => famac.confirmation_tag(body),
            Engine::Gcm(g) => g.confirmation_tag(body),
        }
    }

    /// All PRF work for the next period: keystream, tag mask and hash key.
    pub fn authenc_offline(&mut self) -> Result<Precomputed> {
        match &mut self.engine {
            Engine::Composed { fse, famac } => {
                let block = fse.enc_offline()?;
                let tag = famac.sign_offline()?;
                Ok(Precomputed::Composed { block, tag })
            }
            Engine::Gcm(g) => Ok(Precomputed::Gcm(g.offline()?)),
        }
    }

    /// Encrypts `message` and tags the ciphertext.
    pub fn authenc_online(&mut self, pre: &mut Precomputed, message: &[u8]) -> Result<(Vec<u8>, Tag)> {
        if message.len() != self.config.msg_len {
            return Err(Error::InvalidArgument(format!(
                "message must be {} bytes, got {}",
                self.config.msg_len,
                message.len()
            )));
        }
        match (&mut self.engine, pre) {
            (Engine::Composed { famac, .. }, Precomputed::Composed { block, tag }) => {
                if tag.is_consumed() {
                    return Err(Error::Reuse { period: tag.period() });
                }
                if tag.period() != famac.period() {
                    return Err(Error::Desync { expected: famac.period(), got: tag.period() });
                }
                let ct = block.enc_online(message)?;
                let t = famac.sign_online(&ct, tag)?;
                Ok((ct, t))
            }
            (Engine::Gcm(g), Precomputed::Gcm(p)) => {
                let period = p.period();
                let (ct, value) = g.online(p, message)?;
                Ok((ct, Tag { period, value }))
            }
            _ => Err(Error::InvalidArgument("precomputation belongs to a different scheme".into())),
        }
    }

    pub fn authenc(&mut self, message: &[u8]) -> Result<(Vec<u8>, Tag)> {
        if self.is_exhausted() {
            return Err(Error::Exhausted { max_periods: self.config.n });
        }
        if message.len() != self.config.msg_len {
            return Err(Error::InvalidArgument(format!(
                "message must be {} bytes, got {}",
                self.config.msg_len,
                message.len()
            )));
        }
        if self.offline_period() != self.period() {
            return Err(Error::Desync { expected: self.period(), got: self.offline_period() });
        }
        let mut pre = self.authenc_offline()?;
        self.authenc_online(&mut pre, message)
    }

    /// Structural checks on a batch against the current state. Nothing is
    /// consumed when these fail.
    pub fn check_batch<C: AsRef<[u8]>>(&self, ciphertexts: &[C], agg: &AggregateTag) -> Result<()> {
        if agg.mode != self.config.agg_mode {
            return Err(Error::Structural(format!(
                "aggregate mode {} does not match configured {}",
                agg.mode, self.config.agg_mode
            )));
        }
        agg.check_shape(self.config.b)?;
        if agg.start != self.period() {
            return Err(Error::Desync { expected: self.period(), got: agg.start });
        }
        if ciphertexts.len() as u64 != agg.count() {
            return Err(Error::Structural(format!(
                "{} ciphertexts for an aggregate over {} periods",
                ciphertexts.len(),
                agg.count()
            )));
        }
        if let Some((j, c)) =
            ciphertexts.iter().enumerate().find(|(_, c)| c.as_ref().len() != self.config.msg_len)
        {
            return Err(Error::Structural(format!(
                "ciphertext {j} is {} bytes, expected {}",
                c.as_ref().len(),
                self.config.msg_len
            )));
        }
        if agg.count() > self.remaining() {
            return Err(Error::Exhausted { max_periods: self.config.n });
        }
        Ok(())
    }

    /// Keystreams, masks and hash keys for the next `count` periods.
    pub fn averdec_offline(&mut self, count: u64) -> Result<DecPrecomputation> {
        if count == 0 {
            return Err(Error::Structural("empty batch".into()));
        }
        if self.offline_period() != self.period() {
            return Err(Error::Desync { expected: self.period(), got: self.offline_period() });
        }
        if count > self.remaining() {
            return Err(Error::Exhausted { max_periods: self.config.n });
        }
        let start = self.period();
        let inner = match &mut self.engine {
            Engine::Composed { fse, famac } => {
                let blocks = (0..count).map(|_| fse.dec_offline()).collect::<Result<Vec<_>>>()?;
                let tags = famac.averify_offline(count)?;
                DecInner::Composed { blocks, tags }
            }
            Engine::Gcm(g) => DecInner::Gcm((0..count).map(|_| g.offline()).collect::<Result<_>>()?),
        };
        Ok(DecPrecomputation { start, count, inner })
    }

    /// Verifies the aggregate and only then decrypts. On rejection no
    /// plaintext is produced and the state stays advanced past the batch.
    pub fn averdec_online<C: AsRef<[u8]>>(
        &mut self,
        pre: DecPrecomputation,
        ciphertexts: &[C],
        agg: &AggregateTag,
    ) -> Result<Vec<Vec<u8>>> {
        let shape = self.check_batch(ciphertexts, agg).and_then(|_| {
            if agg.count() != pre.count || agg.start != pre.start {
                Err(Error::Structural(format!(
                    "precomputation covers {}..+{}, aggregate {}..={}",
                    pre.start, pre.count, agg.start, agg.end
                )))
            } else {
                Ok(())
            }
        });
        if let Err(e) = shape {
            let end = pre.start + pre.count;
            drop(pre);
            self.skip_to(end)?;
            return Err(e);
        }

        match (&mut self.engine, pre.inner) {
            (Engine::Composed { famac, .. }, DecInner::Composed { mut blocks, tags }) => {
                if !famac.averify_online(tags, ciphertexts, agg)? {
                    return Err(Error::AuthenticationFailed);
                }
                blocks
                    .iter_mut()
                    .zip(ciphertexts)
                    .map(|(b, c)| b.dec_online(c.as_ref()))
                    .collect()
            }
            (Engine::Gcm(g), DecInner::Gcm(mut keys)) => {
                g.advance_online(pre.count);
                let tags: Vec<[u8; 16]> = keys
                    .iter()
                    .zip(ciphertexts)
                    .map(|(k, c)| GcmEngine::expected_tag(k, c.as_ref()))
                    .collect();
                let expected = self.config.agg_mode.fold_all(&tags).expect("non-empty batch");
                if !bool::from(expected.ct_eq(&agg.value)) {
                    return Err(Error::AuthenticationFailed);
                }
                keys.iter_mut()
                    .zip(ciphertexts)
                    .zip(&tags)
                    .map(|((k, c), t)| GcmEngine::open(k, c.as_ref(), t))
                    .collect()
            }
            _ => unreachable!("precomputation engine matches state engine"),
        }
    }

    pub fn averdec<C: AsRef<[u8]>>(&mut self, ciphertexts: &[C], agg: &AggregateTag) -> Result<Vec<Vec<u8>>> {
        self.check_batch(ciphertexts, agg)?;
        let pre = self.averdec_offline(agg.count())?;
        self.averdec_online(pre, ciphertexts, agg)
    }

    /// Every secret byte string the state still holds.
    pub fn retained_secrets(&self) -> Vec<Vec<u8>> {
        match &self.engine {
            Engine::Composed { fse, famac } => {
                let mut out = fse.retained_secrets();
                out.extend(famac.retained_secrets());
                out
            }
            Engine::Gcm(g) => g.retained(),
        }
    }
}

impl fmt::Debug for DiamondKeyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiamondKeyState")
            .field("config", &self.config)
            .field("period", &self.period())
            .field("offline_period", &self.offline_period())
            .finish_non_exhaustive()
    }
}
