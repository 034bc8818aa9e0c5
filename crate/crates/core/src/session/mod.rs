//! Epoch-batched sender and receiver.
//!
//! The sender seals one message per period and emits a [`BatchEnvelope`]
//! whenever an epoch fills, the key lifetime ends, or [`Sender::flush`] is
//! called. The receiver verifies a whole envelope before releasing any
//! plaintext.
//!
//! Payloads carry a 4-byte big-endian length prefix and are zero-padded to
//! the configured message length, so records up to `msg_len - 4` bytes fit.
//!
//! A flushed partial epoch retires the rest of that epoch on both sides,
//! keeping every envelope aligned to an epoch boundary.

pub mod transport;
pub mod wire;

use std::collections::VecDeque;

use subtle::ConstantTimeEq;

use crate::diamond::{DiamondKeyState, InitialSecret, Precomputed, SchemeConfig};
use crate::famac::{aggregate, AggregateTag};
use crate::{Error, Result};

pub use wire::{wire_bytes, BatchEnvelope, SessionHello};

pub const LENGTH_PREFIX_LEN: usize = 4;

/// Largest record a session with this message length carries.
pub fn max_payload(msg_len: usize) -> usize {
    msg_len.saturating_sub(LENGTH_PREFIX_LEN)
}

pub fn encode_payload(record: &[u8], msg_len: usize) -> Result<Vec<u8>> {
    if record.len() > max_payload(msg_len) {
        return Err(Error::InvalidArgument(format!(
            "record of {} bytes exceeds the {}-byte payload limit",
            record.len(),
            max_payload(msg_len)
        )));
    }
    let mut out = Vec::with_capacity(msg_len);
    out.extend_from_slice(&(record.len() as u32).to_be_bytes());
    out.extend_from_slice(record);
    out.resize(msg_len, 0);
    Ok(out)
}

pub fn decode_payload(padded: &[u8]) -> Result<Vec<u8>> {
    if padded.len() < LENGTH_PREFIX_LEN {
        return Err(Error::Structural("payload shorter than its length prefix".into()));
    }
    let len = u32::from_be_bytes(padded[..4].try_into().unwrap()) as usize;
    if len > padded.len() - LENGTH_PREFIX_LEN {
        return Err(Error::Structural(format!("payload length {len} exceeds the message")));
    }
    Ok(padded[4..4 + len].to_vec())
}

/// Checks the limits the wire format places on a configuration.
pub fn check_session_config(config: &SchemeConfig) -> Result<()> {
    config.validate()?;
    if config.msg_len < LENGTH_PREFIX_LEN || config.msg_len > wire::MAX_MSG_LEN {
        return Err(Error::Config(format!(
            "session msg_len must be in {LENGTH_PREFIX_LEN}..={}",
            wire::MAX_MSG_LEN
        )));
    }
    if config.b > wire::MAX_COUNT {
        return Err(Error::Config(format!("session b must be at most {}", wire::MAX_COUNT)));
    }
    Ok(())
}

fn hello_for(config: &SchemeConfig, ctr: u128) -> SessionHello {
    SessionHello {
        scheme: config.scheme,
        agg_mode: config.agg_mode,
        n: config.n,
        b: config.b as u32,
        msg_len: config.msg_len as u32,
        ctr,
        tag: [0; 16],
    }
}

/// Device side.
pub struct Sender {
    state: DiamondKeyState,
    hello: SessionHello,
    depth: usize,
    queue: VecDeque<Precomputed>,
    acc: Option<AggregateTag>,
    ciphertexts: Vec<Vec<u8>>,
}

impl Sender {
    /// Builds the sender and its hello. The hello tag is computed under the
    /// period-1 keys before any precomputation.
    pub fn new(config: SchemeConfig, secret: &InitialSecret, ctr: u128) -> Result<Self> {
        check_session_config(&config)?;
        let state = DiamondKeyState::from_secret(config, secret, ctr)?;
        let mut hello = hello_for(&config, ctr);
        hello.tag = state.confirmation_tag(&hello.body())?;
        Ok(Self { state, hello, depth: 0, queue: VecDeque::new(), acc: None, ciphertexts: Vec::new() })
    }

    /// Number of periods kept precomputed ahead of the online phase.
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn hello(&self) -> &SessionHello {
        &self.hello
    }

    pub fn config(&self) -> &SchemeConfig {
        self.state.config()
    }

    /// Next period to be sealed.
    pub fn period(&self) -> u64 {
        self.state.period()
    }

    pub fn is_exhausted(&self) -> bool {
        self.state.is_exhausted()
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    /// Tops the precompute queue up to the configured depth.
    pub fn precompute(&mut self) -> Result<usize> {
        let mut added = 0;
        while self.queue.len() < self.depth && self.state.offline_period() <= self.state.config().n {
            self.queue.push_back(self.state.authenc_offline()?);
            added += 1;
        }
        Ok(added)
    }

    /// Seals one record. Returns an envelope when the epoch completes or the
    /// key lifetime ends.
    pub fn step(&mut self, record: &[u8]) -> Result<Option<BatchEnvelope>> {
        let config = *self.state.config();
        if self.state.is_exhausted() {
            return Err(Error::Exhausted { max_periods: config.n });
        }
        let payload = encode_payload(record, config.msg_len)?;
        let mut pre = match self.queue.pop_front() {
            Some(p) => p,
            None => self.state.authenc_offline()?,
        };
        let (ct, tag) = self.state.authenc_online(&mut pre, &payload)?;
        self.acc = Some(aggregate(self.acc.take(), &tag, config.agg_mode, config.b)?);
        self.ciphertexts.push(ct);
        let full = self.ciphertexts.len() as u64 == config.b || self.state.is_exhausted();
        let out = if full { self.emit() } else { None };
        self.precompute()?;
        Ok(out)
    }

    /// Emits a pending partial epoch and retires the rest of that epoch.
    pub fn flush(&mut self) -> Result<Option<BatchEnvelope>> {
        let Some(env) = self.emit() else { return Ok(None) };
        let next = env.epoch_start + self.state.config().b;
        self.state.skip_to(next)?;
        self.queue.retain(|p| p.period() >= next);
        Ok(Some(env))
    }

    fn emit(&mut self) -> Option<BatchEnvelope> {
        let acc = self.acc.take()?;
        let config = self.state.config();
        Some(BatchEnvelope {
            scheme: config.scheme,
            agg_mode: config.agg_mode,
            epoch_start: acc.start,
            msg_len: config.msg_len,
            ciphertexts: std::mem::take(&mut self.ciphertexts),
            agg_tag: acc.value,
        })
    }
}

/// Server side.
pub struct Receiver {
    state: DiamondKeyState,
}

impl Receiver {
    /// Checks the hello against the local configuration and its confirmation tag.
    pub fn accept(config: SchemeConfig, secret: &InitialSecret, hello: &SessionHello) -> Result<Self> {
        check_session_config(&config)?;
        let expected = hello_for(&config, hello.ctr);
        if expected.body() != hello.body() {
            return Err(Error::Structural(format!(
                "hello parameters ({} {} n={} b={} m={}) differ from the local configuration",
                hello.scheme, hello.agg_mode, hello.n, hello.b, hello.msg_len
            )));
        }
        let state = DiamondKeyState::from_secret(config, secret, hello.ctr)?;
        let tag = state.confirmation_tag(&hello.body())?;
        if !bool::from(tag.ct_eq(&hello.tag)) {
            return Err(Error::AuthenticationFailed);
        }
        Ok(Self { state })
    }

    pub fn config(&self) -> &SchemeConfig {
        self.state.config()
    }

    /// Epoch start the next envelope must carry.
    pub fn expected_epoch(&self) -> u64 {
        self.state.period()
    }

    pub fn is_exhausted(&self) -> bool {
        self.state.is_exhausted()
    }

    /// Verifies and decrypts one envelope. The state moves past the
    /// envelope's epoch whether it verifies or not.
    pub fn step(&mut self, env: &BatchEnvelope) -> Result<Vec<Vec<u8>>> {
        let config = *self.state.config();
        if env.scheme != config.scheme {
            return Err(Error::Structural(format!("envelope scheme {} but session uses {}", env.scheme, config.scheme)));
        }
        if env.agg_mode != config.agg_mode {
            return Err(Error::Structural(format!("envelope mode {} but session uses {}", env.agg_mode, config.agg_mode)));
        }
        if env.msg_len != config.msg_len {
            return Err(Error::Structural(format!("envelope msg_len {} but session uses {}", env.msg_len, config.msg_len)));
        }
        if env.count() as u64 > config.b {
            return Err(Error::Structural(format!("envelope holds {} messages, b = {}", env.count(), config.b)));
        }
        if env.epoch_start != self.state.period() {
            return Err(Error::Desync { expected: self.state.period(), got: env.epoch_start });
        }

        let result = self.state.averdec(&env.ciphertexts, &env.aggregate_tag());
        match &result {
            Ok(_) | Err(Error::AuthenticationFailed) => {
                self.state.skip_to(env.epoch_start + config.b)?;
            }
            Err(_) => {}
        }
        result?.iter().map(|p| decode_payload(p)).collect()
    }
}
