//! Wire encodings. All integers are big-endian.
//!
//! Batch envelope (20-byte header):
//!
//! ```text
//! 0   magic "DFA1"        4
//! 4   version 0x01        1
//! 5   scheme id           1
//! 6   aggregation mode    1
//! 7   epoch start         8
//! 15  count               2
//! 17  msg_len             3
//! 20  ciphertexts         count · msg_len
//!     aggregate tag       16, or 32 for hash aggregation
//! ```
//!
//! Session hello (54 bytes):
//!
//! ```text
//! 0   magic "DFH1"        4
//! 4   scheme id           1
//! 5   aggregation mode    1
//! 6   n                   8
//! 14  b                   4
//! 18  msg_len             4
//! 22  initial ctr         16
//! 38  confirmation tag    16
//! ```

use crate::diamond::SchemeId;
use crate::famac::{AggMode, AggregateTag};
use crate::{Error, Result};

pub const ENVELOPE_MAGIC: [u8; 4] = *b"DFA1";
pub const ENVELOPE_VERSION: u8 = 0x01;
pub const ENVELOPE_HEADER_LEN: usize = 20;
/// Largest `msg_len` the 24-bit header field holds.
pub const MAX_MSG_LEN: usize = (1 << 24) - 1;
pub const MAX_COUNT: u64 = u16::MAX as u64;

pub const HELLO_MAGIC: [u8; 4] = *b"DFH1";
pub const HELLO_LEN: usize = 54;
pub const HELLO_BODY_LEN: usize = 38;

fn malformed(offset: usize, reason: impl Into<String>) -> Error {
    Error::Malformed { offset, reason: reason.into() }
}

fn be_uint(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchEnvelope {
    pub scheme: SchemeId,
    pub agg_mode: AggMode,
    pub epoch_start: u64,
    pub msg_len: usize,
    pub ciphertexts: Vec<Vec<u8>>,
    pub agg_tag: Vec<u8>,
}

/// Fixed-size envelope header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvelopeHeader {
    pub scheme: SchemeId,
    pub agg_mode: AggMode,
    pub epoch_start: u64,
    pub count: u16,
    pub msg_len: usize,
}

impl EnvelopeHeader {
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < ENVELOPE_HEADER_LEN {
            return Err(malformed(bytes.len(), format!("header needs {ENVELOPE_HEADER_LEN} bytes")));
        }
        if bytes[..4] != ENVELOPE_MAGIC {
            return Err(malformed(0, "bad envelope magic"));
        }
        if bytes[4] != ENVELOPE_VERSION {
            return Err(malformed(4, format!("unsupported version {}", bytes[4])));
        }
        let scheme = SchemeId::from_code(bytes[5]).map_err(|_| malformed(5, format!("unknown scheme {:#04x}", bytes[5])))?;
        let agg_mode = AggMode::from_code(bytes[6]).map_err(|_| malformed(6, format!("unknown aggregation mode {:#04x}", bytes[6])))?;
        let epoch_start = be_uint(&bytes[7..15]);
        if epoch_start == 0 {
            return Err(malformed(7, "epoch start must be at least 1"));
        }
        let count = be_uint(&bytes[15..17]) as u16;
        if count == 0 {
            return Err(malformed(15, "empty envelope"));
        }
        let msg_len = be_uint(&bytes[17..20]) as usize;
        if msg_len == 0 {
            return Err(malformed(17, "msg_len must be at least 1"));
        }
        Ok(Self { scheme, agg_mode, epoch_start, count, msg_len })
    }

    /// Bytes following the header.
    pub fn body_len(&self) -> usize {
        self.count as usize * self.msg_len + self.agg_mode.value_len()
    }
}

impl BatchEnvelope {
    pub fn count(&self) -> usize {
        self.ciphertexts.len()
    }

    pub fn tag_len(&self) -> usize {
        self.agg_mode.value_len()
    }

    pub fn encoded_len(&self) -> usize {
        ENVELOPE_HEADER_LEN + self.count() * self.msg_len + self.tag_len()
    }

    /// The aggregate tag with its period range.
    pub fn aggregate_tag(&self) -> AggregateTag {
        AggregateTag {
            start: self.epoch_start,
            end: self.epoch_start + self.count() as u64 - 1,
            mode: self.agg_mode,
            value: self.agg_tag.clone(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.ciphertexts.is_empty() || self.count() as u64 > MAX_COUNT {
            return Err(Error::InvalidArgument(format!("envelope count {} out of range", self.count())));
        }
        if self.msg_len == 0 || self.msg_len > MAX_MSG_LEN {
            return Err(Error::InvalidArgument(format!("msg_len {} out of range", self.msg_len)));
        }
        if self.epoch_start == 0 {
            return Err(Error::InvalidArgument("epoch start must be at least 1".into()));
        }
        if self.ciphertexts.iter().any(|c| c.len() != self.msg_len) {
            return Err(Error::InvalidArgument("ciphertext length differs from msg_len".into()));
        }
        if self.agg_tag.len() != self.tag_len() {
            return Err(Error::InvalidArgument(format!(
                "{} tag must be {} bytes",
                self.agg_mode,
                self.tag_len()
            )));
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&ENVELOPE_MAGIC);
        out.push(ENVELOPE_VERSION);
        out.push(self.scheme.code());
        out.push(self.agg_mode.code());
        out.extend_from_slice(&self.epoch_start.to_be_bytes());
        out.extend_from_slice(&(self.count() as u16).to_be_bytes());
        out.extend_from_slice(&(self.msg_len as u32).to_be_bytes()[1..]);
        for c in &self.ciphertexts {
            out.extend_from_slice(c);
        }
        out.extend_from_slice(&self.agg_tag);
        Ok(out)
    }

    /// Decodes exactly one envelope; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let h = EnvelopeHeader::decode(bytes)?;
        let expected = (h.count as usize)
            .checked_mul(h.msg_len)
            .and_then(|c| c.checked_add(ENVELOPE_HEADER_LEN + h.agg_mode.value_len()))
            .ok_or_else(|| malformed(15, "count · msg_len overflows"))?;
        if bytes.len() < expected {
            return Err(malformed(bytes.len(), format!("truncated: header declares {expected} bytes")));
        }
        if bytes.len() > expected {
            return Err(malformed(expected, format!("{} trailing bytes", bytes.len() - expected)));
        }
        let body = &bytes[ENVELOPE_HEADER_LEN..];
        let split = h.count as usize * h.msg_len;
        Ok(Self {
            scheme: h.scheme,
            agg_mode: h.agg_mode,
            epoch_start: h.epoch_start,
            msg_len: h.msg_len,
            ciphertexts: body[..split].chunks(h.msg_len).map(<[u8]>::to_vec).collect(),
            agg_tag: body[split..].to_vec(),
        })
    }
}

/// Session parameters plus a key-confirmation tag, sent once before the first envelope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionHello {
    pub scheme: SchemeId,
    pub agg_mode: AggMode,
    pub n: u64,
    pub b: u32,
    pub msg_len: u32,
    pub ctr: u128,
    pub tag: [u8; 16],
}

impl SessionHello {
    /// The authenticated part: everything except the tag.
    pub fn body(&self) -> [u8; HELLO_BODY_LEN] {
        let mut out = [0u8; HELLO_BODY_LEN];
        out[..4].copy_from_slice(&HELLO_MAGIC);
        out[4] = self.scheme.code();
        out[5] = self.agg_mode.code();
        out[6..14].copy_from_slice(&self.n.to_be_bytes());
        out[14..18].copy_from_slice(&self.b.to_be_bytes());
        out[18..22].copy_from_slice(&self.msg_len.to_be_bytes());
        out[22..38].copy_from_slice(&self.ctr.to_be_bytes());
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.body().to_vec();
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HELLO_LEN {
            return Err(malformed(bytes.len(), format!("hello needs {HELLO_LEN} bytes")));
        }
        if bytes.len() > HELLO_LEN {
            return Err(malformed(HELLO_LEN, "trailing bytes after hello"));
        }
        if bytes[..4] != HELLO_MAGIC {
            return Err(malformed(0, "bad hello magic"));
        }
        let scheme = SchemeId::from_code(bytes[4]).map_err(|_| malformed(4, format!("unknown scheme {:#04x}", bytes[4])))?;
        let agg_mode = AggMode::from_code(bytes[5]).map_err(|_| malformed(5, format!("unknown aggregation mode {:#04x}", bytes[5])))?;
        Ok(Self {
            scheme,
            agg_mode,
            n: be_uint(&bytes[6..14]),
            b: be_uint(&bytes[14..18]) as u32,
            msg_len: be_uint(&bytes[18..22]) as u32,
            ctr: u128::from_be_bytes(bytes[22..38].try_into().unwrap()),
            tag: bytes[38..54].try_into().unwrap(),
        })
    }
}

/// Bytes on the wire for `n` messages: `⌈n/b⌉·(20 + tag_len) + n·m`.
pub fn wire_bytes(n: u64, b: u64, msg_len: usize, mode: AggMode) -> u64 {
    n.div_ceil(b) * (ENVELOPE_HEADER_LEN + mode.value_len()) as u64 + n * msg_len as u64
}
