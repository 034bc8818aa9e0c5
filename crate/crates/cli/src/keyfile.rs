//! Binary key file: scheme configuration plus the three initial seeds.
//!
//! ```text
//! 0   magic "DFK1"   4
//! 4   version 0x01   1
//! 5   scheme id      1
//! 6   agg mode       1
//! 7   n              8
//! 15  b              4
//! 19  msg_len        4
//! 23  fse seed       16
//! 39  mac prf seed   16
//! 55  mac uh seed    16
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use diamond_core::diamond::{InitialSecret, SchemeConfig, SchemeId};
use diamond_core::AggMode;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MAGIC: [u8; 4] = *b"DFK1";
pub const VERSION: u8 = 0x01;
pub const LEN: usize = 71;

pub struct KeyFile {
    pub config: SchemeConfig,
    pub secret: InitialSecret,
}

impl KeyFile {
    pub fn encode(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::with_capacity(LEN);
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(c.scheme.code());
        out.push(c.agg_mode.code());
        out.extend_from_slice(&c.n.to_be_bytes());
        out.extend_from_slice(&(c.b as u32).to_be_bytes());
        out.extend_from_slice(&(c.msg_len as u32).to_be_bytes());
        out.extend_from_slice(&self.secret.fse_seed);
        out.extend_from_slice(&self.secret.prf_seed);
        out.extend_from_slice(&self.secret.uh_seed);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::KeyFile(why.to_string());
        if bytes.len() != LEN {
            return Err(bad(&format!("expected {LEN} bytes, found {}", bytes.len())));
        }
        if bytes[..4] != MAGIC {
            return Err(bad("not a key file (bad magic)"));
        }
        if bytes[4] != VERSION {
            return Err(bad(&format!("unsupported version {}", bytes[4])));
        }
        let scheme = SchemeId::from_code(bytes[5])?;
        let agg = AggMode::from_code(bytes[6])?;
        let n = u64::from_be_bytes(bytes[7..15].try_into().unwrap());
        let b = u32::from_be_bytes(bytes[15..19].try_into().unwrap()) as u64;
        let m = u32::from_be_bytes(bytes[19..23].try_into().unwrap()) as usize;
        let config = SchemeConfig::new(scheme, n, b, m)?.with_agg_mode(agg);
        let seed = |at: usize| -> [u8; 16] { bytes[at..at + 16].try_into().unwrap() };
        Ok(Self { config, secret: InitialSecret { fse_seed: seed(23), prf_seed: seed(39), uh_seed: seed(55) } })
    }

    /// First 8 bytes of SHA-256 over the file contents, in hex.
    pub fn fingerprint(&self) -> String {
        hex::encode(&Sha256::digest(self.encode())[..8])
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Self::decode(&fs::read(path)?)
    }

    /// Writes the file readable by the owner only.
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        let mut f = opts.open(path)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            f.set_permissions(fs::Permissions::from_mode(0o600))?;
        }
        f.write_all(&self.encode())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let kf = KeyFile {
            config: SchemeConfig::new(SchemeId::Graphene2, 4096, 64, 64).unwrap().with_agg_mode(AggMode::Hash),
            secret: InitialSecret { fse_seed: [1; 16], prf_seed: [2; 16], uh_seed: [3; 16] },
        };
        let bytes = kf.encode();
        assert_eq!(bytes.len(), LEN);
        let back = KeyFile::decode(&bytes).unwrap();
        assert_eq!(back.config, kf.config);
        assert_eq!(back.secret, kf.secret);
        assert_eq!(back.fingerprint().len(), 16);
        assert!(KeyFile::decode(&bytes[..70]).is_err());
    }
}
