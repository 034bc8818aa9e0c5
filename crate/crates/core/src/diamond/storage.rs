//! Offline storage model.
//!
//! One precomputed period of a composed scheme holds the keystream
//! (`⌈m/ℓ⌉` PRF blocks of `ℓ/8` bytes), the 16-byte PRF mask and the 16-byte
//! universal-hash key:
//!
//! ```text
//! bytes_per_period = ⌈m/ℓ⌉·(ℓ/8) + 16 + 16
//! bytes_per_epoch  = b · bytes_per_period
//! ```
//!
//! The GCM baseline precomputes only its 16-byte period key.

use super::{DiamondKeyState, InitialSecret, SchemeConfig};
use crate::Result;

/// Closed-form bytes of precomputation for one period.
pub fn bytes_per_period(config: &SchemeConfig) -> usize {
    let p = config.profile();
    if p.integrated_gcm {
        return 16;
    }
    let block = p.prf.block_len();
    config.msg_len.div_ceil(block) * block + 16 + 16
}

/// Closed-form bytes of precomputation for a full epoch of `b` periods.
pub fn bytes_per_epoch(config: &SchemeConfig) -> usize {
    bytes_per_period(config) * config.b as usize
}

/// Precomputes one full epoch on a throwaway state and returns the size of
/// the serialized records.
pub fn measure_epoch(config: &SchemeConfig) -> Result<usize> {
    let secret = InitialSecret { fse_seed: [0x5a; 16], prf_seed: [0xa5; 16], uh_seed: [0x3c; 16] };
    let mut state = DiamondKeyState::from_secret(*config, &secret, 0)?;
    let mut buf = Vec::new();
    for _ in 0..config.b {
        state.authenc_offline()?.encode_into(&mut buf);
    }
    Ok(buf.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diamond::SchemeId;

    #[test]
    fn formula_matches_measurement() {
        for id in SchemeId::ALL {
            for m in [1usize, 16, 17, 64, 100, 128] {
                for b in [1u64, 4, 32] {
                    let cfg = SchemeConfig::new(id, b, b, m).unwrap();
                    assert_eq!(measure_epoch(&cfg).unwrap(), bytes_per_epoch(&cfg), "{id} m={m} b={b}");
                }
            }
        }
    }

    #[test]
    fn reference_points_at_b_1024() {
        let d16 = SchemeConfig::new(SchemeId::Diamond1, 1024, 1024, 16).unwrap();
        let d128 = SchemeConfig::new(SchemeId::Diamond1, 1024, 1024, 128).unwrap();
        assert_eq!(bytes_per_epoch(&d16), 49_152);
        assert_eq!(bytes_per_epoch(&d128), 163_840);
        let d2 = SchemeConfig::new(SchemeId::Diamond2, 1024, 1024, 16).unwrap();
        assert_eq!(bytes_per_epoch(&d2), 98_304);
    }
}
