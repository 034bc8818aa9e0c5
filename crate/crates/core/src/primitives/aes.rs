//! AES-128 encryption for the "one key, a handful of blocks" pattern.
//!
//! Every AES use in this crate re-keys constantly (FPRG steps, per-period
//! keystreams, per-period tag masks), so the key schedule dominates. On x86-64
//! with AES-NI the round keys are expanded on the fly with the
//! `pshufb`/`aesenclast` technique and interleaved with the first blocks; other
//! targets use the `aes` crate.

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};

/// Encrypts `blocks` in place under `key` (ECB over independent blocks).
pub(crate) fn encrypt_blocks(key: &[u8; 16], blocks: &mut [[u8; 16]]) {
    #[cfg(target_arch = "x86_64")]
    {
        if ni::available() {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { ni::encrypt_blocks(key, blocks) };
            return;
        }
    }
    encrypt_blocks_soft(key, blocks);
}

pub(crate) fn encrypt_blocks_soft(key: &[u8; 16], blocks: &mut [[u8; 16]]) {
    let cipher = aes::Aes128Enc::new(GenericArray::from_slice(key));
    for block in blocks.iter_mut() {
        cipher.encrypt_block(GenericArray::from_mut_slice(block));
    }
}

#[cfg(target_arch = "x86_64")]
mod ni {
    use std::arch::x86_64::*;

    const RCON: [i32; 10] = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];
    const LANES: usize = 4;

    pub(super) fn available() -> bool {
        is_x86_feature_detected!("aes") && is_x86_feature_detected!("ssse3")
    }

    #[inline(always)]
    unsafe fn next_round_key(prev: __m128i, rcon: i32) -> __m128i {
        // RotWord(w3) broadcast to every lane; ShiftRows is then a no-op, so
        // aesenclast yields SubWord(RotWord(w3)) ^ rcon in each lane.
        let rot = _mm_set_epi8(12, 15, 14, 13, 12, 15, 14, 13, 12, 15, 14, 13, 12, 15, 14, 13);
        let t = _mm_aesenclast_si128(_mm_shuffle_epi8(prev, rot), _mm_set1_epi32(rcon));
        let mut k = prev;
        let mut s = _mm_slli_si128(prev, 4);
        k = _mm_xor_si128(k, s);
        s = _mm_slli_si128(s, 4);
        k = _mm_xor_si128(k, s);
        s = _mm_slli_si128(s, 4);
        k = _mm_xor_si128(k, s);
        _mm_xor_si128(k, t)
    }

    #[target_feature(enable = "aes,ssse3,sse2")]
    pub(super) unsafe fn encrypt_blocks(key: &[u8; 16], blocks: &mut [[u8; 16]]) {
        let mut rk = [_mm_setzero_si128(); 11];
        rk[0] = _mm_loadu_si128(key.as_ptr().cast());

        let head = blocks.len().min(LANES);
        let mut st = [_mm_setzero_si128(); LANES];
        for (s, b) in st.iter_mut().zip(blocks[..head].iter()) {
            *s = _mm_xor_si128(_mm_loadu_si128(b.as_ptr().cast()), rk[0]);
        }
        for r in 1..=10 {
            rk[r] = next_round_key(rk[r - 1], RCON[r - 1]);
            for s in st[..head].iter_mut() {
                *s = if r < 10 {
                    _mm_aesenc_si128(*s, rk[r])
                } else {
                    _mm_aesenclast_si128(*s, rk[r])
                };
            }
        }
        for (s, b) in st.iter().zip(blocks[..head].iter_mut()) {
            _mm_storeu_si128(b.as_mut_ptr().cast(), *s);
        }

        for chunk in blocks[head..].chunks_mut(LANES) {
            let n = chunk.len();
            for (s, b) in st.iter_mut().zip(chunk.iter()) {
                *s = _mm_xor_si128(_mm_loadu_si128(b.as_ptr().cast()), rk[0]);
            }
            for k in &rk[1..10] {
                for s in st[..n].iter_mut() {
                    *s = _mm_aesenc_si128(*s, *k);
                }
            }
            for (s, b) in st.iter().zip(chunk.iter_mut()) {
                _mm_storeu_si128(b.as_mut_ptr().cast(), _mm_aesenclast_si128(*s, rk[10]));
            }
        }

        // Round keys and states live in registers/stack; clear the stack copies.
        for k in rk.iter_mut() {
            *k = _mm_setzero_si128();
        }
        for s in st.iter_mut() {
            *s = _mm_setzero_si128();
        }
        std::hint::black_box(&rk);
        std::hint::black_box(&st);
    }
}
