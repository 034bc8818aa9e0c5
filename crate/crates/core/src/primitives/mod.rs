//! Cryptographic building blocks: block/stream PRFs, universal hashes,
//! SHA-256 and the forward-secure key chains built on top of them.

mod aes;
mod chacha;
pub mod chain;
pub mod counters;

use std::fmt;

use ghash::universal_hash::{KeyInit, UniversalHash};
use sha2::{Digest, Sha256};
use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::{Error, Result};

pub use chain::{FprgState, HashChain, KeyChain, KeyUpdatePolicy};
pub use counters::CallCounts;

/// Security parameter κ in bits.
pub const KAPPA_BITS: u32 = 128;

/// Secret byte string that is wiped when dropped.
#[derive(Clone, PartialEq, Eq, Zeroize, ZeroizeOnDrop)]
pub struct SecretBytes(Vec<u8>);

impl SecretBytes {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Self {
        Self(bytes.to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn to_array16(&self) -> [u8; 16] {
        self.0[..16].try_into().expect("secret shorter than 16 bytes")
    }
}

impl fmt::Debug for SecretBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretBytes([REDACTED; {}])", self.0.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrfAlgorithm {
    Aes128,
    ChaCha20Block,
}

/// A PRF family. Inputs are always a 128-bit counter block; for ChaCha20 the
/// high 96 bits are the nonce and the low 32 bits the block counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrfSpec {
    pub algorithm: PrfAlgorithm,
}

impl PrfSpec {
    pub const AES128: PrfSpec = PrfSpec { algorithm: PrfAlgorithm::Aes128 };
    pub const CHACHA20: PrfSpec = PrfSpec { algorithm: PrfAlgorithm::ChaCha20Block };

    pub fn key_bits(&self) -> u32 {
        match self.algorithm {
            PrfAlgorithm::Aes128 => 128,
            PrfAlgorithm::ChaCha20Block => 256,
        }
    }

    /// Output block size ℓ (also the PRF state size).
    pub fn block_bits(&self) -> u32 {
        match self.algorithm {
            PrfAlgorithm::Aes128 => 128,
            PrfAlgorithm::ChaCha20Block => 512,
        }
    }

    pub fn input_bits(&self) -> u32 {
        128
    }

    pub fn key_len(&self) -> usize {
        self.key_bits() as usize / 8
    }

    pub fn block_len(&self) -> usize {
        self.block_bits() as usize / 8
    }

    pub fn name(&self) -> &'static str {
        match self.algorithm {
            PrfAlgorithm::Aes128 => "AES-128",
            PrfAlgorithm::ChaCha20Block => "ChaCha20",
        }
    }
}

/// Evaluates the PRF on a single input block.
pub fn prf_eval(spec: PrfSpec, key: &[u8], input: &[u8]) -> Result<Vec<u8>> {
    if key.len() != spec.key_len() {
        return Err(Error::InvalidArgument(format!(
            "{} key must be {} bytes, got {}",
            spec.name(),
            spec.key_len(),
            key.len()
        )));
    }
    let input: [u8; 16] = input.try_into().map_err(|_| {
        Error::InvalidArgument(format!("PRF input must be 16 bytes, got {}", input.len()))
    })?;
    let mut out = Vec::with_capacity(spec.block_len());
    prf_blocks(spec, key, u128::from_be_bytes(input), 1, &mut out);
    Ok(out)
}

/// Appends `count` PRF output blocks for inputs `first, first+1, ...`
/// (mod 2^128) to `out`. This is CTR-mode keystream generation.
pub(crate) fn prf_blocks(spec: PrfSpec, key: &[u8], first: u128, count: usize, out: &mut Vec<u8>) {
    counters::add_prf(count as u64);
    match spec.algorithm {
        PrfAlgorithm::Aes128 => {
            let key: &[u8; 16] = key.try_into().expect("AES-128 key length");
            let mut blocks: Vec<[u8; 16]> = (0..count)
                .map(|j| first.wrapping_add(j as u128).to_be_bytes())
                .collect();
            aes::encrypt_blocks(key, &mut blocks);
            for b in blocks.iter_mut() {
                out.extend_from_slice(b);
                b.zeroize();
            }
        }
        PrfAlgorithm::ChaCha20Block => {
            let key: &[u8; 32] = key.try_into().expect("ChaCha20 key length");
            let mut block = [0u8; 64];
            for j in 0..count {
                let input = first.wrapping_add(j as u128).to_be_bytes();
                let nonce: [u8; 12] = input[..12].try_into().unwrap();
                let counter = u32::from_be_bytes(input[12..].try_into().unwrap());
                chacha::block(key, counter, &nonce, &mut block);
                out.extend_from_slice(&block);
            }
            block.zeroize();
        }
    }
}

/// 16-byte big-endian encoding of an integer PRF input.
pub fn encode_index(i: u64) -> [u8; 16] {
    (i as u128).to_be_bytes()
}

/// PRF₂: AES-128 keyed by a κ-bit key, evaluated at the given inputs.
pub(crate) fn prf2_many<const N: usize>(key: &[u8; 16], inputs: [u128; N]) -> [[u8; 16]; N] {
    counters::add_prf(N as u64);
    let mut blocks = inputs.map(u128::to_be_bytes);
    aes::encrypt_blocks(key, &mut blocks);
    blocks
}

pub(crate) fn prf2(key: &[u8; 16], input: u128) -> [u8; 16] {
    prf2_many(key, [input])[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UhAlgorithm {
    Ghash,
    Poly1305,
}

/// The group a Carter–Wegman tag lives in: how mask and hash combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagGroup {
    /// GF(2)^128 addition.
    Xor,
    /// Addition modulo 2^128 on little-endian integers.
    AddMod2_128,
}

impl TagGroup {
    pub fn op(self, a: &[u8; 16], b: &[u8; 16]) -> [u8; 16] {
        match self {
            TagGroup::Xor => xor16(a, b),
            TagGroup::AddMod2_128 => add_mod_2_128(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UhSpec {
    pub algorithm: UhAlgorithm,
}

impl UhSpec {
    pub const GHASH: UhSpec = UhSpec { algorithm: UhAlgorithm::Ghash };
    pub const POLY1305: UhSpec = UhSpec { algorithm: UhAlgorithm::Poly1305 };

    pub fn name(&self) -> &'static str {
        match self.algorithm {
            UhAlgorithm::Ghash => "GHASH",
            UhAlgorithm::Poly1305 => "Poly1305",
        }
    }

    pub fn modulus(&self) -> &'static str {
        match self.algorithm {
            UhAlgorithm::Ghash => "GF(2^128) mod x^128+x^7+x^2+x+1",
            UhAlgorithm::Poly1305 => "Z mod 2^130-5",
        }
    }

    /// ε for 16-byte blocks.
    pub fn universality_eps(&self) -> f64 {
        match self.algorithm {
            UhAlgorithm::Ghash => 2f64.powi(-128),
            UhAlgorithm::Poly1305 => 2f64.powi(-103),
        }
    }

    pub fn tag_bits(&self) -> u32 {
        128
    }

    /// Maps raw chain output into the hash's key domain (Poly1305 r-clamping).
    pub fn derive_key(&self, raw: &[u8; 16]) -> [u8; 16] {
        let mut key = *raw;
        if self.algorithm == UhAlgorithm::Poly1305 {
            for i in [3, 7, 11, 15] {
                key[i] &= 0x0f;
            }
            for i in [4, 8, 12] {
                key[i] &= 0xfc;
            }
        }
        key
    }

    /// The group operation that joins PRF mask and hash value.
    pub fn tag_group(&self) -> TagGroup {
        match self.algorithm {
            UhAlgorithm::Ghash => TagGroup::Xor,
            UhAlgorithm::Poly1305 => TagGroup::AddMod2_128,
        }
    }

    pub fn combine(&self, mask: &[u8; 16], hash: &[u8; 16]) -> [u8; 16] {
        self.tag_group().op(mask, hash)
    }
}

/// Universal hash of `message` under a derived key.
///
/// GHASH: blocks are zero-padded, no length block. Poly1305: the standard
/// block rule, result `h mod 2^128` without the `s` addend.
pub fn uh_eval(spec: UhSpec, key: &[u8; 16], message: &[u8]) -> [u8; 16] {
    counters::add_uh(1);
    match spec.algorithm {
        UhAlgorithm::Ghash => {
            let mut h = ghash::GHash::new(key.into());
            h.update_padded(message);
            h.finalize().into()
        }
        UhAlgorithm::Poly1305 => {
            let mut k = [0u8; 32];
            k[..16].copy_from_slice(key);
            let mac = poly1305::Poly1305::new((&k).into());
            k.zeroize();
            mac.compute_unpadded(message).into()
        }
    }
}

/// SHA-256.
pub fn hash_eval(message: &[u8]) -> [u8; 32] {
    counters::add_hash(1);
    Sha256::digest(message).into()
}

pub(crate) fn hash_concat(parts: &[&[u8]]) -> [u8; 32] {
    counters::add_hash(1);
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

pub fn xor16(a: &[u8; 16], b: &[u8; 16]) -> [u8; 16] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

pub fn add_mod_2_128(a: &[u8; 16], b: &[u8; 16]) -> [u8; 16] {
    u128::from_le_bytes(*a)
        .wrapping_add(u128::from_le_bytes(*b))
        .to_le_bytes()
}

pub(crate) fn xor_in_place(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

pub(crate) fn aes128_encrypt_blocks(key: &[u8; 16], blocks: &mut [[u8; 16]]) {
    counters::add_prf(blocks.len() as u64);
    aes::encrypt_blocks(key, blocks);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};

    fn h(s: &str) -> Vec<u8> {
        hex::decode(s).unwrap()
    }

    /// Bit-serial GF(2^128) multiply in GCM bit order.
    fn gf128_mul_oracle(x: &[u8; 16], y: &[u8; 16]) -> [u8; 16] {
        let x = u128::from_be_bytes(*x);
        let mut v = u128::from_be_bytes(*y);
        let mut z = 0u128;
        for i in 0..128 {
            if (x >> (127 - i)) & 1 == 1 {
                z ^= v;
            }
            let lsb = v & 1;
            v >>= 1;
            if lsb == 1 {
                v ^= 0xe1 << 120;
            }
        }
        z.to_be_bytes()
    }

    fn ghash_oracle(key: &[u8; 16], msg: &[u8]) -> [u8; 16] {
        let mut y = [0u8; 16];
        for chunk in msg.chunks(16) {
            let mut block = [0u8; 16];
            block[..chunk.len()].copy_from_slice(chunk);
            y = gf128_mul_oracle(&xor16(&y, &block), key);
        }
        y
    }

    #[test]
    fn aes128_fips197_vector() {
        let out = prf_eval(
            PrfSpec::AES128,
            &h("000102030405060708090a0b0c0d0e0f"),
            &h("00112233445566778899aabbccddeeff"),
        )
        .unwrap();
        assert_eq!(hex::encode(out), "69c4e0d86a7b0430d8cdb78070b4c55a");
    }

    #[test]
    fn chacha20_rfc8439_block_vector() {
        let key: Vec<u8> = (0u8..32).collect();
        // nonce 000000090000004a00000000, block counter 1
        let input = h("000000090000004a0000000000000001");
        let out = prf_eval(PrfSpec::CHACHA20, &key, &input).unwrap();
        assert_eq!(
            hex::encode(out),
            "10f1e7e4d13b5915500fdd1fa32071c4c7d1f4c733c068030422aa9ac3d46c4e\
             d2826446079faa0914c2d705d98b02a2b5129cd1de164eb9cbd083e8a2503c4e"
        );
    }

    #[test]
    fn prf_is_deterministic() {
        let key = [7u8; 16];
        let x = [9u8; 16];
        assert_eq!(
            prf_eval(PrfSpec::AES128, &key, &x).unwrap(),
            prf_eval(PrfSpec::AES128, &key, &x).unwrap()
        );
    }

    #[test]
    fn prf_rejects_bad_lengths() {
        assert!(matches!(
            prf_eval(PrfSpec::AES128, &[0u8; 15], &[0u8; 16]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            prf_eval(PrfSpec::CHACHA20, &[0u8; 32], &[0u8; 64]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ghash_zero_key_annihilates() {
        assert_eq!(uh_eval(UhSpec::GHASH, &[0u8; 16], b"any message at all, really"), [0u8; 16]);
    }

    #[test]
    fn ghash_single_block_is_field_product() {
        let key: [u8; 16] = h("66e94bd4ef8a2c3b884cfa59ca342b2e").try_into().unwrap();
        let m: [u8; 16] = h("0388dace60b6a392f328c2b971b2fe78").try_into().unwrap();
        let expected = gf128_mul_oracle(&m, &key);
        assert_eq!(uh_eval(UhSpec::GHASH, &key, &m), expected);
        // Frozen from the bitwise oracle.
        assert_eq!(hex::encode(expected), "5e2ec746917062882c85b0685353deb7");
    }

    #[test]
    fn poly1305_rfc8439_tag_through_combine() {
        let key = h("85d6be7857556d337f4452fe42d506a80103808afb0db2fd4abff6af4149f51b");
        let r: [u8; 16] = key[..16].try_into().unwrap();
        let s: [u8; 16] = key[16..].try_into().unwrap();
        let spec = UhSpec::POLY1305;
        let hv = uh_eval(spec, &spec.derive_key(&r), b"Cryptographic Forum Research Group");
        assert_eq!(hex::encode(spec.combine(&s, &hv)), "a8061dc1305136c6c22b8baf0c0127a9");
    }

    #[test]
    fn sha256_vectors() {
        assert_eq!(
            hex::encode(hash_eval(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hex::encode(hash_eval(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(hash_eval(b"x"), hash_eval(b"x"));
    }

    #[test]
    fn spec_constants() {
        assert_eq!(UhSpec::GHASH.universality_eps(), 2f64.powi(-128));
        assert_eq!(UhSpec::POLY1305.universality_eps(), 2f64.powi(-103));
        assert_eq!(UhSpec::POLY1305.tag_bits(), 128);
        assert_eq!(PrfSpec::AES128.block_bits(), 128);
        assert_eq!(PrfSpec::CHACHA20.block_bits(), 512);
        assert_eq!(PrfSpec::CHACHA20.key_bits(), 256);
    }

    /// Collision frequency over 10^5 random keys for a fixed distinct pair.
    #[test]
    fn universality_smoke() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xd1a);
        let m1 = b"temperature=21.5C;hr=72";
        let m2 = b"temperature=21.6C;hr=72";
        for spec in [UhSpec::GHASH, UhSpec::POLY1305] {
            let trials = 100_000u32;
            let mut collisions = 0u32;
            for _ in 0..trials {
                let mut raw = [0u8; 16];
                rng.fill_bytes(&mut raw);
                let k = spec.derive_key(&raw);
                if uh_eval(spec, &k, m1) == uh_eval(spec, &k, m2) {
                    collisions += 1;
                }
            }
            let bound = 10.0 * spec.universality_eps() * trials as f64;
            assert!(collisions as f64 <= bound, "{}: {collisions} collisions", spec.name());
        }
    }

    proptest! {
        #[test]
        fn ghash_matches_bitwise_oracle(key in any::<[u8; 16]>(), msg in proptest::collection::vec(any::<u8>(), 0..70)) {
            prop_assert_eq!(uh_eval(UhSpec::GHASH, &key, &msg), ghash_oracle(&key, &msg));
        }

        #[test]
        fn ghash_is_linear(key in any::<[u8; 16]>(), pair in (1usize..64).prop_flat_map(|n| (
            proptest::collection::vec(any::<u8>(), n),
            proptest::collection::vec(any::<u8>(), n),
        ))) {
            let (a, b) = pair;
            let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
            prop_assert_eq!(
                uh_eval(UhSpec::GHASH, &key, &x),
                xor16(&uh_eval(UhSpec::GHASH, &key, &a), &uh_eval(UhSpec::GHASH, &key, &b))
            );
        }

        #[test]
        fn chacha_matches_reference_crate(key in any::<[u8; 32]>(), ctr in any::<u128>()) {
            use chacha20::cipher::{KeyIvInit, StreamCipher, StreamCipherSeek};
            // Stay clear of the reference crate's end-of-counter boundary.
            let ctr = ctr & !0xffff_ffffu128 | (ctr as u32 as u128 >> 1);
            let out = prf_eval(PrfSpec::CHACHA20, &key, &ctr.to_be_bytes()).unwrap();
            let bytes = ctr.to_be_bytes();
            let mut c = chacha20::ChaCha20::new((&key).into(), bytes[..12].into());
            c.seek(u64::from(u32::from_be_bytes(bytes[12..].try_into().unwrap())) * 64);
            let mut ks = [0u8; 64];
            c.apply_keystream(&mut ks);
            prop_assert_eq!(out, ks.to_vec());
        }
    }
}
