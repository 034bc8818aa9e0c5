//! Forward-secure aggregate authenticated encryption with offline/online
//! precomputation.
//!
//! The crate is layered bottom-up:
//!
//! - [`primitives`]: PRFs (AES-128, the ChaCha20 block function), universal
//!   hashes (GHASH, Poly1305), SHA-256 and the forward-secure key chains.
//! - [`fse`]: CTR-mode forward-secure encryption. Keystream and key evolution
//!   happen offline; the online phase is a single XOR.
//! - [`famac`]: Carter–Wegman forward-secure aggregate MAC. PRF masks and
//!   per-period hash keys are derived offline; online work is one universal
//!   hash evaluation per message.
//! - [`diamond`]: Encrypt-then-MAC composition, the scheme registry and the
//!   offline storage model.
//! - [`session`]: sender/receiver state machines, wire format and transports.
//!
//! ```
//! use diamond_core::diamond::{DiamondKeyState, SchemeConfig, SchemeId};
//! use diamond_core::famac::aggregate;
//! use rand_core::OsRng;
//!
//! let config = SchemeConfig::new(SchemeId::Diamond1, 64, 4, 16).unwrap();
//! let (mut sender, secret, ctr) = DiamondKeyState::generate(config, &mut OsRng).unwrap();
//! let mut receiver = DiamondKeyState::from_secret(config, &secret, ctr).unwrap();
//!
//! let mut acc = None;
//! let mut batch = Vec::new();
//! for msg in [b"sensor reading 1", b"sensor reading 2"] {
//!     let (ct, tag) = sender.authenc(msg).unwrap();
//!     acc = Some(aggregate(acc, &tag, config.agg_mode, config.b).unwrap());
//!     batch.push(ct);
//! }
//! let plain = receiver.averdec(&batch, &acc.unwrap()).unwrap();
//! assert_eq!(plain[1], b"sensor reading 2");
//! ```

pub mod diamond;
mod error;
pub mod famac;
pub mod fse;
pub mod primitives;
pub mod session;

#[cfg(any(test, feature = "reference"))]
pub mod reference;

pub use diamond::{DiamondKeyState, InitialSecret, SchemeConfig, SchemeId, SchemeProfile};
pub use error::{Error, Result};
pub use famac::{AggMode, AggregateTag, Tag};
pub use primitives::{KeyUpdatePolicy, PrfSpec, UhSpec};
