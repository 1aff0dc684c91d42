//! Memristive 7D complex chaotic system with a keystream generator, an
//! image and byte cipher built on it, and the analysis tools used to study
//! both.

pub mod chaos;
pub mod cipher;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod image;
pub mod io;
pub mod keystream;
pub mod metrics;
pub mod nist;
pub mod par;

pub use chaos::{State7, SystemParams};
pub use cipher::{decrypt_bytes, decrypt_image, encrypt_bytes, encrypt_image, CipherEnvelope};
pub use error::{Error, Result};
pub use image::ImageRGB;
pub use keystream::{Key, KeystreamGenerator};
pub use par::Execution;
