//! Binary ciphertext container, all integers big-endian:
//!
//! ```text
//! magic  "7DCC"           4 bytes
//! version u8 = 1
//! kind    u8              0 = bytes, 1 = image
//! dims    M u32, N u32    (image)   |  length u64 (bytes)
//! L       u32             padded side
//! k       u8              Arnold rounds
//! planes  3 (image) or 1 (bytes) planes of L*L bytes
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"7DCC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// `width` is M, `height` is N.
    Image { width: u32, height: u32 },
    Bytes { len: u64 },
}

impl Payload {
    pub fn kind(&self) -> u8 {
        match self {
            Payload::Bytes { .. } => 0,
            Payload::Image { .. } => 1,
        }
    }

    pub fn plane_count(&self) -> usize {
        match self {
            Payload::Bytes { .. } => 1,
            Payload::Image { .. } => 3,
        }
    }

    /// Plaintext bytes per plane.
    pub fn plane_len(&self) -> u64 {
        match *self {
            Payload::Image { width, height } => width as u64 * height as u64,
            Payload::Bytes { len } => len,
        }
    }

    /// Side of the square torus the plane is padded to.
    pub fn side(&self) -> u64 {
        match *self {
            Payload::Image { width, height } => width.max(height) as u64,
            Payload::Bytes { len } => ceil_sqrt(len),
        }
    }
}

pub fn ceil_sqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while r.checked_mul(r).is_some_and(|sq| sq < n) {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvelopeHeader {
    pub payload: Payload,
    pub side: u32,
    pub rounds: u8,
}

impl EnvelopeHeader {
    /// Bytes of plane data that must follow the header, saturating at `u64::MAX`.
    pub fn planes_len(&self) -> u64 {
        let side = self.side as u64;
        (side * side).saturating_mul(self.payload.plane_count() as u64)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(&MAGIC);
        h[4] = VERSION;
        h[5] = self.payload.kind();
        match self.payload {
            Payload::Image { width, height } => {
                h[6..10].copy_from_slice(&width.to_be_bytes());
                h[10..14].copy_from_slice(&height.to_be_bytes());
            }
            Payload::Bytes { len } => h[6..14].copy_from_slice(&len.to_be_bytes()),
        }
        h[14..18].copy_from_slice(&self.side.to_be_bytes());
        h[18] = self.rounds;
        h
    }

    /// Parses and validates the fixed header. Plane data is not inspected.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        fn take<'a>(bytes: &'a [u8], at: usize, n: usize, field: &'static str) -> Result<&'a [u8]> {
            bytes.get(at..at + n).ok_or_else(|| Error::Format {
                field,
                reason: format!("truncated envelope: missing field `{field}` at offset {at}"),
            })
        }
        let magic = take(bytes, 0, 4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format {
                field: "magic",
                reason: format!("expected 7DCC, found {magic:02X?}"),
            });
        }
        let version = take(bytes, 4, 1, "version")?[0];
        if version != VERSION {
            return Err(Error::Format {
                field: "version",
                reason: format!("unsupported version {version}"),
            });
        }
        let kind = take(bytes, 5, 1, "kind")?[0];
        let payload = match kind {
            0 => {
                let len = u64::from_be_bytes(take(bytes, 6, 8, "length")?.try_into().unwrap());
                if len == 0 {
                    return Err(Error::Format {
                        field: "length",
                        reason: "byte payload must be non-empty".into(),
                    });
                }
                Payload::Bytes { len }
            }
            1 => {
                let width = u32::from_be_bytes(take(bytes, 6, 4, "M")?.try_into().unwrap());
                let height = u32::from_be_bytes(take(bytes, 10, 4, "N")?.try_into().unwrap());
                if width == 0 || height == 0 {
                    return Err(Error::Format {
                        field: if width == 0 { "M" } else { "N" },
                        reason: "image dimensions must be positive".into(),
                    });
                }
                Payload::Image { width, height }
            }
            other => {
                return Err(Error::Format {
                    field: "kind",
                    reason: format!("unknown payload kind {other}"),
                })
            }
        };
        let side = u32::from_be_bytes(take(bytes, 14, 4, "L")?.try_into().unwrap());
        if side as u64 != payload.side() {
            return Err(Error::Format {
                field: "L",
                reason: format!("declared L = {side} but dimensions require {}", payload.side()),
            });
        }
        let rounds = take(bytes, 18, 1, "k")?[0];
        if rounds == 0 {
            return Err(Error::Format {
                field: "k",
                reason: "Arnold rounds must be at least 1".into(),
            });
        }
        Ok(EnvelopeHeader {
            payload,
            side,
            rounds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherEnvelope {
    pub header: EnvelopeHeader,
    /// Each `L * L` bytes; R, G, B order for images.
    pub planes: Vec<Vec<u8>>,
}

impl CipherEnvelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.header.planes_len() as usize);
        out.extend_from_slice(&self.header.to_bytes());
        for p in &self.planes {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = EnvelopeHeader::parse(bytes)?;
        let body = &bytes[HEADER_LEN..];
        check_body_len(&header, body.len() as u64)?;
        let plane = header.side as usize * header.side as usize;
        let planes = body.chunks_exact(plane.max(1)).map(<[u8]>::to_vec).collect();
        Ok(CipherEnvelope { header, planes })
    }
}

/// Compares the declared plane size with what is actually present.
pub fn check_body_len(header: &EnvelopeHeader, available: u64) -> Result<()> {
    let want = header.planes_len();
    if available < want {
        return Err(Error::Format {
            field: "planes",
            reason: format!("size mismatch: L = {} needs {want} plane bytes, found {available}", header.side),
        });
    }
    if available > want {
        return Err(Error::Format {
            field: "planes",
            reason: format!("{} trailing bytes after the last plane", available - want),
        });
    }
    Ok(())
}
