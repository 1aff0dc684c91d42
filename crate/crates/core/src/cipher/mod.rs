//! Permutation, Arnold scrambling and XOR diffusion, for RGB images and raw
//! byte buffers.
//!
//! Every plane (R, G, B for images; the single plane for bytes) goes through
//!
//! 1. keyed Fisher-Yates permutation of its `n` bytes,
//! 2. padding to `L * L` bytes with keystream bytes,
//! 3. `k` rounds of the Arnold map with `A = next_uint_below(L)` then
//!    `B = next_uint_below(L)`,
//! 4. seven XOR passes over a step-aligned diffusion block.
//!
//! One keystream runs through all planes in that order (plane R's four stages,
//! then G's, then B's). Decryption regenerates the same draws and undoes the
//! stages in reverse.

pub mod arnold;
pub mod diffusion;
pub mod envelope;
pub mod permutation;

pub use arnold::{arnold_forward, arnold_inverse, ArnoldParams};
pub use diffusion::{apply_passes, diffuse, draw_diffusion_block, DiffusionBlock, NATURAL_ORDER};
pub use envelope::{CipherEnvelope, EnvelopeHeader, Payload};
pub use permutation::{invert_permutation, keyed_permutation, permute, unpermute};

use crate::error::{Error, Result};
use crate::image::ImageRGB;
use crate::keystream::{Key, KeystreamGenerator};

pub const DEFAULT_ROUNDS: u8 = 3;

/// Everything one plane draws from the keystream, in draw order.
struct PlaneSchedule {
    perm: Vec<usize>,
    padding: Vec<u8>,
    arnold: ArnoldParams,
    block: DiffusionBlock,
}

impl PlaneSchedule {
    fn draw(g: &mut KeystreamGenerator, n: usize, side: u64, rounds: u8) -> Result<Self> {
        let cells = (side * side) as usize;
        let perm = keyed_permutation(n, g)?;
        let mut padding = vec![0u8; cells - n];
        g.fill(&mut padding)?;
        let a = g.next_uint_below(side)?;
        let b = g.next_uint_below(side)?;
        let arnold = ArnoldParams::new(a, b, side, rounds)?;
        let block = draw_diffusion_block(g, cells)?;
        Ok(PlaneSchedule {
            perm,
            padding,
            arnold,
            block,
        })
    }

    fn encrypt(self, plane: &[u8]) -> Result<Vec<u8>> {
        let mut buf = permute(plane, &self.perm);
        buf.extend_from_slice(&self.padding);
        let mut out = arnold_forward(&buf, &self.arnold)?;
        apply_passes(&mut out, &self.block, &NATURAL_ORDER);
        Ok(out)
    }

    fn decrypt(self, cipher: &[u8]) -> Result<Vec<u8>> {
        let mut buf = cipher.to_vec();
        apply_passes(&mut buf, &self.block, &NATURAL_ORDER);
        let mut unscrambled = arnold_inverse(&buf, &self.arnold)?;
        unscrambled.truncate(self.perm.len());
        Ok(unpermute(&unscrambled, &self.perm))
    }
}

fn side_u32(side: u64) -> Result<u32> {
    u32::try_from(side).map_err(|_| Error::Shape(format!("padded side {side} exceeds u32")))
}

pub fn encrypt_image(img: &ImageRGB, key: &Key) -> Result<CipherEnvelope> {
    encrypt_image_with(img, key, DEFAULT_ROUNDS)
}

pub fn encrypt_image_with(img: &ImageRGB, key: &Key, rounds: u8) -> Result<CipherEnvelope> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("Arnold rounds must be at least 1".into()));
    }
    let payload = Payload::Image {
        width: img.width(),
        height: img.height(),
    };
    let side = payload.side();
    let mut g = KeystreamGenerator::new(key)?;
    let mut planes = Vec::with_capacity(3);
    for plane in img.planes() {
        let schedule = PlaneSchedule::draw(&mut g, plane.len(), side, rounds)?;
        planes.push(schedule.encrypt(plane)?);
    }
    Ok(CipherEnvelope {
        header: EnvelopeHeader {
            payload,
            side: side_u32(side)?,
            rounds,
        },
        planes,
    })
}

fn check_envelope(env: &CipherEnvelope, want_image: bool) -> Result<()> {
    let h = &env.header;
    if matches!(h.payload, Payload::Image { .. }) != want_image {
        return Err(Error::Format {
            field: "kind",
            reason: format!(
                "expected a {} envelope",
                if want_image { "image" } else { "bytes" }
            ),
        });
    }
    if h.side as u64 != h.payload.side() {
        return Err(Error::Format {
            field: "L",
            reason: "side does not match dimensions".into(),
        });
    }
    let cells = h.side as usize * h.side as usize;
    if env.planes.len() != h.payload.plane_count() || env.planes.iter().any(|p| p.len() != cells) {
        return Err(Error::Format {
            field: "planes",
            reason: "plane count or size does not match header".into(),
        });
    }
    Ok(())
}

/// Wrong keys are not detected: they decrypt to noise.
pub fn decrypt_image(env: &CipherEnvelope, key: &Key) -> Result<ImageRGB> {
    check_envelope(env, true)?;
    let (width, height) = match env.header.payload {
        Payload::Image { width, height } => (width, height),
        Payload::Bytes { .. } => unreachable!(),
    };
    let n = width as usize * height as usize;
    let side = env.header.side as u64;
    let mut g = KeystreamGenerator::new(key)?;
    let mut planes: [Vec<u8>; 3] = Default::default();
    for (out, cipher) in planes.iter_mut().zip(&env.planes) {
        let schedule = PlaneSchedule::draw(&mut g, n, side, env.header.rounds)?;
        *out = schedule.decrypt(cipher)?;
    }
    ImageRGB::new(width, height, planes)
}

pub fn encrypt_bytes(data: &[u8], key: &Key) -> Result<CipherEnvelope> {
    encrypt_bytes_with(data, key, DEFAULT_ROUNDS)
}

pub fn encrypt_bytes_with(data: &[u8], key: &Key, rounds: u8) -> Result<CipherEnvelope> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("cannot encrypt an empty buffer".into()));
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("Arnold rounds must be at least 1".into()));
    }
    let payload = Payload::Bytes {
        len: data.len() as u64,
    };
    let side = payload.side();
    let side32 = side_u32(side)?;
    let mut g = KeystreamGenerator::new(key)?;
    let schedule = PlaneSchedule::draw(&mut g, data.len(), side, rounds)?;
    Ok(CipherEnvelope {
        header: EnvelopeHeader {
            payload,
            side: side32,
            rounds,
        },
        planes: vec![schedule.encrypt(data)?],
    })
}

pub fn decrypt_bytes(env: &CipherEnvelope, key: &Key) -> Result<Vec<u8>> {
    check_envelope(env, false)?;
    let n = env.header.payload.plane_len() as usize;
    let mut g = KeystreamGenerator::new(key)?;
    let schedule = PlaneSchedule::draw(&mut g, n, env.header.side as u64, env.header.rounds)?;
    schedule.decrypt(&env.planes[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{State7, SystemParams};

    fn gradient(w: u32, h: u32) -> ImageRGB {
        let n = (w * h) as usize;
        let planes = std::array::from_fn(|c| {
            (0..n)
                .map(|i| ((i % w as usize) * 3 + (i / w as usize) * 5 + c * 40) as u8)
                .collect()
        });
        ImageRGB::new(w, h, planes).unwrap()
    }

    #[test]
    fn image_round_trip_non_square() {
        let img = gradient(7, 4);
        let env = encrypt_image(&img, &Key::canonical()).unwrap();
        assert_eq!(env.header.side, 7);
        assert!(env.planes.iter().all(|p| p.len() == 49));
        assert_eq!(decrypt_image(&env, &Key::canonical()).unwrap(), img);
    }

    #[test]
    fn one_pixel_round_trip() {
        let img = ImageRGB::new(1, 1, [vec![9], vec![200], vec![0]]).unwrap();
        let env = encrypt_image(&img, &Key::canonical()).unwrap();
        assert_eq!(decrypt_image(&env, &Key::canonical()).unwrap(), img);
    }

    #[test]
    fn modbus_frame_round_trip() {
        let frame = [0x13, 0x04, 0x00, 0x00, 0x00, 0x01, 0x32, 0xB8];
        let env = encrypt_bytes(&frame, &Key::canonical()).unwrap();
        assert_eq!(env.header.side, 3);
        assert_ne!(&env.planes[0][..8], &frame);
        assert_eq!(decrypt_bytes(&env, &Key::canonical()).unwrap(), frame);
    }

    #[test]
    fn single_byte_round_trip() {
        let env = encrypt_bytes(&[42], &Key::canonical()).unwrap();
        assert_eq!(env.header.side, 1);
        assert_eq!(decrypt_bytes(&env, &Key::canonical()).unwrap(), vec![42]);
    }

    #[test]
    fn deterministic_and_length_independent_of_content() {
        let a = encrypt_bytes(&[1u8; 50], &Key::canonical()).unwrap();
        let b = encrypt_bytes(&[1u8; 50], &Key::canonical()).unwrap();
        let c = encrypt_bytes(&[7u8; 50], &Key::canonical()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes().len(), c.to_bytes().len());
    }

    #[test]
    fn kind_mismatch_rejected() {
        let env = encrypt_bytes(&[1, 2, 3], &Key::canonical()).unwrap();
        assert!(matches!(
            decrypt_image(&env, &Key::canonical()),
            Err(Error::Format { field: "kind", .. })
        ));
        assert!(encrypt_bytes(&[], &Key::canonical()).is_err());
    }

    #[test]
    fn parameter_key_sensitivity() {
        let img = gradient(16, 16);
        let key = Key::canonical();
        let env = encrypt_image(&img, &key).unwrap();
        let wrong = Key::new(
            State7::splat(0.1),
            SystemParams {
                alpha: 10.00001,
                ..SystemParams::CANONICAL
            },
        )
        .unwrap();
        let out = decrypt_image(&env, &wrong).unwrap();
        let same = out
            .planes()
            .iter()
            .zip(img.planes())
            .flat_map(|(a, b)| a.iter().zip(b))
            .filter(|(a, b)| a == b)
            .count();
        assert!(same < 30, "{same} of 768 bytes survived a wrong key");
    }
}
