//! Files: images, cipher envelopes, Modbus hex frames, CSV.
//!
//! Every writer goes through [`atomic_write`], so a failed command never leaves
//! a truncated output behind.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use image::{ColorType, ImageFormat, ImageReader, RgbImage};

use crate::cipher::envelope::{check_body_len, CipherEnvelope, EnvelopeHeader, HEADER_LEN};
use crate::error::{Error, Result};
use crate::image::ImageRGB;

/// Writes through a temporary file in the destination directory and renames
/// it into place once `f` succeeds.
pub fn atomic_write<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        f(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_csv_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    atomic_write(path, |w| Ok(f(w)?))
}

fn format_name(fmt: Option<ImageFormat>) -> String {
    match fmt {
        Some(ImageFormat::Png) => "PNG".into(),
        Some(ImageFormat::Pnm) => "PPM".into(),
        Some(other) => format!("{other:?}"),
        None => "unknown".into(),
    }
}

fn image_error(format: &str, e: impl std::fmt::Display) -> Error {
    Error::Image {
        format: format.into(),
        reason: e.to_string(),
    }
}

/// Loads an 8-bit PNG or binary PPM. Grayscale becomes three equal planes;
/// alpha channels and 16-bit samples are rejected.
pub fn load_image(path: &Path) -> Result<ImageRGB> {
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(Error::Io)?;
    let fmt = reader.format();
    let name = format_name(fmt);
    if !matches!(fmt, Some(ImageFormat::Png | ImageFormat::Pnm)) {
        return Err(image_error(&name, "unsupported format; expected PNG or binary PPM"));
    }
    let img = reader.decode().map_err(|e| image_error(&name, e))?;
    let (w, h) = (img.width(), img.height());
    match img.color() {
        ColorType::Rgb8 => ImageRGB::from_interleaved(w, h, img.as_bytes()),
        ColorType::L8 => ImageRGB::from_gray(w, h, img.as_bytes()),
        ColorType::Rgba8 | ColorType::La8 => Err(image_error(&name, "alpha channel not supported")),
        other => Err(image_error(&name, format!("unsupported sample depth ({other:?})"))),
    }
}

/// Format follows the extension: `.png`, otherwise binary PPM.
pub fn save_image(img: &ImageRGB, path: &Path) -> Result<()> {
    let fmt = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
        _ => ImageFormat::Pnm,
    };
    let rgb = img.to_interleaved();
    atomic_write(path, |w| match fmt {
        ImageFormat::Png => {
            let buf = RgbImage::from_raw(img.width(), img.height(), rgb)
                .expect("plane sizes are validated on construction");
            buf.write_to(w, fmt).map_err(|e| image_error("PNG", e))
        }
        _ => {
            // netpbm layout: maxval on its own line
            write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
            w.write_all(&rgb)?;
            Ok(())
        }
    })
}

pub fn write_envelope(env: &CipherEnvelope, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(&env.header.to_bytes())?;
        for p in &env.planes {
            w.write_all(p)?;
        }
        Ok(())
    })
}

/// Checks the header against the file size before reading any plane data.
pub fn read_envelope(path: &Path) -> Result<CipherEnvelope> {
    let mut file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut head = Vec::with_capacity(HEADER_LEN);
    (&mut file).take(HEADER_LEN as u64).read_to_end(&mut head)?;
    let header = EnvelopeHeader::parse(&head)?;
    check_body_len(&header, file_len - HEADER_LEN as u64)?;
    let plane = header.side as usize * header.side as usize;
    let mut planes = Vec::with_capacity(header.payload.plane_count());
    for _ in 0..header.payload.plane_count() {
        let mut p = vec![0u8; plane];
        file.read_exact(&mut p)?;
        planes.push(p);
    }
    Ok(CipherEnvelope { header, planes })
}

/// Raw bytes of one Modbus frame (address, function, data, CRC).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModbusFrame(Vec<u8>);

impl ModbusFrame {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::InvalidParameter("Modbus frame must be non-empty".into()));
        }
        Ok(ModbusFrame(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

/// Whitespace-separated octets, each either `0xHH` or bare `HH`.
pub fn parse_modbus_hex(text: &str) -> Result<ModbusFrame> {
    let mut bytes = Vec::new();
    for (index, token) in text.split_whitespace().enumerate() {
        let digits = token
            .strip_prefix("0x")
            .or_else(|| token.strip_prefix("0X"))
            .unwrap_or(token);
        let reason = if digits.len() % 2 == 1 {
            Some(format!("odd-length token {token:?}"))
        } else if digits.len() != 2 {
            Some(format!("expected one octet, got {token:?}"))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::HexParse { index, reason });
        }
        let b = u8::from_str_radix(digits, 16).map_err(|_| Error::HexParse {
            index,
            reason: format!("non-hex token {token:?}"),
        })?;
        bytes.push(b);
    }
    if bytes.is_empty() {
        return Err(Error::HexParse {
            index: 0,
            reason: "empty input".into(),
        });
    }
    ModbusFrame::new(bytes)
}

pub fn format_modbus_hex(frame: &ModbusFrame) -> String {
    format_hex(frame.bytes())
}

/// `0xHH` octets, uppercase, space-separated.
pub fn format_hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|b| format!("0x{b:02X}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modbus_example_frame() {
        let f = parse_modbus_hex("0x13 0x04 0x00 0x00 0x00 0x01 0x32 0xB8").unwrap();
        assert_eq!(f.bytes(), &[19, 4, 0, 0, 0, 1, 50, 184]);
        assert_eq!(format_modbus_hex(&f), "0x13 0x04 0x00 0x00 0x00 0x01 0x32 0xB8");
        assert_eq!(parse_modbus_hex("13 04\n0xb8").unwrap().bytes(), &[0x13, 4, 0xB8]);
    }

    #[test]
    fn modbus_errors_carry_token_index() {
        let idx = |t: &str| match parse_modbus_hex(t) {
            Err(Error::HexParse { index, .. }) => index,
            other => panic!("{other:?}"),
        };
        assert_eq!(idx(""), 0);
        assert_eq!(idx("0x13 0x4"), 1);
        assert_eq!(idx("0x13 0x04 zz"), 2);
        assert_eq!(idx("123"), 0);
    }

    #[test]
    fn ppm_round_trip_and_one_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let planes = [vec![1, 2, 3, 4, 5, 6], vec![7; 6], vec![250, 0, 9, 8, 7, 6]];
        let img = ImageRGB::new(3, 2, planes).unwrap();
        let p = dir.path().join("a.ppm");
        save_image(&img, &p).unwrap();
        assert_eq!(&std::fs::read(&p).unwrap()[..2], b"P6");
        assert_eq!(load_image(&p).unwrap(), img);
        let one = ImageRGB::new(1, 1, [vec![1], vec![2], vec![3]]).unwrap();
        let q = dir.path().join("b.png");
        save_image(&one, &q).unwrap();
        assert_eq!(load_image(&q).unwrap(), one);
    }

    #[test]
    fn rejects_sixteen_bit_and_alpha() {
        let dir = tempfile::tempdir().unwrap();
        let p16 = dir.path().join("deep.png");
        image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(1, 1, vec![1u16, 2, 3])
            .unwrap()
            .save(&p16)
            .unwrap();
        assert!(matches!(load_image(&p16), Err(Error::Image { ref reason, .. }) if reason.contains("depth")));
        let pa = dir.path().join("alpha.png");
        image::RgbaImage::from_raw(1, 1, vec![1, 2, 3, 4]).unwrap().save(&pa).unwrap();
        assert!(matches!(load_image(&pa), Err(Error::Image { ref reason, .. }) if reason.contains("alpha")));
    }

    #[test]
    fn gray_is_promoted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        image::GrayImage::from_raw(2, 1, vec![10, 20]).unwrap().save(&p).unwrap();
        let img = load_image(&p).unwrap();
        assert!(img.planes().iter().all(|pl| pl == &vec![10, 20]));
    }

    #[test]
    fn envelope_file_validation() {
        let dir = tempfile::tempdir().unwrap();
        let env = crate::cipher::encrypt_bytes(&[1, 2, 3, 4, 5], &crate::keystream::Key::canonical()).unwrap();
        let p = dir.path().join("e.7dcc");
        write_envelope(&env, &p).unwrap();
        assert_eq!(read_envelope(&p).unwrap(), env);
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.pop();
        std::fs::write(&p, &bytes).unwrap();
        assert!(matches!(read_envelope(&p), Err(Error::Format { field: "planes", .. })));
        // hostile side claim must not allocate
        let mut hostile = env.header.to_bytes().to_vec();
        hostile[5] = 1;
        hostile[6..14].copy_from_slice(&[0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF]);
        hostile[14..18].copy_from_slice(&u32::MAX.to_be_bytes());
        std::fs::write(&p, &hostile).unwrap();
        assert!(matches!(read_envelope(&p), Err(Error::Format { field: "planes", .. })));
    }
}
