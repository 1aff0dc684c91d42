//! Planar 8-bit RGB raster.

use crate::error::{Error, Result};

/// Three row-major planes (R, G, B) of `width * height` bytes each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRGB {
    width: u32,
    height: u32,
    planes: [Vec<u8>; 3],
}

/// Borrowed single-channel view.
#[derive(Debug, Clone, Copy)]
pub struct PlaneRef<'a> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [u8],
}

impl<'a> PlaneRef<'a> {
    pub fn new(width: usize, height: usize, data: &'a [u8]) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "plane of {width}x{height} needs {} bytes, got {}",
                width.saturating_mul(height),
                data.len()
            )));
        }
        Ok(PlaneRef {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }
}

impl ImageRGB {
    pub fn new(width: u32, height: u32, planes: [Vec<u8>; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        if width == 0 || height == 0 {
            return Err(Error::Shape("image dimensions must be positive".into()));
        }
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::Shape(format!(
                "each plane of a {width}x{height} image needs {n} bytes"
            )));
        }
        Ok(ImageRGB {
            width,
            height,
            planes,
        })
    }

    /// From RGBRGB... pixel data.
    pub fn from_interleaved(width: u32, height: u32, rgb: &[u8]) -> Result<Self> {
        let n = width as usize * height as usize;
        if rgb.len() != 3 * n {
            return Err(Error::Shape(format!(
                "interleaved {width}x{height} RGB needs {} bytes, got {}",
                3 * n,
                rgb.len()
            )));
        }
        let planes = std::array::from_fn(|c| rgb.iter().skip(c).step_by(3).copied().collect());
        Self::new(width, height, planes)
    }

    /// Grayscale promoted to three identical planes.
    pub fn from_gray(width: u32, height: u32, gray: &[u8]) -> Result<Self> {
        Self::new(width, height, [gray.to_vec(), gray.to_vec(), gray.to_vec()])
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let n = self.pixel_count();
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            out.extend(self.planes.iter().map(|p| p[i]));
        }
        out
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<u8>; 3] {
        &self.planes
    }

    pub fn channel(&self, c: usize) -> PlaneRef<'_> {
        PlaneRef {
            width: self.width as usize,
            height: self.height as usize,
            data: &self.planes[c],
        }
    }

    pub fn into_planes(self) -> [Vec<u8>; 3] {
        self.planes
    }
}
