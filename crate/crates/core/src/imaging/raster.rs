use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};

use super::ImagingError;

/// 8-bit RGB raster, row-major, interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        let expected = width * height * Self::CHANNELS;
        if data.len() != expected {
            return Err(ImagingError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    /// Image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::from_raw(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        let path = path.as_ref();
        let buf = RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| ImagingError::Encode {
                path: path.to_owned(),
                reason: e.to_string(),
            })
    }
}

impl From<RgbImage> for Image {
    fn from(img: RgbImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            data: img.into_raw(),
        }
    }
}

/// Single-channel hole indicator: 255 marks pixels to inpaint, 0 known pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoleMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl HoleMask {
    pub const HOLE: u8 = 255;
    pub const KNOWN: u8 = 0;

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImagingError::BufferSize {
                expected: width * height,
                actual: data.len(),
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v != Self::HOLE && v != Self::KNOWN) {
            return Err(ImagingError::InvalidMaskValue(bad));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_hole(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == Self::HOLE
    }

    pub fn hole_pixel_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == Self::HOLE).count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the hole, if any.
    pub fn hole_bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.is_hole(x, y) {
                    bounds = Some(match bounds {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bounds
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        let path = path.as_ref();
        let buf = GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| ImagingError::Encode {
                path: path.to_owned(),
                reason: e.to_string(),
            })
    }
}

fn decode(path: &Path) -> Result<DynamicImage, ImagingError> {
    if !path.is_file() {
        return Err(ImagingError::NotFound(path.to_owned()));
    }
    let decode_err = |reason: String| ImagingError::Decode {
        path: path.to_owned(),
        reason,
    };
    let reader = ImageReader::open(path)
        .map_err(|e| decode_err(e.to_string()))?
        .with_guessed_format()
        .map_err(|e| decode_err(e.to_string()))?;
    if reader.format() != Some(image::ImageFormat::Png) {
        return Err(decode_err("not a PNG file".into()));
    }
    reader.decode().map_err(|e| decode_err(e.to_string()))
}

/// Decodes a PNG into 8-bit RGB. Gray and paletted inputs are expanded, alpha
/// is dropped, 16-bit samples are reduced to 8 bits.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image, ImagingError> {
    Ok(decode(path.as_ref())?.to_rgb8().into())
}

/// Decodes a PNG mask. Any nonzero sample is treated as hole.
pub fn load_mask(path: impl AsRef<Path>) -> Result<HoleMask, ImagingError> {
    let gray = decode(path.as_ref())?.to_luma8();
    let (w, h) = gray.dimensions();
    let data = gray
        .into_raw()
        .into_iter()
        .map(|v| if v == 0 { HoleMask::KNOWN } else { HoleMask::HOLE })
        .collect();
    HoleMask::from_raw(w as usize, h as usize, data)
}
