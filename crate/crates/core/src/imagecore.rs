//! Float image buffers, bilinear sampling, inverse-map warping, and 8-bit
//! PNG I/O.
//!
//! Pixel data is `f32` in `[0, 1]`; all geometry passed to the warper stays
//! in `f64`. Pixel centers sit at integer coordinates, so sampling at
//! `(x, y) = (3.0, 7.0)` returns pixel `(3, 7)` exactly.

use std::io::Cursor;
use std::path::Path;

/// Errors from image buffer construction, warping, and PNG I/O.
#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be nonzero, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("channel count must be 1 or 3, got {0}")]
    BadChannelCount(u8),
    #[error("data length {got} does not match {width}x{height}x{channels}")]
    DataLengthMismatch { width: u32, height: u32, channels: u8, got: usize },
    #[error("unsupported PNG pixel format {0}; only 8-bit gray or color is accepted")]
    UnsupportedPixelFormat(&'static str),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("PNG codec error: {0}")]
    Codec(#[from] image::ImageError),
}

/// A dense row-major image with interleaved channels and `f32` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Zero-filled buffer. Channels must be 1 (gray) or 3 (color).
    pub fn new(width: u32, height: u32, channels: u8) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyImage { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadChannelCount(channels));
        }
        let len = width as usize * height as usize * channels as usize;
        Ok(Self { width, height, channels, data: vec![0.0; len] })
    }

    /// Wrap an existing sample vector laid out row-major, channels interleaved.
    pub fn from_vec(
        width: u32,
        height: u32,
        channels: u8,
        data: Vec<f32>,
    ) -> Result<Self, ImageError> {
        let mut img = Self::new(width, height, channels)?;
        if data.len() != img.data.len() {
            return Err(ImageError::DataLengthMismatch {
                width,
                height,
                channels,
                got: data.len(),
            });
        }
        img.data = data;
        Ok(img)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Samples of the pixel at integer coordinates; length = channel count.
    pub fn pixel(&self, x: u32, y: u32) -> &[f32] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels as usize]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, value: &[f32]) {
        let i = self.index(x, y);
        let n = self.channels as usize;
        self.data[i..i + n].copy_from_slice(&value[..n]);
    }

    /// Bilinear sample at a continuous coordinate, clamped to the image
    /// rectangle `[0, w-1] x [0, h-1]` first. Returns up to 3 channels;
    /// unused trailing channels are zero.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f32; 3] {
        let x = x.clamp(0.0, f64::from(self.width - 1));
        let y = y.clamp(0.0, f64::from(self.height - 1));
        let x0 = x.floor();
        let y0 = y.floor();
        let tx = x - x0;
        let ty = y - y0;
        let x0 = x0 as u32;
        let y0 = y0 as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);

        let mut out = [0.0f32; 3];
        let n = self.channels as usize;
        let p00 = self.index(x0, y0);
        let p10 = self.index(x1, y0);
        let p01 = self.index(x0, y1);
        let p11 = self.index(x1, y1);
        for (c, slot) in out.iter_mut().enumerate().take(n) {
            let top = f64::from(self.data[p00 + c]) * (1.0 - tx) + f64::from(self.data[p10 + c]) * tx;
            let bot = f64::from(self.data[p01 + c]) * (1.0 - tx) + f64::from(self.data[p11 + c]) * tx;
            *slot = (top * (1.0 - ty) + bot * ty) as f32;
        }
        out
    }

    /// Decode an 8-bit gray or color PNG; samples become `k / 255`.
    ///
    /// An alpha channel is dropped. 16-bit and float formats are rejected
    /// rather than silently truncated.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?;
        let (w, h, channels, raw): (u32, u32, u8, Vec<u8>) = match decoded {
            image::DynamicImage::ImageLuma8(img) => {
                let (w, h) = img.dimensions();
                (w, h, 1, img.into_raw())
            }
            image::DynamicImage::ImageLumaA8(img) => {
                let (w, h) = img.dimensions();
                let raw = img.into_raw().chunks_exact(2).map(|p| p[0]).collect();
                (w, h, 1, raw)
            }
            image::DynamicImage::ImageRgb8(img) => {
                let (w, h) = img.dimensions();
                (w, h, 3, img.into_raw())
            }
            image::DynamicImage::ImageRgba8(img) => {
                let (w, h) = img.dimensions();
                let raw = img
                    .into_raw()
                    .chunks_exact(4)
                    .flat_map(|p| [p[0], p[1], p[2]])
                    .collect();
                (w, h, 3, raw)
            }
            other => {
                return Err(ImageError::UnsupportedPixelFormat(match other {
                    image::DynamicImage::ImageLuma16(_) => "16-bit gray",
                    image::DynamicImage::ImageLumaA16(_) => "16-bit gray+alpha",
                    image::DynamicImage::ImageRgb16(_) => "16-bit color",
                    image::DynamicImage::ImageRgba16(_) => "16-bit color+alpha",
                    _ => "non-8-bit",
                }))
            }
        };
        let data = raw.iter().map(|&k| f32::from(k) / 255.0).collect();
        Self::from_vec(w, h, channels, data)
    }

    /// Encode as an 8-bit PNG; each sample is clamped to `[0, 1]` and
    /// quantized as `round(v * 255)`.
    pub fn encode_png(&self) -> Result<Vec<u8>, ImageError> {
        let raw: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (f64::from(v).clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let mut out = Cursor::new(Vec::new());
        match self.channels {
            1 => {
                let img = image::GrayImage::from_raw(self.width, self.height, raw)
                    .expect("raw length matches dimensions");
                img.write_to(&mut out, image::ImageFormat::Png)?;
            }
            _ => {
                let img = image::RgbImage::from_raw(self.width, self.height, raw)
                    .expect("raw length matches dimensions");
                img.write_to(&mut out, image::ImageFormat::Png)?;
            }
        }
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|source| ImageError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// An output-to-source coordinate map driving [`warp`].
///
/// `source_coord(u, v)` answers: which continuous source location does
/// output pixel `(u, v)` show?
pub trait InverseMap {
    fn output_width(&self) -> u32;
    fn output_height(&self) -> u32;
    fn source_coord(&self, u: u32, v: u32) -> (f64, f64);
}

/// Resample `src` through an inverse coordinate map.
///
/// An output pixel is filled with zeros when its source coordinate lands a
/// full pixel or more outside the image, i.e. outside the open rectangle
/// `(-1, w) x (-1, h)`; inside it, sampling clamps at the border.
pub fn warp(src: &ImageBuffer, map: &impl InverseMap) -> Result<ImageBuffer, ImageError> {
    let mut out = ImageBuffer::new(map.output_width(), map.output_height(), src.channels())?;
    let w = f64::from(src.width());
    let h = f64::from(src.height());
    let n = src.channels() as usize;
    for v in 0..out.height() {
        for u in 0..out.width() {
            let (x, y) = map.source_coord(u, v);
            if x > -1.0 && x < w && y > -1.0 && y < h {
                let s = src.sample_bilinear(x, y);
                out.set_pixel(u, v, &s[..n]);
            }
        }
    }
    Ok(out)
}
