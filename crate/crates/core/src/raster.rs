//! 8-bit raster carriers and PNG I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbaImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbaImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * 4;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "rgba buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(RgbaImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Result<Self> {
        check_dims(width, height)?;
        let n = width as usize * height as usize;
        Ok(RgbaImage {
            width,
            height,
            pixels: rgba.iter().copied().cycle().take(n * 4).collect(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 4] {
        let i = self.index(x, y);
        [
            self.pixels[i],
            self.pixels[i + 1],
            self.pixels[i + 2],
            self.pixels[i + 3],
        ]
    }

    pub fn put(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let i = self.index(x, y);
        self.pixels[i..i + 4].copy_from_slice(&rgba);
    }

    fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    /// Alpha channel as a flat row-major slice iterator.
    pub fn alpha(&self) -> impl Iterator<Item = u8> + '_ {
        self.pixels.chunks_exact(4).map(|p| p[3])
    }

    /// Bit-exact content hash.
    pub fn content_hash(&self) -> String {
        let mut h = blake3::Hasher::new();
        h.update(&self.width.to_le_bytes());
        h.update(&self.height.to_le_bytes());
        h.update(&self.pixels);
        h.finalize().to_hex().to_string()
    }

    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<RgbaImage> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch("crop out of bounds".into()));
        }
        let mut pixels = Vec::with_capacity(w as usize * h as usize * 4);
        for y in y0..y0 + h {
            let start = self.index(x0, y);
            pixels.extend_from_slice(&self.pixels[start..start + w as usize * 4]);
        }
        RgbaImage::new(w, h, pixels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "rgb buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Row-major boolean mask; `true` marks occluder or foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} bits, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self> {
        BinaryMask::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn coverage(&self) -> f64 {
        self.popcount() as f64 / self.bits.len() as f64
    }

    /// `|self ∧ other|`
    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count())
    }

    /// Tight bounding box `(x0, y0, w, h)` of the set bits, if any.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        any.then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<BinaryMask> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch("crop out of bounds".into()));
        }
        let mut bits = Vec::with_capacity(w as usize * h as usize);
        for y in y0..y0 + h {
            let start = y as usize * self.width as usize + x0 as usize;
            bits.extend_from_slice(&self.bits[start..start + w as usize]);
        }
        BinaryMask::new(w, h, bits)
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::DimensionMismatch(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Decodes any 8/16-bit PNG into RGBA8.
pub fn decode_png_rgba(bytes: &[u8], path: &Path) -> Result<RgbaImage> {
    let perr = |m: String| Error::PngDecode {
        path: path.to_path_buf(),
        message: m,
    };
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| perr(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| perr(e.to_string()))?;
    let data = &buf[..info.buffer_size()];
    let n = info.width as usize * info.height as usize;
    let rgba: Vec<u8> = match info.color_type {
        png::ColorType::Rgba => data.to_vec(),
        png::ColorType::Rgb => data
            .chunks_exact(3)
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect(),
        png::ColorType::Grayscale => data.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        png::ColorType::GrayscaleAlpha => data
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0], p[1]])
            .collect(),
        png::ColorType::Indexed => return Err(perr("unexpanded palette image".into())),
    };
    if rgba.len() != n * 4 {
        return Err(perr("unexpected decoded buffer size".into()));
    }
    RgbaImage::new(info.width, info.height, rgba)
}

pub fn read_rgba_png(path: &Path) -> Result<RgbaImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png_rgba(&bytes, path)
}

fn encode_png(width: u32, height: u32, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Default);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::PngEncode(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::PngEncode(e.to_string()))?;
        writer.finish().map_err(|e| Error::PngEncode(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode_rgba_png(img: &RgbaImage) -> Result<Vec<u8>> {
    encode_png(img.width, img.height, png::ColorType::Rgba, &img.pixels)
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>> {
    encode_png(img.width, img.height, png::ColorType::Rgb, &img.pixels)
}

/// Single-channel PNG with values {0, 255}.
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>> {
    let data: Vec<u8> = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_png(mask.width, mask.height, png::ColorType::Grayscale, &data)
}

/// Reads a mask PNG; any gray value of 128 or more counts as set.
pub fn decode_mask_png(bytes: &[u8], path: &Path) -> Result<BinaryMask> {
    let img = decode_png_rgba(bytes, path)?;
    let bits = img.pixels.chunks_exact(4).map(|p| p[0] >= 128).collect();
    BinaryMask::new(img.width, img.height, bits)
}

pub fn read_mask_png(path: &Path) -> Result<BinaryMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask_png(&bytes, path)
}
