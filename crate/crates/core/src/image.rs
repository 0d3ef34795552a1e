//! 8-bit grayscale image containers and binary netpbm I/O.
//!
//! Matching inputs are grayscale PGM (magic `P5`, maxval 255). Color is
//! debug output only, written as binary PPM (`P6`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::camera::CameraRig;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad image data: {0}")]
    Format(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// All-black image of the given size.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if pixels.len() != width as usize * height as usize {
            return Err(ImageError::DimensionMismatch(format!(
                "{} pixels for a {}x{} image",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        let w = self.width as usize;
        &self.pixels[y * w..(y + 1) * w]
    }

    /// Splits a side-by-side frame (left half | right half) into its two
    /// views. The width must be even.
    pub fn split_side_by_side(&self) -> Result<(GrayImage, GrayImage), ImageError> {
        if self.width % 2 != 0 {
            return Err(ImageError::Format(format!(
                "side-by-side image width {} is odd",
                self.width
            )));
        }
        let half = self.width / 2;
        let mut left = GrayImage::new(half, self.height);
        let mut right = GrayImage::new(half, self.height);
        for y in 0..self.height {
            for x in 0..half {
                left.set(x, y, self.get(x, y));
                right.set(x, y, self.get(x + half, y));
            }
        }
        Ok((left, right))
    }

    /// Reads a binary PGM (`P5`, maxval 255).
    pub fn read_pgm<R: BufRead>(reader: &mut R) -> Result<Self, ImageError> {
        let magic = read_token(reader)?;
        if magic != "P5" {
            return Err(ImageError::Format(format!("expected magic P5, got {magic:?}")));
        }
        let width: u32 = parse_header_number(reader, "width")?;
        let height: u32 = parse_header_number(reader, "height")?;
        let maxval: u32 = parse_header_number(reader, "maxval")?;
        if maxval != 255 {
            return Err(ImageError::Format(format!("unsupported maxval {maxval}, expected 255")));
        }
        let mut pixels = vec![0u8; width as usize * height as usize];
        reader.read_exact(&mut pixels)?;
        Self::from_pixels(width, height, pixels)
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let mut reader = BufReader::new(File::open(path)?);
        Self::read_pgm(&mut reader)
    }

    pub fn write_pgm<W: Write>(&self, writer: &mut W) -> Result<(), ImageError> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_pgm(&mut writer)
    }
}

/// Row-major interleaved RGB image, used only for debug frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn from_gray(gray: &GrayImage) -> Self {
        let mut img = Self::new(gray.width(), gray.height());
        for (i, &v) in gray.pixels().iter().enumerate() {
            img.pixels[3 * i] = v;
            img.pixels[3 * i + 1] = v;
            img.pixels[3 * i + 2] = v;
        }
        img
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn write_ppm<W: Write>(&self, writer: &mut W) -> Result<(), ImageError> {
        write!(writer, "P6\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_ppm(&mut writer)
    }
}

/// A rectified stereo pair together with the rig that produced it. Both
/// images must match the rig dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair {
    pub left: GrayImage,
    pub right: GrayImage,
    pub rig: CameraRig,
}

impl StereoPair {
    pub fn new(left: GrayImage, right: GrayImage, rig: CameraRig) -> Result<Self, ImageError> {
        if left.width() != right.width() || left.height() != right.height() {
            return Err(ImageError::DimensionMismatch(format!(
                "left {}x{} vs right {}x{}",
                left.width(),
                left.height(),
                right.width(),
                right.height()
            )));
        }
        if left.width() != rig.width_px || left.height() != rig.height_px {
            return Err(ImageError::DimensionMismatch(format!(
                "images {}x{} vs rig {}x{}",
                left.width(),
                left.height(),
                rig.width_px,
                rig.height_px
            )));
        }
        Ok(Self { left, right, rig })
    }
}

fn read_token<R: BufRead>(reader: &mut R) -> Result<String, ImageError> {
    let mut token = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        match reader.read(&mut byte)? {
            0 => {
                if token.is_empty() {
                    return Err(ImageError::Format("unexpected end of header".into()));
                }
                return Ok(token);
            }
            _ => {}
        }
        let c = byte[0] as char;
        if in_comment {
            if c == '\n' {
                in_comment = false;
            }
            continue;
        }
        if c == '#' && token.is_empty() {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(c);
    }
}

fn parse_header_number<R: BufRead>(reader: &mut R, what: &str) -> Result<u32, ImageError> {
    let token = read_token(reader)?;
    token
        .parse()
        .map_err(|_| ImageError::Format(format!("bad {what} field {token:?}")))
}
