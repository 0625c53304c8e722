//! Fixed-range normalized disparity and its on-disk encoding.
//!
//! Depth `Z` between two global planes maps to disparity
//! `y = (1/Z - 1/Z_far) / (1/Z_near - 1/Z_far)`, so the near plane is 1 and
//! the far plane is 0. Disparity images are stored as 16-bit grayscale PNG
//! where code 0 marks an invalid pixel and valid values occupy codes
//! `1..=65535`; the planes travel in a JSON sidecar.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;

pub const DEFAULT_Z_NEAR: f64 = 0.5;
pub const DEFAULT_Z_FAR: f64 = 2.5;

const MAX_CODE: f64 = 65534.0;

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("invalid disparity config: need 0 < z_near < z_far, got ({z_near}, {z_far})")]
    BadConfig { z_near: f64, z_far: f64 },
    #[error("value {value} at pixel ({x}, {y}) is outside {range}")]
    OutOfRange {
        x: usize,
        y: usize,
        value: f64,
        range: String,
    },
    #[error("expected {expected:?} image, got {actual:?}")]
    WrongSpace { expected: DepthSpace, actual: DepthSpace },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl DepthError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DepthError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Global near/far planes in camera units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisparityConfig {
    pub z_near: f64,
    pub z_far: f64,
}

impl Default for DisparityConfig {
    fn default() -> Self {
        Self {
            z_near: DEFAULT_Z_NEAR,
            z_far: DEFAULT_Z_FAR,
        }
    }
}

impl DisparityConfig {
    pub fn new(z_near: f64, z_far: f64) -> Result<Self, DepthError> {
        let cfg = Self { z_near, z_far };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DepthError> {
        if self.z_near > 0.0 && self.z_near < self.z_far && self.z_far.is_finite() {
            Ok(())
        } else {
            Err(DepthError::BadConfig {
                z_near: self.z_near,
                z_far: self.z_far,
            })
        }
    }

    /// Scalar depth → disparity, without range checking.
    #[inline]
    pub fn disparity(&self, z: f64) -> f64 {
        let inv_far = 1.0 / self.z_far;
        (1.0 / z - inv_far) / (1.0 / self.z_near - inv_far)
    }

    /// Scalar disparity → depth, without range checking.
    #[inline]
    pub fn depth(&self, y: f64) -> f64 {
        let inv_far = 1.0 / self.z_far;
        1.0 / (y * (1.0 / self.z_near - inv_far) + inv_far)
    }

    pub fn contains_depth(&self, z: f64) -> bool {
        z >= self.z_near && z <= self.z_far
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSpace {
    MetricDepth,
    NormalizedDisparity,
}

/// Per-pixel depth or disparity with a validity mask. Invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub values: Grid<f64>,
    pub valid: Grid<bool>,
    pub config: DisparityConfig,
    pub space: DepthSpace,
}

impl DepthImage {
    pub fn invalid(width: usize, height: usize, config: DisparityConfig, space: DepthSpace) -> Self {
        Self {
            values: Grid::new(width, height, 0.0),
            valid: Grid::new(width, height, false),
            config,
            space,
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.count()
    }

    fn expect_space(&self, expected: DepthSpace) -> Result<(), DepthError> {
        if self.space == expected {
            Ok(())
        } else {
            Err(DepthError::WrongSpace {
                expected,
                actual: self.space,
            })
        }
    }

    fn map_valid(
        &self,
        space: DepthSpace,
        range: &str,
        accept: impl Fn(f64) -> bool,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, DepthError> {
        let mut out = Self::invalid(self.width(), self.height(), self.config, space);
        for y in 0..self.height() {
            for x in 0..self.width() {
                if !*self.valid.get(x, y) {
                    continue;
                }
                let v = *self.values.get(x, y);
                if !accept(v) {
                    return Err(DepthError::OutOfRange {
                        x,
                        y,
                        value: v,
                        range: range.to_string(),
                    });
                }
                out.values.set(x, y, f(v));
                out.valid.set(x, y, true);
            }
        }
        Ok(out)
    }
}

/// Metric depth → normalized disparity at every valid pixel.
pub fn depth_to_disparity(z: &DepthImage, cfg: &DisparityConfig) -> Result<DepthImage, DepthError> {
    cfg.validate()?;
    z.expect_space(DepthSpace::MetricDepth)?;
    let mut out = z.map_valid(
        DepthSpace::NormalizedDisparity,
        &format!("[{}, {}]", cfg.z_near, cfg.z_far),
        |v| cfg.contains_depth(v),
        |v| cfg.disparity(v),
    )?;
    out.config = *cfg;
    Ok(out)
}

/// Normalized disparity → metric depth at every valid pixel.
pub fn disparity_to_depth(y: &DepthImage, cfg: &DisparityConfig) -> Result<DepthImage, DepthError> {
    cfg.validate()?;
    y.expect_space(DepthSpace::NormalizedDisparity)?;
    let mut out = y.map_valid(
        DepthSpace::MetricDepth,
        "[0, 1]",
        |v| (0.0..=1.0).contains(&v),
        |v| cfg.depth(v),
    )?;
    out.config = *cfg;
    Ok(out)
}

/// Sidecar stored next to every depth PNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub z_near: f64,
    pub z_far: f64,
    pub space: DepthSpace,
}

impl DepthSidecar {
    pub fn config(&self) -> DisparityConfig {
        DisparityConfig {
            z_near: self.z_near,
            z_far: self.z_far,
        }
    }
}

#[inline]
pub fn disparity_code(y: f64) -> u16 {
    (1.0 + (y.clamp(0.0, 1.0) * MAX_CODE).round()) as u16
}

#[inline]
pub fn code_disparity(code: u16) -> f64 {
    (f64::from(code) - 1.0) / MAX_CODE
}

fn png_err(e: impl std::fmt::Display) -> DepthError {
    DepthError::Format(e.to_string())
}

fn write_png(width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<Vec<u8>, DepthError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(depth);
        let mut w = enc.write_header().map_err(png_err)?;
        w.write_image_data(data).map_err(png_err)?;
        w.finish().map_err(png_err)?;
    }
    Ok(out)
}

/// Decoded grayscale PNG: dimensions, bit depth and raw (packed) rows.
fn read_png(bytes: &[u8]) -> Result<(usize, usize, png::BitDepth, Vec<u8>), DepthError> {
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(png::Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| DepthError::Format("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(DepthError::Format(format!(
            "expected grayscale PNG, got {:?}",
            info.color_type
        )));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, info.bit_depth, buf))
}

/// Encode a disparity image as 16-bit grayscale PNG plus sidecar.
pub fn encode_depth_png(img: &DepthImage) -> Result<(Vec<u8>, DepthSidecar), DepthError> {
    img.expect_space(DepthSpace::NormalizedDisparity)?;
    let mut data = Vec::with_capacity(img.values.len() * 2);
    for (v, ok) in img.values.as_slice().iter().zip(img.valid.as_slice()) {
        let code = if *ok { disparity_code(*v) } else { 0 };
        data.extend_from_slice(&code.to_be_bytes());
    }
    let bytes = write_png(img.width(), img.height(), png::BitDepth::Sixteen, &data)?;
    Ok((
        bytes,
        DepthSidecar {
            z_near: img.config.z_near,
            z_far: img.config.z_far,
            space: DepthSpace::NormalizedDisparity,
        },
    ))
}

/// Decode a 16-bit depth PNG. The sidecar is mandatory.
pub fn decode_depth_png(bytes: &[u8], sidecar: Option<&DepthSidecar>) -> Result<DepthImage, DepthError> {
    let sidecar = sidecar.ok_or_else(|| DepthError::Format("missing depth sidecar".into()))?;
    if sidecar.space != DepthSpace::NormalizedDisparity {
        return Err(DepthError::Format("sidecar space must be normalized_disparity".into()));
    }
    let config = sidecar.config();
    config.validate()?;
    let (width, height, bit_depth, data) = read_png(bytes)?;
    if bit_depth != png::BitDepth::Sixteen {
        return Err(DepthError::Format(format!("expected 16-bit PNG, got {bit_depth:?}")));
    }
    let mut img = DepthImage::invalid(width, height, config, DepthSpace::NormalizedDisparity);
    for (i, pair) in data.chunks_exact(2).enumerate() {
        let code = u16::from_be_bytes([pair[0], pair[1]]);
        if code != 0 {
            img.values.as_mut_slice()[i] = code_disparity(code);
            img.valid.as_mut_slice()[i] = true;
        }
    }
    Ok(img)
}

/// Encode a binary mask as 1-bit grayscale PNG.
pub fn encode_mask_png(mask: &Grid<bool>) -> Result<Vec<u8>, DepthError> {
    let stride = mask.width().div_ceil(8);
    let mut data = vec![0u8; stride * mask.height()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if *mask.get(x, y) {
                data[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    write_png(mask.width(), mask.height(), png::BitDepth::One, &data)
}

/// Decode a grayscale PNG mask (1-bit or 8-bit; non-zero means set).
pub fn decode_mask_png(bytes: &[u8]) -> Result<Grid<bool>, DepthError> {
    let (width, height, bit_depth, data) = read_png(bytes)?;
    match bit_depth {
        png::BitDepth::One => {
            let stride = width.div_ceil(8);
            Ok(Grid::from_fn(width, height, |x, y| {
                data[y * stride + x / 8] & (0x80 >> (x % 8)) != 0
            }))
        }
        png::BitDepth::Eight => Ok(Grid::from_fn(width, height, |x, y| data[y * width + x] != 0)),
        other => Err(DepthError::Format(format!("unsupported mask bit depth {other:?}"))),
    }
}

/// Path of the JSON sidecar paired with a depth PNG.
pub fn sidecar_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("json")
}

pub fn write_depth_file(path: &Path, img: &DepthImage) -> Result<(), DepthError> {
    let (bytes, sidecar) = encode_depth_png(img)?;
    std::fs::write(path, bytes).map_err(|e| DepthError::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string(&sidecar).expect("sidecar serialization");
    std::fs::write(&side, json).map_err(|e| DepthError::io(&side, e))
}

pub fn read_depth_file(path: &Path) -> Result<DepthImage, DepthError> {
    let bytes = std::fs::read(path).map_err(|e| DepthError::io(path, e))?;
    let side = sidecar_path(path);
    let sidecar = match std::fs::read_to_string(&side) {
        Ok(text) => Some(
            serde_json::from_str::<DepthSidecar>(&text)
                .map_err(|e| DepthError::Format(format!("{}: {e}", side.display())))?,
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(DepthError::io(&side, e)),
    };
    decode_depth_png(&bytes, sidecar.as_ref())
}

pub fn write_mask_file(path: &Path, mask: &Grid<bool>) -> Result<(), DepthError> {
    let bytes = encode_mask_png(mask)?;
    std::fs::write(path, bytes).map_err(|e| DepthError::io(path, e))
}

pub fn read_mask_file(path: &Path) -> Result<Grid<bool>, DepthError> {
    let bytes = std::fs::read(path).map_err(|e| DepthError::io(path, e))?;
    decode_mask_png(&bytes)
}
