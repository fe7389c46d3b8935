//! Mask file IO: PNG (8-bit grayscale or RGB) and the raw grid format.
//!
//! The raw format is an 8-byte header of two little-endian `u32` values
//! (height, width) followed by `height * width` category-code bytes.

use std::fs;
use std::path::{Path, PathBuf};

use damast_core::mask::{MaskError, Palette, SegmentationMask};
use serde::{Deserialize, Serialize};

const PNG_MAGIC: [u8; 4] = [0x89, b'P', b'N', b'G'];

/// How pixel values map to categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Grayscale PNG or raw grids decode as codes; RGB PNG through the palette.
    #[default]
    Auto,
    /// Single-channel values are category codes.
    Indexed,
    /// RGB values decode through the palette.
    Palette,
}

/// Decoding options shared by every mask-loading entry point.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub mode: MaskMode,
    pub palette: Palette,
    /// Per-channel tolerance for palette matching; zero means exact.
    pub tolerance: u8,
}

/// Errors from mask file IO.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {}: {message}", path.display())]
    Decode { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Mask {
        path: PathBuf,
        #[source]
        source: MaskError,
    },
}

/// Loads a segmentation mask from a PNG or raw-grid file.
pub fn load_mask(path: &Path, options: &LoadOptions) -> Result<SegmentationMask, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    if bytes.len() >= 4 && bytes[..4] == PNG_MAGIC {
        decode_png(path, &bytes, options)
    } else {
        decode_raw(path, &bytes, options)
    }
}

fn decode_png(
    path: &Path,
    bytes: &[u8],
    options: &LoadOptions,
) -> Result<SegmentationMask, IoError> {
    let image = image::load_from_memory(bytes)
        .map_err(|e| IoError::Decode { path: path.into(), message: e.to_string() })?;
    let color = image.color();
    let single_channel = matches!(color, image::ColorType::L8 | image::ColorType::La8);
    let mode = match options.mode {
        MaskMode::Auto if single_channel => MaskMode::Indexed,
        MaskMode::Auto => MaskMode::Palette,
        explicit => explicit,
    };
    match mode {
        MaskMode::Indexed => {
            if !single_channel {
                return Err(IoError::Decode {
                    path: path.into(),
                    message: format!("indexed mode expects a single-channel image, found {color:?}"),
                });
            }
            let gray = image.into_luma8();
            let (width, height) = (gray.width(), gray.height());
            SegmentationMask::from_codes(height, width, gray.as_raw())
                .map_err(|source| IoError::Mask { path: path.into(), source })
        }
        _ => {
            let rgb = image.into_rgb8();
            let (width, height) = (rgb.width(), rgb.height());
            options
                .palette
                .decode_rgb(height, width, rgb.as_raw(), options.tolerance)
                .map_err(|source| IoError::Mask { path: path.into(), source })
        }
    }
}

fn decode_raw(path: &Path, bytes: &[u8], options: &LoadOptions) -> Result<SegmentationMask, IoError> {
    if options.mode == MaskMode::Palette {
        return Err(IoError::Decode {
            path: path.into(),
            message: "palette mode requires an RGB image, not a raw grid".into(),
        });
    }
    if bytes.len() < 8 {
        return Err(IoError::Decode {
            path: path.into(),
            message: format!("raw grid needs an 8-byte header, file has {} bytes", bytes.len()),
        });
    }
    let height = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let expected = height as usize * width as usize;
    let body = &bytes[8..];
    if body.len() != expected {
        return Err(IoError::Decode {
            path: path.into(),
            message: format!(
                "raw grid header says {height}x{width} ({expected} bytes) but body has {}",
                body.len()
            ),
        });
    }
    SegmentationMask::from_codes(height, width, body)
        .map_err(|source| IoError::Mask { path: path.into(), source })
}

/// Writes a mask as an 8-bit grayscale PNG of category codes.
pub fn save_mask_indexed_png(mask: &SegmentationMask, path: &Path) -> Result<(), IoError> {
    let gray = image::GrayImage::from_raw(mask.width(), mask.height(), mask.to_codes())
        .expect("code buffer matches dimensions");
    gray.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::Decode { path: path.into(), message: e.to_string() })
}

/// Writes a mask as an RGB PNG through a palette.
pub fn save_mask_palette_png(
    mask: &SegmentationMask,
    palette: &Palette,
    path: &Path,
) -> Result<(), IoError> {
    let rgb = image::RgbImage::from_raw(mask.width(), mask.height(), palette.encode_rgb(mask))
        .expect("rgb buffer matches dimensions");
    rgb.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::Decode { path: path.into(), message: e.to_string() })
}

/// Writes a mask in the raw grid format.
pub fn save_mask_raw(mask: &SegmentationMask, path: &Path) -> Result<(), IoError> {
    let mut bytes = Vec::with_capacity(8 + mask.to_codes().len());
    bytes.extend_from_slice(&mask.height().to_le_bytes());
    bytes.extend_from_slice(&mask.width().to_le_bytes());
    bytes.extend_from_slice(&mask.to_codes());
    fs::write(path, bytes).map_err(|source| IoError::Write { path: path.into(), source })
}

/// Reads a `R,G,B=category_name` palette config file.
pub fn load_palette_config(path: &Path) -> Result<Palette, IoError> {
    let text =
        fs::read_to_string(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    Palette::parse_config(&text).map_err(|source| IoError::Mask { path: path.into(), source })
}
