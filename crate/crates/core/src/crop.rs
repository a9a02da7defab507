//! Visual grounding: padded screenshot crops around a violation's bounds.

use std::path::Path;

use image::RgbaImage;
use thiserror::Error;

use crate::geometry::{DisplayProfile, Rect};

#[derive(Debug, Error)]
pub enum CropError {
    #[error("crop {crop} exceeds the {width}x{height} image")]
    CropOutOfBounds { crop: Rect, width: u32, height: u32 },
    #[error("image decode failed: {0}")]
    ImageDecodeError(String),
    #[error("image encode failed: {0}")]
    ImageEncodeError(String),
}

/// Pad the bounds by 20% of the extent along each axis, per side, then clamp
/// to the screen. Horizontal padding = round(0.2 * width), vertical =
/// round(0.2 * height); rounding is half-away-from-zero.
pub fn compute_crop(bounds: &Rect, profile: &DisplayProfile) -> Rect {
    debug_assert!(
        profile.contains(bounds),
        "bounds must lie inside the screen"
    );
    let pad_h = (0.2 * bounds.width() as f64).round() as i64;
    let pad_v = (0.2 * bounds.height() as f64).round() as i64;
    let left = (bounds.left as i64 - pad_h).max(0);
    let top = (bounds.top as i64 - pad_v).max(0);
    let right = (bounds.right as i64 + pad_h).min(profile.screen_width_px as i64);
    let bottom = (bounds.bottom as i64 + pad_v).min(profile.screen_height_px as i64);
    // padding never shrinks, so the clamped rect stays non-degenerate
    Rect::new(left, top, right, bottom).expect("padded crop cannot degenerate")
}

/// Cut the exact pixel sub-rectangle out of the screenshot. Lossless.
pub fn crop_screenshot(image: &RgbaImage, crop: &Rect) -> Result<RgbaImage, CropError> {
    let (width, height) = image.dimensions();
    if crop.right as u32 > width || crop.bottom as u32 > height {
        return Err(CropError::CropOutOfBounds {
            crop: *crop,
            width,
            height,
        });
    }
    let view = image::imageops::crop_imm(
        image,
        crop.left as u32,
        crop.top as u32,
        crop.width(),
        crop.height(),
    );
    Ok(view.to_image())
}

pub fn load_screenshot(path: &Path) -> Result<RgbaImage, CropError> {
    let img = image::open(path).map_err(|e| CropError::ImageDecodeError(e.to_string()))?;
    Ok(img.to_rgba8())
}

/// Encode as PNG. The encoder is deterministic for identical pixel input.
pub fn encode_png(image: &RgbaImage) -> Result<Vec<u8>, CropError> {
    let mut bytes = Vec::new();
    image
        .write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .map_err(|e| CropError::ImageEncodeError(e.to_string()))?;
    Ok(bytes)
}
