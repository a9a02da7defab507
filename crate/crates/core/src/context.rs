//! Grounded context assembly: locate the target, slice the hierarchy, and
//! crop the screenshot for one violation.

use image::RgbaImage;
use thiserror::Error;

use crate::crop::{compute_crop, crop_screenshot, CropError};
use crate::geometry::{DisplayProfile, Rect};
use crate::hierarchy::{locate_target, TargetError, ViewNode};
use crate::scan::RawViolation;
use crate::slice::{build_slice, SemanticSlice};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Crop(#[from] CropError),
    #[error("screenshot is {got_w}x{got_h} but the display profile says {want_w}x{want_h}")]
    ScreenshotMismatch {
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
}

/// The dual-modal evidence for one violation: the semantic slice plus the
/// padded screenshot crop.
#[derive(Debug, Clone)]
pub struct GroundedContext {
    pub slice: SemanticSlice,
    pub crop_rect: Rect,
    pub crop_image: RgbaImage,
    pub screen_id: String,
}

/// Reconstruct the violation's environment from the hierarchy and screenshot.
pub fn ground_context(
    root: &ViewNode,
    violation: &RawViolation,
    profile: &DisplayProfile,
    screenshot: &RgbaImage,
) -> Result<GroundedContext, ContextError> {
    let (got_w, got_h) = screenshot.dimensions();
    if got_w != profile.screen_width_px || got_h != profile.screen_height_px {
        return Err(ContextError::ScreenshotMismatch {
            got_w,
            got_h,
            want_w: profile.screen_width_px,
            want_h: profile.screen_height_px,
        });
    }
    let target = locate_target(root, &violation.bounds)?;
    let slice = build_slice(root, target);
    let crop_rect = compute_crop(&violation.bounds, profile);
    let crop_image = crop_screenshot(screenshot, &crop_rect)?;
    Ok(GroundedContext {
        slice,
        crop_rect,
        crop_image,
        screen_id: violation.screen_id.clone(),
    })
}
