//! WCAG relative-luminance contrast between two sRGB colors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid color {0:?}: expected \"#RRGGBB\"")]
pub struct ColorParseError(pub String);

/// 8-bit sRGB triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Srgb {
    pub red: u8,
    pub green: u8,
    pub blue: u8,
}

impl Srgb {
    pub const WHITE: Srgb = Srgb {
        red: 255,
        green: 255,
        blue: 255,
    };
    pub const BLACK: Srgb = Srgb {
        red: 0,
        green: 0,
        blue: 0,
    };

    pub fn new(red: u8, green: u8, blue: u8) -> Self {
        Srgb { red, green, blue }
    }

    /// Parse "#RRGGBB" (leading '#' optional, case-insensitive).
    pub fn from_hex(text: &str) -> Result<Self, ColorParseError> {
        let hex = text.strip_prefix('#').unwrap_or(text);
        if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(ColorParseError(text.to_string()));
        }
        let channel = |range: std::ops::Range<usize>| u8::from_str_radix(&hex[range], 16).unwrap();
        Ok(Srgb::new(channel(0..2), channel(2..4), channel(4..6)))
    }
}

/// sRGB channel (0-255) -> linear light: V/12.92 below the 0.04045 knee,
/// ((V+0.055)/1.055)^2.4 above.
fn channel_to_linear(channel: u8) -> f64 {
    let v = channel as f64 / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Relative luminance: 0.2126 R + 0.7152 G + 0.0722 B over linear channels.
pub fn relative_luminance(color: Srgb) -> f64 {
    0.2126 * channel_to_linear(color.red)
        + 0.7152 * channel_to_linear(color.green)
        + 0.0722 * channel_to_linear(color.blue)
}

/// Contrast ratio (L_lighter + 0.05) / (L_darker + 0.05), in [1.0, 21.0].
/// Symmetric in its arguments.
pub fn contrast_ratio(foreground: Srgb, background: Srgb) -> f64 {
    let lf = relative_luminance(foreground);
    let lb = relative_luminance(background);
    let (lighter, darker) = if lf >= lb { (lf, lb) } else { (lb, lf) };
    (lighter + 0.05) / (darker + 0.05)
}
