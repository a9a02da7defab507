//! Pixel rectangles, the `[l,t][r,b]` bounds grammar, and dp arithmetic.
//!
//! Everything downstream (hierarchy alignment, cropping, the audit) works in
//! screen pixel coordinates with the origin at the top-left. Rects are
//! validated at construction: degenerate or negative rects never enter the
//! pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default screen density (px per dp), 420-dpi class. Overridable per run.
pub const DEFAULT_DENSITY: f64 = 2.625;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("malformed bounds {0:?}: expected \"[l,t][r,b]\"")]
    MalformedBounds(String),
    #[error("degenerate bounds [{left},{top}][{right},{bottom}]: left < right and top < bottom required")]
    DegenerateBounds {
        left: i64,
        top: i64,
        right: i64,
        bottom: i64,
    },
    #[error("negative coordinate {0} in bounds")]
    NegativeCoordinate(i64),
}

/// Axis-aligned pixel rectangle in screen coordinates, origin top-left.
///
/// Invariants (enforced by [`Rect::new`] and [`parse_bounds`]):
/// left < right, top < bottom, all coordinates >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Rect {
    pub fn new(left: i64, top: i64, right: i64, bottom: i64) -> Result<Self, BoundsError> {
        for v in [left, top, right, bottom] {
            if v < 0 {
                return Err(BoundsError::NegativeCoordinate(v));
            }
            if v > i32::MAX as i64 {
                return Err(BoundsError::MalformedBounds(format!(
                    "coordinate {v} out of range"
                )));
            }
        }
        if left >= right || top >= bottom {
            return Err(BoundsError::DegenerateBounds {
                left,
                top,
                right,
                bottom,
            });
        }
        Ok(Rect {
            left: left as i32,
            top: top as i32,
            right: right as i32,
            bottom: bottom as i32,
        })
    }

    pub fn width(&self) -> u32 {
        (self.right - self.left) as u32
    }

    pub fn height(&self) -> u32 {
        (self.bottom - self.top) as u32
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    /// Containment including equality.
    pub fn contains(&self, other: &Rect) -> bool {
        self.left <= other.left
            && self.top <= other.top
            && self.right >= other.right
            && self.bottom >= other.bottom
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}][{},{}]",
            self.left, self.top, self.right, self.bottom
        )
    }
}

/// Parse the `[l,t][r,b]` bounds grammar. Whitespace is tolerated around
/// every delimiter; anything else is a grammar violation.
pub fn parse_bounds(text: &str) -> Result<Rect, BoundsError> {
    let malformed = || BoundsError::MalformedBounds(text.to_string());
    let mut chars = text.chars().peekable();
    let mut coords = [0i64; 4];

    let skip_ws = |chars: &mut std::iter::Peekable<std::str::Chars>| {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
    };

    for pair in 0..2 {
        skip_ws(&mut chars);
        if chars.next() != Some('[') {
            return Err(malformed());
        }
        for half in 0..2 {
            skip_ws(&mut chars);
            let mut num = String::new();
            if chars.peek() == Some(&'-') {
                num.push(chars.next().unwrap());
            }
            while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                num.push(chars.next().unwrap());
            }
            if num.is_empty() || num == "-" {
                return Err(malformed());
            }
            coords[pair * 2 + half] = num.parse::<i64>().map_err(|_| malformed())?;
            skip_ws(&mut chars);
            let expected = if half == 0 { ',' } else { ']' };
            if chars.next() != Some(expected) {
                return Err(malformed());
            }
        }
    }
    skip_ws(&mut chars);
    if chars.next().is_some() {
        return Err(malformed());
    }

    Rect::new(coords[0], coords[1], coords[2], coords[3])
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("display density must be > 0, got {0}")]
    InvalidDensity(f64),
    #[error("screen dimensions must be positive, got {0}x{1}")]
    InvalidDimensions(u32, u32),
}

/// Screen density and dimensions needed to realize dp <-> px arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayProfile {
    /// Pixels per dp.
    pub density: f64,
    pub screen_width_px: u32,
    pub screen_height_px: u32,
}

impl DisplayProfile {
    pub fn new(
        density: f64,
        screen_width_px: u32,
        screen_height_px: u32,
    ) -> Result<Self, ProfileError> {
        if !density.is_finite() || density <= 0.0 {
            return Err(ProfileError::InvalidDensity(density));
        }
        if screen_width_px == 0 || screen_height_px == 0 {
            return Err(ProfileError::InvalidDimensions(
                screen_width_px,
                screen_height_px,
            ));
        }
        Ok(DisplayProfile {
            density,
            screen_width_px,
            screen_height_px,
        })
    }

    /// True iff the rect lies fully inside the screen.
    pub fn contains(&self, rect: &Rect) -> bool {
        rect.left >= 0
            && rect.top >= 0
            && (rect.right as i64) <= self.screen_width_px as i64
            && (rect.bottom as i64) <= self.screen_height_px as i64
    }
}

/// px -> dp. No rounding; callers round for display only.
pub fn px_to_dp(px: f64, profile: &DisplayProfile) -> f64 {
    px / profile.density
}

/// dp -> px as a real number (the exact inverse of [`px_to_dp`]).
pub fn dp_to_px(dp: f64, profile: &DisplayProfile) -> f64 {
    dp * profile.density
}

/// Render a dp value the way reports state it: whole numbers without a
/// fractional part, everything else with two decimals.
pub fn format_dp(dp: f64) -> String {
    if (dp - dp.round()).abs() < 1e-9 {
        format!("{}", dp.round() as i64)
    } else {
        format!("{dp:.2}")
    }
}
