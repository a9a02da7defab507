//! Scanner-result ingestion: parse and normalize accessibility-scanner
//! output into typed violations with pixel geometry and per-category metrics.
//!
//! Two input formats are accepted:
//! - the normalized JSON document (`{screen_id, display, violations: [...]}`),
//! - a lenient line-oriented text format with records separated by blank
//!   lines (`Violation:` / `Key/Bounds:` / `Description:` lines, plus an
//!   optional sticky `Screen:` line).

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::contrast::{contrast_ratio, Srgb};
use crate::geometry::{parse_bounds, px_to_dp, DisplayProfile, Rect};

/// Required touch-target extent in dp unless a run overrides it.
pub const DEFAULT_REQUIRED_DP: f64 = 48.0;

/// Violation category. Exactly the three named categories are
/// persona-matchable; `Other` is carried through ingestion and skipped by
/// generation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ViolationCategory {
    TouchTargetSize,
    ContentLabeling,
    ContrastRatio,
    Other(String),
}

impl ViolationCategory {
    pub fn is_matchable(&self) -> bool {
        !matches!(self, ViolationCategory::Other(_))
    }

    /// The three matchable categories, in canonical order.
    pub const MATCHABLE: [ViolationCategory; 3] = [
        ViolationCategory::TouchTargetSize,
        ViolationCategory::ContentLabeling,
        ViolationCategory::ContrastRatio,
    ];
}

impl fmt::Display for ViolationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationCategory::TouchTargetSize => write!(f, "TouchTargetSize"),
            ViolationCategory::ContentLabeling => write!(f, "ContentLabeling"),
            ViolationCategory::ContrastRatio => write!(f, "ContrastRatio"),
            ViolationCategory::Other(tag) => write!(f, "Other({tag})"),
        }
    }
}

impl Serialize for ViolationCategory {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ViolationCategory::Other(tag) => serializer.serialize_str(&format!("Other:{tag}")),
            named => serializer.serialize_str(&named.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ViolationCategory {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(match s.as_str() {
            "TouchTargetSize" => ViolationCategory::TouchTargetSize,
            "ContentLabeling" => ViolationCategory::ContentLabeling,
            "ContrastRatio" => ViolationCategory::ContrastRatio,
            other => {
                ViolationCategory::Other(other.strip_prefix("Other:").unwrap_or(other).to_string())
            }
        })
    }
}

/// Category-specific measurements extracted at ingestion time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ViolationMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_dp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_dp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub foreground_color: Option<Srgb>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_color: Option<Srgb>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing_label: Option<bool>,
}

/// One normalized scanner finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawViolation {
    /// Stable id: first 16 hex chars of sha256(screen_id, category, bounds),
    /// suffixed `-2`, `-3`, ... on within-run duplicates.
    pub id: String,
    pub category: ViolationCategory,
    pub bounds: Rect,
    pub description: String,
    pub metrics: ViolationMetrics,
    pub screen_id: String,
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("schema error{}: {message}", record_suffix(.record))]
    Schema {
        record: Option<usize>,
        message: String,
    },
    #[error("record {record}: bounds {bounds} extend outside the {width}x{height} screen")]
    BoundsOutsideScreen {
        record: usize,
        bounds: Rect,
        width: u32,
        height: u32,
    },
}

fn record_suffix(record: &Option<usize>) -> String {
    match record {
        Some(i) => format!(" in record {i}"),
        None => String::new(),
    }
}

impl ScanError {
    fn schema(record: usize, message: impl Into<String>) -> Self {
        ScanError::Schema {
            record: Some(record),
            message: message.into(),
        }
    }
}

/// Deterministic violation id: lowercase hex digest of
/// (screen_id, category, bounds string), truncated to 16 chars.
pub fn violation_id(screen_id: &str, category: &ViolationCategory, bounds: &Rect) -> String {
    let mut hasher = Sha256::new();
    hasher.update(screen_id.as_bytes());
    hasher.update(b"\x1f");
    hasher.update(category.to_string().as_bytes());
    hasher.update(b"\x1f");
    hasher.update(bounds.to_string().as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

/// Case-insensitive keyword mapping from the scanner's type tag (and, as a
/// fallback, its description) to a category. Total: unknown tags map to
/// `Other(tag)`.
pub fn classify_violation(type_tag: &str, description: &str) -> ViolationCategory {
    let tag = type_tag.to_lowercase();
    let desc = description.to_lowercase();
    let any = |needle: &str| tag.contains(needle) || desc.contains(needle);

    if any("touch target") {
        ViolationCategory::TouchTargetSize
    } else if any("item label") || any("content label") || any("missing label") {
        ViolationCategory::ContentLabeling
    } else if any("contrast") {
        ViolationCategory::ContrastRatio
    } else {
        ViolationCategory::Other(type_tag.to_string())
    }
}

// -- description mining -------------------------------------------------

fn measured_dp_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:height|width)\s+is\s+(\d+(?:\.\d+)?)\s*dp\b").unwrap())
}

fn required_dp_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*dp\s+or\s+larger\b").unwrap())
}

fn ratio_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\bratio\s+(?:is\s+|of\s+)?(\d+(?:\.\d+)?)").unwrap())
}

fn hex_color_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#[0-9A-Fa-f]{6}\b").unwrap())
}

/// Smallest dp extent stated in the description ("height is 43dp"), if any.
fn measured_dp_from_description(description: &str) -> Option<f64> {
    measured_dp_re()
        .captures_iter(description)
        .filter_map(|c| c[1].parse::<f64>().ok())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        })
}

fn required_dp_from_description(description: &str) -> Option<f64> {
    required_dp_re()
        .captures(description)
        .and_then(|c| c[1].parse::<f64>().ok())
}

fn ratio_from_description(description: &str) -> Option<f64> {
    ratio_re()
        .captures(description)
        .and_then(|c| c[1].parse::<f64>().ok())
}

/// First two "#RRGGBB" colors mentioned in the description, read as
/// (foreground, background).
fn colors_from_description(description: &str) -> (Option<Srgb>, Option<Srgb>) {
    let mut it = hex_color_re()
        .find_iter(description)
        .filter_map(|m| Srgb::from_hex(m.as_str()).ok());
    (it.next(), it.next())
}

#[allow(clippy::too_many_arguments)]
fn build_metrics(
    category: &ViolationCategory,
    bounds: &Rect,
    description: &str,
    fg: Option<Srgb>,
    bg: Option<Srgb>,
    profile: &DisplayProfile,
    required_default: f64,
    record: usize,
) -> Result<ViolationMetrics, ScanError> {
    let mut metrics = ViolationMetrics::default();
    match category {
        ViolationCategory::TouchTargetSize => {
            let measured = measured_dp_from_description(description).unwrap_or_else(|| {
                let smaller = bounds.width().min(bounds.height()) as f64;
                px_to_dp(smaller, profile)
            });
            let required = required_dp_from_description(description).unwrap_or(required_default);
            metrics.measured_dp = Some(measured);
            metrics.required_dp = Some(required);
        }
        ViolationCategory::ContrastRatio => {
            let (desc_fg, desc_bg) = colors_from_description(description);
            let fg = fg.or(desc_fg);
            let bg = bg.or(desc_bg);
            let ratio = match (fg, bg) {
                (Some(f), Some(b)) => Some(contrast_ratio(f, b)),
                _ => ratio_from_description(description),
            };
            let ratio = ratio.ok_or_else(|| {
                ScanError::schema(
                    record,
                    "contrast violation carries neither a color pair nor a stated ratio",
                )
            })?;
            if ratio < 1.0 {
                return Err(ScanError::schema(
                    record,
                    format!("contrast ratio {ratio} < 1.0"),
                ));
            }
            metrics.contrast_ratio = Some(ratio);
            metrics.foreground_color = fg;
            metrics.background_color = bg;
        }
        ViolationCategory::ContentLabeling => {
            metrics.missing_label = Some(true);
        }
        ViolationCategory::Other(_) => {}
    }
    Ok(metrics)
}

// -- normalized JSON input ------------------------------------------------

/// `display` block of the normalized scan document.
#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
pub struct DisplayDecl {
    pub density: f64,
    pub width_px: u32,
    pub height_px: u32,
}

#[derive(Debug, Deserialize)]
struct ScanDoc {
    screen_id: String,
    #[allow(dead_code)]
    display: DisplayDecl,
    violations: Vec<ScanRecord>,
}

#[derive(Debug, Deserialize)]
struct ScanRecord {
    #[serde(rename = "type")]
    type_tag: String,
    bounds: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    fg_color: Option<String>,
    #[serde(default)]
    bg_color: Option<String>,
}

/// Read the `display` declaration out of a normalized scan document without
/// fully validating it. Returns None for the lenient text format.
pub fn peek_display(doc: &str) -> Option<DisplayDecl> {
    #[derive(Deserialize)]
    struct Probe {
        display: DisplayDecl,
    }
    serde_json::from_str::<Probe>(doc).ok().map(|p| p.display)
}

/// Parse either input format into normalized violations, validating every
/// rect against the given display profile.
pub fn parse_scanner_document(
    doc: &str,
    profile: &DisplayProfile,
) -> Result<Vec<RawViolation>, ScanError> {
    parse_scanner_document_with(doc, profile, DEFAULT_REQUIRED_DP)
}

/// [`parse_scanner_document`] with an overridden required-dp default for
/// touch-target records whose description does not state one.
pub fn parse_scanner_document_with(
    doc: &str,
    profile: &DisplayProfile,
    required_dp_default: f64,
) -> Result<Vec<RawViolation>, ScanError> {
    let records = if doc.trim_start().starts_with('{') {
        parse_normalized_json(doc)?
    } else {
        parse_lenient_text(doc)?
    };
    normalize(records, profile, required_dp_default)
}

/// One pre-normalization record: (screen_id, type tag, bounds text,
/// description, fg, bg, lenient-origin flag).
struct PendingRecord {
    screen_id: String,
    type_tag: String,
    bounds_text: String,
    description: String,
    fg: Option<Srgb>,
    bg: Option<Srgb>,
    lenient: bool,
}

fn parse_normalized_json(doc: &str) -> Result<Vec<PendingRecord>, ScanError> {
    let parsed: ScanDoc = serde_json::from_str(doc).map_err(|e| ScanError::Schema {
        record: None,
        message: e.to_string(),
    })?;
    let mut out = Vec::with_capacity(parsed.violations.len());
    for (i, rec) in parsed.violations.into_iter().enumerate() {
        let parse_color = |field: &str, value: Option<String>| -> Result<Option<Srgb>, ScanError> {
            value
                .map(|v| {
                    Srgb::from_hex(&v).map_err(|e| ScanError::schema(i, format!("{field}: {e}")))
                })
                .transpose()
        };
        let fg = parse_color("fg_color", rec.fg_color)?;
        let bg = parse_color("bg_color", rec.bg_color)?;
        out.push(PendingRecord {
            screen_id: parsed.screen_id.clone(),
            type_tag: rec.type_tag,
            bounds_text: rec.bounds,
            description: rec.description,
            fg,
            bg,
            lenient: false,
        });
    }
    Ok(out)
}

/// Lenient importer for the prose rendering of scanner output: records are
/// blocks of `Key: value` lines separated by blank lines. `Violation:` and
/// `Key/Bounds:` are required per record; `Screen:` is sticky across records
/// and defaults to "unspecified".
fn parse_lenient_text(doc: &str) -> Result<Vec<PendingRecord>, ScanError> {
    let mut out = Vec::new();
    let mut screen_id = "unspecified".to_string();
    let mut record_index = 0usize;

    let doc = doc.replace("\r\n", "\n");
    for block in doc.split("\n\n").map(str::trim).filter(|b| !b.is_empty()) {
        let mut type_tag: Option<String> = None;
        let mut bounds_text: Option<String> = None;
        let mut description = String::new();
        let mut saw_record_line = false;

        for line in block.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once(':') else {
                // Continuation of a wrapped description.
                if !description.is_empty() {
                    description.push(' ');
                    description.push_str(line);
                }
                continue;
            };
            let value = value.trim();
            match key.trim().to_lowercase().as_str() {
                "screen" => screen_id = value.to_string(),
                "violation" => {
                    type_tag = Some(value.to_string());
                    saw_record_line = true;
                }
                "key/bounds" | "bounds" => {
                    bounds_text = Some(value.to_string());
                    saw_record_line = true;
                }
                "description" => {
                    description = value.to_string();
                    saw_record_line = true;
                }
                _ => {} // lenient: unknown keys ignored
            }
        }

        if !saw_record_line {
            continue; // a block holding only a Screen: line
        }
        let type_tag = type_tag
            .ok_or_else(|| ScanError::schema(record_index, "missing \"Violation:\" line"))?;
        let bounds_text = bounds_text
            .ok_or_else(|| ScanError::schema(record_index, "missing \"Key/Bounds:\" line"))?;
        out.push(PendingRecord {
            screen_id: screen_id.clone(),
            type_tag,
            bounds_text,
            description,
            fg: None,
            bg: None,
            lenient: true,
        });
        record_index += 1;
    }
    Ok(out)
}

fn normalize(
    records: Vec<PendingRecord>,
    profile: &DisplayProfile,
    required_dp_default: f64,
) -> Result<Vec<RawViolation>, ScanError> {
    let mut out: Vec<RawViolation> = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let bounds =
            parse_bounds(&rec.bounds_text).map_err(|e| ScanError::schema(i, e.to_string()))?;
        if !profile.contains(&bounds) {
            return Err(ScanError::BoundsOutsideScreen {
                record: i,
                bounds,
                width: profile.screen_width_px,
                height: profile.screen_height_px,
            });
        }
        let category = classify_violation(&rec.type_tag, &rec.description);
        let metrics = build_metrics(
            &category,
            &bounds,
            &rec.description,
            rec.fg,
            rec.bg,
            profile,
            required_dp_default,
            i,
        )?;
        if rec.lenient && category == ViolationCategory::TouchTargetSize {
            // A scanner only reports failures.
            let (m, r) = (metrics.measured_dp.unwrap(), metrics.required_dp.unwrap());
            if m >= r {
                return Err(ScanError::schema(
                    i,
                    format!(
                        "touch-target record is not a failure: measured {m} dp >= required {r} dp"
                    ),
                ));
            }
        }

        let mut id = violation_id(&rec.screen_id, &category, &bounds);
        let mut dup = 1usize;
        while out.iter().any(|v| v.id == id) {
            dup += 1;
            id = format!("{}-{dup}", violation_id(&rec.screen_id, &category, &bounds));
        }
        out.push(RawViolation {
            id,
            category,
            bounds,
            description: rec.description,
            metrics,
            screen_id: rec.screen_id,
        });
    }
    Ok(out)
}
