//! hear-core: turn raw mobile accessibility-scanner findings into
//! persona-driven, legally grounded narrative bug reports, and audit those
//! reports for hallucination against the UI ground truth.
//!
//! The pipeline per violation:
//!
//! 1. [`scan`] — parse scanner output into typed violations with pixel
//!    geometry and category metrics.
//! 2. [`hierarchy`] / [`slice`] / [`crop`] / [`context`] — reconstruct the
//!    bug's environment: locate the target node, extract a localized
//!    semantic window, and crop the screenshot with 20% padding.
//! 3. [`persona`] — deterministically match an ability-based persona to the
//!    violation category.
//! 4. [`legal`] — retrieve jurisdiction-keyed clauses for the violated WCAG
//!    criteria.
//! 5. [`prompt`] / [`provider`] / [`report`] — chain three reasoning layers
//!    (physical barrier, functional blockage, legal risk) through a model
//!    provider and assemble the final report.
//! 6. [`audit`] — check every report's visual grounding and textual
//!    fidelity against the hierarchy; functional logic stays human-judged.
//!
//! All of it is pure over immutable inputs once files are read; the offline
//! [`provider::MockProvider`] makes the whole pipeline deterministic.

pub use image;

pub mod audit;
pub mod context;
pub mod contrast;
pub mod crop;
pub mod data;
pub mod geometry;
pub mod hierarchy;
pub mod legal;
pub mod persona;
pub mod prompt;
pub mod provider;
pub mod report;
pub mod scan;
pub mod slice;

pub use context::{ground_context, GroundedContext};
pub use geometry::{parse_bounds, DisplayProfile, Rect, DEFAULT_DENSITY};
pub use hierarchy::{locate_target, parse_view_hierarchy, ViewNode};
pub use legal::{load_legal_kb, map_category_to_criteria, retrieve_clauses, LegalClause};
pub use persona::{load_registry, select_persona, Persona, PersonaRegistry, SelectionPolicy};
pub use provider::{HttpProvider, MockProvider, ModelProvider, ProviderConfig};
pub use report::{generate_report, GenerationOutput, HearReport};
pub use scan::{classify_violation, parse_scanner_document, RawViolation, ViolationCategory};
