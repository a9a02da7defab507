//! Hallucination audit: automated visual-grounding and textual-fidelity
//! checks against the UI ground truth, plus state management for the
//! human-judged functional-logic dimension.
//!
//! A report is a hallucination iff any dimension fails. The automated checks
//! are pure given (report, hierarchy) and never throw: failures come back as
//! verdicts with evidence.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{locate_target_with_kind, MatchKind, ViewNode};
use crate::report::HearReport;
use crate::slice::{build_slice, SemanticSlice};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("verdict for {0} already carries a functional-logic annotation")]
    AlreadyAnnotated(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalStatus {
    Pending,
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualGrounding {
    pub status: CheckStatus,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextualFidelity {
    pub status: CheckStatus,
    pub offending_quotes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalLogic {
    pub status: FunctionalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

/// Three-dimension audit result for one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditVerdict {
    pub violation_id: String,
    pub visual_grounding: VisualGrounding,
    pub textual_fidelity: TextualFidelity,
    pub functional_logic: FunctionalLogic,
    pub hallucination: bool,
}

impl AuditVerdict {
    /// hallucination = OR of dimension failures, always.
    fn recompute(&mut self) {
        self.hallucination = self.visual_grounding.status == CheckStatus::Fail
            || self.textual_fidelity.status == CheckStatus::Fail
            || self.functional_logic.status == FunctionalStatus::Fail;
    }
}

/// Role vocabulary the visual-grounding check knows about. Multi-word roles
/// are matched as phrases; plurals are accepted.
const ROLE_VOCABULARY: [&str; 7] = [
    "button",
    "icon",
    "image",
    "text field",
    "checkbox",
    "link",
    "label",
];

fn role_regexes() -> &'static Vec<(&'static str, Regex)> {
    static RES: OnceLock<Vec<(&'static str, Regex)>> = OnceLock::new();
    RES.get_or_init(|| {
        ROLE_VOCABULARY
            .iter()
            .map(|role| {
                let pattern = format!(r"(?i)\b{}s?\b", regex::escape(role));
                (*role, Regex::new(&pattern).unwrap())
            })
            .collect()
    })
}

/// Role words the narrative layers attribute to the target.
fn role_words_in_layers(report: &HearReport) -> Vec<&'static str> {
    let text: String = report
        .layers
        .iter()
        .map(|l| l.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    role_regexes()
        .iter()
        .filter(|(_, re)| re.is_match(&text))
        .map(|(role, _)| *role)
        .collect()
}

/// Does the element the report narrates actually exist at the logged
/// coordinates, and is it the kind of thing the report says it is?
pub fn check_visual_grounding(report: &HearReport, root: &ViewNode) -> VisualGrounding {
    let bounds = report.violation.bounds;
    let (node, kind) = match locate_target_with_kind(root, &bounds) {
        Ok(found) => found,
        Err(_) => {
            return VisualGrounding {
                status: CheckStatus::Fail,
                evidence: format!("no node at bounds {bounds}"),
            }
        }
    };

    let allowed = node.allowed_roles();
    let claimed = role_words_in_layers(report);
    let inconsistent: Vec<&str> = claimed
        .iter()
        .filter(|role| !allowed.contains(role))
        .copied()
        .collect();

    let describe = format!(
        "{} [{}] clickable={} at {} ({})",
        node.class_name,
        node.resource_id.as_deref().unwrap_or(""),
        node.clickable,
        node.bounds,
        match kind {
            MatchKind::Exact => "exact match",
            MatchKind::SmallestContainer => "smallest container",
        }
    );

    if inconsistent.is_empty() {
        VisualGrounding {
            status: CheckStatus::Pass,
            evidence: format!("matched {describe}"),
        }
    } else {
        VisualGrounding {
            status: CheckStatus::Fail,
            evidence: format!(
                "report calls the target {inconsistent:?} but matched {describe} supports {allowed:?}"
            ),
        }
    }
}

/// Extract quoted spans from text: straight double quotes, typographic
/// double and single pairs, and straight single quotes with an apostrophe
/// heuristic. Nested quotes resolve outermost-first. Spans crossing line
/// breaks are treated as unbalanced punctuation, not quotes.
pub fn extract_quoted_spans(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut i = 0;

    let closer_for = |c: char| match c {
        '"' => Some('"'),
        '\u{201C}' => Some('\u{201D}'), // “ ”
        '\u{2018}' => Some('\u{2019}'), // ‘ ’
        '\'' => Some('\''),
        _ => None,
    };

    while i < chars.len() {
        let c = chars[i];
        let Some(closer) = closer_for(c) else {
            i += 1;
            continue;
        };
        // straight single quotes between word chars are apostrophes
        if c == '\'' {
            let prev_word = i > 0 && chars[i - 1].is_alphanumeric();
            if prev_word {
                i += 1;
                continue;
            }
        }
        // find the matching closer on the same line
        let mut j = i + 1;
        let mut end = None;
        while j < chars.len() {
            if chars[j] == '\n' {
                break;
            }
            if chars[j] == closer {
                // a closing straight single quote must not start a word
                if closer == '\'' && j + 1 < chars.len() && chars[j + 1].is_alphanumeric() {
                    j += 1;
                    continue;
                }
                end = Some(j);
                break;
            }
            j += 1;
        }
        match end {
            Some(end) if end > i + 1 => {
                spans.push(chars[i + 1..end].iter().collect());
                i = end + 1;
            }
            _ => i += 1,
        }
    }
    spans
}

/// Strings a quote may legitimately come from besides the slice: legal
/// instrument names and clause ids from the report's own clauses, plus the
/// persona's prose fields.
fn quote_whitelist(report: &HearReport) -> Vec<String> {
    let mut whitelist: Vec<String> = Vec::new();
    for clause in &report.clauses {
        whitelist.push(clause.instrument.clone());
        whitelist.push(clause.clause_id.clone());
    }
    whitelist.extend(report.persona.text_fields().into_iter().map(str::to_string));
    whitelist
}

/// Are all quoted spans in the three layer texts verbatim matches against
/// the slice serialization (or the whitelist)?
pub fn check_textual_fidelity(report: &HearReport, slice: &SemanticSlice) -> TextualFidelity {
    let whitelist = quote_whitelist(report);
    let mut offenders = Vec::new();
    for layer in &report.layers {
        for span in extract_quoted_spans(&layer.text) {
            let grounded = slice.serialized.contains(&span)
                || whitelist.iter().any(|w| w == &span || w.contains(&span));
            if !grounded && !offenders.contains(&span) {
                offenders.push(span);
            }
        }
    }
    TextualFidelity {
        status: if offenders.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        offending_quotes: offenders,
    }
}

/// Record the human functional-logic judgment. One annotation per verdict.
pub fn record_functional_logic(
    mut verdict: AuditVerdict,
    decision: CheckStatus,
    annotator: &str,
) -> Result<AuditVerdict, AuditError> {
    if verdict.functional_logic.status != FunctionalStatus::Pending {
        return Err(AuditError::AlreadyAnnotated(verdict.violation_id));
    }
    verdict.functional_logic = FunctionalLogic {
        status: match decision {
            CheckStatus::Pass => FunctionalStatus::Pass,
            CheckStatus::Fail => FunctionalStatus::Fail,
        },
        annotator: Some(annotator.to_string()),
    };
    verdict.recompute();
    Ok(verdict)
}

/// Dimension counts over a batch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub total: usize,
    pub visual_pass: usize,
    pub visual_fail: usize,
    pub fidelity_pass: usize,
    pub fidelity_fail: usize,
    pub functional_pending: usize,
    pub functional_pass: usize,
    pub functional_fail: usize,
    pub hallucinations: usize,
}

/// Run both automated checks over every report. Functional logic starts
/// pending; reports whose screen has no hierarchy fail visual grounding with
/// evidence and have their quotes checked against the whitelist alone.
pub fn audit_batch(
    reports: &[HearReport],
    hierarchies: &BTreeMap<String, ViewNode>,
) -> (Vec<AuditVerdict>, AuditSummary) {
    let empty_slice = SemanticSlice {
        target: crate::slice::SliceNode {
            class_name: String::new(),
            resource_id: None,
            text: None,
            content_description: None,
            clickable: false,
            bounds: String::new(),
        },
        children: vec![],
        neighbor_texts: vec![],
        ancestor_ids: vec![],
        serialized: String::new(),
    };

    let mut verdicts = Vec::with_capacity(reports.len());
    for report in reports {
        let (visual, fidelity) = match hierarchies.get(&report.violation.screen_id) {
            Some(root) => {
                let visual = check_visual_grounding(report, root);
                let slice = locate_target_with_kind(root, &report.violation.bounds)
                    .ok()
                    .map(|(node, _)| build_slice(root, node));
                let fidelity = match &slice {
                    Some(slice) => check_textual_fidelity(report, slice),
                    None => check_textual_fidelity(report, &empty_slice),
                };
                (visual, fidelity)
            }
            None => (
                VisualGrounding {
                    status: CheckStatus::Fail,
                    evidence: format!(
                        "no hierarchy available for screen {}",
                        report.violation.screen_id
                    ),
                },
                check_textual_fidelity(report, &empty_slice),
            ),
        };

        let mut verdict = AuditVerdict {
            violation_id: report.violation.id.clone(),
            visual_grounding: visual,
            textual_fidelity: fidelity,
            functional_logic: FunctionalLogic {
                status: FunctionalStatus::Pending,
                annotator: None,
            },
            hallucination: false,
        };
        verdict.recompute();
        verdicts.push(verdict);
    }

    let summary = summarize(&verdicts);
    (verdicts, summary)
}

pub fn summarize(verdicts: &[AuditVerdict]) -> AuditSummary {
    let mut s = AuditSummary {
        total: verdicts.len(),
        ..AuditSummary::default()
    };
    for v in verdicts {
        match v.visual_grounding.status {
            CheckStatus::Pass => s.visual_pass += 1,
            CheckStatus::Fail => s.visual_fail += 1,
        }
        match v.textual_fidelity.status {
            CheckStatus::Pass => s.fidelity_pass += 1,
            CheckStatus::Fail => s.fidelity_fail += 1,
        }
        match v.functional_logic.status {
            FunctionalStatus::Pending => s.functional_pending += 1,
            FunctionalStatus::Pass => s.functional_pass += 1,
            FunctionalStatus::Fail => s.functional_fail += 1,
        }
        if v.hallucination {
            s.hallucinations += 1;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ground_context;
    use crate::data::{bundled_legal_kb, bundled_registry};
    use crate::geometry::DisplayProfile;
    use crate::hierarchy::parse_view_hierarchy;
    use crate::legal::retrieve_clauses;
    use crate::provider::{MockProvider, ProviderConfig};
    use crate::report::generate_report;
    use crate::scan::parse_scanner_document;
    use image::RgbaImage;

    const HIERARCHY: &str = r#"<hierarchy>
  <node class="android.widget.FrameLayout" resource-id="app:id/screen_root" bounds="[0,0][1080,2400]" clickable="false">
    <node class="android.widget.LinearLayout" resource-id="app:id/profile_panel" bounds="[0,1800][1080,2200]" clickable="false">
      <node class="android.widget.TextView" resource-id="app:id/user_name" text="user_name" bounds="[120,1952][540,2064]" clickable="false"/>
      <node class="android.widget.Button" resource-id="app:id/follow_button" text="Follow" bounds="[571,1952][795,2064]" clickable="true"/>
    </node>
    <node class="android.widget.ImageView" resource-id="app:id/hero_banner" bounds="[0,0][1080,600]" clickable="false"/>
  </node>
</hierarchy>"#;

    fn follow_report() -> (HearReport, ViewNode) {
        let profile = DisplayProfile::new(2.625, 1080, 2400).unwrap();
        let scan = r#"{"screen_id":"social_profile","display":{"density":2.625,"width_px":1080,"height_px":2400},"violations":[{"type":"Touch target","bounds":"[571,1952][795,2064]","description":"This item's height is 43dp. Consider 48dp or larger."}]}"#;
        let violations = parse_scanner_document(scan, &profile).unwrap();
        let root = parse_view_hierarchy(HIERARCHY).unwrap();
        let ctx =
            ground_context(&root, &violations[0], &profile, &RgbaImage::new(1080, 2400)).unwrap();
        let registry = bundled_registry().unwrap();
        let kb = bundled_legal_kb().unwrap();
        let candidates = registry.match_personas(&violations[0].category).unwrap();
        let clauses = retrieve_clauses(&kb, "JP", &["2.5.5".to_string()]).unwrap();
        let out = generate_report(
            &violations[0],
            &ctx,
            candidates[0],
            &clauses,
            &MockProvider,
            &ProviderConfig::default(),
        )
        .unwrap();
        (out.report, root)
    }

    fn slice_for(report: &HearReport, root: &ViewNode) -> SemanticSlice {
        let (node, _) = locate_target_with_kind(root, &report.violation.bounds).unwrap();
        build_slice(root, node)
    }

    #[test]
    fn grounded_report_passes_visual_check() {
        let (report, root) = follow_report();
        let v = check_visual_grounding(&report, &root);
        assert_eq!(v.status, CheckStatus::Pass, "{}", v.evidence);
        assert!(v.evidence.contains("follow_button"));
    }

    #[test]
    fn missing_node_fails_visual_check() {
        let (mut report, root) = follow_report();
        report.violation.bounds = crate::geometry::Rect::new(5000, 5000, 5200, 5200).unwrap();
        let v = check_visual_grounding(&report, &root);
        assert_eq!(v.status, CheckStatus::Fail);
        assert!(v.evidence.contains("no node at bounds"));
    }

    #[test]
    fn calling_a_decorative_image_a_button_fails() {
        let (mut report, root) = follow_report();
        // repoint the report at the non-clickable banner and keep the
        // narrative's "button" wording
        report.violation.bounds = crate::geometry::Rect::new(0, 0, 1080, 600).unwrap();
        let v = check_visual_grounding(&report, &root);
        assert_eq!(v.status, CheckStatus::Fail);
        assert!(v.evidence.contains("button"));
    }

    #[test]
    fn quoting_slice_text_passes_fidelity() {
        let (report, root) = follow_report();
        let slice = slice_for(&report, &root);
        let f = check_textual_fidelity(&report, &slice);
        assert_eq!(
            f.status,
            CheckStatus::Pass,
            "offenders: {:?}",
            f.offending_quotes
        );
    }

    #[test]
    fn quoting_an_absent_string_fails_fidelity() {
        let (mut report, root) = follow_report();
        let slice = slice_for(&report, &root);
        report.layers[1]
            .text
            .push_str(" The label reads \"Subscribe\" now.");
        let f = check_textual_fidelity(&report, &slice);
        assert_eq!(f.status, CheckStatus::Fail);
        assert_eq!(f.offending_quotes, vec!["Subscribe".to_string()]);
    }

    #[test]
    fn zero_quotes_passes_vacuously() {
        let (mut report, root) = follow_report();
        let slice = slice_for(&report, &root);
        for layer in &mut report.layers {
            layer.text = "No quotation marks here at all.".to_string();
        }
        let f = check_textual_fidelity(&report, &slice);
        assert_eq!(f.status, CheckStatus::Pass);
        assert!(f.offending_quotes.is_empty());
    }

    #[test]
    fn quote_extraction_handles_the_quote_zoo() {
        let spans = extract_quoted_spans(
            "He tapped \"Follow\" then \u{201C}Subscribe\u{201D} and said 'done' while it's \
Ichiro's phone.",
        );
        assert_eq!(spans, vec!["Follow", "Subscribe", "done"]);
    }

    #[test]
    fn nested_quotes_resolve_outermost_first() {
        let spans = extract_quoted_spans("She said \"tap 'Follow' twice\" loudly.");
        assert_eq!(spans, vec!["tap 'Follow' twice"]);
    }

    #[test]
    fn unbalanced_quotes_yield_no_spans() {
        assert!(extract_quoted_spans("an unmatched \" mark across\nlines\" here").is_empty());
    }

    #[test]
    fn functional_logic_annotation_lifecycle() {
        let (report, root) = follow_report();
        let mut map = BTreeMap::new();
        map.insert(report.violation.screen_id.clone(), root);
        let (verdicts, summary) = audit_batch(std::slice::from_ref(&report), &map);
        assert_eq!(summary.functional_pending, 1);
        assert!(!verdicts[0].hallucination);

        let annotated =
            record_functional_logic(verdicts[0].clone(), CheckStatus::Pass, "annotator-a").unwrap();
        assert_eq!(annotated.functional_logic.status, FunctionalStatus::Pass);
        assert!(!annotated.hallucination);

        let failed =
            record_functional_logic(verdicts[0].clone(), CheckStatus::Fail, "annotator-b").unwrap();
        assert_eq!(failed.functional_logic.status, FunctionalStatus::Fail);
        assert!(
            failed.hallucination,
            "functional failure alone must flag hallucination"
        );

        assert!(matches!(
            record_functional_logic(annotated, CheckStatus::Pass, "annotator-c"),
            Err(AuditError::AlreadyAnnotated(_))
        ));
    }

    #[test]
    fn missing_hierarchy_fails_visual_with_evidence() {
        let (report, _) = follow_report();
        let map = BTreeMap::new();
        let (verdicts, summary) = audit_batch(std::slice::from_ref(&report), &map);
        assert_eq!(verdicts[0].visual_grounding.status, CheckStatus::Fail);
        assert!(verdicts[0]
            .visual_grounding
            .evidence
            .contains("no hierarchy"));
        assert!(verdicts[0].hallucination);
        assert_eq!(summary.visual_fail, 1);
    }

    #[test]
    fn empty_batch_is_all_zeros() {
        let (verdicts, summary) = audit_batch(&[], &BTreeMap::new());
        assert!(verdicts.is_empty());
        assert_eq!(summary, AuditSummary::default());
    }

    #[test]
    fn batch_results_are_order_independent() {
        let (report, root) = follow_report();
        let mut mutated = report.clone();
        mutated.violation.id = format!("{}-m", report.violation.id);
        mutated.layers[1].text.push_str(" Quote: \"NotInSlice\".");

        let mut map = BTreeMap::new();
        map.insert(report.violation.screen_id.clone(), root);

        let (forward, _) = audit_batch(&[report.clone(), mutated.clone()], &map);
        let (reverse, _) = audit_batch(&[mutated, report], &map);
        assert_eq!(forward[0], reverse[1]);
        assert_eq!(forward[1], reverse[0]);
    }
}
