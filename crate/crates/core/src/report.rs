//! End-to-end report generation: run the three layers sequentially, assemble
//! the markdown, and fill provenance. No partial report survives a layer
//! failure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::GroundedContext;
use crate::geometry::{format_dp, Rect};
use crate::legal::LegalClause;
use crate::persona::Persona;
use crate::prompt::{
    build_layer1_prompt, build_layer2_prompt, build_layer3_prompt, LayerOutput, Prompt, PromptError,
};
use crate::provider::{invoke_model, ModelProvider, ProviderConfig, ProviderError};
use crate::scan::{RawViolation, ViolationCategory};

pub const PIPELINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("layer {layer}: {source}")]
    Prompt {
        layer: u8,
        #[source]
        source: PromptError,
    },
    #[error("layer {layer}: {source}")]
    Provider {
        layer: u8,
        #[source]
        source: ProviderError,
    },
}

/// Generation metadata recorded with every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub model_name: String,
    pub temperature: f64,
    /// One digest per layer prompt, in layer order.
    pub prompt_digests: Vec<String>,
    pub timestamp: String,
    pub pipeline_version: String,
}

/// The finished three-layer narrative artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HearReport {
    pub violation: RawViolation,
    pub persona: Persona,
    pub layers: Vec<LayerOutput>,
    pub clauses: Vec<LegalClause>,
    pub assembled_markdown: String,
    pub provenance: Provenance,
}

/// Everything a run wants to persist for one violation.
#[derive(Debug)]
pub struct GenerationOutput {
    pub report: HearReport,
    pub crop_rect: Rect,
    pub crop_png: Vec<u8>,
    /// Prompt texts + digests, dumped only when the run asks to keep them.
    pub prompts: Vec<PromptRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptRecord {
    pub layer: u8,
    pub digest: String,
    pub system_text: String,
    pub user_text: String,
    pub has_image: bool,
}

impl PromptRecord {
    fn from_prompt(p: &Prompt) -> Self {
        PromptRecord {
            layer: p.layer,
            digest: p.digest(),
            system_text: p.system_text.clone(),
            user_text: p.user_text.clone(),
            has_image: p.image.is_some(),
        }
    }
}

/// Run layers 1 -> 2 -> 3, each consuming the prior output verbatim.
pub fn generate_report(
    v: &RawViolation,
    ctx: &GroundedContext,
    persona: &Persona,
    clauses: &[&LegalClause],
    provider: &dyn ModelProvider,
    cfg: &ProviderConfig,
) -> Result<GenerationOutput, PipelineError> {
    let wrap_prompt =
        |layer: u8| move |source: PromptError| PipelineError::Prompt { layer, source };
    let wrap_provider =
        |layer: u8| move |source: ProviderError| PipelineError::Provider { layer, source };

    let prompt1 = build_layer1_prompt(persona, ctx, v).map_err(wrap_prompt(1))?;
    let text1 = invoke_model(provider, &prompt1, cfg).map_err(wrap_provider(1))?;
    let layer1 = LayerOutput {
        layer: 1,
        text: text1,
        cited_clause_ids: vec![],
    };

    let prompt2 = build_layer2_prompt(&layer1, ctx, v).map_err(wrap_prompt(2))?;
    let text2 = invoke_model(provider, &prompt2, cfg).map_err(wrap_provider(2))?;
    let layer2 = LayerOutput {
        layer: 2,
        text: text2,
        cited_clause_ids: vec![],
    };

    let prompt3 = build_layer3_prompt(&layer2, clauses, persona).map_err(wrap_prompt(3))?;
    let text3 = invoke_model(provider, &prompt3, cfg).map_err(wrap_provider(3))?;
    let cited: Vec<String> = clauses
        .iter()
        .filter(|c| text3.contains(&c.clause_id))
        .map(|c| c.clause_id.clone())
        .collect();
    let layer3 = LayerOutput {
        layer: 3,
        text: text3,
        cited_clause_ids: cited,
    };

    let provenance = Provenance {
        model_name: provider.model_name(),
        temperature: cfg.temperature,
        prompt_digests: vec![prompt1.digest(), prompt2.digest(), prompt3.digest()],
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        pipeline_version: PIPELINE_VERSION.to_string(),
    };

    let clauses_owned: Vec<LegalClause> = clauses.iter().map(|c| (*c).clone()).collect();
    let layers = vec![layer1, layer2, layer3];
    let assembled_markdown = assemble_markdown(
        v,
        persona,
        &layers,
        &clauses_owned,
        &ctx.crop_rect,
        &provenance,
    );

    let crop_png = crate::crop::encode_png(&ctx.crop_image).map_err(|e| PipelineError::Prompt {
        layer: 1,
        source: PromptError::Image(e),
    })?;

    Ok(GenerationOutput {
        report: HearReport {
            violation: v.clone(),
            persona: persona.clone(),
            layers,
            clauses: clauses_owned,
            assembled_markdown,
            provenance,
        },
        crop_rect: ctx.crop_rect,
        crop_png,
        prompts: vec![
            PromptRecord::from_prompt(&prompt1),
            PromptRecord::from_prompt(&prompt2),
            PromptRecord::from_prompt(&prompt3),
        ],
    })
}

fn metrics_summary(v: &RawViolation) -> String {
    match &v.category {
        ViolationCategory::TouchTargetSize => format!(
            "measured {} dp, required {} dp",
            format_dp(v.metrics.measured_dp.unwrap_or_default()),
            format_dp(v.metrics.required_dp.unwrap_or_default())
        ),
        ViolationCategory::ContrastRatio => format!(
            "contrast ratio {:.2}:1, minimum 4.5:1",
            v.metrics.contrast_ratio.unwrap_or_default()
        ),
        ViolationCategory::ContentLabeling => "accessible name missing".to_string(),
        ViolationCategory::Other(tag) => tag.clone(),
    }
}

/// Fixed report layout: header, persona card, the three layers, evidence,
/// provenance footer.
pub fn assemble_markdown(
    v: &RawViolation,
    persona: &Persona,
    layers: &[LayerOutput],
    clauses: &[LegalClause],
    crop_rect: &Rect,
    provenance: &Provenance,
) -> String {
    let mut md = String::new();
    md.push_str(&format!(
        "# Accessibility bug report — {} / {}\n\n",
        v.screen_id, v.id
    ));
    md.push_str(&format!("**Category:** {}\n", v.category));
    md.push_str(&format!("**Element bounds:** `{}`\n", v.bounds));
    md.push_str(&format!("**Metrics:** {}\n\n", metrics_summary(v)));

    md.push_str("## Who this blocks\n\n");
    md.push_str(&format!(
        "**{} ({})** — {}\n\n",
        persona.name, persona.age, persona.loc
    ));
    md.push_str(&format!("- Condition: {}\n", persona.condition));
    for c in &persona.constraints {
        md.push_str(&format!("- Constraint: {}\n", c.text));
    }
    md.push_str(&format!("- Psychology: {}\n", persona.psychology));
    md.push_str(&format!("- Logic: {}\n\n", persona.logic));

    let titles = [
        "Layer 1 — Physical barrier",
        "Layer 2 — Functional blockage",
        "Layer 3 — Legal and compliance concerns",
    ];
    for layer in layers {
        let title = titles
            .get((layer.layer as usize).saturating_sub(1))
            .unwrap_or(&"Layer");
        md.push_str(&format!("## {title}\n\n{}\n\n", layer.text));
    }

    md.push_str("## Evidence\n\n");
    md.push_str(&format!(
        "- Screenshot crop: `{}_crop.png` (region `{}`)\n",
        v.id, crop_rect
    ));
    md.push_str(&format!("- Violation bounds: `{}`\n", v.bounds));
    md.push_str(&format!("- Screen: {}\n", v.screen_id));
    if !clauses.is_empty() {
        let cited: Vec<String> = clauses
            .iter()
            .map(|c| format!("{} ({})", c.instrument, c.clause_id))
            .collect();
        md.push_str(&format!("- Grounding clauses: {}\n", cited.join("; ")));
    }
    md.push_str("\n---\n");
    md.push_str(&format!(
        "Generated by hear v{} — model {}, temperature {}, {}\n",
        provenance.pipeline_version,
        provenance.model_name,
        provenance.temperature,
        provenance.timestamp
    ));
    md.push_str(&format!(
        "Prompt digests: L1 {} · L2 {} · L3 {}\n",
        provenance
            .prompt_digests
            .first()
            .map(String::as_str)
            .unwrap_or("-"),
        provenance
            .prompt_digests
            .get(1)
            .map(String::as_str)
            .unwrap_or("-"),
        provenance
            .prompt_digests
            .get(2)
            .map(String::as_str)
            .unwrap_or("-"),
    ));
    md
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ground_context;
    use crate::data::{bundled_legal_kb, bundled_registry};
    use crate::geometry::DisplayProfile;
    use crate::hierarchy::parse_view_hierarchy;
    use crate::legal::retrieve_clauses;
    use crate::provider::MockProvider;
    use crate::scan::parse_scanner_document;
    use image::RgbaImage;

    fn fixture() -> (RawViolation, GroundedContext) {
        let profile = DisplayProfile::new(2.625, 1080, 2400).unwrap();
        let scan = r#"{"screen_id":"social_profile","display":{"density":2.625,"width_px":1080,"height_px":2400},"violations":[{"type":"Touch target","bounds":"[571,1952][795,2064]","description":"Consider making this clickable item larger. This item's height is 43dp. Consider making the height of this touch target 48dp or larger."}]}"#;
        let hierarchy = r#"<hierarchy>
  <node class="android.widget.FrameLayout" resource-id="app:id/screen_root" bounds="[0,0][1080,2400]" clickable="false">
    <node class="android.widget.LinearLayout" resource-id="app:id/profile_panel" bounds="[0,1800][1080,2200]" clickable="false">
      <node class="android.widget.TextView" resource-id="app:id/user_name" text="user_name" bounds="[120,1952][540,2064]" clickable="false"/>
      <node class="android.widget.Button" resource-id="app:id/follow_button" text="Follow" bounds="[571,1952][795,2064]" clickable="true"/>
    </node>
  </node>
</hierarchy>"#;
        let violations = parse_scanner_document(scan, &profile).unwrap();
        let root = parse_view_hierarchy(hierarchy).unwrap();
        let ctx =
            ground_context(&root, &violations[0], &profile, &RgbaImage::new(1080, 2400)).unwrap();
        (violations.into_iter().next().unwrap(), ctx)
    }

    fn generate() -> GenerationOutput {
        let (v, ctx) = fixture();
        let registry = bundled_registry().unwrap();
        let kb = bundled_legal_kb().unwrap();
        let candidates = registry.match_personas(&v.category).unwrap();
        let persona = crate::persona::select_persona(
            &candidates,
            &v.id,
            &crate::persona::SelectionPolicy::Named("Ichiro".into()),
        )
        .unwrap();
        let clauses = retrieve_clauses(&kb, "JP", &["2.5.5".to_string()]).unwrap();
        generate_report(
            &v,
            &ctx,
            persona,
            &clauses,
            &MockProvider,
            &ProviderConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn mock_report_contains_the_expected_anchors() {
        let out = generate();
        let md = &out.report.assembled_markdown;
        assert!(md.contains("Ichiro"));
        assert!(md.contains("[571,1952][795,2064]"));
        assert!(md.contains("JIS X 8341-3:2016"));
        assert!(md.contains(
            "Act on the Elimination of Discrimination against Persons with Disabilities"
        ));
        assert!(md.contains("measured 43 dp, required 48 dp"));
        // all three layer texts present
        for layer in &out.report.layers {
            assert!(md.contains(&layer.text));
        }
    }

    #[test]
    fn layers_are_ordered_and_cite_within_retrieved() {
        let out = generate();
        let layers = &out.report.layers;
        assert_eq!(layers.len(), 3);
        assert_eq!(
            layers.iter().map(|l| l.layer).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        let retrieved: Vec<&String> = out.report.clauses.iter().map(|c| &c.clause_id).collect();
        for cited in &layers[2].cited_clause_ids {
            assert!(retrieved.contains(&cited));
        }
        // the mock cites every retrieved clause
        assert_eq!(layers[2].cited_clause_ids.len(), out.report.clauses.len());
    }

    #[test]
    fn citation_closure_over_the_kb() {
        let out = generate();
        let kb = bundled_legal_kb().unwrap();
        let in_report: Vec<&str> = out
            .report
            .clauses
            .iter()
            .map(|c| c.instrument.as_str())
            .collect();
        for clause in &kb {
            if out.report.assembled_markdown.contains(&clause.instrument) {
                assert!(in_report.contains(&clause.instrument.as_str()));
            }
        }
    }

    #[test]
    fn two_runs_differ_only_in_timestamp() {
        let a = generate();
        let b = generate();
        let scrub = |md: &str| {
            md.lines()
                .filter(|l| !l.starts_with("Generated by hear"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(
            scrub(&a.report.assembled_markdown),
            scrub(&b.report.assembled_markdown)
        );
        assert_eq!(
            a.report.provenance.prompt_digests,
            b.report.provenance.prompt_digests
        );
        assert_eq!(a.crop_png, b.crop_png);
    }

    struct FailSecondLayer;

    impl ModelProvider for FailSecondLayer {
        fn complete(&self, prompt: &crate::prompt::Prompt) -> Result<String, ProviderError> {
            if prompt.layer == 2 {
                Err(ProviderError::ProviderAuthError("boom".into()))
            } else {
                Ok("text".into())
            }
        }
        fn model_name(&self) -> String {
            "fail2".into()
        }
    }

    #[test]
    fn layer_failures_carry_the_layer_index_and_emit_nothing() {
        let (v, ctx) = fixture();
        let registry = bundled_registry().unwrap();
        let kb = bundled_legal_kb().unwrap();
        let candidates = registry.match_personas(&v.category).unwrap();
        let clauses = retrieve_clauses(&kb, "JP", &["2.5.5".to_string()]).unwrap();
        let err = generate_report(
            &v,
            &ctx,
            candidates[0],
            &clauses,
            &FailSecondLayer,
            &ProviderConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::Provider { layer: 2, .. }));
    }
}
