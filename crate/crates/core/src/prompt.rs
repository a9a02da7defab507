//! Three-layer prompt assembly.
//!
//! Layer 1 carries the persona, the serialized slice, the metrics, and the
//! screenshot crop; layers 2 and 3 are text-only and embed the prior layer's
//! full output verbatim. All builders are pure: identical inputs produce
//! identical prompts and digests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context::GroundedContext;
use crate::crop::{encode_png, CropError};
use crate::geometry::format_dp;
use crate::legal::LegalClause;
use crate::persona::Persona;
use crate::scan::{RawViolation, ViolationCategory};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("layer 3 requires at least one retrieved clause")]
    EmptyClauseSet,
    #[error(transparent)]
    Image(#[from] CropError),
}

/// PNG-encoded crop attached to layer-1 prompts.
#[derive(Debug, Clone)]
pub struct PromptImage {
    pub png: Vec<u8>,
    pub width: u32,
    pub height: u32,
}

/// Structured fields the prompt was built from. The offline provider renders
/// its templates from these instead of re-parsing the prompt text.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PromptMeta {
    pub violation_id: String,
    pub screen_id: String,
    pub category: String,
    pub bounds: String,
    pub persona_name: String,
    pub persona_age: u32,
    pub persona_condition: String,
    pub persona_constraints: Vec<String>,
    pub persona_psychology: String,
    pub persona_logic: String,
    pub measured_dp: Option<f64>,
    pub required_dp: Option<f64>,
    pub contrast_ratio: Option<f64>,
    pub target_role: String,
    pub target_text: Option<String>,
    pub resource_id: Option<String>,
    pub neighbor_texts: Vec<String>,
    pub prior_text: Option<String>,
    pub clauses: Vec<ClauseRef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClauseRef {
    pub instrument: String,
    pub clause_id: String,
    pub requirement_text: String,
    pub risk_text: String,
}

/// One chat-completion request.
#[derive(Debug, Clone)]
pub struct Prompt {
    pub layer: u8,
    pub system_text: String,
    pub user_text: String,
    pub image: Option<PromptImage>,
    pub meta: PromptMeta,
}

impl Prompt {
    /// Stable digest over layer, system text, user text, and image bytes.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update([self.layer]);
        hasher.update(self.system_text.as_bytes());
        hasher.update(b"\x1f");
        hasher.update(self.user_text.as_bytes());
        if let Some(img) = &self.image {
            hasher.update(&img.png);
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

/// Output of one layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerOutput {
    pub layer: u8,
    pub text: String,
    /// Layer 3 only: ids of the retrieved clauses the text actually cites.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cited_clause_ids: Vec<String>,
}

fn jurisdiction_name(code: &str) -> &str {
    match code {
        "JP" => "Japan",
        "US" => "the United States",
        "EU" => "the European Union",
        other => other,
    }
}

fn render_constraints(persona: &Persona) -> Vec<String> {
    persona
        .constraints
        .iter()
        .map(|c| {
            if c.params.is_empty() {
                c.text.clone()
            } else {
                let params: Vec<String> =
                    c.params.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                format!("{} ({})", c.text, params.join(", "))
            }
        })
        .collect()
}

fn metrics_line(v: &RawViolation) -> String {
    match &v.category {
        ViolationCategory::TouchTargetSize => {
            let measured = v.metrics.measured_dp.unwrap_or_default();
            let required = v.metrics.required_dp.unwrap_or_default();
            format!(
                "Measured touch-target extent: {} dp (minimum expected: {} dp)",
                format_dp(measured),
                format_dp(required)
            )
        }
        ViolationCategory::ContrastRatio => {
            let ratio = v.metrics.contrast_ratio.unwrap_or_default();
            format!("Text contrast ratio: {ratio:.2}:1 (minimum expected: 4.5:1)")
        }
        ViolationCategory::ContentLabeling => {
            "Accessible name: missing (screen readers announce this element generically)"
                .to_string()
        }
        ViolationCategory::Other(tag) => format!("Unclassified check: {tag}"),
    }
}

fn base_meta(persona: &Persona, ctx: &GroundedContext, v: &RawViolation) -> PromptMeta {
    PromptMeta {
        violation_id: v.id.clone(),
        screen_id: v.screen_id.clone(),
        category: v.category.to_string(),
        bounds: v.bounds.to_string(),
        persona_name: persona.name.clone(),
        persona_age: persona.age,
        persona_condition: persona.condition.clone(),
        persona_constraints: render_constraints(persona),
        persona_psychology: persona.psychology.clone(),
        persona_logic: persona.logic.clone(),
        measured_dp: v.metrics.measured_dp,
        required_dp: v.metrics.required_dp,
        contrast_ratio: v.metrics.contrast_ratio,
        target_role: crate::hierarchy::primary_role_for(
            &ctx.slice.target.class_name,
            ctx.slice.target.clickable,
        )
        .to_string(),
        target_text: ctx
            .slice
            .target
            .text
            .clone()
            .or_else(|| ctx.slice.target.content_description.clone()),
        resource_id: ctx.slice.target.resource_id.clone(),
        neighbor_texts: ctx.slice.neighbor_texts.clone(),
        prior_text: None,
        clauses: Vec::new(),
    }
}

fn check_lineage(ctx: &GroundedContext, v: &RawViolation) -> Result<(), PromptError> {
    if ctx.screen_id != v.screen_id {
        return Err(PromptError::PreconditionViolation(format!(
            "context screen {} does not match violation screen {}",
            ctx.screen_id, v.screen_id
        )));
    }
    if !ctx.crop_rect.contains(&v.bounds) {
        return Err(PromptError::PreconditionViolation(
            "context crop does not contain the violation bounds".to_string(),
        ));
    }
    if ctx.slice.serialized.trim().is_empty() {
        return Err(PromptError::PreconditionViolation(
            "slice serialization is empty".to_string(),
        ));
    }
    Ok(())
}

/// Layer 1: simulate the persona's interaction attempt against the element.
pub fn build_layer1_prompt(
    persona: &Persona,
    ctx: &GroundedContext,
    v: &RawViolation,
) -> Result<Prompt, PromptError> {
    check_lineage(ctx, v)?;

    let system_text = format!(
        "You are {name}, a {age}-year-old user living in {loc} with {condition}. \
Act as the defined persona for the whole answer: narrate one realistic attempt to use the \
highlighted element, in the first person, grounded strictly in the interface evidence provided. \
Never mention elements that are not in the evidence.",
        name = persona.name,
        age = persona.age,
        loc = jurisdiction_name(&persona.loc),
        condition = persona.condition,
    );

    let constraints = render_constraints(persona);
    let mut user_text = String::new();
    user_text.push_str("## Persona profile\n");
    user_text.push_str(&format!("Name: {} ({})\n", persona.name, persona.age));
    user_text.push_str(&format!("Location: {}\n", persona.loc));
    user_text.push_str(&format!("Condition: {}\n", persona.condition));
    for c in &constraints {
        user_text.push_str(&format!("Constraint: {c}\n"));
    }
    user_text.push_str(&format!("Psychology: {}\n", persona.psychology));
    user_text.push_str(&format!("Logic: {}\n", persona.logic));
    user_text.push_str("\n## Violation\n");
    user_text.push_str(&format!("Category: {}\n", v.category));
    user_text.push_str(&format!("Element bounds: {}\n", v.bounds));
    user_text.push_str(&format!("{}\n", metrics_line(v)));
    user_text.push_str("\n## UI context (semantic slice)\n");
    user_text.push_str(&ctx.slice.serialized);
    user_text.push_str("\n\n## Task\n");
    user_text.push_str(
        "Simulate one interaction attempt with the element above. Describe the physical \
barrier that arises when your constraints meet the element's geometry, citing the concrete \
numbers. The attached image shows the cropped screen region around the element.",
    );

    let png = encode_png(&ctx.crop_image)?;
    let (width, height) = ctx.crop_image.dimensions();

    Ok(Prompt {
        layer: 1,
        system_text,
        user_text,
        image: Some(PromptImage { png, width, height }),
        meta: base_meta(persona, ctx, v),
    })
}

/// Layer 2: deduce the workflow disruption from the element's semantic role.
pub fn build_layer2_prompt(
    layer1: &LayerOutput,
    ctx: &GroundedContext,
    v: &RawViolation,
) -> Result<Prompt, PromptError> {
    if layer1.layer != 1 {
        return Err(PromptError::PreconditionViolation(format!(
            "layer 2 must chain from layer 1, got layer {}",
            layer1.layer
        )));
    }
    check_lineage(ctx, v)?;

    let system_text = "You analyze how a physical interaction barrier disrupts a mobile-app \
workflow. Reason from the element's identifier, neighboring labels, and structural context to \
the task the user was trying to complete, and state what breaks downstream. Stay grounded in \
the provided evidence."
        .to_string();

    let mut user_text = String::new();
    user_text.push_str("## Physical barrier (prior analysis, verbatim)\n");
    user_text.push_str(&layer1.text);
    user_text.push_str("\n\n## Element identity\n");
    user_text.push_str(&format!(
        "resource-id: {}\n",
        ctx.slice.target.resource_id.as_deref().unwrap_or("(none)")
    ));
    match ctx
        .slice
        .target
        .text
        .as_deref()
        .or(ctx.slice.target.content_description.as_deref())
    {
        Some(text) => user_text.push_str(&format!("Visible text: \"{text}\"\n")),
        None => user_text.push_str("Visible text: (none)\n"),
    }
    if ctx.slice.neighbor_texts.is_empty() {
        user_text.push_str("Neighboring text labels: (none recorded)\n");
    } else {
        let quoted: Vec<String> = ctx
            .slice
            .neighbor_texts
            .iter()
            .map(|t| format!("\"{t}\""))
            .collect();
        user_text.push_str(&format!("Neighboring text labels: {}\n", quoted.join(", ")));
    }
    if ctx.slice.ancestor_ids.is_empty() {
        user_text.push_str("Ancestor resource-id path: (none)\n");
    } else {
        user_text.push_str(&format!(
            "Ancestor resource-id path: {}\n",
            ctx.slice.ancestor_ids.join(" > ")
        ));
    }
    user_text.push_str("\n## Task\n");
    user_text.push_str(
        "Infer what this element does in the flow, then trace the disruption from the first \
failed interaction to the point where the user abandons the task. Name the functional \
consequence, not just the local miss.",
    );

    let mut meta = base_meta_from_prompt(ctx, v);
    meta.prior_text = Some(layer1.text.clone());

    Ok(Prompt {
        layer: 2,
        system_text,
        user_text,
        image: None,
        meta,
    })
}

// Layer 2/3 meta lacks a persona (carried in layer 1); reuse the context
// fields and leave persona fields from the prior layer's meta to the caller.
fn base_meta_from_prompt(ctx: &GroundedContext, v: &RawViolation) -> PromptMeta {
    PromptMeta {
        violation_id: v.id.clone(),
        screen_id: v.screen_id.clone(),
        category: v.category.to_string(),
        bounds: v.bounds.to_string(),
        measured_dp: v.metrics.measured_dp,
        required_dp: v.metrics.required_dp,
        contrast_ratio: v.metrics.contrast_ratio,
        target_role: crate::hierarchy::primary_role_for(
            &ctx.slice.target.class_name,
            ctx.slice.target.clickable,
        )
        .to_string(),
        target_text: ctx
            .slice
            .target
            .text
            .clone()
            .or_else(|| ctx.slice.target.content_description.clone()),
        resource_id: ctx.slice.target.resource_id.clone(),
        neighbor_texts: ctx.slice.neighbor_texts.clone(),
        ..PromptMeta::default()
    }
}

/// Layer 3: compare the blockage against the retrieved clauses, citing them
/// explicitly and nothing else.
pub fn build_layer3_prompt(
    layer2: &LayerOutput,
    clauses: &[&LegalClause],
    persona: &Persona,
) -> Result<Prompt, PromptError> {
    if layer2.layer != 2 {
        return Err(PromptError::PreconditionViolation(format!(
            "layer 3 must chain from layer 2, got layer {}",
            layer2.layer
        )));
    }
    if clauses.is_empty() {
        return Err(PromptError::EmptyClauseSet);
    }

    let system_text = "You are a compliance analyst. Compare the functional blockage below \
against each provided legal or standards clause, explicitly citing the retrieved instruments \
and clause identifiers. Cite nothing outside the provided clauses; if a point is not covered \
by them, say so instead of inventing authority."
        .to_string();

    let mut user_text = String::new();
    user_text.push_str("## Functional blockage (prior analysis, verbatim)\n");
    user_text.push_str(&layer2.text);
    user_text.push_str(&format!(
        "\n\n## Retrieved clauses for {} ({})\n",
        persona.loc,
        jurisdiction_name(&persona.loc)
    ));
    for (i, clause) in clauses.iter().enumerate() {
        user_text.push_str(&format!(
            "{}. {} — {}\n   Requirement: {}\n   Risk: {}\n",
            i + 1,
            clause.instrument,
            clause.clause_id,
            clause.requirement_text,
            clause.risk_text
        ));
    }
    user_text.push_str("\n## Task\n");
    user_text.push_str(
        "For each clause, state whether the blockage violates it and why, citing the \
instrument and clause identifier verbatim. Close with the concrete compliance risk the \
operator carries while this stays unfixed.",
    );

    let meta = PromptMeta {
        persona_name: persona.name.clone(),
        persona_age: persona.age,
        persona_condition: persona.condition.clone(),
        prior_text: Some(layer2.text.clone()),
        clauses: clauses
            .iter()
            .map(|c| ClauseRef {
                instrument: c.instrument.clone(),
                clause_id: c.clause_id.clone(),
                requirement_text: c.requirement_text.clone(),
                risk_text: c.risk_text.clone(),
            })
            .collect(),
        ..PromptMeta::default()
    };

    Ok(Prompt {
        layer: 3,
        system_text,
        user_text,
        image: None,
        meta,
    })
}
