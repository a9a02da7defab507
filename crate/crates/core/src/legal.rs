//! Legal knowledge base: jurisdiction-keyed statute/standard clauses and
//! WCAG-criterion retrieval for Layer 3 grounding.
//!
//! The KB is a curated local document (`data/legal_kb.json`); the pipeline
//! never cites an instrument that is not in it. An empty retrieval result is
//! an error, never an invitation to fabricate law.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scan::ViolationCategory;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("legal KB schema error: {0}")]
    KbSchemaError(String),
    #[error("category {0} maps to no WCAG criteria")]
    UnmatchableCategory(String),
    #[error("no applicable clause for jurisdiction {jurisdiction} and criteria {criteria:?}")]
    NoApplicableClause {
        jurisdiction: String,
        criteria: Vec<String>,
    },
}

/// One statute or standard excerpt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegalClause {
    pub jurisdiction: String,
    pub instrument: String,
    /// Success-criterion or article identifier as cited, e.g. "2.5.5 Target Size".
    pub clause_id: String,
    pub wcag_criteria: Vec<String>,
    pub requirement_text: String,
    pub risk_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
}

#[derive(Debug, Deserialize)]
struct KbDoc {
    clauses: Vec<LegalClause>,
}

/// Load and validate a KB document. An empty clause list is valid; retrieval
/// will error later.
pub fn load_legal_kb(doc: &str) -> Result<Vec<LegalClause>, KbError> {
    let parsed: KbDoc =
        serde_json::from_str(doc).map_err(|e| KbError::KbSchemaError(e.to_string()))?;
    for (i, clause) in parsed.clauses.iter().enumerate() {
        let require = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(KbError::KbSchemaError(format!("clause {i}: {what}")))
            }
        };
        require(!clause.jurisdiction.trim().is_empty(), "empty jurisdiction")?;
        require(!clause.instrument.trim().is_empty(), "empty instrument")?;
        require(!clause.clause_id.trim().is_empty(), "empty clause_id")?;
        require(
            !clause.requirement_text.trim().is_empty(),
            "empty requirement_text",
        )?;
        require(!clause.risk_text.trim().is_empty(), "empty risk_text")?;
        require(!clause.wcag_criteria.is_empty(), "empty wcag_criteria")?;
    }
    Ok(parsed.clauses)
}

/// WCAG success criteria behind each violation category.
pub fn map_category_to_criteria(category: &ViolationCategory) -> Result<Vec<String>, KbError> {
    match category {
        ViolationCategory::TouchTargetSize => Ok(vec!["2.5.5".to_string()]),
        ViolationCategory::ContentLabeling => Ok(vec!["1.1.1".to_string(), "4.1.2".to_string()]),
        ViolationCategory::ContrastRatio => Ok(vec!["1.4.3".to_string()]),
        ViolationCategory::Other(tag) => Err(KbError::UnmatchableCategory(tag.clone())),
    }
}

/// All clauses matching the jurisdiction whose criteria intersect the query,
/// in KB order. Empty is an error: Layer 3 must be grounded.
pub fn retrieve_clauses<'a>(
    kb: &'a [LegalClause],
    jurisdiction: &str,
    criteria: &[String],
) -> Result<Vec<&'a LegalClause>, KbError> {
    assert!(!criteria.is_empty(), "criteria must be nonempty");
    let hits: Vec<&LegalClause> = kb
        .iter()
        .filter(|c| c.jurisdiction == jurisdiction)
        .filter(|c| c.wcag_criteria.iter().any(|w| criteria.contains(w)))
        .collect();
    if hits.is_empty() {
        return Err(KbError::NoApplicableClause {
            jurisdiction: jurisdiction.to_string(),
            criteria: criteria.to_vec(),
        });
    }
    Ok(hits)
}
