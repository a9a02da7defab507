//! Persona registry: ability-based user profiles and their deterministic
//! matching to violation categories.
//!
//! The registry is data, not code — a schema-validated JSON document
//! (`data/personas.json`, schema in `data/personas.schema.json`) so personas
//! can be extended without rebuilding.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scan::ViolationCategory;

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("registry schema error: {0}")]
    RegistrySchemaError(String),
    #[error("incomplete coverage: category {category} maps to {count} persona(s), need >= 2")]
    IncompleteCoverage { category: String, count: usize },
    #[error("category {0} has no persona mapping")]
    UnmatchableCategory(String),
    #[error("no persona named {0:?} among the candidates")]
    UnknownPersonaName(String),
    #[error("violation id {0:?} does not start with 8 hex digits")]
    MalformedViolationId(String),
}

/// One constraint: prose plus the quantitative parameters it mentions, so
/// prompts can state the numbers explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

/// Six-field ability-based persona driving narrative generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub age: u32,
    /// Jurisdiction code (ISO 3166-1 alpha-2; EU accepted).
    pub loc: String,
    pub condition: String,
    pub constraints: Vec<Constraint>,
    pub psychology: String,
    /// Anticipated in-app difficulty.
    pub logic: String,
    pub wcag_criteria: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
}

impl Persona {
    /// Every nonempty prose field, used as the audit's quote whitelist.
    pub fn text_fields(&self) -> Vec<&str> {
        let mut fields = vec![
            self.name.as_str(),
            self.loc.as_str(),
            self.condition.as_str(),
            self.psychology.as_str(),
            self.logic.as_str(),
        ];
        fields.extend(self.constraints.iter().map(|c| c.text.as_str()));
        fields
    }
}

#[derive(Debug, Deserialize)]
struct RegistryDoc {
    personas: Vec<Persona>,
    mapping: BTreeMap<String, Vec<String>>,
}

/// Validated persona registry.
#[derive(Debug, Clone)]
pub struct PersonaRegistry {
    pub entries: Vec<Persona>,
    /// Category key ("TouchTargetSize", ...) -> ordered persona names.
    pub mapping: BTreeMap<String, Vec<String>>,
}

fn criterion_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d+\.\d+\.\d+$").unwrap())
}

fn loc_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z]{2}$").unwrap())
}

/// Load and validate a registry document.
pub fn load_registry(doc: &str) -> Result<PersonaRegistry, PersonaError> {
    let parsed: RegistryDoc =
        serde_json::from_str(doc).map_err(|e| PersonaError::RegistrySchemaError(e.to_string()))?;

    let mut seen = std::collections::BTreeSet::new();
    for p in &parsed.personas {
        let require = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(PersonaError::RegistrySchemaError(format!(
                    "persona {:?}: {what}",
                    p.name
                )))
            }
        };
        require(!p.name.trim().is_empty(), "empty name")?;
        require(p.age > 0, "age must be positive")?;
        require(loc_re().is_match(&p.loc), "loc must be a two-letter code")?;
        require(!p.condition.trim().is_empty(), "empty condition")?;
        require(!p.psychology.trim().is_empty(), "empty psychology")?;
        require(!p.logic.trim().is_empty(), "empty logic")?;
        require(
            !p.constraints.is_empty() && p.constraints.iter().all(|c| !c.text.trim().is_empty()),
            "constraints must be nonempty prose",
        )?;
        require(
            !p.wcag_criteria.is_empty(),
            "wcag_criteria must be nonempty",
        )?;
        for c in &p.wcag_criteria {
            require(
                criterion_re().is_match(c),
                "wcag criterion ids must match d.d.d",
            )?;
        }
        require(seen.insert(p.name.clone()), "duplicate persona name")?;
    }

    let matchable: Vec<String> = ViolationCategory::MATCHABLE
        .iter()
        .map(|c| c.to_string())
        .collect();
    for key in parsed.mapping.keys() {
        if !matchable.contains(key) {
            return Err(PersonaError::RegistrySchemaError(format!(
                "mapping key {key:?} is not a matchable category"
            )));
        }
    }
    for category in &matchable {
        let names = parsed.mapping.get(category).cloned().unwrap_or_default();
        if names.len() < 2 {
            return Err(PersonaError::IncompleteCoverage {
                category: category.clone(),
                count: names.len(),
            });
        }
        for name in &names {
            if !seen.contains(name) {
                return Err(PersonaError::RegistrySchemaError(format!(
                    "mapping for {category} names unknown persona {name:?}"
                )));
            }
        }
    }

    Ok(PersonaRegistry {
        entries: parsed.personas,
        mapping: parsed.mapping,
    })
}

impl PersonaRegistry {
    /// Personas mapped to a category, in registry order. `Other` is
    /// unmatchable by contract.
    pub fn match_personas(
        &self,
        category: &ViolationCategory,
    ) -> Result<Vec<&Persona>, PersonaError> {
        if !category.is_matchable() {
            return Err(PersonaError::UnmatchableCategory(category.to_string()));
        }
        let names = self
            .mapping
            .get(&category.to_string())
            .ok_or_else(|| PersonaError::UnmatchableCategory(category.to_string()))?;
        Ok(names
            .iter()
            .filter_map(|name| self.entries.iter().find(|p| &p.name == name))
            .collect())
    }
}

/// How one of the matched personas is chosen per violation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SelectionPolicy {
    /// Hash of the violation id picks the index — same scan, same persona,
    /// on every machine.
    #[default]
    Deterministic,
    First,
    Named(String),
}

impl FromStr for SelectionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(SelectionPolicy::Deterministic),
            "first" => Ok(SelectionPolicy::First),
            other => match other.strip_prefix("named:") {
                Some(name) if !name.is_empty() => Ok(SelectionPolicy::Named(name.to_string())),
                _ => Err(format!(
                    "unknown persona policy {s:?}: expected deterministic | first | named:NAME"
                )),
            },
        }
    }
}

/// Pick one persona from the ordered candidates. Pure in all arguments.
pub fn select_persona<'a>(
    candidates: &[&'a Persona],
    violation_id: &str,
    policy: &SelectionPolicy,
) -> Result<&'a Persona, PersonaError> {
    assert!(!candidates.is_empty(), "candidates must be nonempty");
    match policy {
        SelectionPolicy::First => Ok(candidates[0]),
        SelectionPolicy::Named(name) => candidates
            .iter()
            .find(|p| &p.name == name)
            .copied()
            .ok_or_else(|| PersonaError::UnknownPersonaName(name.clone())),
        SelectionPolicy::Deterministic => {
            let prefix: String = violation_id.chars().take(8).collect();
            let value = u64::from_str_radix(&prefix, 16)
                .map_err(|_| PersonaError::MalformedViolationId(violation_id.to_string()))?;
            Ok(candidates[(value % candidates.len() as u64) as usize])
        }
    }
}
