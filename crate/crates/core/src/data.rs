//! Bundled default data, embedded at build time from the repo's `data/`
//! directory. Runs can override either file on the command line.

use crate::legal::{load_legal_kb, KbError, LegalClause};
use crate::persona::{load_registry, PersonaError, PersonaRegistry};

pub const BUNDLED_PERSONAS_JSON: &str = include_str!("../../../data/personas.json");
pub const BUNDLED_LEGAL_KB_JSON: &str = include_str!("../../../data/legal_kb.json");

pub fn bundled_registry() -> Result<PersonaRegistry, PersonaError> {
    load_registry(BUNDLED_PERSONAS_JSON)
}

pub fn bundled_legal_kb() -> Result<Vec<LegalClause>, KbError> {
    load_legal_kb(BUNDLED_LEGAL_KB_JSON)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Registry/KB join completeness: every criterion a bundled persona
    /// cites is operationalized by at least one bundled clause.
    #[test]
    fn every_persona_criterion_has_a_clause_somewhere() {
        let registry = bundled_registry().unwrap();
        let kb = bundled_legal_kb().unwrap();
        for persona in &registry.entries {
            for criterion in &persona.wcag_criteria {
                assert!(
                    kb.iter().any(|c| c.wcag_criteria.contains(criterion)),
                    "criterion {criterion} of {} has no clause",
                    persona.name
                );
            }
        }
    }

    /// Stronger join: every persona's own jurisdiction can ground every
    /// criterion that persona cites (no run-level flag needed).
    #[test]
    fn bundled_personas_are_groundable_in_their_own_jurisdiction() {
        let registry = bundled_registry().unwrap();
        let kb = bundled_legal_kb().unwrap();
        for persona in &registry.entries {
            for criterion in &persona.wcag_criteria {
                assert!(
                    kb.iter()
                        .any(|c| c.jurisdiction == persona.loc
                            && c.wcag_criteria.contains(criterion)),
                    "{}@{} cannot ground {criterion}",
                    persona.name,
                    persona.loc
                );
            }
        }
    }
}
