//! `hear personas list` / `hear kb list`: human-readable tables with
//! coverage matrices.

use std::collections::BTreeSet;
use std::path::Path;

use hear_core::data;
use hear_core::scan::ViolationCategory;

use crate::CliError;

pub fn personas_list(data_path: Option<&Path>) -> Result<(), CliError> {
    let registry = match data_path {
        Some(path) => hear_core::load_registry(&read(path)?).map_err(CliError::input)?,
        None => data::bundled_registry().map_err(CliError::input)?,
    };

    println!("PERSONA REGISTRY ({} personas)\n", registry.entries.len());
    let name_w = registry
        .entries
        .iter()
        .map(|p| p.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let cond_w = registry
        .entries
        .iter()
        .map(|p| p.condition.len())
        .max()
        .unwrap_or(9)
        .max(9);
    println!(
        "{:<name_w$}  AGE  LOC  {:<cond_w$}  WCAG",
        "NAME", "CONDITION"
    );
    for p in &registry.entries {
        println!(
            "{:<name_w$}  {:>3}  {}   {:<cond_w$}  {}",
            p.name,
            p.age,
            p.loc,
            p.condition,
            p.wcag_criteria.join(", ")
        );
    }

    println!("\nCOVERAGE (category x persona)");
    for category in ViolationCategory::MATCHABLE {
        let names = registry
            .mapping
            .get(&category.to_string())
            .map(|n| n.join(", "))
            .unwrap_or_else(|| "-".to_string());
        println!("  {:<16} {}", category.to_string(), names);
    }
    Ok(())
}

pub fn kb_list(data_path: Option<&Path>) -> Result<(), CliError> {
    let kb = match data_path {
        Some(path) => hear_core::load_legal_kb(&read(path)?).map_err(CliError::input)?,
        None => data::bundled_legal_kb().map_err(CliError::input)?,
    };

    println!("LEGAL KNOWLEDGE BASE ({} clauses)\n", kb.len());
    if kb.is_empty() {
        return Ok(());
    }

    let inst_w = kb
        .iter()
        .map(|c| c.instrument.len())
        .max()
        .unwrap_or(10)
        .max(10);
    let clause_w = kb
        .iter()
        .map(|c| c.clause_id.len())
        .max()
        .unwrap_or(6)
        .max(6);
    println!(
        "JUR  {:<inst_w$}  {:<clause_w$}  CRITERIA",
        "INSTRUMENT", "CLAUSE"
    );
    for c in &kb {
        println!(
            "{}   {:<inst_w$}  {:<clause_w$}  {}",
            c.jurisdiction,
            c.instrument,
            c.clause_id,
            c.wcag_criteria.join(", ")
        );
    }

    let jurisdictions: BTreeSet<&str> = kb.iter().map(|c| c.jurisdiction.as_str()).collect();
    let criteria: BTreeSet<&str> = kb
        .iter()
        .flat_map(|c| c.wcag_criteria.iter().map(String::as_str))
        .collect();

    println!("\nCOVERAGE (jurisdiction x criterion)");
    print!("     ");
    for criterion in &criteria {
        print!("{criterion:<8}");
    }
    println!();
    for jurisdiction in &jurisdictions {
        print!("{jurisdiction}   ");
        for criterion in &criteria {
            let covered = kb.iter().any(|c| {
                c.jurisdiction == *jurisdiction && c.wcag_criteria.iter().any(|w| w == criterion)
            });
            print!("{:<8}", if covered { "yes" } else { "-" });
        }
        println!();
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
