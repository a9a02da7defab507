//! `hear audit`: run the automated checks over a reports directory, manage
//! the annotation worksheet.
//!
//! Audit findings are findings, not tool errors: a batch full of failures
//! still exits 0. Missing inputs exit 2.

use std::collections::BTreeMap;
use std::path::Path;

use hear_core::audit::{audit_batch, record_functional_logic, AuditVerdict, CheckStatus};
use hear_core::HearReport;

use crate::{AuditArgs, CliError};

const WORKSHEET: &str = "audit_worksheet.json";

pub fn run(args: AuditArgs) -> Result<(), CliError> {
    match &args.annotate {
        Some(pair) => annotate(&args, pair),
        None => batch(&args),
    }
}

fn batch(args: &AuditArgs) -> Result<(), CliError> {
    let hierarchy_path = args.hierarchy.as_ref().ok_or_else(|| {
        CliError::Input("--hierarchy is required to run the audit checks".to_string())
    })?;
    let root = hear_core::parse_view_hierarchy(&read(hierarchy_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", hierarchy_path.display())))?;

    let reports = load_reports(&args.reports)?;
    if reports.is_empty() {
        log::warn!("no *.report.json files under {}", args.reports.display());
    }

    // one hierarchy per invocation serves every screen named by the reports
    let mut hierarchies: BTreeMap<String, hear_core::ViewNode> = BTreeMap::new();
    for report in &reports {
        hierarchies
            .entry(report.violation.screen_id.clone())
            .or_insert_with(|| root.clone());
    }

    let (verdicts, summary) = audit_batch(&reports, &hierarchies);

    let sheet_path = args.reports.join(WORKSHEET);
    let json = serde_json::to_string_pretty(&verdicts).map_err(CliError::input)?;
    std::fs::write(&sheet_path, json + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", sheet_path.display())))?;

    println!("audited {} report(s)", summary.total);
    println!(
        "  visual grounding: {} pass / {} fail",
        summary.visual_pass, summary.visual_fail
    );
    println!(
        "  textual fidelity: {} pass / {} fail",
        summary.fidelity_pass, summary.fidelity_fail
    );
    println!(
        "  functional logic: {} pending / {} pass / {} fail",
        summary.functional_pending, summary.functional_pass, summary.functional_fail
    );
    println!("  hallucinations:   {}", summary.hallucinations);
    for v in verdicts.iter().filter(|v| v.hallucination) {
        if v.visual_grounding.status == CheckStatus::Fail {
            println!(
                "  FAIL visual   {}: {}",
                v.violation_id, v.visual_grounding.evidence
            );
        }
        if v.textual_fidelity.status == CheckStatus::Fail {
            println!(
                "  FAIL fidelity {}: offending quotes {:?}",
                v.violation_id, v.textual_fidelity.offending_quotes
            );
        }
    }
    println!("worksheet: {}", sheet_path.display());
    Ok(())
}

fn annotate(args: &AuditArgs, pair: &[String]) -> Result<(), CliError> {
    let [id, decision_text] = pair else {
        return Err(CliError::Input(
            "--annotate takes <VIOLATION_ID> <pass|fail>".to_string(),
        ));
    };
    let decision = match decision_text.as_str() {
        "pass" => CheckStatus::Pass,
        "fail" => CheckStatus::Fail,
        other => {
            return Err(CliError::Input(format!(
                "decision must be pass or fail, got {other:?}"
            )))
        }
    };
    let annotator = args
        .by
        .as_deref()
        .ok_or_else(|| CliError::Input("--by NAME is required when annotating".to_string()))?;

    let sheet_path = args.reports.join(WORKSHEET);
    let mut verdicts: Vec<AuditVerdict> = serde_json::from_str(&read(&sheet_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", sheet_path.display())))?;

    let slot = verdicts
        .iter_mut()
        .find(|v| &v.violation_id == id)
        .ok_or_else(|| CliError::Input(format!("no verdict for violation {id}")))?;
    *slot = record_functional_logic(slot.clone(), decision, annotator).map_err(CliError::input)?;
    let updated = slot.clone();

    let json = serde_json::to_string_pretty(&verdicts).map_err(CliError::input)?;
    std::fs::write(&sheet_path, json + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", sheet_path.display())))?;

    println!(
        "{}: functional_logic={:?} by {annotator}, hallucination={}",
        updated.violation_id, updated.functional_logic.status, updated.hallucination
    );
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_reports(dir: &Path) -> Result<Vec<HearReport>, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().ends_with(".report.json"))
        })
        .collect();
    paths.sort();

    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let report: HearReport = serde_json::from_str(&read(&path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    Ok(reports)
}
