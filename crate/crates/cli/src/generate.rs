//! `hear generate`: orchestrate the pipeline over one screen or a manifest
//! of screens, with a bounded worker pool per violation.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hear_core::persona::PersonaRegistry;
use hear_core::provider::{HttpProvider, MockProvider, ModelProvider};
use hear_core::report::PipelineError;
use hear_core::scan::{parse_scanner_document_with, peek_display};
use hear_core::{
    data, ground_context, map_category_to_criteria, retrieve_clauses, select_persona,
    DisplayProfile, LegalClause, RawViolation, ViewNode, DEFAULT_DENSITY,
};
use serde::{Deserialize, Serialize};

use crate::config::{load_file_config, resolve, ProviderKind, RunConfig};
use crate::{CliError, GenerateArgs};

#[derive(Debug, Deserialize)]
struct Manifest {
    screens: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    scan: PathBuf,
    hierarchy: PathBuf,
    screenshot: PathBuf,
}

struct ScreenBundle {
    scan_path: PathBuf,
    hierarchy_path: PathBuf,
    screenshot_path: PathBuf,
}

#[derive(Debug, Serialize)]
struct SkippedEntry {
    violation_id: String,
    category: String,
    screen_id: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct IndexEntry {
    violation_id: String,
    category: String,
    screen_id: String,
    bounds: String,
    persona: String,
    markdown: String,
    report_json: String,
    crop_png: String,
    instruments: Vec<String>,
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let file_config = load_file_config(args.config.as_deref())?;
    let cfg = resolve(&args, file_config)?;

    let bundles = collect_bundles(&args)?;
    if bundles.is_empty() {
        return Err(CliError::Input("no input screens given".to_string()));
    }
    // all inputs must be readable before any generation starts
    for bundle in &bundles {
        for path in [
            &bundle.scan_path,
            &bundle.hierarchy_path,
            &bundle.screenshot_path,
        ] {
            std::fs::metadata(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
    }

    let registry = match &cfg.personas_path {
        Some(path) => hear_core::load_registry(&read(path)?).map_err(CliError::input)?,
        None => data::bundled_registry().map_err(CliError::input)?,
    };
    let kb = match &cfg.kb_path {
        Some(path) => hear_core::load_legal_kb(&read(path)?).map_err(CliError::input)?,
        None => data::bundled_legal_kb().map_err(CliError::input)?,
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("out dir {}: {e}", args.out.display())))?;

    let provider: Box<dyn ModelProvider> = match cfg.provider {
        ProviderKind::Mock => Box::new(MockProvider),
        ProviderKind::Live => Box::new(HttpProvider::new(cfg.provider_config.clone())),
    };

    let mut index: Vec<IndexEntry> = Vec::new();
    let mut skipped: Vec<SkippedEntry> = Vec::new();
    let mut failures: Vec<(String, CliError)> = Vec::new();

    for bundle in &bundles {
        let screen = load_screen(bundle, &cfg)?;
        log::info!(
            "screen {}: {} violation(s)",
            screen
                .violations
                .first()
                .map(|v| v.screen_id.as_str())
                .unwrap_or("-"),
            screen.violations.len()
        );

        let (matchable, others): (Vec<RawViolation>, Vec<RawViolation>) = screen
            .violations
            .into_iter()
            .partition(|v| v.category.is_matchable());

        for v in others {
            log::info!("{}: skipped ({})", v.id, v.category);
            skipped.push(SkippedEntry {
                violation_id: v.id,
                category: v.category.to_string(),
                screen_id: v.screen_id,
                reason: "unmatchable category: no persona mapping".to_string(),
            });
        }

        let outcomes = run_pool(cfg.jobs, matchable, |violation| {
            process_violation(
                violation,
                &screen.root,
                &screen.profile,
                &screen.screenshot,
                &registry,
                &kb,
                &cfg,
                provider.as_ref(),
                &args.out,
            )
        });

        for outcome in outcomes {
            match outcome {
                Ok(entry) => {
                    log::info!("{}: report written ({})", entry.violation_id, entry.persona);
                    index.push(entry);
                }
                Err((id, err)) => {
                    log::warn!("{id}: {}", err.message());
                    failures.push((id, err));
                }
            }
        }
    }

    index.sort_by(|a, b| a.violation_id.cmp(&b.violation_id));
    skipped.sort_by(|a, b| a.violation_id.cmp(&b.violation_id));

    write_json(
        &args.out.join("index.json"),
        &serde_json::json!({ "reports": index }),
    )?;
    write_json(
        &args.out.join("skipped.json"),
        &serde_json::json!({ "skipped": skipped }),
    )?;

    if failures.is_empty() {
        return Ok(());
    }
    // input errors dominate, then provider errors, then KB gaps
    let pick = |code: u8| failures.iter().find(|(_, e)| e.code() == code);
    let (id, err) = pick(2).or_else(|| pick(3)).or_else(|| pick(4)).unwrap();
    let summary = format!(
        "{} of {} report(s) failed; first ({id}): {}",
        failures.len(),
        failures.len() + index.len(),
        err.message()
    );
    Err(match err {
        CliError::Input(_) => CliError::Input(summary),
        CliError::Provider(_) => CliError::Provider(summary),
        CliError::KbGap(_) => CliError::KbGap(summary),
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::input)?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn collect_bundles(args: &GenerateArgs) -> Result<Vec<ScreenBundle>, CliError> {
    if let Some(manifest_path) = &args.manifest {
        let manifest: Manifest = serde_json::from_str(&read(manifest_path)?)
            .map_err(|e| CliError::Input(format!("manifest {}: {e}", manifest_path.display())))?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        return Ok(manifest
            .screens
            .into_iter()
            .map(|e| ScreenBundle {
                scan_path: base.join(e.scan),
                hierarchy_path: base.join(e.hierarchy),
                screenshot_path: base.join(e.screenshot),
            })
            .collect());
    }
    match (&args.scan, &args.hierarchy, &args.screenshot) {
        (Some(scan), Some(hierarchy), Some(screenshot)) => Ok(vec![ScreenBundle {
            scan_path: scan.clone(),
            hierarchy_path: hierarchy.clone(),
            screenshot_path: screenshot.clone(),
        }]),
        _ => Err(CliError::Input(
            "either --manifest or all of --scan/--hierarchy/--screenshot are required".to_string(),
        )),
    }
}

struct LoadedScreen {
    violations: Vec<RawViolation>,
    root: ViewNode,
    profile: DisplayProfile,
    screenshot: hear_core::image::RgbaImage,
}

fn load_screen(bundle: &ScreenBundle, cfg: &RunConfig) -> Result<LoadedScreen, CliError> {
    let scan_text = read(&bundle.scan_path)?;
    let screenshot = hear_core::crop::load_screenshot(&bundle.screenshot_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", bundle.screenshot_path.display())))?;
    let (shot_w, shot_h) = screenshot.dimensions();

    // profile: declared display (JSON input) or screenshot dims (lenient),
    // density overridable either way
    let profile = match peek_display(&scan_text) {
        Some(display) => {
            if (display.width_px, display.height_px) != (shot_w, shot_h) {
                return Err(CliError::Input(format!(
                    "screenshot {} is {shot_w}x{shot_h} but the scan declares {}x{}",
                    bundle.screenshot_path.display(),
                    display.width_px,
                    display.height_px
                )));
            }
            DisplayProfile::new(
                cfg.density_override.unwrap_or(display.density),
                display.width_px,
                display.height_px,
            )
        }
        None => DisplayProfile::new(
            cfg.density_override.unwrap_or(DEFAULT_DENSITY),
            shot_w,
            shot_h,
        ),
    }
    .map_err(CliError::input)?;

    let violations = parse_scanner_document_with(&scan_text, &profile, cfg.required_dp)
        .map_err(|e| CliError::Input(format!("{}: {e}", bundle.scan_path.display())))?;
    let root = hear_core::parse_view_hierarchy(&read(&bundle.hierarchy_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", bundle.hierarchy_path.display())))?;

    Ok(LoadedScreen {
        violations,
        root,
        profile,
        screenshot,
    })
}

#[allow(clippy::too_many_arguments)]
fn process_violation(
    violation: RawViolation,
    root: &ViewNode,
    profile: &DisplayProfile,
    screenshot: &hear_core::image::RgbaImage,
    registry: &PersonaRegistry,
    kb: &[LegalClause],
    cfg: &RunConfig,
    provider: &dyn ModelProvider,
    out_dir: &Path,
) -> Result<IndexEntry, (String, CliError)> {
    let id = violation.id.clone();
    let fail_input = |e: String| (id.clone(), CliError::Input(e));

    let ctx = ground_context(root, &violation, profile, screenshot)
        .map_err(|e| fail_input(e.to_string()))?;
    let candidates = registry
        .match_personas(&violation.category)
        .map_err(|e| fail_input(e.to_string()))?;
    let persona = select_persona(&candidates, &violation.id, &cfg.persona_policy)
        .map_err(|e| fail_input(e.to_string()))?;

    let criteria =
        map_category_to_criteria(&violation.category).map_err(|e| fail_input(e.to_string()))?;
    let jurisdiction = cfg.jurisdiction.as_deref().unwrap_or(&persona.loc);
    let clauses = retrieve_clauses(kb, jurisdiction, &criteria)
        .map_err(|e| (id.clone(), CliError::KbGap(e.to_string())))?;

    let output = hear_core::generate_report(
        &violation,
        &ctx,
        persona,
        &clauses,
        provider,
        &cfg.provider_config,
    )
    .map_err(|e| match &e {
        PipelineError::Provider { .. } => (id.clone(), CliError::Provider(e.to_string())),
        PipelineError::Prompt { .. } => (id.clone(), CliError::Input(e.to_string())),
    })?;

    let write = |name: String, bytes: &[u8]| {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| {
            (
                id.clone(),
                CliError::Input(format!("{}: {e}", path.display())),
            )
        })
    };
    write(
        format!("{id}.md"),
        output.report.assembled_markdown.as_bytes(),
    )?;
    write(format!("{id}_crop.png"), &output.crop_png)?;
    let report_json = serde_json::to_string_pretty(&output.report)
        .map_err(|e| (id.clone(), CliError::Input(e.to_string())))?;
    write(format!("{id}.report.json"), (report_json + "\n").as_bytes())?;
    if cfg.keep_prompts {
        let prompts = serde_json::to_string_pretty(&output.prompts)
            .map_err(|e| (id.clone(), CliError::Input(e.to_string())))?;
        write(format!("{id}.prompts.json"), (prompts + "\n").as_bytes())?;
    }

    Ok(IndexEntry {
        violation_id: violation.id.clone(),
        category: violation.category.to_string(),
        screen_id: violation.screen_id.clone(),
        bounds: violation.bounds.to_string(),
        persona: persona.name.clone(),
        markdown: format!("{id}.md"),
        report_json: format!("{id}.report.json"),
        crop_png: format!("{id}_crop.png"),
        instruments: output
            .report
            .clauses
            .iter()
            .map(|c| c.instrument.clone())
            .collect(),
    })
}

/// Run tasks on up to `jobs` worker threads, preserving input order in the
/// returned results.
fn run_pool<T, R, F>(jobs: usize, tasks: Vec<T>, work: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync,
{
    if tasks.is_empty() {
        return Vec::new();
    }
    let workers = jobs.min(tasks.len());
    let queue: Mutex<VecDeque<(usize, T)>> = Mutex::new(tasks.into_iter().enumerate().collect());
    let results: Mutex<Vec<Option<R>>> = {
        let len = queue.lock().unwrap().len();
        Mutex::new((0..len).map(|_| None).collect())
    };

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let task = queue.lock().unwrap().pop_front();
                match task {
                    Some((i, t)) => {
                        let r = work(t);
                        results.lock().unwrap()[i] = Some(r);
                    }
                    None => break,
                }
            });
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker completed every task"))
        .collect()
}
