//! CLI behavior: exit codes, artifacts, worksheet lifecycle, listings.

mod common;

use common::{exit_code, follow_fixture, hear, load_reports, stdout_of};

#[test]
fn generate_writes_the_full_artifact_set() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("reports");

    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--provider",
        "mock",
        "--keep-prompts",
        "--quiet",
    ]);
    assert_eq!(
        exit_code(&result),
        0,
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );

    let reports = load_reports(&out);
    assert_eq!(reports.len(), 1);
    let id = &reports[0].violation.id;
    for suffix in [".md", ".report.json", "_crop.png", ".prompts.json"] {
        let path = out.join(format!("{id}{suffix}"));
        assert!(path.exists(), "missing {}", path.display());
    }
    assert!(out.join("index.json").exists());
    assert!(out.join("skipped.json").exists());

    // crop dims follow the 20%-padding rule: [526,1930][840,2086] = 314x156
    let crop = hear_core::crop::load_screenshot(&out.join(format!("{id}_crop.png"))).unwrap();
    assert_eq!(crop.dimensions(), (314, 156));
}

#[test]
fn keep_prompts_dump_proves_layer_chaining() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("reports");
    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--keep-prompts",
        "--quiet",
    ]);
    assert_eq!(exit_code(&result), 0);

    let reports = load_reports(&out);
    let id = &reports[0].violation.id;
    let prompts: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(out.join(format!("{id}.prompts.json"))).unwrap(),
    )
    .unwrap();
    assert_eq!(prompts.len(), 3);

    // chaining fidelity: each prompt embeds the prior layer's text verbatim
    let layer1_text = &reports[0].layers[0].text;
    let layer2_text = &reports[0].layers[1].text;
    assert!(prompts[1]["user_text"]
        .as_str()
        .unwrap()
        .contains(layer1_text));
    assert!(prompts[2]["user_text"]
        .as_str()
        .unwrap()
        .contains(layer2_text));
    // and the stored digests match the prompt dump
    for (record, digest) in prompts.iter().zip(&reports[0].provenance.prompt_digests) {
        assert_eq!(record["digest"].as_str().unwrap(), digest);
    }
    assert_eq!(prompts[0]["has_image"], serde_json::Value::Bool(true));
    assert_eq!(prompts[1]["has_image"], serde_json::Value::Bool(false));
}

#[test]
fn unreadable_scan_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, hierarchy, screenshot) = follow_fixture(tmp.path());
    let result = hear(&[
        "generate",
        "--scan",
        tmp.path().join("nope.json").to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn malformed_hierarchy_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, _, screenshot) = follow_fixture(tmp.path());
    let bad = tmp.path().join("bad.xml");
    std::fs::write(&bad, "<hierarchy><node class=\"x\"/></hierarchy>").unwrap();
    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        bad.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn kb_gap_exits_4_without_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("out");
    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "XX",
        "--quiet",
    ]);
    assert_eq!(exit_code(&result), 4);
    assert!(load_reports(&out).is_empty());
}

#[test]
fn audit_findings_exit_0_and_flag_the_mutant() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("reports");
    let generated = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--quiet",
    ]);
    assert_eq!(exit_code(&generated), 0);

    // mutate the stored report to quote a string absent from the slice
    let mut reports = load_reports(&out);
    let id = reports[0].violation.id.clone();
    reports[0].layers[1]
        .text
        .push_str(" The banner says \"Subscribe today\".");
    std::fs::write(
        out.join(format!("{id}.report.json")),
        serde_json::to_string_pretty(&reports[0]).unwrap(),
    )
    .unwrap();

    let audited = hear(&[
        "audit",
        "--reports",
        out.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&audited), 0, "findings are not tool errors");
    let stdout = stdout_of(&audited);
    assert!(
        stdout.contains("textual fidelity: 0 pass / 1 fail"),
        "{stdout}"
    );
    assert!(stdout.contains("Subscribe today"), "{stdout}");

    let sheet: Vec<hear_core::audit::AuditVerdict> =
        serde_json::from_str(&std::fs::read_to_string(out.join("audit_worksheet.json")).unwrap())
            .unwrap();
    assert!(sheet[0].hallucination);
}

#[test]
fn audit_annotate_lifecycle() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("reports");
    hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--quiet",
    ]);
    let audited = hear(&[
        "audit",
        "--reports",
        out.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&audited), 0);

    let id = load_reports(&out)[0].violation.id.clone();
    let annotated = hear(&[
        "audit",
        "--reports",
        out.to_str().unwrap(),
        "--annotate",
        &id,
        "pass",
        "--by",
        "annotator-a",
    ]);
    assert_eq!(
        exit_code(&annotated),
        0,
        "{}",
        String::from_utf8_lossy(&annotated.stderr)
    );

    // a second annotation on the same verdict is refused
    let again = hear(&[
        "audit",
        "--reports",
        out.to_str().unwrap(),
        "--annotate",
        &id,
        "fail",
        "--by",
        "annotator-b",
    ]);
    assert_eq!(exit_code(&again), 2);

    // unknown id is an input error
    let unknown = hear(&[
        "audit",
        "--reports",
        out.to_str().unwrap(),
        "--annotate",
        "ffffffffffffffff",
        "pass",
        "--by",
        "annotator-a",
    ]);
    assert_eq!(exit_code(&unknown), 2);
}

#[test]
fn audit_missing_reports_dir_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, hierarchy, _) = follow_fixture(tmp.path());
    let result = hear(&[
        "audit",
        "--reports",
        tmp.path().join("missing").to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn personas_list_prints_the_coverage_matrix() {
    let result = hear(&["personas", "list"]);
    assert_eq!(exit_code(&result), 0);
    let stdout = stdout_of(&result);
    assert!(stdout.contains("Ichiro"));
    assert!(stdout.contains("TouchTargetSize"));
    assert!(stdout.contains("6 personas"));
}

#[test]
fn personas_list_rejects_invalid_data() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("personas.json");
    std::fs::write(&bad, "{not json").unwrap();
    let result = hear(&["personas", "list", "--data", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn kb_list_accepts_an_empty_kb() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("kb.json");
    std::fs::write(&empty, r#"{"clauses":[]}"#).unwrap();
    let result = hear(&["kb", "list", "--data", empty.to_str().unwrap()]);
    assert_eq!(exit_code(&result), 0);
    assert!(stdout_of(&result).contains("0 clauses"));
}

#[test]
fn kb_list_shows_the_japanese_instruments() {
    let result = hear(&["kb", "list"]);
    assert_eq!(exit_code(&result), 0);
    let stdout = stdout_of(&result);
    assert!(stdout.contains("JIS X 8341-3:2016"));
    assert!(stdout
        .contains("Act on the Elimination of Discrimination against Persons with Disabilities"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let config = tmp.path().join("hear.toml");
    // config says XX (would exit 4); the flag overrides back to JP
    std::fs::write(&config, "jurisdiction = \"XX\"\nprovider = \"mock\"\n").unwrap();

    let through_config = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        tmp.path().join("out1").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(exit_code(&through_config), 4);

    let flag_wins = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        tmp.path().join("out2").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--quiet",
    ]);
    assert_eq!(exit_code(&flag_wins), 0);
}

#[test]
fn index_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = common::write_corpus_screen(tmp.path(), "jobs_screen", 12);

    let mut indexes = Vec::new();
    for (dir, jobs) in [("serial", "1"), ("parallel", "8")] {
        let out = tmp.path().join(dir);
        let result = hear(&[
            "generate",
            "--scan",
            scan.to_str().unwrap(),
            "--hierarchy",
            hierarchy.to_str().unwrap(),
            "--screenshot",
            screenshot.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--jurisdiction",
            "JP",
            "--jobs",
            jobs,
            "--quiet",
        ]);
        assert_eq!(exit_code(&result), 0);
        indexes.push(std::fs::read(out.join("index.json")).unwrap());
    }
    assert_eq!(
        indexes[0], indexes[1],
        "index must be ordered by violation id, not completion"
    );
}

#[test]
fn lenient_text_scan_works_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, hierarchy, screenshot) = follow_fixture(tmp.path());
    // line-oriented record format; profile comes from the screenshot dims
    // plus the default density
    let scan = tmp.path().join("scan.txt");
    std::fs::write(
        &scan,
        "Screen: social_profile\n\nViolation: Touch target\nKey/Bounds: [571,1952][795,2064]\nDescription: Consider making this clickable item larger. This item's height is 43dp. Consider making the height of this touch target 48dp or larger.\n",
    )
    .unwrap();

    let out = tmp.path().join("out");
    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--quiet",
    ]);
    assert_eq!(
        exit_code(&result),
        0,
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let reports = load_reports(&out);
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].violation.screen_id, "social_profile");
    assert_eq!(reports[0].violation.metrics.measured_dp, Some(43.0));
}

#[test]
fn named_persona_policy_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let (scan, hierarchy, screenshot) = follow_fixture(tmp.path());
    let out = tmp.path().join("out");
    let result = hear(&[
        "generate",
        "--scan",
        scan.to_str().unwrap(),
        "--hierarchy",
        hierarchy.to_str().unwrap(),
        "--screenshot",
        screenshot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--jurisdiction",
        "JP",
        "--persona-policy",
        "named:Ichiro",
        "--quiet",
    ]);
    assert_eq!(exit_code(&result), 0);
    assert_eq!(load_reports(&out)[0].persona.name, "Ichiro");
}
