//! Shared helpers for the CLI and acceptance suites: binary invocation,
//! fixture screens, and the 50-violation synthetic corpus.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const FOLLOW_SCAN: &str = include_str!("../fixtures/follow_button_scan.json");
pub const FOLLOW_HIERARCHY: &str = include_str!("../fixtures/follow_button_hierarchy.xml");

pub fn hear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hear"))
        .args(args)
        .output()
        .expect("failed to spawn hear binary")
}

pub fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process terminated by signal")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

pub fn write_screenshot(path: &Path, width: u32, height: u32) {
    let img = hear_core::image::RgbaImage::from_fn(width, height, |x, y| {
        hear_core::image::Rgba([(x % 251) as u8, (y % 241) as u8, 200, 255])
    });
    img.save_with_format(path, hear_core::image::ImageFormat::Png)
        .expect("write screenshot");
}

/// Copy the bundled Follow-button fixture into `dir` and return the
/// (scan, hierarchy, screenshot) paths.
pub fn follow_fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let scan = dir.join("follow_button_scan.json");
    let hierarchy = dir.join("follow_button_hierarchy.xml");
    let screenshot = dir.join("follow_button_screenshot.png");
    std::fs::write(&scan, FOLLOW_SCAN).unwrap();
    std::fs::write(&hierarchy, FOLLOW_HIERARCHY).unwrap();
    write_screenshot(&screenshot, 1080, 2400);
    (scan, hierarchy, screenshot)
}

/// Violation categories cycled across the synthetic corpus, index % 3.
pub fn corpus_category(index: usize) -> &'static str {
    match index % 3 {
        0 => "TouchTargetSize",
        1 => "ContentLabeling",
        _ => "ContrastRatio",
    }
}

/// Build a synthetic screen with `count` violations laid out on a 5-wide
/// grid (1080x2400): a clickable Button for TouchTargetSize, a clickable
/// unlabeled ImageView for ContentLabeling, a low-contrast TextView for
/// ContrastRatio. Returns (scan json, hierarchy xml).
pub fn corpus_screen(screen_id: &str, count: usize) -> (String, String) {
    assert!(count <= 50, "grid holds at most 50 cells");
    let cell = |i: usize| {
        let col = i % 5;
        let row = i / 5;
        let x0 = 20 + col as i32 * 210;
        let y0 = 20 + row as i32 * 230;
        (x0, y0, x0 + 180, y0 + 200)
    };

    let mut violations = Vec::new();
    let mut rows: Vec<Vec<String>> = vec![Vec::new(); count.div_ceil(5)];
    for i in 0..count {
        let (l, t, r, b) = cell(i);
        let bounds = format!("[{l},{t}][{r},{b}]");
        let (record, node) = match corpus_category(i) {
            "TouchTargetSize" => (
                serde_json::json!({
                    "type": "Touch target",
                    "bounds": bounds,
                    "description": "Consider making this clickable item larger. This item's height is 43dp. Consider making the height of this touch target 48dp or larger."
                }),
                format!(
                    r#"<node class="android.widget.Button" resource-id="app:id/action_{i}" text="Action {i}" clickable="true" bounds="{bounds}"/>"#
                ),
            ),
            "ContentLabeling" => (
                serde_json::json!({
                    "type": "Item label",
                    "bounds": bounds,
                    "description": "This item may not have a label readable by screen readers."
                }),
                format!(
                    r#"<node class="android.widget.ImageView" resource-id="app:id/glyph_{i}" clickable="true" bounds="{bounds}"/>"#
                ),
            ),
            _ => (
                serde_json::json!({
                    "type": "Text contrast",
                    "bounds": bounds,
                    "description": "Consider increasing this item's text contrast against its background.",
                    "fg_color": "#9E9E9E",
                    "bg_color": "#FFFFFF"
                }),
                format!(
                    r#"<node class="android.widget.TextView" resource-id="app:id/caption_{i}" text="Caption {i}" clickable="false" bounds="{bounds}"/>"#
                ),
            ),
        };
        violations.push(record);
        rows[i / 5].push(node);
    }

    let scan = serde_json::to_string_pretty(&serde_json::json!({
        "screen_id": screen_id,
        "display": { "density": 2.625, "width_px": 1080, "height_px": 2400 },
        "violations": violations
    }))
    .unwrap();

    let mut hierarchy = String::from(
        "<hierarchy>\n  <node class=\"android.widget.FrameLayout\" resource-id=\"app:id/grid_root\" clickable=\"false\" bounds=\"[0,0][1080,2400]\">\n",
    );
    for (row_idx, nodes) in rows.iter().enumerate() {
        let top = 20 + row_idx as i32 * 230;
        let bottom = top + 200;
        hierarchy.push_str(&format!(
            "    <node class=\"android.widget.LinearLayout\" resource-id=\"app:id/row_{row_idx}\" clickable=\"false\" bounds=\"[0,{top}][1080,{bottom}]\">\n"
        ));
        for node in nodes {
            hierarchy.push_str("      ");
            hierarchy.push_str(node);
            hierarchy.push('\n');
        }
        hierarchy.push_str("    </node>\n");
    }
    hierarchy.push_str("  </node>\n</hierarchy>\n");

    (scan, hierarchy)
}

/// Write a complete corpus screen bundle into `dir`.
pub fn write_corpus_screen(
    dir: &Path,
    screen_id: &str,
    count: usize,
) -> (PathBuf, PathBuf, PathBuf) {
    let (scan, hierarchy) = corpus_screen(screen_id, count);
    let scan_path = dir.join(format!("{screen_id}_scan.json"));
    let hierarchy_path = dir.join(format!("{screen_id}_hierarchy.xml"));
    let screenshot_path = dir.join(format!("{screen_id}_screenshot.png"));
    std::fs::write(&scan_path, scan).unwrap();
    std::fs::write(&hierarchy_path, hierarchy).unwrap();
    write_screenshot(&screenshot_path, 1080, 2400);
    (scan_path, hierarchy_path, screenshot_path)
}

pub fn load_reports(dir: &Path) -> Vec<hear_core::HearReport> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().ends_with(".report.json"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}
