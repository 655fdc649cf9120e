#![allow(dead_code)]

use std::path::{Path, PathBuf};

use catalog_core::artifacts::read_json;
use catalog_core::localization::DetectionFixture;
use catalog_core::manifest::Manifest;

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/catalog")
}

/// Synthetic page raster: white paper, grey figure panels, dark caption bars.
pub fn render_page(manifest_dir: &Path, page_index: u32) -> image::RgbImage {
    let manifest = Manifest::load(&manifest_dir.join("manifest.json")).unwrap();
    let page = manifest.pages.iter().find(|p| p.page_index == page_index).unwrap();
    let mut img = image::RgbImage::from_pixel(page.width, page.height, image::Rgb([250, 248, 240]));
    let det: DetectionFixture = read_json(
        &manifest_dir
            .join("fixtures/detections")
            .join(format!("p{page_index:03}.json")),
    )
    .unwrap();
    let mut fill = |cx: f64, cy: f64, w: f64, h: f64, color: [u8; 3]| {
        let x0 = (cx - w / 2.0).max(0.0) as u32;
        let y0 = (cy - h / 2.0).max(0.0) as u32;
        let x1 = ((cx + w / 2.0).max(0.0) as u32).min(page.width);
        let y1 = ((cy + h / 2.0).max(0.0) as u32).min(page.height);
        for y in y0..y1 {
            for x in x0..x1 {
                img.put_pixel(x, y, image::Rgb(color));
            }
        }
    };
    for d in &det.image {
        fill(d.cx, d.cy, d.w, d.h, [170, 160, 150]);
    }
    for d in &det.text {
        fill(d.cx, d.cy, d.w, d.h, [40, 40, 40]);
    }
    img
}

/// Copies the fixture catalog into a scratch directory.
pub fn copy_fixture(dst: &Path) {
    copy_dir(&fixture_root(), dst);
}

fn copy_dir(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &to);
        } else {
            std::fs::copy(entry.path(), &to).unwrap();
        }
    }
}

pub mod oracle;
pub mod synth;

/// Runs harvest then finalize on a fixture directory, writing into `out`.
pub fn run_fixture(
    fixture_dir: &Path,
    out: &Path,
    exec: catalog_core::Execution,
) -> (
    catalog_core::pipeline::HarvestSummary,
    catalog_core::pipeline::FinalizeSummary,
) {
    use catalog_core::config::PipelineConfig;
    use catalog_core::pipeline::{finalize, harvest, Backends};
    let cfg = PipelineConfig::default();
    let backends = Backends::from_config(&cfg, Some(&fixture_dir.join("fixtures"))).unwrap();
    let h = harvest(&fixture_dir.join("manifest.json"), &cfg, &backends, out, exec).unwrap();
    let f = finalize(out, None, out).unwrap();
    (h, f)
}

/// Prefixes the figure number of every other text reply (in block-id
/// order) so that its foreign keys no longer agree with the images.
pub fn corrupt_text_keys(fixture_dir: &Path) -> Vec<String> {
    let path = fixture_dir.join("fixtures/replies.json");
    let mut replies: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let mut texts: Vec<String> = replies.keys().filter(|k| k.contains("-txt-")).cloned().collect();
    texts.sort();
    let chosen: Vec<String> = texts.into_iter().step_by(2).collect();
    let tamper = |s: &str| s.replace("\"catalog_figure_no\": \"", "\"catalog_figure_no\": \"X");
    for id in &chosen {
        let v = replies.get_mut(id).unwrap();
        match v {
            serde_json::Value::String(s) => *s = tamper(s),
            serde_json::Value::Array(items) => {
                for item in items {
                    if let serde_json::Value::String(s) = item {
                        *s = tamper(s);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    std::fs::write(&path, serde_json::to_string_pretty(&replies).unwrap()).unwrap();
    chosen
}

fn eval_entry(k: usize) -> catalog_core::annotation::AnnotationEntry {
    catalog_core::annotation::AnnotationEntry {
        catalog_figure_name: format!("fig{}", k / 2),
        item_index: (k % 2).to_string(),
        crop_path: format!("crops/p000_p000-img-{k:03}.png").into(),
        excavation_unit: "T1".into(),
        morphological_class: "jar".into(),
        bbox: catalog_core::BoundingBox {
            x_c: 50.0 + 60.0 * k as f64,
            y_c: 100.0,
            w: 40.0,
            h: 40.0,
        },
        page_id: "p000".into(),
        match_stage: catalog_core::model::MatchStage::ForeignKey,
        confidence: None,
    }
}

/// Ground truth at the given slot positions.
pub fn eval_entries(slots: &[usize]) -> Vec<catalog_core::annotation::AnnotationEntry> {
    slots.iter().map(|&k| eval_entry(k)).collect()
}

/// One prediction per slot, all sharing one confidence.
pub fn eval_predictions(n: usize) -> Vec<catalog_core::annotation::AnnotationEntry> {
    (0..n)
        .map(|k| catalog_core::annotation::AnnotationEntry {
            confidence: Some(0.5),
            ..eval_entry(k)
        })
        .collect()
}
