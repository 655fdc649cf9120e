#![allow(dead_code)]

use std::path::{Path, PathBuf};

use catalog_core::config::PipelineConfig;
use catalog_core::pipeline::{harvest, Backends};
use catalog_core::Execution;

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/catalog")
}

/// Harvests the fixture catalog into `out`.
pub fn harvested(out: &Path) {
    let root = fixture_root();
    let cfg = PipelineConfig::default();
    let backends = Backends::from_config(&cfg, Some(&root.join("fixtures"))).unwrap();
    let summary = harvest(&root.join("manifest.json"), &cfg, &backends, out, Execution::Sequential).unwrap();
    assert!(summary.ok());
}
