//! Batch commands: harvest a catalog into a run directory, finalize a run
//! into annotations, evaluate annotations against ground truth.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotation::{self, DatasetStats, EmitInputs};
use crate::artifacts::{
    self, BlocksFile, ErrorsFile, MatchesFile, RunArtifacts, StageError, UnmatchedFile,
};
use crate::comprehension::{self, FixtureVlm, HttpVlm, VlmBackend, VlmRequest};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::evaluation::{self, EvalReport};
use crate::localization::{
    self, DetectionRequest, DetectorBackend, FixtureDetector, HttpDetector, RawDetection,
};
use crate::manifest::Manifest;
use crate::matching::{self, Layout, MatchOutcome};
use crate::par::Execution;
use crate::review::{DecisionLog, ReviewSession};

/// Fixture directory layout: `detections/<page_id>.json` and `replies.json`.
pub const FIXTURE_DETECTIONS_DIR: &str = "detections";
pub const FIXTURE_REPLIES_FILE: &str = "replies.json";

struct Unavailable(String);

impl DetectorBackend for Unavailable {
    fn detect(&self, req: &DetectionRequest<'_>) -> Result<Vec<RawDetection>> {
        Err(Error::Transport {
            page_id: req.page.page_id.clone(),
            message: self.0.clone(),
        })
    }
}

impl VlmBackend for Unavailable {
    fn reply(&self, req: &VlmRequest<'_>) -> Result<String> {
        Err(Error::Transport {
            page_id: req.block_id.to_string(),
            message: self.0.clone(),
        })
    }
}

pub struct Backends {
    pub detector: Box<dyn DetectorBackend>,
    pub vlm: Box<dyn VlmBackend>,
}

impl Backends {
    /// Fixtures take precedence over configured URLs. A stage with neither
    /// gets a backend that fails every call, so the run reports the stage.
    pub fn from_config(cfg: &PipelineConfig, fixtures: Option<&Path>) -> Result<Self> {
        let detector: Box<dyn DetectorBackend> = match (fixtures, &cfg.detector.url) {
            (Some(dir), _) => Box::new(FixtureDetector::new(dir.join(FIXTURE_DETECTIONS_DIR))),
            (None, Some(url)) => Box::new(HttpDetector::new(url, cfg.retry)?),
            (None, None) => Box::new(Unavailable("no detector url or fixtures configured".into())),
        };
        let vlm: Box<dyn VlmBackend> = match (fixtures, &cfg.comprehension.url) {
            (Some(dir), _) => match FixtureVlm::load(dir.join(FIXTURE_REPLIES_FILE)) {
                Ok(f) => Box::new(f),
                Err(e) => Box::new(Unavailable(e.to_string())),
            },
            (None, Some(url)) => Box::new(HttpVlm::new(url, cfg.retry)?),
            (None, None) => Box::new(Unavailable("no comprehension url or fixtures configured".into())),
        };
        Ok(Backends { detector, vlm })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HarvestSummary {
    pub pages: usize,
    pub blocks: usize,
    pub pairs: usize,
    pub unmatched: usize,
    pub errors: Vec<StageError>,
}

impl HarvestSummary {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Localization, comprehension and matching over every manifest page.
/// Page- and block-level failures are collected, never fatal.
pub fn harvest(
    manifest_path: &Path,
    cfg: &PipelineConfig,
    backends: &Backends,
    out_dir: &Path,
    exec: Execution,
) -> Result<HarvestSummary> {
    cfg.validate()?;
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest = manifest.resolved(base);
    let pages = manifest.pages(out_dir);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;

    let mut errors = Vec::new();
    let mut blocks_file = BlocksFile::default();
    let detections =
        localization::detect_pages(&pages, &cfg.detector.prompts, backends.detector.as_ref(), exec);
    for (page, result) in pages.iter().zip(detections) {
        match result {
            Ok(d) => {
                blocks_file.blocks.extend(d.blocks);
                blocks_file.dropped.extend(d.dropped);
            }
            Err(e) => errors.push(StageError {
                stage: "localization".into(),
                page_id: Some(page.page_id.clone()),
                block_id: None,
                message: e.to_string(),
            }),
        }
    }

    let records = comprehension::comprehend_all(
        &blocks_file.blocks,
        &pages,
        &cfg.comprehension.prompts,
        backends.vlm.as_ref(),
        &out_dir.join(annotation::CROPS_DIR),
        block_exec(exec, cfg),
    )?;
    errors.extend(records.failures.iter().map(|f| StageError {
        stage: "comprehension".into(),
        page_id: Some(f.page_id.clone()),
        block_id: Some(f.block_id.clone()),
        message: f.message.clone(),
    }));

    let layout = Layout::new(&blocks_file.blocks, &pages);
    let outcome = matching::match_records(
        &records.images,
        &records.texts,
        &layout,
        &cfg.matching,
        exec,
    )?;

    artifacts::write_json(&out_dir.join(artifacts::MANIFEST_FILE), &manifest)?;
    artifacts::write_json(&out_dir.join(artifacts::BLOCKS_FILE), &blocks_file)?;
    artifacts::write_json(&out_dir.join(artifacts::RECORDS_FILE), &records)?;
    artifacts::write_json(
        &out_dir.join(artifacts::MATCHES_FILE),
        &MatchesFile::from_pairs(&outcome.pairs),
    )?;
    artifacts::write_json(
        &out_dir.join(artifacts::UNMATCHED_FILE),
        &UnmatchedFile {
            unmatched: outcome.unmatched.clone(),
        },
    )?;
    let errors_path = out_dir.join(artifacts::ERRORS_FILE);
    if errors.is_empty() {
        if errors_path.exists() {
            std::fs::remove_file(&errors_path)
                .map_err(|e| Error::io(format!("removing {}", errors_path.display()), e))?;
        }
    } else {
        artifacts::write_json(&errors_path, &ErrorsFile { errors: errors.clone() })?;
    }

    Ok(HarvestSummary {
        pages: pages.len(),
        blocks: blocks_file.blocks.len(),
        pairs: outcome.pairs.len(),
        unmatched: outcome.unmatched.len(),
        errors,
    })
}

fn block_exec(exec: Execution, cfg: &PipelineConfig) -> Execution {
    match exec {
        Execution::Sequential => Execution::Sequential,
        _ => cfg.block_execution(),
    }
}

pub const FINAL_UNMATCHED_FILE: &str = "unmatched_final.json";

#[derive(Debug, Clone, PartialEq)]
pub struct FinalizeSummary {
    pub outcome: MatchOutcome,
    pub entries: Vec<annotation::AnnotationEntry>,
    pub stats: DatasetStats,
    pub warnings: Vec<String>,
    pub plots: Vec<PathBuf>,
}

/// Applies review decisions over the harvested pairs, then writes
/// annotations, statistics and charts to `out_dir`.
///
/// With `decisions = None` the run directory's `decisions.json` is used when
/// present.
pub fn finalize(run_dir: &Path, decisions: Option<&Path>, out_dir: &Path) -> Result<FinalizeSummary> {
    let run = RunArtifacts::load(run_dir)?;
    let log = match decisions {
        Some(path) => DecisionLog::load(path)?,
        None => DecisionLog::load_or_default(&run_dir.join(artifacts::DECISIONS_FILE))?,
    };
    let session = ReviewSession::replay(&run, &log)?;
    let layout = Layout::new(&run.blocks.blocks, &run.pages);
    let outcome = session.final_outcome(&layout)?;

    let records: Vec<_> = run.records.all_records().cloned().collect();
    let emission = annotation::emit_annotations(
        &EmitInputs {
            matches: &outcome.pairs,
            records: &records,
            blocks: &run.blocks.blocks,
            run_dir,
        },
        out_dir,
    )?;
    let stats = annotation::compute_stats(&emission.entries);
    if !stats.is_consistent() || stats.total_pairs != outcome.pairs.len() {
        return Err(Error::Validation(format!(
            "statistics disagree with {} emitted pairs",
            outcome.pairs.len()
        )));
    }
    artifacts::write_json(&out_dir.join(annotation::STATS_FILE), &stats)?;
    artifacts::write_json(
        &out_dir.join(FINAL_UNMATCHED_FILE),
        &UnmatchedFile {
            unmatched: outcome.unmatched.clone(),
        },
    )?;
    let plots = annotation::render_stats_plots(&stats, out_dir)?;
    Ok(FinalizeSummary {
        outcome,
        entries: emission.entries,
        stats,
        warnings: emission.warnings,
        plots,
    })
}

pub const EVAL_REPORT_FILE: &str = "eval_report.json";

/// Scores `pred` against `gt` and optionally writes the report.
pub fn eval(
    pred: &Path,
    gt: &Path,
    cfg: &evaluation::EvalConfig,
    report_path: Option<&Path>,
) -> Result<EvalReport> {
    let report = evaluation::evaluate_files(pred, gt, cfg)?;
    if let Some(path) = report_path {
        artifacts::write_json(path, &report)?;
    }
    Ok(report)
}

/// Recomputes statistics and charts from an existing annotation file.
pub fn stats(annotations: &Path, out_dir: &Path) -> Result<DatasetStats> {
    let entries = annotation::read_annotations(annotations)?;
    let stats = annotation::compute_stats(&entries);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    artifacts::write_json(&out_dir.join(annotation::STATS_FILE), &stats)?;
    annotation::render_stats_plots(&stats, out_dir)?;
    Ok(stats)
}
