use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use catalog_core::config::PipelineConfig;
use catalog_core::evaluation::EvalConfig;
use catalog_core::pipeline::{self, Backends};
use catalog_core::Execution;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "catalog-harvest", version, about = "Collect paired figure/caption data from catalog pages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Localize, describe and match blocks for every page of a manifest.
    Harvest(HarvestArgs),
    /// Apply review decisions and write annotations, stats and charts.
    Finalize(FinalizeArgs),
    /// Score predicted annotations against ground truth.
    Eval(EvalArgs),
    /// Recompute statistics and charts from an annotation file.
    Stats(StatsArgs),
    /// Serve the review API over a harvested run.
    ServeReview(ServeArgs),
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// manifest.json listing the page images.
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay recorded detector/VLM responses from this directory.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Run every stage on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct FinalizeArgs {
    /// Run directory written by `harvest`.
    pub run: PathBuf,
    /// Decision log; defaults to <run>/decisions.json when present.
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// Output directory; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted annotations (JSONL with confidence).
    pub pred: PathBuf,
    /// Ground-truth annotations (JSONL).
    pub gt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write eval_report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    /// Score box overlap only.
    #[arg(long)]
    pub no_attribute_match: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub run: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Static review UI bundle to serve at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

/// Result of a command: a JSON summary for stdout and the exit code.
pub struct Outcome {
    pub summary: serde_json::Value,
    pub exit_code: i32,
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Harvest(a) => {
            let cfg = load_config(a.config.as_ref())?;
            let backends = Backends::from_config(&cfg, a.fixtures.as_deref())?;
            let exec = if a.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let summary = pipeline::harvest(&a.manifest, &cfg, &backends, &a.out, exec)?;
            Ok(Outcome {
                exit_code: if summary.ok() { 0 } else { 1 },
                summary: json!({
                    "status": if summary.ok() { "ok" } else { "error" },
                    "command": "harvest",
                    "summary": summary,
                }),
            })
        }
        Command::Finalize(a) => {
            let out = a.out.clone().unwrap_or_else(|| a.run.clone());
            let s = pipeline::finalize(&a.run, a.decisions.as_deref(), &out)?;
            Ok(Outcome {
                exit_code: 0,
                summary: json!({
                    "status": "ok",
                    "command": "finalize",
                    "entries": s.entries.len(),
                    "unmatched": s.outcome.unmatched.len(),
                    "stats": s.stats,
                    "warnings": s.warnings,
                }),
            })
        }
        Command::Eval(a) => {
            let mut cfg: EvalConfig = load_config(a.config.as_ref())?.evaluation;
            if let Some(t) = a.iou_threshold {
                cfg.iou_threshold = t;
            }
            if a.no_attribute_match {
                cfg.require_attribute_match = false;
            }
            let report = pipeline::eval(&a.pred, &a.gt, &cfg, a.out.as_deref())?;
            Ok(Outcome {
                exit_code: 0,
                summary: json!({ "status": "ok", "command": "eval", "report": report }),
            })
        }
        Command::Stats(a) => {
            let stats = pipeline::stats(&a.annotations, &a.out)?;
            Ok(Outcome {
                exit_code: 0,
                summary: json!({ "status": "ok", "command": "stats", "stats": stats }),
            })
        }
        Command::ServeReview(a) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(&a.run, a.bind, a.ui_dir.as_deref()))?;
            Ok(Outcome {
                exit_code: 0,
                summary: json!({ "status": "ok", "command": "serve-review" }),
            })
        }
    }
}
