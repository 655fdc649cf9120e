//! Average precision of collected pairs at a single IoU threshold.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{read_annotations, AnnotationEntry};
use crate::error::{Error, Result};
use crate::geometry::iou;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub require_attribute_match: bool,
    pub attribute_keys_checked: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: 0.9,
            require_attribute_match: true,
            attribute_keys_checked: vec!["catalog_figure_no".into(), "item_index".into()],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold {} must lie in (0, 1]",
                self.iou_threshold
            )));
        }
        for key in &self.attribute_keys_checked {
            if probe_entry().field(key).is_none() {
                return Err(Error::Config(format!(
                    "attribute {key:?} is not an annotation field"
                )));
            }
        }
        Ok(())
    }
}

fn probe_entry() -> AnnotationEntry {
    AnnotationEntry {
        catalog_figure_name: String::new(),
        item_index: String::new(),
        crop_path: Default::default(),
        excavation_unit: String::new(),
        morphological_class: String::new(),
        bbox: crate::geometry::BoundingBox { x_c: 1.0, y_c: 1.0, w: 1.0, h: 1.0 },
        page_id: String::new(),
        match_stage: crate::model::MatchStage::Human,
        confidence: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Tp,
    Fp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    /// Index into the prediction list as given.
    pub pred_index: usize,
    pub confidence: f64,
    pub verdict: Verdict,
    pub claimed_gt: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatching {
    /// In processing order: confidence descending.
    pub predictions: Vec<ScoredPrediction>,
    pub unclaimed_gt: usize,
}

impl PredictionMatching {
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.predictions.iter().map(|p| p.verdict).collect()
    }
}

/// Processing order: confidence descending, then page, crop path and input
/// position so that equal-confidence predictions are ranked reproducibly.
pub fn ranking_order(preds: &[AnnotationEntry]) -> Result<Vec<usize>> {
    for (i, p) in preds.iter().enumerate() {
        match p.confidence {
            Some(c) if c.is_finite() => {}
            _ => {
                return Err(Error::Validation(format!(
                    "prediction {i} ({}) has no usable confidence",
                    p.crop_path.display()
                )))
            }
        }
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    let conf = |i: usize| preds[i].confidence.unwrap_or(0.0);
    order.sort_by(|&a, &b| {
        conf(b)
            .total_cmp(&conf(a))
            .then_with(|| preds[a].page_id.cmp(&preds[b].page_id))
            .then_with(|| preds[a].crop_path.cmp(&preds[b].crop_path))
            .then(a.cmp(&b))
    });
    Ok(order)
}

/// Greedy one-to-one claiming of ground truth by ranked predictions.
pub fn match_predictions(
    preds: &[AnnotationEntry],
    gt: &[AnnotationEntry],
    cfg: &EvalConfig,
) -> Result<PredictionMatching> {
    cfg.validate()?;
    let order = ranking_order(preds)?;
    let mut claimed = vec![false; gt.len()];
    let mut predictions = Vec::with_capacity(preds.len());

    for idx in order {
        let pred = &preds[idx];
        let mut best: Option<(usize, f64)> = None;
        for (g, truth) in gt.iter().enumerate() {
            if claimed[g] || truth.page_id != pred.page_id {
                continue;
            }
            let overlap = iou(&pred.bbox, &truth.bbox)?;
            if overlap < cfg.iou_threshold {
                continue;
            }
            if cfg.require_attribute_match && !attributes_agree(pred, truth, cfg) {
                continue;
            }
            if best.is_none_or(|(_, b)| overlap.total_cmp(&b) == Ordering::Greater) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            claimed[g] = true;
        }
        predictions.push(ScoredPrediction {
            pred_index: idx,
            confidence: pred.confidence.unwrap_or(0.0),
            verdict: if best.is_some() { Verdict::Tp } else { Verdict::Fp },
            claimed_gt: best.map(|b| b.0),
        });
    }
    Ok(PredictionMatching {
        predictions,
        unclaimed_gt: claimed.iter().filter(|c| !**c).count(),
    })
}

fn attributes_agree(a: &AnnotationEntry, b: &AnnotationEntry, cfg: &EvalConfig) -> bool {
    cfg.attribute_keys_checked
        .iter()
        .all(|k| a.field(k) == b.field(k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub ap: f64,
}

/// All-points interpolated AP over ranked verdicts.
///
/// Each recall increment is weighted by the highest precision reached at that
/// recall or beyond. With no ground truth, AP is 1 for an empty prediction
/// list and 0 otherwise.
pub fn average_precision(verdicts: &[Verdict], n_gt: usize) -> PrCurve {
    let mut points = Vec::with_capacity(verdicts.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for v in verdicts {
        match v {
            Verdict::Tp => tp += 1,
            Verdict::Fp => fp += 1,
        }
        points.push(PrPoint {
            recall: if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 },
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    if n_gt == 0 {
        let ap = if verdicts.is_empty() { 1.0 } else { 0.0 };
        return PrCurve { points, ap };
    }

    let mut envelope = vec![0.0f64; points.len()];
    let mut running = 0.0f64;
    for (k, p) in points.iter().enumerate().rev() {
        running = running.max(p.precision);
        envelope[k] = running;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, env) in points.iter().zip(&envelope) {
        if p.recall > prev_recall {
            ap += (p.recall - prev_recall) * env;
            prev_recall = p.recall;
        }
    }
    PrCurve { points, ap }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ap: f64,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_gt: usize,
    pub pr_points: Vec<PrPoint>,
}

pub fn evaluate(
    preds: &[AnnotationEntry],
    gt: &[AnnotationEntry],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let matching = match_predictions(preds, gt, cfg)?;
    let verdicts = matching.verdicts();
    let curve = average_precision(&verdicts, gt.len());
    Ok(EvalReport {
        ap: curve.ap,
        n_tp: verdicts.iter().filter(|v| **v == Verdict::Tp).count(),
        n_fp: verdicts.iter().filter(|v| **v == Verdict::Fp).count(),
        n_gt: gt.len(),
        pr_points: curve.points,
    })
}

/// Reads prediction and ground-truth JSONL files and scores them.
pub fn evaluate_files(pred_path: &Path, gt_path: &Path, cfg: &EvalConfig) -> Result<EvalReport> {
    let preds = read_annotations(pred_path)?;
    let gt = read_annotations(gt_path)?;
    evaluate(&preds, &gt, cfg)
}
