//! Prompt-driven localization of image and text blocks on a page.
//!
//! Each page gets two detector calls, one per prompt. Raw boxes are clamped
//! to the page, filtered by score and de-duplicated with per-modality NMS;
//! survivors receive ids in reading order.

mod backend;
pub mod nms;

use serde::{Deserialize, Serialize};

pub use backend::{
    DetectionFixture, DetectionRequest, DetectorBackend, FixtureDetector, HttpDetector,
    RawDetection,
};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Corners};
use crate::model::{Block, Modality, Page};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionPromptConfig {
    pub image_prompt: String,
    pub text_prompt: String,
    pub score_threshold: f64,
    pub nms_iou_threshold: f64,
}

impl Default for DetectionPromptConfig {
    fn default() -> Self {
        DetectionPromptConfig {
            image_prompt: "pottery drawing . artifact photograph".into(),
            text_prompt: "caption . figure annotation text".into(),
            score_threshold: 0.35,
            nms_iou_threshold: 0.5,
        }
    }
}

impl DetectionPromptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.image_prompt.trim().is_empty() || self.text_prompt.trim().is_empty() {
            return Err(Error::Config("detection prompts must be non-empty".into()));
        }
        for (name, v) in [
            ("score_threshold", self.score_threshold),
            ("nms_iou_threshold", self.nms_iou_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn prompt(&self, modality: Modality) -> &str {
        match modality {
            Modality::Image => &self.image_prompt,
            Modality::Text => &self.text_prompt,
        }
    }
}

/// A raw detection that did not become a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDetection {
    pub page_id: String,
    pub modality: Modality,
    pub detection: RawDetection,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PageDetections {
    pub blocks: Vec<Block>,
    pub dropped: Vec<DroppedDetection>,
}

/// Intersects `bbox` with the page rectangle.
pub fn clamp_to_page(bbox: &BoundingBox, page: &Page) -> Result<BoundingBox> {
    if page.width == 0 || page.height == 0 {
        return Err(Error::Validation(format!(
            "page {} has zero size",
            page.page_id
        )));
    }
    let c = bbox.corners();
    let page_rect = Corners {
        x0: 0.0,
        y0: 0.0,
        x1: page.width as f64,
        y1: page.height as f64,
    };
    if c.x0 >= page_rect.x0 && c.y0 >= page_rect.y0 && c.x1 <= page_rect.x1 && c.y1 <= page_rect.y1
    {
        return Ok(*bbox);
    }
    match c.intersect(&page_rect) {
        Some(inside) => BoundingBox::from_corners(inside),
        None => Err(Error::DegenerateBox {
            page_id: page.page_id.clone(),
            box_desc: bbox.to_string(),
        }),
    }
}

/// Localizes image and text blocks on one page.
pub fn detect_blocks(
    page: &Page,
    cfg: &DetectionPromptConfig,
    backend: &dyn DetectorBackend,
) -> Result<PageDetections> {
    cfg.validate()?;
    let mut out = PageDetections::default();
    for modality in [Modality::Image, Modality::Text] {
        let raw = backend.detect(&DetectionRequest {
            page,
            prompt: cfg.prompt(modality),
            modality,
        })?;
        let (blocks, dropped) = filter_modality(page, cfg, modality, &raw)?;
        out.blocks.extend(blocks);
        out.dropped.extend(dropped);
    }
    Ok(out)
}

fn filter_modality(
    page: &Page,
    cfg: &DetectionPromptConfig,
    modality: Modality,
    raw: &[RawDetection],
) -> Result<(Vec<Block>, Vec<DroppedDetection>)> {
    let mut dropped = Vec::new();
    let mut candidates = Vec::new();
    let mut candidate_raw = Vec::new();
    let mut drop = |d: &RawDetection, reason: String| {
        dropped.push(DroppedDetection {
            page_id: page.page_id.clone(),
            modality,
            detection: *d,
            reason,
        })
    };

    for d in raw {
        if !d.score.is_finite() || !(0.0..=1.0).contains(&d.score) {
            return Err(Error::Decode(format!(
                "page {}: detection score {} outside [0, 1]",
                page.page_id, d.score
            )));
        }
        let bbox = match BoundingBox::new(d.cx, d.cy, d.w, d.h).and_then(|b| clamp_to_page(&b, page))
        {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{}: dropping {modality} detection: {e}", page.page_id);
                drop(d, e.to_string());
                continue;
            }
        };
        if d.score < cfg.score_threshold {
            drop(d, format!("score {} below threshold {}", d.score, cfg.score_threshold));
            continue;
        }
        candidates.push((bbox, d.score));
        candidate_raw.push(*d);
    }

    let kept = nms::suppress(&candidates, cfg.nms_iou_threshold);
    let mut is_kept = vec![false; candidates.len()];
    for &k in &kept {
        is_kept[k] = true;
    }
    for (i, d) in candidate_raw.iter().enumerate() {
        if !is_kept[i] {
            drop(d, "suppressed by a higher-scoring overlapping box".into());
        }
    }

    let mut survivors: Vec<(BoundingBox, f64)> = kept.into_iter().map(|k| candidates[k]).collect();
    survivors.sort_by(|a, b| nms::reading_order(&a.0, &b.0).then(b.1.total_cmp(&a.1)));
    let blocks = survivors
        .into_iter()
        .enumerate()
        .map(|(i, (bbox, confidence))| Block {
            id: block_id(&page.page_id, modality, i),
            page_id: page.page_id.clone(),
            modality,
            bbox,
            confidence,
        })
        .collect();
    Ok((blocks, dropped))
}

pub fn block_id(page_id: &str, modality: Modality, ordinal: usize) -> String {
    format!("{page_id}-{}-{ordinal:03}", modality.id_tag())
}

/// Runs [`detect_blocks`] over many pages. Results keep page order.
pub fn detect_pages(
    pages: &[Page],
    cfg: &DetectionPromptConfig,
    backend: &dyn DetectorBackend,
    exec: Execution,
) -> Vec<Result<PageDetections>> {
    par::map(exec, pages, |page| detect_blocks(page, cfg, backend))
}
