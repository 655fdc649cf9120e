//! Dataset rows for matched pairs, plus class and unit statistics.

mod plot;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use plot::{render_bar_chart, render_stats_plots};

use crate::comprehension::crop_file_name;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::model::{AttributeRecord, Block, MatchPair, MatchStage};

pub const CROPS_DIR: &str = "crops";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const STATS_FILE: &str = "stats.json";

/// One dataset row. Text-side attributes describe the image-side crop and box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub catalog_figure_name: String,
    #[serde(default)]
    pub item_index: String,
    /// Relative to the annotation file's directory.
    #[serde(default)]
    pub crop_path: PathBuf,
    pub excavation_unit: String,
    pub morphological_class: String,
    pub bbox: BoundingBox,
    pub page_id: String,
    #[serde(default = "default_stage")]
    pub match_stage: MatchStage,
    /// Detector score of the image block; absent in ground-truth files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

fn default_stage() -> MatchStage {
    MatchStage::Human
}

impl AnnotationEntry {
    /// Looks up a field by name. Accepts the attribute-schema spelling
    /// `catalog_figure_no` as an alias for `catalog_figure_name`.
    pub fn field(&self, key: &str) -> Option<&str> {
        Some(match key {
            "catalog_figure_name" | "catalog_figure_no" => &self.catalog_figure_name,
            "item_index" => &self.item_index,
            "excavation_unit" => &self.excavation_unit,
            "morphological_class" => &self.morphological_class,
            "page_id" => &self.page_id,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Emission {
    pub entries: Vec<AnnotationEntry>,
    pub warnings: Vec<String>,
}

/// Inputs needed to turn pairs into entries.
pub struct EmitInputs<'a> {
    pub matches: &'a [MatchPair],
    pub records: &'a [AttributeRecord],
    pub blocks: &'a [Block],
    /// Directory holding the `crops/` written during harvest.
    pub run_dir: &'a Path,
}

/// Builds one entry per pair, copies crops next to the output and writes
/// `annotations.jsonl`. Entries are ordered by page, then image block id.
pub fn emit_annotations(inputs: &EmitInputs<'_>, out_dir: &Path) -> Result<Emission> {
    let records: HashMap<&str, &AttributeRecord> = inputs
        .records
        .iter()
        .map(|r| (r.block_id.as_str(), r))
        .collect();
    let blocks: HashMap<&str, &Block> = inputs.blocks.iter().map(|b| (b.id.as_str(), b)).collect();

    let mut rows: Vec<(&Block, AnnotationEntry)> = Vec::with_capacity(inputs.matches.len());
    let mut warnings = Vec::new();
    for pair in inputs.matches {
        let image = blocks.get(pair.image_block_id.as_str()).ok_or_else(|| {
            Error::Validation(format!("pair references unknown image block {}", pair.image_block_id))
        })?;
        let text = records.get(pair.text_block_id.as_str());
        if text.is_none() {
            warnings.push(format!("no record for text block {}", pair.text_block_id));
        }
        let mut attr = |key: &str| -> String {
            match text.and_then(|r| r.get(key)) {
                Some(v) => v.to_string(),
                None => {
                    warnings.push(format!("{}: missing attribute {key:?}", pair.text_block_id));
                    String::new()
                }
            }
        };
        let entry = AnnotationEntry {
            catalog_figure_name: attr("catalog_figure_no"),
            item_index: attr("item_index"),
            excavation_unit: attr("excavation_unit"),
            morphological_class: attr("morphological_class"),
            crop_path: Path::new(CROPS_DIR).join(crop_file_name(&image.page_id, &image.id)),
            bbox: image.bbox,
            page_id: image.page_id.clone(),
            match_stage: pair.stage,
            confidence: Some(image.confidence),
        };
        rows.push((image, entry));
    }
    rows.sort_by(|a, b| (&a.0.page_id, &a.0.id).cmp(&(&b.0.page_id, &b.0.id)));

    std::fs::create_dir_all(out_dir.join(CROPS_DIR))
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let same_dir = same_location(inputs.run_dir, out_dir);
    for (block, entry) in &rows {
        let src = inputs.run_dir.join(&entry.crop_path);
        if !src.is_file() {
            return Err(Error::io(
                format!("crop for block {} at {}", block.id, src.display()),
                std::io::Error::new(std::io::ErrorKind::NotFound, "crop file missing"),
            ));
        }
        if !same_dir {
            let dst = out_dir.join(&entry.crop_path);
            std::fs::copy(&src, &dst)
                .map_err(|e| Error::io(format!("copying crop for block {}", block.id), e))?;
        }
    }

    let entries: Vec<AnnotationEntry> = rows.into_iter().map(|(_, e)| e).collect();
    write_jsonl(&out_dir.join(ANNOTATIONS_FILE), &entries)?;
    Ok(Emission { entries, warnings })
}

fn same_location(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row).map_err(|e| Error::json(path.display().to_string(), e))?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(&buf)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::json(format!("{} line {}", path.display(), n + 1), e))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub class_histogram: BTreeMap<String, usize>,
    pub unit_histogram: BTreeMap<String, usize>,
    pub total_pairs: usize,
    pub n_classes: usize,
    pub n_units: usize,
}

impl DatasetStats {
    pub fn is_consistent(&self) -> bool {
        self.class_histogram.values().sum::<usize>() == self.total_pairs
            && self.unit_histogram.values().sum::<usize>() == self.total_pairs
            && self.n_classes == self.class_histogram.len()
            && self.n_units == self.unit_histogram.len()
    }
}

pub fn compute_stats(entries: &[AnnotationEntry]) -> DatasetStats {
    let mut stats = DatasetStats {
        total_pairs: entries.len(),
        ..Default::default()
    };
    for e in entries {
        *stats
            .class_histogram
            .entry(e.morphological_class.clone())
            .or_default() += 1;
        *stats
            .unit_histogram
            .entry(e.excavation_unit.clone())
            .or_default() += 1;
    }
    stats.n_classes = stats.class_histogram.len();
    stats.n_units = stats.unit_histogram.len();
    stats
}

/// Histogram entries by descending count, then by label.
pub fn ranked(hist: &BTreeMap<String, usize>) -> Vec<(&str, usize)> {
    let mut v: Vec<(&str, usize)> = hist.iter().map(|(k, &c)| (k.as_str(), c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn entry(class: &str, unit: &str) -> AnnotationEntry {
        AnnotationEntry {
            catalog_figure_name: "图一".into(),
            item_index: "1".into(),
            crop_path: "crops/x.png".into(),
            excavation_unit: unit.into(),
            morphological_class: class.into(),
            bbox: BoundingBox::new(10.0, 10.0, 5.0, 5.0).unwrap(),
            page_id: "p000".into(),
            match_stage: MatchStage::ForeignKey,
            confidence: None,
        }
    }

    #[test]
    fn class_counts() {
        let s = compute_stats(&[entry("罐", "T1"), entry("罐", "T1"), entry("钵", "T2")]);
        assert_eq!(s.class_histogram, BTreeMap::from([("罐".into(), 2), ("钵".into(), 1)]));
        assert_eq!(s.n_classes, 2);
        assert!(s.is_consistent());
    }

    #[test]
    fn unit_counts() {
        let units = ["T1", "T2", "T3", "T1", "T2"];
        let entries: Vec<_> = units.iter().map(|u| entry("罐", u)).collect();
        let s = compute_stats(&entries);
        assert_eq!(s.n_units, 3);
        assert_eq!(s.unit_histogram.values().sum::<usize>(), 5);
        assert!(s.is_consistent());
    }

    #[test]
    fn empty_stats() {
        let s = compute_stats(&[]);
        assert_eq!(s, DatasetStats::default());
        assert!(s.is_consistent());
    }

    #[test]
    fn ranking_breaks_ties_by_label() {
        let h = BTreeMap::from([("b".to_string(), 2), ("a".to_string(), 2), ("c".to_string(), 5)]);
        assert_eq!(ranked(&h), vec![("c", 5), ("a", 2), ("b", 2)]);
    }

    #[test]
    fn field_lookup_aliases() {
        let e = entry("罐", "T1");
        assert_eq!(e.field("catalog_figure_no"), Some("图一"));
        assert_eq!(e.field("excavation_unit"), Some("T1"));
        assert_eq!(e.field("color"), None);
    }

    #[test]
    fn ground_truth_rows_parse_without_optional_fields() {
        let line = r#"{"catalog_figure_name":"图一","excavation_unit":"T1","morphological_class":"罐","bbox":{"x_c":1.0,"y_c":2.0,"w":3.0,"h":4.0},"page_id":"p000"}"#;
        let e: AnnotationEntry = serde_json::from_str(line).unwrap();
        assert_eq!(e.confidence, None);
        assert_eq!(e.item_index, "");
    }
}
