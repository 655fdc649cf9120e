//! Domain records shared by every stage of the pipeline.

use std::path::PathBuf;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Text => "text",
        }
    }

    /// Short tag used inside block ids.
    pub(crate) fn id_tag(&self) -> &'static str {
        match self {
            Modality::Image => "img",
            Modality::Text => "txt",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rasterized catalog page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub page_id: String,
    pub source_file: PathBuf,
    pub page_index: u32,
    pub width: u32,
    pub height: u32,
    pub image_ref: PathBuf,
}

impl Page {
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    pub page_id: String,
    pub modality: Modality,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Unparsed,
}

/// Structured description of one block. Unparsed records carry no attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub block_id: String,
    pub attributes: IndexMap<String, String>,
    pub parse_status: ParseStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl AttributeRecord {
    pub fn unparsed(block_id: impl Into<String>, warnings: Vec<String>) -> Self {
        AttributeRecord {
            block_id: block_id.into(),
            attributes: IndexMap::new(),
            parse_status: ParseStatus::Unparsed,
            warnings,
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    pub fn is_parsed(&self) -> bool {
        self.parse_status == ParseStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStage {
    ForeignKey,
    Bipartite,
    Human,
}

impl MatchStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatchStage::ForeignKey => "foreign_key",
            MatchStage::Bipartite => "bipartite",
            MatchStage::Human => "human",
        }
    }
}

/// An image block paired with the text block describing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub image_block_id: String,
    pub text_block_id: String,
    pub stage: MatchStage,
    pub cost: f64,
}
