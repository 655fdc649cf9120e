//! Turns block crops into attribute records via a vision-language backend.

mod backend;
mod crop;
mod normalize;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use backend::{FixtureVlm, HttpVlm, VlmBackend, VlmRequest};
pub use crop::{crop_block, crop_blocks, crop_file_name, crop_rect};
pub use normalize::normalize_value;

use crate::error::{Error, Result};
use crate::model::{AttributeRecord, Block, Modality, Page, ParseStatus};
use crate::par::{self, Execution};

pub const DEFAULT_SCHEMA: [&str; 4] = [
    "catalog_figure_no",
    "item_index",
    "excavation_unit",
    "morphological_class",
];

const DEFAULT_TEMPLATE: &str = "You are reading a {modality} block cropped from an archaeological \
catalog page. Describe it as a single flat JSON object whose keys are exactly {schema_keys}. \
Every value must be a string copied as printed; use \"\" when a field is not visible.";

const JSON_ONLY_SUFFIX: &str =
    "\n\nReply with JSON only: one flat object of string values, no prose, no code fences.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComprehensionPromptConfig {
    /// Prompt with `{modality}` and `{schema_keys}` placeholders.
    pub template: String,
    pub schema_keys: Vec<String>,
    pub max_retries: u32,
}

impl Default for ComprehensionPromptConfig {
    fn default() -> Self {
        ComprehensionPromptConfig {
            template: DEFAULT_TEMPLATE.into(),
            schema_keys: DEFAULT_SCHEMA.iter().map(|s| s.to_string()).collect(),
            max_retries: 3,
        }
    }
}

impl ComprehensionPromptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_keys.is_empty() {
            return Err(Error::Config("schema_keys must not be empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for k in &self.schema_keys {
            if k.trim().is_empty() || !seen.insert(k.as_str()) {
                return Err(Error::Config(format!("schema key {k:?} is empty or repeated")));
            }
        }
        Ok(())
    }

    pub fn render_prompt(&self, modality: Modality, attempt: u32) -> String {
        let keys = serde_json::to_string(&self.schema_keys).unwrap_or_default();
        let mut prompt = self
            .template
            .replace("{modality}", modality.as_str())
            .replace("{schema_keys}", &keys);
        if attempt > 0 {
            prompt.push_str(JSON_ONLY_SUFFIX);
        }
        prompt
    }
}

/// Extracts a flat key/value object from a model reply.
///
/// Tolerates surrounding prose and code fences; nested values are rejected.
/// Scalars become strings, `null` becomes the empty string.
pub fn parse_reply(raw: &str) -> std::result::Result<IndexMap<String, String>, String> {
    let start = raw.find('{').ok_or("reply contains no JSON object")?;
    let end = raw.rfind('}').ok_or("reply contains no JSON object")?;
    if end < start {
        return Err("reply contains no JSON object".into());
    }
    let value: Value =
        serde_json::from_str(&raw[start..=end]).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err("reply is not a JSON object".into());
    };
    let mut out = IndexMap::with_capacity(obj.len());
    for (k, v) in obj {
        let s = match v {
            Value::String(s) => s,
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Number(n) => n.to_string(),
            Value::Array(_) | Value::Object(_) => {
                return Err(format!("value of {k:?} is not a scalar"))
            }
        };
        out.insert(k.trim().to_string(), normalize_value(&s));
    }
    Ok(out)
}

/// Orders parsed attributes as schema keys first, extras after in reply order.
fn conform_to_schema(
    parsed: IndexMap<String, String>,
    schema: &[String],
    warnings: &mut Vec<String>,
) -> IndexMap<String, String> {
    let mut parsed = parsed;
    let mut out = IndexMap::with_capacity(parsed.len().max(schema.len()));
    for key in schema {
        match parsed.shift_remove(key) {
            Some(v) => {
                out.insert(key.clone(), v);
            }
            None => {
                warnings.push(format!("missing key {key:?}"));
                out.insert(key.clone(), String::new());
            }
        }
    }
    for (k, v) in parsed {
        warnings.push(format!("extra key {k:?} retained"));
        out.insert(k, v);
    }
    out
}

/// Describes one block. Persistent parse failures yield an unparsed record;
/// only backend failures are errors.
pub fn comprehend_block(
    block: &Block,
    crop: &Path,
    cfg: &ComprehensionPromptConfig,
    backend: &dyn VlmBackend,
) -> Result<AttributeRecord> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    for attempt in 0..=cfg.max_retries {
        let prompt = cfg.render_prompt(block.modality, attempt);
        let reply = backend.reply(&VlmRequest {
            block_id: &block.id,
            crop,
            prompt: &prompt,
            attempt,
        })?;
        match parse_reply(&reply) {
            Ok(parsed) => {
                let attributes = conform_to_schema(parsed, &cfg.schema_keys, &mut warnings);
                return Ok(AttributeRecord {
                    block_id: block.id.clone(),
                    attributes,
                    parse_status: ParseStatus::Ok,
                    warnings,
                });
            }
            Err(why) => warnings.push(format!("attempt {}: {why}", attempt + 1)),
        }
    }
    Ok(AttributeRecord::unparsed(block.id.clone(), warnings))
}

/// A block whose crop or backend call failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFailure {
    pub block_id: String,
    pub page_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comprehension {
    pub images: Vec<AttributeRecord>,
    pub texts: Vec<AttributeRecord>,
    pub failures: Vec<BlockFailure>,
}

impl Comprehension {
    pub fn all_records(&self) -> impl Iterator<Item = &AttributeRecord> {
        self.images.iter().chain(self.texts.iter())
    }
}

type CropResult = std::result::Result<Vec<PathBuf>, String>;

/// Crops and describes every block.
///
/// Each block yields exactly one record; blocks that fail outright are
/// recorded as unparsed and listed in `failures`. Records are returned in
/// block-id order for each modality.
pub fn comprehend_all(
    blocks: &[Block],
    pages: &[Page],
    cfg: &ComprehensionPromptConfig,
    backend: &dyn VlmBackend,
    crops_dir: &Path,
    exec: Execution,
) -> Result<Comprehension> {
    cfg.validate()?;
    let page_by_id: HashMap<&str, &Page> = pages.iter().map(|p| (p.page_id.as_str(), p)).collect();
    let mut by_page: BTreeMap<&str, Vec<&Block>> = BTreeMap::new();
    for b in blocks {
        by_page.entry(b.page_id.as_str()).or_default().push(b);
    }
    let page_groups: Vec<(&str, Vec<&Block>)> = by_page.into_iter().collect();

    let crops: Vec<(Vec<&Block>, CropResult)> =
        par::map(exec, &page_groups, |(page_id, page_blocks)| {
            let result = match page_by_id.get(page_id) {
                Some(page) => crop_blocks(page, page_blocks, crops_dir).map_err(|e| e.to_string()),
                None => Err(format!("unknown page {page_id}")),
            };
            (page_blocks.clone(), result)
        });

    let mut jobs: Vec<(&Block, std::result::Result<PathBuf, String>)> = Vec::new();
    for (page_blocks, result) in crops {
        match result {
            Ok(paths) => jobs.extend(page_blocks.into_iter().zip(paths.into_iter().map(Ok))),
            Err(msg) => jobs.extend(page_blocks.into_iter().map(|b| (b, Err(msg.clone())))),
        }
    }

    let outcomes = par::map(exec, &jobs, |(block, crop)| {
        let outcome = match crop {
            Ok(path) => comprehend_block(block, path, cfg, backend).map_err(|e| e.to_string()),
            Err(msg) => Err(format!("crop failed: {msg}")),
        };
        (*block, outcome)
    });

    let mut out = Comprehension::default();
    for (block, outcome) in outcomes {
        let record = match outcome {
            Ok(r) => r,
            Err(message) => {
                log::warn!("{}: comprehension failed: {message}", block.id);
                out.failures.push(BlockFailure {
                    block_id: block.id.clone(),
                    page_id: block.page_id.clone(),
                    message: message.clone(),
                });
                AttributeRecord::unparsed(block.id.clone(), vec![message])
            }
        };
        match block.modality {
            Modality::Image => out.images.push(record),
            Modality::Text => out.texts.push(record),
        }
    }
    out.images.sort_by(|a, b| a.block_id.cmp(&b.block_id));
    out.texts.sort_by(|a, b| a.block_id.cmp(&b.block_id));
    out.failures.sort_by(|a, b| a.block_id.cmp(&b.block_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;

    fn block(id: &str, modality: Modality) -> Block {
        Block {
            id: id.into(),
            page_id: "p000".into(),
            modality,
            bbox: BoundingBox::new(20.0, 20.0, 10.0, 10.0).unwrap(),
            confidence: 0.9,
        }
    }

    fn fixture(pairs: &[(&str, &str)]) -> FixtureVlm {
        FixtureVlm::from_map(pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())))
    }

    #[test]
    fn recorded_reply_becomes_record() {
        let b = block("p000-txt-000", Modality::Text);
        let vlm = fixture(&[(
            "p000-txt-000",
            r#"{"catalog_figure_no":"图一","item_index":"3","excavation_unit":"T1②","morphological_class":"罐"}"#,
        )]);
        let rec = comprehend_block(&b, Path::new("x.png"), &Default::default(), &vlm).unwrap();
        assert_eq!(rec.parse_status, ParseStatus::Ok);
        let pairs: Vec<_> = rec.attributes.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        assert_eq!(
            pairs,
            [
                ("catalog_figure_no", "图一"),
                ("item_index", "3"),
                ("excavation_unit", "T1②"),
                ("morphological_class", "罐")
            ]
        );
        assert!(rec.warnings.is_empty());
    }

    #[test]
    fn garbage_reply_is_unparsed() {
        let b = block("b", Modality::Image);
        let vlm = fixture(&[("b", "not json at all")]);
        let cfg = ComprehensionPromptConfig {
            max_retries: 0,
            ..Default::default()
        };
        let rec = comprehend_block(&b, Path::new("x.png"), &cfg, &vlm).unwrap();
        assert_eq!(rec.parse_status, ParseStatus::Unparsed);
        assert!(rec.attributes.is_empty());
    }

    #[test]
    fn extra_keys_follow_schema_keys() {
        let b = block("b", Modality::Text);
        let vlm = fixture(&[(
            "b",
            r#"{"color":"red","item_index":"3","catalog_figure_no":"图一","excavation_unit":"T1","morphological_class":"罐"}"#,
        )]);
        let rec = comprehend_block(&b, Path::new("x.png"), &Default::default(), &vlm).unwrap();
        let keys: Vec<_> = rec.attributes.keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            ["catalog_figure_no", "item_index", "excavation_unit", "morphological_class", "color"]
        );
        assert_eq!(rec.get("color"), Some("red"));
        assert!(rec.warnings.iter().any(|w| w.contains("color")));
    }

    #[test]
    fn missing_keys_filled_and_flagged() {
        let b = block("b", Modality::Image);
        let vlm = fixture(&[("b", "```json\n{\"item_index\": 3}\n```")]);
        let rec = comprehend_block(&b, Path::new("x.png"), &Default::default(), &vlm).unwrap();
        assert_eq!(rec.get("item_index"), Some("3"));
        assert_eq!(rec.get("excavation_unit"), Some(""));
        assert_eq!(rec.warnings.len(), 3);
    }

    struct Flaky;
    impl VlmBackend for Flaky {
        fn reply(&self, req: &VlmRequest<'_>) -> Result<String> {
            if req.attempt == 0 {
                assert!(!req.prompt.contains("JSON only"));
                Ok("Sure! The figure shows a jar.".into())
            } else {
                assert!(req.prompt.contains("JSON only"));
                Ok(r#"{"catalog_figure_no":"图二","item_index":"1","excavation_unit":"","morphological_class":"钵"}"#.into())
            }
        }
    }

    #[test]
    fn reasks_with_json_only_instruction() {
        let rec = comprehend_block(&block("b", Modality::Text), Path::new("x"), &Default::default(), &Flaky)
            .unwrap();
        assert_eq!(rec.parse_status, ParseStatus::Ok);
        assert_eq!(rec.get("morphological_class"), Some("钵"));
    }

    #[test]
    fn nested_values_rejected() {
        assert!(parse_reply(r#"{"a": {"b": 1}}"#).is_err());
        assert!(parse_reply("[1,2]").is_err());
        assert!(parse_reply("} {").is_err());
        assert_eq!(parse_reply(r#"{"a": null}"#).unwrap()["a"], "");
    }

    #[test]
    fn prompt_placeholders_filled() {
        let cfg = ComprehensionPromptConfig::default();
        let p = cfg.render_prompt(Modality::Image, 0);
        assert!(p.contains("image block"));
        assert!(p.contains(r#"["catalog_figure_no","item_index","excavation_unit","morphological_class"]"#));
    }

    #[test]
    fn invalid_schema_rejected() {
        let cfg = ComprehensionPromptConfig {
            schema_keys: vec!["a".into(), "a".into()],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ComprehensionPromptConfig {
            schema_keys: vec![],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
