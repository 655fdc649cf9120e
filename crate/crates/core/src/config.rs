//! Run configuration, read from a TOML document.
//!
//! ```toml
//! [detector]
//! url = "http://localhost:8001"      # omit when replaying fixtures
//! score_threshold = 0.35
//!
//! [comprehension]
//! url = "http://localhost:8002"
//! max_retries = 3
//!
//! [matching]
//! foreign_keys = ["catalog_figure_no", "item_index"]
//!
//! [evaluation]
//! iou_threshold = 0.9
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comprehension::ComprehensionPromptConfig;
use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::localization::DetectionPromptConfig;
use crate::matching::ForeignKeyConfig;
use crate::par::Execution;
use crate::transport::RetryPolicy;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSection {
    pub url: Option<String>,
    #[serde(flatten)]
    pub prompts: DetectionPromptConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComprehensionSection {
    pub url: Option<String>,
    #[serde(flatten)]
    pub prompts: ComprehensionPromptConfig,
    /// Concurrent block requests; 0 means one per available core.
    pub parallelism: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detector: DetectorSection,
    pub comprehension: ComprehensionSection,
    pub matching: ForeignKeyConfig,
    pub evaluation: EvalConfig,
    pub retry: RetryPolicy,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.prompts.validate()?;
        self.comprehension.prompts.validate()?;
        self.matching.validate(&self.comprehension.prompts.schema_keys)?;
        self.evaluation.validate()
    }

    pub fn block_execution(&self) -> Execution {
        Execution::from_parallelism(self.comprehension.parallelism)
    }
}
