//! JSON files making up a run directory.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::comprehension::Comprehension;
use crate::error::{Error, Result};
use crate::localization::DroppedDetection;
use crate::manifest::Manifest;
use crate::matching::{MatchOutcome, UnmatchedBlock};
use crate::model::{Block, MatchPair, Page};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOCKS_FILE: &str = "blocks.json";
pub const RECORDS_FILE: &str = "records.json";
pub const MATCHES_FILE: &str = "matches.json";
pub const UNMATCHED_FILE: &str = "unmatched.json";
pub const DECISIONS_FILE: &str = "decisions.json";
pub const ERRORS_FILE: &str = "errors.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlocksFile {
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub dropped: Vec<DroppedDetection>,
}

/// A candidate pair as stored in `matches.json` and shown for review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub id: String,
    #[serde(flatten)]
    pub pair: MatchPair,
}

pub fn pair_id(ordinal: usize) -> String {
    format!("pair-{ordinal:04}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchesFile {
    pub pairs: Vec<CandidatePair>,
}

impl MatchesFile {
    pub fn from_pairs(pairs: &[MatchPair]) -> Self {
        MatchesFile {
            pairs: pairs
                .iter()
                .enumerate()
                .map(|(i, p)| CandidatePair {
                    id: pair_id(i),
                    pair: p.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedFile {
    pub unmatched: Vec<UnmatchedBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorsFile {
    pub errors: Vec<StageError>,
}

/// Everything harvest leaves behind, loaded back for finalize and review.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub pages: Vec<Page>,
    pub blocks: BlocksFile,
    pub records: Comprehension,
    pub matches: MatchesFile,
    pub unmatched: UnmatchedFile,
}

impl RunArtifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
        manifest.validate()?;
        Ok(RunArtifacts {
            pages: manifest.pages(dir),
            manifest,
            blocks: read_json(&dir.join(BLOCKS_FILE))?,
            records: read_json(&dir.join(RECORDS_FILE))?,
            matches: read_json(&dir.join(MATCHES_FILE))?,
            unmatched: read_json(&dir.join(UNMATCHED_FILE))?,
            dir: dir.to_path_buf(),
        })
    }

    pub fn outcome(&self) -> MatchOutcome {
        MatchOutcome {
            pairs: self.matches.pairs.iter().map(|c| c.pair.clone()).collect(),
            unmatched: self.unmatched.unmatched.clone(),
        }
    }

    pub fn page(&self, page_id: &str) -> Option<&Page> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(format!("temp file in {}", dir.display()), e))?;
    tmp.write_all(text.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(format!("renaming into {}", path.display()), e.error))?;
    Ok(())
}
