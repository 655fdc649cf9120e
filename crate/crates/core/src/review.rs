//! Human correction of candidate pairs.
//!
//! Decisions never modify `matches.json`; they accumulate in an append-only
//! log (`decisions.json`). Session state is always the replay of that log over
//! the harvested candidates, so a restarted reviewer sees exactly the state
//! the log describes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifacts::{self, RunArtifacts};
use crate::error::{Error, Result};
use crate::matching::{Layout, MatchOutcome, UnmatchedBlock, UnmatchedReason};
use crate::model::{MatchPair, MatchStage, Modality};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Accept,
    Reject,
    Reassign,
    /// Pair two blocks the pipeline left unmatched.
    Create,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub timestamp: String,
    pub pair_id: String,
    pub action: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_text_block_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_block_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub entries: Vec<LogEntry>,
}

impl DecisionLog {
    pub fn load(path: &Path) -> Result<Self> {
        artifacts::read_json(path)
    }

    /// Loads the log, treating a missing file as an empty log.
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(DecisionLog::default())
        }
    }

    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        artifacts::write_json_atomic(path, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairStatus {
    Pending,
    Accepted,
    Rejected,
    Reassigned { new_text_block_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPair {
    pub id: String,
    pub image_block_id: String,
    pub text_block_id: String,
    pub stage: MatchStage,
    pub cost: f64,
    #[serde(flatten)]
    pub status: PairStatus,
}

impl SessionPair {
    /// Text block the pair currently points at, `None` once rejected.
    pub fn effective_text(&self) -> Option<&str> {
        match &self.status {
            PairStatus::Rejected => None,
            PairStatus::Reassigned { new_text_block_id } => Some(new_text_block_id),
            PairStatus::Pending | PairStatus::Accepted => Some(&self.text_block_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReviewError {
    UnknownPairs(Vec<String>),
    Invalid(Vec<FieldError>),
}

impl std::fmt::Display for ReviewError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReviewError::UnknownPairs(ids) => write!(f, "unknown pair ids: {}", ids.join(", ")),
            ReviewError::Invalid(errs) => {
                let parts: Vec<String> =
                    errs.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
                write!(f, "invalid decision: {}", parts.join("; "))
            }
        }
    }
}

impl From<ReviewError> for Error {
    fn from(e: ReviewError) -> Self {
        Error::Validation(e.to_string())
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ReviewError {
    ReviewError::Invalid(vec![FieldError {
        field: field.into(),
        message: message.into(),
    }])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub session_id: String,
    pub pairs: Vec<SessionPair>,
    pub unmatched: Vec<UnmatchedBlock>,
    pub audit: Vec<LogEntry>,
    #[serde(skip)]
    image_blocks: BTreeSet<String>,
    #[serde(skip)]
    text_blocks: BTreeSet<String>,
}

impl ReviewSession {
    pub fn new(run: &RunArtifacts) -> Self {
        let mut image_blocks = BTreeSet::new();
        let mut text_blocks = BTreeSet::new();
        for b in &run.blocks.blocks {
            match b.modality {
                Modality::Image => image_blocks.insert(b.id.clone()),
                Modality::Text => text_blocks.insert(b.id.clone()),
            };
        }
        ReviewSession {
            session_id: format!("{}-review", run.manifest.catalog_name),
            pairs: run
                .matches
                .pairs
                .iter()
                .map(|c| SessionPair {
                    id: c.id.clone(),
                    image_block_id: c.pair.image_block_id.clone(),
                    text_block_id: c.pair.text_block_id.clone(),
                    stage: c.pair.stage,
                    cost: c.pair.cost,
                    status: PairStatus::Pending,
                })
                .collect(),
            unmatched: run.unmatched.unmatched.clone(),
            audit: Vec::new(),
            image_blocks,
            text_blocks,
        }
    }

    /// Rebuilds a session by replaying `log`. All unknown pair ids are
    /// reported together.
    pub fn replay(run: &RunArtifacts, log: &DecisionLog) -> std::result::Result<Self, ReviewError> {
        let mut session = ReviewSession::new(run);
        let mut unknown = Vec::new();
        let mut invalid_fields = Vec::new();
        for entry in &log.entries {
            match session.apply(entry.clone()) {
                Ok(()) => {}
                Err(ReviewError::UnknownPairs(ids)) => unknown.extend(ids),
                Err(ReviewError::Invalid(errs)) => invalid_fields.extend(errs),
            }
        }
        if !unknown.is_empty() {
            return Err(ReviewError::UnknownPairs(unknown));
        }
        if !invalid_fields.is_empty() {
            return Err(ReviewError::Invalid(invalid_fields));
        }
        Ok(session)
    }

    pub fn pair(&self, id: &str) -> Option<&SessionPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    pub fn next_seq(&self) -> u64 {
        self.audit.last().map_or(1, |e| e.seq + 1)
    }

    pub fn log(&self) -> DecisionLog {
        DecisionLog {
            entries: self.audit.clone(),
        }
    }

    pub fn status_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::from([("pending", 0), ("accepted", 0), ("rejected", 0), ("reassigned", 0)]);
        for p in &self.pairs {
            let key = match p.status {
                PairStatus::Pending => "pending",
                PairStatus::Accepted => "accepted",
                PairStatus::Rejected => "rejected",
                PairStatus::Reassigned { .. } => "reassigned",
            };
            *counts.get_mut(key).expect("known status") += 1;
        }
        counts
    }

    /// Validates and applies one log entry, appending it to the audit log.
    /// Later decisions on the same pair overwrite earlier ones.
    pub fn apply(&mut self, entry: LogEntry) -> std::result::Result<(), ReviewError> {
        match entry.action {
            ActionKind::Create => {
                let image = entry
                    .image_block_id
                    .as_deref()
                    .ok_or_else(|| invalid("image_block_id", "required for create"))?;
                let text = entry
                    .new_text_block_id
                    .as_deref()
                    .ok_or_else(|| invalid("new_text_block_id", "required for create"))?;
                if !self.image_blocks.contains(image) {
                    return Err(invalid("image_block_id", format!("{image} is not an image block")));
                }
                if !self.text_blocks.contains(text) {
                    return Err(invalid("new_text_block_id", format!("{text} is not a text block")));
                }
                if self.pair(&entry.pair_id).is_some() {
                    return Err(invalid("pair_id", format!("{} already exists", entry.pair_id)));
                }
                self.pairs.push(SessionPair {
                    id: entry.pair_id.clone(),
                    image_block_id: image.to_string(),
                    text_block_id: text.to_string(),
                    stage: MatchStage::Human,
                    cost: 0.0,
                    status: PairStatus::Accepted,
                });
            }
            action => {
                let status = match action {
                    ActionKind::Accept => PairStatus::Accepted,
                    ActionKind::Reject => PairStatus::Rejected,
                    ActionKind::Reassign => {
                        let target = entry
                            .new_text_block_id
                            .clone()
                            .ok_or_else(|| invalid("new_text_block_id", "required for reassign"))?;
                        if !self.text_blocks.contains(&target) {
                            return Err(invalid(
                                "new_text_block_id",
                                format!("{target} is not a text block of this run"),
                            ));
                        }
                        PairStatus::Reassigned {
                            new_text_block_id: target,
                        }
                    }
                    ActionKind::Create => unreachable!(),
                };
                let pair = self
                    .pairs
                    .iter_mut()
                    .find(|p| p.id == entry.pair_id)
                    .ok_or_else(|| ReviewError::UnknownPairs(vec![entry.pair_id.clone()]))?;
                pair.status = status;
            }
        }
        self.audit.push(entry);
        Ok(())
    }

    /// Pairs after review. Rejected pairs are dropped, reassigned pairs point
    /// at their new text block with stage `human`. Blocks left without a
    /// partner keep their harvest reason, or become `rejected`.
    pub fn final_outcome(&self, layout: &Layout<'_>) -> Result<MatchOutcome> {
        let mut pairs = Vec::new();
        let mut used_img: HashMap<&str, &str> = HashMap::new();
        let mut used_txt: HashMap<&str, &str> = HashMap::new();
        let mut conflicts = Vec::new();
        for p in &self.pairs {
            let Some(text) = p.effective_text() else { continue };
            if let Some(other) = used_img.insert(&p.image_block_id, &p.id) {
                conflicts.push(format!("{other}/{} share image {}", p.id, p.image_block_id));
            }
            if let Some(other) = used_txt.insert(text, &p.id) {
                conflicts.push(format!("{other}/{} share text {text}", p.id));
            }
            let (stage, cost) = match (&p.status, p.stage) {
                (PairStatus::Reassigned { .. }, _) | (_, MatchStage::Human) => {
                    (MatchStage::Human, layout.pair_cost(&p.image_block_id, text)?)
                }
                (_, stage) => (stage, p.cost),
            };
            pairs.push(MatchPair {
                image_block_id: p.image_block_id.clone(),
                text_block_id: text.to_string(),
                stage,
                cost,
            });
        }
        if !conflicts.is_empty() {
            return Err(Error::Validation(format!(
                "reviewed pairs reuse blocks: {}",
                conflicts.join("; ")
            )));
        }
        pairs.sort_by(|a, b| a.image_block_id.cmp(&b.image_block_id));

        let prior: HashMap<&str, &UnmatchedBlock> =
            self.unmatched.iter().map(|u| (u.block_id.as_str(), u)).collect();
        let mut unmatched = Vec::new();
        for (ids, used, modality) in [
            (&self.image_blocks, &used_img, Modality::Image),
            (&self.text_blocks, &used_txt, Modality::Text),
        ] {
            for id in ids.iter().filter(|id| !used.contains_key(id.as_str())) {
                let was_candidate = self.pairs.iter().any(|p| {
                    p.image_block_id == *id || p.text_block_id == *id
                });
                let reason = match prior.get(id.as_str()) {
                    Some(u) => u.reason,
                    None if was_candidate => UnmatchedReason::Rejected,
                    None => continue,
                };
                unmatched.push(UnmatchedBlock {
                    block_id: id.clone(),
                    modality,
                    reason,
                });
            }
        }
        Ok(MatchOutcome { pairs, unmatched })
    }
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
