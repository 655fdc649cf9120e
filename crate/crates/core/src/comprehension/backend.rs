use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::transport::{self, ImagePromptRequest, JsonClient, RetryPolicy};

#[derive(Debug, Clone, Copy)]
pub struct VlmRequest<'a> {
    pub block_id: &'a str,
    pub crop: &'a Path,
    pub prompt: &'a str,
    /// Zero for the first ask, incremented on each re-ask after a parse failure.
    pub attempt: u32,
}

/// A vision-language model: crop plus prompt in, raw reply text out.
pub trait VlmBackend: Send + Sync {
    fn reply(&self, req: &VlmRequest<'_>) -> Result<String>;
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RecordedReply {
    One(String),
    /// Successive replies; the last one repeats once exhausted.
    Sequence(Vec<String>),
}

/// Replays recorded replies from a JSON map `block_id -> reply`.
#[derive(Debug, Clone)]
pub struct FixtureVlm {
    path: PathBuf,
    replies: HashMap<String, RecordedReply>,
}

impl FixtureVlm {
    pub fn load(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingFixture(path))
            }
            Err(e) => return Err(Error::io(format!("reading {}", path.display()), e)),
        };
        let replies = serde_json::from_str(&text)
            .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
        Ok(FixtureVlm { path, replies })
    }

    pub fn from_map(replies: impl IntoIterator<Item = (String, String)>) -> Self {
        FixtureVlm {
            path: PathBuf::from("<memory>"),
            replies: replies
                .into_iter()
                .map(|(k, v)| (k, RecordedReply::One(v)))
                .collect(),
        }
    }
}

impl VlmBackend for FixtureVlm {
    fn reply(&self, req: &VlmRequest<'_>) -> Result<String> {
        match self.replies.get(req.block_id) {
            Some(RecordedReply::One(s)) => Ok(s.clone()),
            Some(RecordedReply::Sequence(v)) if !v.is_empty() => {
                Ok(v[(req.attempt as usize).min(v.len() - 1)].clone())
            }
            _ => Err(Error::Transport {
                page_id: req.block_id.to_string(),
                message: format!("no recorded reply in {}", self.path.display()),
            }),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ComprehendResponse {
    text: String,
}

/// `POST {base}/comprehend` with `{image_b64, prompt}`; expects `{text}`.
#[derive(Debug, Clone)]
pub struct HttpVlm {
    endpoint: String,
    client: JsonClient,
    retry: RetryPolicy,
}

impl HttpVlm {
    pub fn new(base_url: &str, retry: RetryPolicy) -> Result<Self> {
        Ok(HttpVlm {
            endpoint: format!("{}/comprehend", base_url.trim_end_matches('/')),
            client: JsonClient::new(&retry)?,
            retry,
        })
    }
}

impl VlmBackend for HttpVlm {
    fn reply(&self, req: &VlmRequest<'_>) -> Result<String> {
        let body = ImagePromptRequest {
            image_b64: transport::encode_image(req.crop)?,
            prompt: req.prompt,
        };
        let resp: ComprehendResponse = transport::with_retries(&self.retry, req.block_id, |_| {
            self.client.post(&self.endpoint, &body)
        })?;
        Ok(resp.text)
    }
}
