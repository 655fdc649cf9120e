use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Modality, Page};
use crate::transport::{self, ImagePromptRequest, JsonClient, RetryPolicy};

/// One raw detection as returned by a detector, in page pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawDetection {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DetectionRequest<'a> {
    pub page: &'a Page,
    pub prompt: &'a str,
    /// Which block type the prompt targets. Remote backends only see the prompt.
    pub modality: Modality,
}

/// An open-set detector: page image plus prompt in, scored boxes out.
///
/// Implementations hold no per-call state so a request can be replayed.
pub trait DetectorBackend: Send + Sync {
    fn detect(&self, req: &DetectionRequest<'_>) -> Result<Vec<RawDetection>>;
}

/// Recorded detections for a page, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFixture {
    pub page_id: String,
    #[serde(default)]
    pub image: Vec<RawDetection>,
    #[serde(default)]
    pub text: Vec<RawDetection>,
}

/// Replays detections from `<dir>/<page_id>.json`.
#[derive(Debug, Clone)]
pub struct FixtureDetector {
    dir: PathBuf,
}

impl FixtureDetector {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureDetector { dir: dir.into() }
    }

    pub fn fixture_path(&self, page_id: &str) -> PathBuf {
        self.dir.join(format!("{page_id}.json"))
    }

    pub fn load(&self, page_id: &str) -> Result<DetectionFixture> {
        let path = self.fixture_path(page_id);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingFixture(path))
            }
            Err(e) => return Err(Error::io(format!("reading {}", path.display()), e)),
        };
        let fixture: DetectionFixture = serde_json::from_str(&text)
            .map_err(|e| Error::Decode(format!("{}: {e}", path.display())))?;
        if fixture.page_id != page_id {
            return Err(Error::Decode(format!(
                "{} records page {} instead of {page_id}",
                path.display(),
                fixture.page_id
            )));
        }
        Ok(fixture)
    }
}

impl DetectorBackend for FixtureDetector {
    fn detect(&self, req: &DetectionRequest<'_>) -> Result<Vec<RawDetection>> {
        let fixture = self.load(&req.page.page_id)?;
        Ok(match req.modality {
            Modality::Image => fixture.image,
            Modality::Text => fixture.text,
        })
    }
}

#[derive(Debug, Deserialize)]
struct DetectResponse {
    detections: Vec<RawDetection>,
}

/// `POST {base}/detect` with `{image_b64, prompt}`; expects `{detections: [...]}`.
#[derive(Debug, Clone)]
pub struct HttpDetector {
    endpoint: String,
    client: JsonClient,
    retry: RetryPolicy,
}

impl HttpDetector {
    pub fn new(base_url: &str, retry: RetryPolicy) -> Result<Self> {
        Ok(HttpDetector {
            endpoint: format!("{}/detect", base_url.trim_end_matches('/')),
            client: JsonClient::new(&retry)?,
            retry,
        })
    }
}

impl DetectorBackend for HttpDetector {
    fn detect(&self, req: &DetectionRequest<'_>) -> Result<Vec<RawDetection>> {
        let body = ImagePromptRequest {
            image_b64: transport::encode_image(Path::new(&req.page.image_ref))?,
            prompt: req.prompt,
        };
        let resp: DetectResponse =
            transport::with_retries(&self.retry, &req.page.page_id, |_| {
                self.client.post(&self.endpoint, &body)
            })?;
        Ok(resp.detections)
    }
}
