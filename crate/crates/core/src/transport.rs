//! Blocking JSON-over-HTTP calls with bounded exponential backoff.

use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 200,
            timeout_ms: 60_000,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << attempt.min(16)))
    }
}

/// Failure of a single attempt.
#[derive(Debug)]
pub enum CallError {
    /// Worth retrying: connection refused, timeout, non-200 status.
    Transient(String),
    /// Retrying cannot help.
    Fatal(Error),
}

/// Runs `op` until it succeeds, fails fatally, or the retry budget is spent.
/// Transient failures surface as [`Error::Transport`] tagged with `context`.
pub fn with_retries<T>(
    policy: &RetryPolicy,
    context: &str,
    mut op: impl FnMut(u32) -> std::result::Result<T, CallError>,
) -> Result<T> {
    let mut attempt = 0;
    loop {
        match op(attempt) {
            Ok(v) => return Ok(v),
            Err(CallError::Fatal(e)) => return Err(e),
            Err(CallError::Transient(msg)) => {
                if attempt >= policy.max_retries {
                    return Err(Error::Transport {
                        page_id: context.to_string(),
                        message: format!("{msg} (after {} attempts)", attempt + 1),
                    });
                }
                log::debug!("{context}: attempt {} failed: {msg}", attempt + 1);
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
        }
    }
}

/// Request body shared by the detector and comprehension endpoints.
#[derive(Debug, Serialize)]
pub struct ImagePromptRequest<'a> {
    pub image_b64: String,
    pub prompt: &'a str,
}

pub fn encode_image(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::io(format!("reading image {}", path.display()), e))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(bytes))
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    client: reqwest::blocking::Client,
}

impl JsonClient {
    pub fn new(policy: &RetryPolicy) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(policy.timeout_ms))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(JsonClient { client })
    }

    /// One POST attempt. Only HTTP 200 counts as success.
    pub fn post<B: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        url: &str,
        body: &B,
    ) -> std::result::Result<R, CallError> {
        let resp = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| CallError::Transient(e.to_string()))?;
        let status = resp.status();
        if status != reqwest::StatusCode::OK {
            return Err(CallError::Transient(format!("{url} returned HTTP {status}")));
        }
        let text = resp
            .text()
            .map_err(|e| CallError::Transient(e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| CallError::Fatal(Error::Decode(format!("{url}: {e}"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn fast() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 0,
            timeout_ms: 1000,
        }
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let calls = Cell::new(0);
        let out = with_retries(&fast(), "p000", |attempt| {
            calls.set(calls.get() + 1);
            if attempt < 2 {
                Err(CallError::Transient("refused".into()))
            } else {
                Ok(7)
            }
        })
        .unwrap();
        assert_eq!(out, 7);
        assert_eq!(calls.get(), 3);
    }

    #[test]
    fn gives_up_after_budget() {
        let calls = Cell::new(0);
        let err = with_retries::<()>(&fast(), "p004", |_| {
            calls.set(calls.get() + 1);
            Err(CallError::Transient("refused".into()))
        })
        .unwrap_err();
        assert_eq!(calls.get(), 4);
        match err {
            Error::Transport { page_id, .. } => assert_eq!(page_id, "p004"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fatal_is_not_retried() {
        let calls = Cell::new(0);
        let err = with_retries::<()>(&fast(), "x", |_| {
            calls.set(calls.get() + 1);
            Err(CallError::Fatal(Error::Decode("bad".into())))
        })
        .unwrap_err();
        assert_eq!(calls.get(), 1);
        assert!(matches!(err, Error::Decode(_)));
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { base_delay_ms: 100, ..fast() };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(400));
    }
}
