//! HTTP client for an external embedding service.
//!
//! Request: `{"inputs": [...], "kind": "text" | "frame"}` (POST, JSON).
//! Response: `{"dim": D, "vectors": [[...], ...]}`, one vector per input.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Embedding, EmbeddingSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Text,
    Frame,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    inputs: &'a [String],
    kind: PayloadKind,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

pub struct RemoteProvider {
    url: String,
    client: reqwest::blocking::Client,
    max_attempts: u32,
    backoff: Duration,
    /// Dimension reported by the first successful response.
    dim: Mutex<Option<usize>>,
}

impl RemoteProvider {
    pub fn new(url: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| provider_error(format!("cannot build HTTP client: {e}"), None, false, 0))?;
        Ok(Self {
            url: url.into(),
            client,
            max_attempts: 3,
            backoff: Duration::from_millis(250),
            dim: Mutex::new(None),
        })
    }

    pub fn with_retries(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn fetch(&self, payload: &[String], kind: PayloadKind) -> Result<EmbeddingSet> {
        if payload.is_empty() {
            return Err(Error::Argument("embedding request with empty payload".into()));
        }
        let mut attempt = 0;
        let response = loop {
            attempt += 1;
            match self.request_once(payload, kind) {
                Ok(r) => break r,
                Err((message, status, retryable)) => {
                    if !retryable || attempt >= self.max_attempts {
                        return Err(provider_error(message, status, retryable, attempt));
                    }
                    log::warn!("embedding provider attempt {attempt} failed: {message}; retrying");
                    std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                }
            }
        };
        self.assemble(payload.len(), response, attempt)
    }

    fn request_once(
        &self,
        payload: &[String],
        kind: PayloadKind,
    ) -> std::result::Result<EmbedResponse, (String, Option<u16>, bool)> {
        let resp = self
            .client
            .post(&self.url)
            .json(&EmbedRequest { inputs: payload, kind })
            .send()
            .map_err(|e| (format!("request failed: {e}"), None, true))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err((format!("provider answered {status}"), Some(status.as_u16()), retryable));
        }
        resp.json::<EmbedResponse>()
            .map_err(|e| (format!("malformed response body: {e}"), Some(status.as_u16()), false))
    }

    fn assemble(&self, expected: usize, response: EmbedResponse, attempts: u32) -> Result<EmbeddingSet> {
        let fail = |message: String| provider_error(message, None, false, attempts);
        if response.vectors.len() != expected {
            return Err(fail(format!(
                "count mismatch: sent {expected} input(s), received {} vector(s)",
                response.vectors.len()
            )));
        }
        if let Some((i, v)) = response.vectors.iter().enumerate().find(|(_, v)| v.len() != response.dim) {
            return Err(fail(format!(
                "vector {i} has {} components but response declares dim {}",
                v.len(),
                response.dim
            )));
        }
        {
            let mut known = self.dim.lock().expect("dimension lock poisoned");
            match *known {
                Some(d) if d != response.dim => {
                    return Err(fail(format!(
                        "dimension {} disagrees with earlier responses ({d})",
                        response.dim
                    )))
                }
                _ => *known = Some(response.dim),
            }
        }
        let items = response
            .vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| Embedding::new(v).map_err(|e| fail(format!("vector {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..expected).map(|i| i.to_string()).collect();
        EmbeddingSet::new(items, Some(labels))
    }
}

fn provider_error(message: String, status: Option<u16>, retryable: bool, attempts: u32) -> Error {
    Error::Provider {
        message,
        status,
        retryable,
        attempts,
    }
}

/// One-shot fetch with default retry settings.
pub fn fetch_remote(provider_url: &str, payload: &[String], kind: PayloadKind) -> Result<EmbeddingSet> {
    RemoteProvider::new(provider_url)?.fetch(payload, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::Arc;

    /// Serves the canned `(status, body)` replies in order, one per connection,
    /// and records each request body.
    fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for (status, body) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut request = vec![0; length];
                reader.read_exact(&mut request).unwrap();
                log.lock().unwrap().push(String::from_utf8(request).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("sentence {i}")).collect()
    }

    #[test]
    fn fetches_in_order() {
        let body = r#"{"dim": 2, "vectors": [[2, 0], [0, 3], [1, 1]]}"#.to_string();
        let (url, seen) = serve(vec![(200, body)]);
        let set = fetch_remote(&url, &texts(3), PayloadKind::Text).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.labels().unwrap(), ["0", "1", "2"]);
        assert_eq!(set.items()[1].values(), [0.0, 1.0]);
        let request: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
        assert_eq!(request["kind"], "text");
        assert_eq!(request["inputs"][2], "sentence 2");
    }

    #[test]
    fn empty_payload() {
        assert!(matches!(
            fetch_remote("http://127.0.0.1:9/embed", &[], PayloadKind::Frame),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn count_mismatch() {
        let body = r#"{"dim": 2, "vectors": [[1, 0], [0, 1]]}"#.to_string();
        let (url, _) = serve(vec![(200, body)]);
        let err = fetch_remote(&url, &texts(3), PayloadKind::Text).unwrap_err();
        match err {
            Error::Provider { message, retryable, .. } => {
                assert!(message.contains("count mismatch"), "{message}");
                assert!(!retryable);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn retries_server_errors() {
        let ok = r#"{"dim": 1, "vectors": [[5]]}"#.to_string();
        let (url, seen) = serve(vec![(503, "{}".into()), (200, ok)]);
        let provider = RemoteProvider::new(url).unwrap().with_retries(3, Duration::ZERO);
        assert_eq!(provider.fetch(&texts(1), PayloadKind::Frame).unwrap().len(), 1);
        assert_eq!(seen.lock().unwrap().len(), 2);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, _) = serve(vec![(400, "{}".into())]);
        let provider = RemoteProvider::new(url).unwrap().with_retries(3, Duration::ZERO);
        match provider.fetch(&texts(1), PayloadKind::Text).unwrap_err() {
            Error::Provider { status, attempts, retryable, .. } => {
                assert_eq!((status, attempts, retryable), (Some(400), 1, false));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_must_stay_stable() {
        let first = r#"{"dim": 2, "vectors": [[1, 0]]}"#.to_string();
        let second = r#"{"dim": 3, "vectors": [[1, 0, 0]]}"#.to_string();
        let (url, _) = serve(vec![(200, first), (200, second)]);
        let provider = RemoteProvider::new(url).unwrap();
        provider.fetch(&texts(1), PayloadKind::Text).unwrap();
        assert!(matches!(
            provider.fetch(&texts(1), PayloadKind::Text),
            Err(Error::Provider { .. })
        ));
    }

    #[test]
    fn unreachable_provider_reports_attempts() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        drop(listener);
        let provider = RemoteProvider::new(url).unwrap().with_retries(2, Duration::ZERO);
        match provider.fetch(&texts(1), PayloadKind::Text).unwrap_err() {
            Error::Provider { attempts, retryable, .. } => assert_eq!((attempts, retryable), (2, true)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
