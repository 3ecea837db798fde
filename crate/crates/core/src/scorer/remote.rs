//! JSON-over-HTTP scorer protocol.
//!
//! `POST` body `{"context": [int], "candidates": [int], "vocab_hash": str}`,
//! response `{"logprobs": {"<id>": float}}`. JSON has no infinities, so a
//! negative-infinity log-probability travels as `null`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::token::TokenId;

use super::TokenScorer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub context: Vec<u32>,
    pub candidates: Vec<u32>,
    pub vocab_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub logprobs: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    vocab_hash: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: String,
    vocab_hash: String,
    timeout: Duration,
    retries: usize,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(endpoint: impl Into<String>, vocab_hash: impl Into<String>) -> Self {
        Self::with_limits(endpoint, vocab_hash, Duration::from_secs(30), 2)
    }

    /// `retries` extra attempts are made after a transport failure or a 5xx.
    pub fn with_limits(
        endpoint: impl Into<String>,
        vocab_hash: impl Into<String>,
        timeout: Duration,
        retries: usize,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            vocab_hash: vocab_hash.into(),
            timeout,
            retries,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn retries(&self) -> usize {
        self.retries
    }

    fn attempt(
        &self,
        request: &ScoreRequest,
    ) -> Result<std::result::Result<ScoreResponse, String>> {
        let mut response = match self.agent.post(&self.endpoint).send_json(request) {
            Ok(r) => r,
            Err(e) => return Ok(Err(e.to_string())),
        };
        let status = response.status().as_u16();
        let body = match response.body_mut().read_to_string() {
            Ok(b) => b,
            Err(e) => return Ok(Err(e.to_string())),
        };
        match status {
            200 => serde_json::from_str(&body)
                .map(Ok)
                .map_err(|e| Error::Transport {
                    attempts: 1,
                    message: format!("bad response body: {e}"),
                }),
            409 => {
                let remote = serde_json::from_str::<ErrorBody>(&body)
                    .ok()
                    .and_then(|b| b.vocab_hash)
                    .unwrap_or_default();
                Err(Error::VocabMismatch {
                    local: self.vocab_hash.clone(),
                    remote,
                })
            }
            s if s >= 500 => Ok(Err(format!("server returned {s}: {body}"))),
            s => Err(Error::Transport {
                attempts: 1,
                message: format!("server rejected request with {s}: {body}"),
            }),
        }
    }
}

impl TokenScorer for RemoteScorer {
    fn log_probs(&self, context: &[TokenId], candidates: &[TokenId]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        let request = ScoreRequest {
            context: context.iter().map(|t| t.0).collect(),
            candidates: candidates.iter().map(|t| t.0).collect(),
            vocab_hash: self.vocab_hash.clone(),
        };
        let mut last = String::new();
        for attempt in 0..=self.retries {
            match self.attempt(&request)? {
                Ok(response) => return decode_response(&response, candidates),
                Err(message) => {
                    debug!("scorer attempt {} failed: {message}", attempt + 1);
                    last = message;
                }
            }
        }
        Err(Error::Transport {
            attempts: self.retries + 1,
            message: last,
        })
    }
}

fn decode_response(response: &ScoreResponse, candidates: &[TokenId]) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|c| match response.logprobs.get(&c.0.to_string()) {
            Some(Some(v)) if v.is_nan() => Err(Error::Transport {
                attempts: 1,
                message: format!("NaN for candidate {c}"),
            }),
            Some(Some(v)) => Ok(*v),
            Some(None) => Ok(f64::NEG_INFINITY),
            None => Err(Error::Transport {
                attempts: 1,
                message: format!("response lacks candidate {c}"),
            }),
        })
        .collect()
}

/// Serves any [`TokenScorer`] over the remote protocol on a background thread.
pub struct ScorerServer {
    server: Arc<tiny_http::Server>,
    url: String,
    worker: Option<JoinHandle<()>>,
}

impl ScorerServer {
    /// Binds to `addr` (use port 0 for an ephemeral port).
    pub fn spawn<S>(scorer: S, vocab_hash: impl Into<String>, addr: &str) -> Result<Self>
    where
        S: TokenScorer + 'static,
    {
        let server = tiny_http::Server::http(addr).map_err(|e| Error::Transport {
            attempts: 1,
            message: format!("cannot bind {addr}: {e}"),
        })?;
        let server = Arc::new(server);
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| Error::Config("scorer server needs an IP address".into()))?;
        let host = addr.rsplit_once(':').map_or("127.0.0.1", |(h, _)| h);
        let url = format!("http://{host}:{port}/score");
        let vocab_hash = vocab_hash.into();
        let worker_server = Arc::clone(&server);
        let worker = std::thread::spawn(move || {
            for request in worker_server.incoming_requests() {
                handle(&scorer, &vocab_hash, request);
            }
        });
        Ok(Self {
            server,
            url,
            worker: Some(worker),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Drop for ScorerServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

fn json_response(status: u16, body: String) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
        .expect("static header");
    tiny_http::Response::from_string(body)
        .with_status_code(status)
        .with_header(header)
}

fn handle<S: TokenScorer>(scorer: &S, vocab_hash: &str, mut request: tiny_http::Request) {
    let (status, body) = respond(scorer, vocab_hash, &mut request);
    if let Err(e) = request.respond(json_response(status, body)) {
        warn!("failed to answer scorer request: {e}");
    }
}

fn error_body(error: String, vocab_hash: Option<String>) -> String {
    serde_json::to_string(&ErrorBody { error, vocab_hash }).unwrap_or_default()
}

fn respond<S: TokenScorer>(
    scorer: &S,
    vocab_hash: &str,
    request: &mut tiny_http::Request,
) -> (u16, String) {
    if request.method() != &tiny_http::Method::Post {
        return (405, error_body("POST required".into(), None));
    }
    let mut raw = String::new();
    if let Err(e) = request.as_reader().read_to_string(&mut raw) {
        return (400, error_body(e.to_string(), None));
    }
    let parsed: ScoreRequest = match serde_json::from_str(&raw) {
        Ok(p) => p,
        Err(e) => return (400, error_body(e.to_string(), None)),
    };
    if parsed.vocab_hash != vocab_hash {
        return (
            409,
            error_body("vocabulary mismatch".into(), Some(vocab_hash.to_string())),
        );
    }
    let context: Vec<TokenId> = parsed.context.iter().copied().map(TokenId).collect();
    let candidates: Vec<TokenId> = parsed.candidates.iter().copied().map(TokenId).collect();
    match scorer.log_probs(&context, &candidates) {
        Ok(values) => {
            let logprobs = candidates
                .iter()
                .zip(values)
                .map(|(c, v)| (c.0.to_string(), v.is_finite().then_some(v)))
                .collect();
            let body = serde_json::to_string(&ScoreResponse { logprobs }).unwrap_or_default();
            (200, body)
        }
        Err(Error::EmptyCandidates) => (400, error_body("candidate set is empty".into(), None)),
        Err(e) => (500, error_body(e.to_string(), None)),
    }
}
