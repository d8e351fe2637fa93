//! JSON-over-HTTP client for an externally hosted preference model.
//!
//! `POST <endpoint>/score` with `{"context": str, "candidates": [str; 3]}`,
//! expecting `{"scores": [f64; 3]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::query::{UtilityError, UtilityQuery, UtilityScorer};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL; `/score` is appended unless already present.
    pub endpoint: String,
    pub timeout_ms: u64,
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            timeout_ms: 2000,
            attempts: 3,
            backoff_ms: 100,
        }
    }
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

pub struct RemoteScorer {
    config: RemoteConfig,
    url: String,
    agent: ureq::Agent,
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Self {
        let base = config.endpoint.trim_end_matches('/');
        let url = if base.ends_with("/score") {
            base.to_string()
        } else {
            format!("{base}/score")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteScorer { config, url, agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        let mut resp = self.agent.post(&self.url).send_json(query).map_err(transport)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(UtilityError::Non2xx(status));
        }
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        let parsed: ScoreResponse =
            serde_json::from_str(&body).map_err(|e| UtilityError::MalformedResponse(e.to_string()))?;
        let scores: [f64; 3] =
            parsed.scores.as_slice().try_into().map_err(|_| {
                UtilityError::MalformedResponse(format!("expected 3 scores, got {}", parsed.scores.len()))
            })?;
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(UtilityError::MalformedResponse("non-finite score".into()));
        }
        Ok(scores)
    }
}

fn transport(e: ureq::Error) -> UtilityError {
    match e {
        ureq::Error::Timeout(_) => UtilityError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => UtilityError::Timeout,
        other => UtilityError::Transport(other.to_string()),
    }
}

impl UtilityScorer for RemoteScorer {
    /// Up to `attempts` tries with exponential backoff; the last error wins.
    fn score(&self, query: &UtilityQuery) -> Result<[f64; 3], UtilityError> {
        let attempts = self.config.attempts.max(1);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = UtilityError::Transport("no attempt made".into());
        for i in 0..attempts {
            match self.attempt(query) {
                Ok(s) => return Ok(s),
                Err(e) => last = e,
            }
            if i + 1 < attempts {
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(last)
    }
}
