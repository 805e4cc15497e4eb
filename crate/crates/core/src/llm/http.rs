use std::fmt;
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{CandidateGenerator, Generation, GenerationError, GenerationRequest, GeneratorConfig};

/// API key held in memory only; never printed.
#[derive(Clone)]
struct ApiKey(String);

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

/// Delay before retry number `attempt` (0-based): `base * 2^attempt`, capped.
pub fn backoff_delay(cfg: &GeneratorConfig, attempt: u32) -> Duration {
    let secs = cfg.backoff_base_secs * 2f64.powi(attempt.min(62) as i32);
    Duration::from_secs_f64(secs.min(cfg.backoff_max_secs).max(0.0))
}

fn is_retryable(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error()
}

/// Chat-completion client for OpenAI-compatible endpoints.
#[derive(Debug)]
pub struct HttpGenerator {
    client: Client,
    url: String,
    model: String,
    key: ApiKey,
    cfg: GeneratorConfig,
    attempts: u32,
}

impl HttpGenerator {
    pub fn from_config(cfg: &GeneratorConfig) -> Result<Self, GenerationError> {
        let invalid = |m: String| GenerationError::InvalidConfig(m);
        let endpoint = cfg.endpoint.as_deref().ok_or_else(|| invalid("missing endpoint".into()))?;
        let model = cfg.model.clone().ok_or_else(|| invalid("missing model".into()))?;
        let var = cfg
            .api_key_env
            .as_deref()
            .ok_or_else(|| invalid("missing api_key_env".into()))?;
        let key = std::env::var(var)
            .map_err(|_| invalid(format!("environment variable {var} is not set")))?;
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            client,
            url: chat_url(endpoint),
            model,
            key: ApiKey(key),
            cfg: cfg.clone(),
            attempts: 0,
        })
    }

    /// Total HTTP attempts made by this client so far.
    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    fn post(&mut self, prompt: &str) -> Result<ChatResponse, GenerationError> {
        let body = ChatRequest {
            model: &self.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_tokens,
        };
        let mut attempt = 0u32;
        loop {
            self.attempts += 1;
            let failure = match self
                .client
                .post(&self.url)
                .bearer_auth(&self.key.0)
                .json(&body)
                .send()
            {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<ChatResponse>().map_err(|e| {
                            GenerationError::TransportError {
                                attempts: attempt + 1,
                                message: format!("malformed completion body: {e}"),
                            }
                        });
                    }
                    if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
                        return Err(GenerationError::AuthError(status.as_u16()));
                    }
                    if !is_retryable(status) {
                        return Err(GenerationError::TransportError {
                            attempts: attempt + 1,
                            message: format!("HTTP {status}"),
                        });
                    }
                    format!("HTTP {status}")
                }
                Err(e) => e.to_string(),
            };
            if attempt >= self.cfg.max_retries {
                return Err(GenerationError::TransportError {
                    attempts: attempt + 1,
                    message: failure,
                });
            }
            let delay = backoff_delay(&self.cfg, attempt);
            log::warn!("chat completion attempt {} failed ({failure}); retrying in {delay:?}", attempt + 1);
            thread::sleep(delay);
            attempt += 1;
        }
    }
}

fn chat_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else {
        format!("{base}/chat/completions")
    }
}

impl CandidateGenerator for HttpGenerator {
    fn generate(&mut self, req: &GenerationRequest<'_>) -> Result<Generation, GenerationError> {
        let started = Instant::now();
        let resp = self.post(&req.prompt.text)?;
        let text = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GenerationError::TransportError {
                attempts: 1,
                message: "completion has no message content".into(),
            })?;
        let usage = resp.usage;
        Ok(Generation {
            text,
            latency_secs: started.elapsed().as_secs_f64(),
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
        })
    }
}
