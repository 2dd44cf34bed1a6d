use std::fmt;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use super::prompts;
use super::{parse_frame_json, parse_judge_json, parse_quads_json, ExtractionResult, GeneratedAnswer, Limiter, LlmGateway};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::model::{EpisodicEventFrame, Passage, QuadrupleDraft};
use crate::retrieval::SynthesizedContext;

/// Chat-completion endpoint settings.
#[derive(Clone)]
pub struct GatewayConfig {
    pub endpoint_url: String,
    pub api_key: String,
    pub model_name: String,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub max_parallel_requests: usize,
    /// First retry delay; doubles per attempt, plus up to 50% jitter.
    pub backoff_base: Duration,
}

impl fmt::Debug for GatewayConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GatewayConfig")
            .field("endpoint_url", &self.endpoint_url)
            .field("api_key", &"<redacted>")
            .field("model_name", &self.model_name)
            .field("request_timeout", &self.request_timeout)
            .field("max_retries", &self.max_retries)
            .field("max_parallel_requests", &self.max_parallel_requests)
            .finish()
    }
}

impl GatewayConfig {
    pub fn new(endpoint_url: impl Into<String>, api_key: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            api_key: api_key.into(),
            model_name: model_name.into(),
            request_timeout: Duration::from_secs(60),
            max_retries: 3,
            max_parallel_requests: 8,
            backoff_base: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.trim().is_empty() {
            return Err(Error::Config("endpoint_url is empty".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(Error::Config("model_name is empty".into()));
        }
        if self.request_timeout.is_zero() {
            return Err(Error::Config("request_timeout must be positive".into()));
        }
        if self.max_parallel_requests == 0 {
            return Err(Error::Config("max_parallel_requests must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct EmbeddingEndpoint {
    pub url: String,
    pub api_key: String,
    pub model: String,
    /// Probed with a first request when unset.
    pub dim: Option<usize>,
}

impl fmt::Debug for EmbeddingEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingEndpoint")
            .field("url", &self.url)
            .field("api_key", &"<redacted>")
            .field("model", &self.model)
            .field("dim", &self.dim)
            .finish()
    }
}

fn env(name: &str) -> Result<String> {
    std::env::var(name).map_err(|_| Error::Config(format!("environment variable {name} is not set")))
}

fn join_url(base: &str, path: &str) -> String {
    let base = base.trim_end_matches('/');
    if base.ends_with(path) {
        base.to_string()
    } else {
        format!("{base}/{path}")
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
}

/// Gateway backed by OpenAI-compatible `/chat/completions` and
/// `/embeddings` endpoints.
pub struct HttpGateway {
    chat: GatewayConfig,
    emb: EmbeddingEndpoint,
    client: reqwest::blocking::Client,
    limiter: Limiter,
    dim: usize,
}

impl fmt::Debug for HttpGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpGateway")
            .field("chat", &self.chat)
            .field("emb", &self.emb)
            .field("dim", &self.dim)
            .finish()
    }
}

impl HttpGateway {
    pub fn new(chat: GatewayConfig, emb: EmbeddingEndpoint) -> Result<Self> {
        chat.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(chat.request_timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let mut gw = Self {
            limiter: Limiter::new(chat.max_parallel_requests),
            chat,
            emb,
            client,
            dim: 0,
        };
        gw.dim = match gw.emb.dim {
            Some(d) if d > 0 => d,
            Some(_) => return Err(Error::Config("embedding dimension must be positive".into())),
            None => gw.raw_embedding("dimension probe")?.len(),
        };
        Ok(gw)
    }

    /// Reads `SEEM_LLM_{URL,KEY,MODEL}` and `SEEM_EMB_{URL,KEY,MODEL}`.
    /// `SEEM_EMB_URL`/`SEEM_EMB_KEY` default to the chat values and
    /// `SEEM_EMB_DIM` skips the dimension probe.
    pub fn from_env() -> Result<Self> {
        let chat = GatewayConfig::new(env("SEEM_LLM_URL")?, env("SEEM_LLM_KEY")?, env("SEEM_LLM_MODEL")?);
        let dim = match std::env::var("SEEM_EMB_DIM") {
            Ok(s) => Some(
                s.parse()
                    .map_err(|_| Error::Config(format!("SEEM_EMB_DIM is not an integer: {s}")))?,
            ),
            Err(_) => None,
        };
        let emb = EmbeddingEndpoint {
            url: std::env::var("SEEM_EMB_URL").unwrap_or_else(|_| chat.endpoint_url.clone()),
            api_key: std::env::var("SEEM_EMB_KEY").unwrap_or_else(|_| chat.api_key.clone()),
            model: env("SEEM_EMB_MODEL")?,
            dim,
        };
        Self::new(chat, emb)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.chat.backoff_base.saturating_mul(1 << attempt.min(16));
        let jitter = rand::thread_rng().gen_range(0.0..=0.5);
        base.mul_f64(1.0 + jitter)
    }

    /// Runs `op` until it succeeds or `max_retries` retries are spent.
    fn with_retries<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= self.chat.max_retries => return Err(e),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "gateway call failed; retrying");
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
            }
        }
    }

    fn post(&self, url: &str, key: &str, body: &serde_json::Value) -> Result<String> {
        let _permit = self.limiter.acquire(self.chat.request_timeout)?;
        let resp = self
            .client
            .post(url)
            .bearer_auth(key)
            .json(body)
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Error::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Transport(format!("HTTP {status}: {text}")));
        }
        Ok(text)
    }

    fn complete_once(&self, system: &str, user: &str) -> Result<String> {
        let body = json!({
            "model": self.chat.model_name,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let text = self.post(&join_url(&self.chat.endpoint_url, "chat/completions"), &self.chat.api_key, &body)?;
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| Error::Transport(format!("bad completion payload: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Error::Transport("completion has no content".into()))
    }

    /// One completion parsed by `parse`; parse failures are retried like
    /// transport failures.
    fn structured<T>(&self, system: &str, user: &str, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
        self.with_retries(|| parse(&self.complete_once(system, user)?))
    }

    fn raw_embedding(&self, text: &str) -> Result<Vec<f32>> {
        let body = json!({"model": self.emb.model, "input": text});
        self.with_retries(|| {
            let raw = self.post(&join_url(&self.emb.url, "embeddings"), &self.emb.api_key, &body)?;
            let parsed: EmbeddingResponse =
                serde_json::from_str(&raw).map_err(|e| Error::Transport(format!("bad embedding payload: {e}")))?;
            parsed
                .data
                .into_iter()
                .next()
                .map(|d| d.embedding)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| Error::Transport("embedding response is empty".into()))
        })
    }

    /// Asks the answer-judge prompt whether `prediction` matches `gold`.
    pub fn judge_answer(&self, question: &str, gold: &str, prediction: &str) -> Result<bool> {
        #[derive(Deserialize)]
        struct Verdict {
            label: String,
        }
        let user = prompts::answer_judge_input(question, gold, prediction);
        self.structured("You are a strict grader.", &user, |raw| {
            let v: Verdict = serde_json::from_str(super::json_object(raw)?)
                .map_err(|e| Error::Judge(format!("schema: {e}")))?;
            match v.label.to_ascii_uppercase().as_str() {
                "CORRECT" => Ok(true),
                "WRONG" => Ok(false),
                other => Err(Error::Judge(format!("unknown label {other}"))),
            }
        })
    }
}

fn relabel(e: Error, wrap: fn(String) -> Error) -> Error {
    match e {
        Error::Transport(m) => wrap(m),
        other => wrap(other.to_string()),
    }
}

impl LlmGateway for HttpGateway {
    fn extract_frame(&self, passage: &Passage) -> Result<ExtractionResult> {
        self.structured(prompts::EXTRACTION, &prompts::extraction_input(passage), parse_frame_json)
            .map_err(|e| relabel(e, Error::Extraction))
    }

    fn extract_quadruples(&self, text: &str, reference_time: Option<DateTime<Utc>>) -> Result<Vec<QuadrupleDraft>> {
        if text.trim().is_empty() {
            return Err(Error::Extraction("empty text".into()));
        }
        self.structured(prompts::QUADRUPLES, &prompts::quadruple_input(text, reference_time), parse_quads_json)
            .map_err(|e| relabel(e, Error::Extraction))
    }

    fn judge_same_event(&self, candidate: &EpisodicEventFrame, previous: &EpisodicEventFrame) -> Result<bool> {
        self.structured(prompts::JUDGE, &prompts::judge_input(candidate, previous), parse_judge_json)
            .map_err(|e| relabel(e, Error::Judge))
    }

    fn fuse_frames(
        &self,
        candidate: &EpisodicEventFrame,
        previous: &EpisodicEventFrame,
        sources: &[Passage],
    ) -> Result<ExtractionResult> {
        self.structured(
            prompts::FUSION,
            &prompts::fusion_input(candidate, previous, sources),
            parse_frame_json,
        )
        .map_err(|e| relabel(e, Error::Fusion))
    }

    fn generate_answer(&self, query: &str, context: &SynthesizedContext) -> Result<GeneratedAnswer> {
        let user = prompts::answer_input(query, &context.serialized);
        self.with_retries(|| self.complete_once(prompts::ANSWER, &user))
            .map(GeneratedAnswer::from_completion)
            .map_err(|e| relabel(e, Error::Generation))
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::Input("cannot embed empty text".into()));
        }
        let e = Embedding::normalized(self.raw_embedding(text)?)?;
        e.ensure_dim(self.dim)?;
        Ok(e)
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!(
            "http:llm={}@{}:emb={}@{}:dim={}:prompts={}",
            self.chat.model_name,
            self.chat.endpoint_url,
            self.emb.model,
            self.emb.url,
            self.dim,
            prompts::PROMPT_VERSION
        )
    }
}
