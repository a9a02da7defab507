//! Model providers: an offline deterministic mock and an HTTP client for any
//! chat-completion-style endpoint. Tests never need network or credentials.

use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::geometry::format_dp;
use crate::prompt::Prompt;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    ProviderAuthError(String),
    #[error("provider timed out: {0}")]
    ProviderTimeout(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {message}")]
    Api { status: u16, message: String },
    #[error("provider returned an empty completion after retries")]
    EmptyCompletion,
    #[error("unexpected response shape: {0}")]
    BadResponse(String),
}

impl ProviderError {
    fn is_transient(&self) -> bool {
        match self {
            ProviderError::ProviderTimeout(_)
            | ProviderError::Transport(_)
            | ProviderError::EmptyCompletion => true,
            ProviderError::Api { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Connection settings for the live provider.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    /// Name of the environment variable holding the credential.
    pub api_key_env: String,
}

mod duration_secs {
    use super::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs(u64::deserialize(d)?))
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o".to_string(),
            temperature: 0.1,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            api_key_env: "HEAR_API_KEY".to_string(),
        }
    }
}

pub trait ModelProvider: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError>;
    /// Recorded in report provenance.
    fn model_name(&self) -> String;
}

/// Call the provider with exponential backoff on transient failures; an
/// empty completion counts as transient and becomes `EmptyCompletion` once
/// retries are exhausted.
pub fn invoke_model(
    provider: &dyn ModelProvider,
    prompt: &Prompt,
    cfg: &ProviderConfig,
) -> Result<String, ProviderError> {
    let mut last_err = ProviderError::EmptyCompletion;
    for attempt in 0..=cfg.max_retries {
        match provider.complete(prompt) {
            Ok(text) if !text.trim().is_empty() => return Ok(text),
            Ok(_) => last_err = ProviderError::EmptyCompletion,
            Err(e) if e.is_transient() => last_err = e,
            Err(e) => return Err(e),
        }
        if attempt < cfg.max_retries {
            std::thread::sleep(backoff_delay(attempt));
        }
    }
    Err(last_err)
}

fn backoff_delay(attempt: u32) -> Duration {
    Duration::from_millis(250u64.saturating_mul(1 << attempt.min(6)))
}

// -- offline mock -----------------------------------------------------------

/// Deterministic offline provider: renders fixed templates over the prompt's
/// structured fields. Identical prompts produce byte-identical output, and
/// quoted spans are drawn only from slice text, so mock reports pass the
/// automated audit by construction.
#[derive(Debug, Default, Clone)]
pub struct MockProvider;

impl ModelProvider for MockProvider {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        let m = &prompt.meta;
        let text = match prompt.layer {
            1 => {
                let mut out = format!(
                    "{} ({}) lives with {}. ",
                    m.persona_name, m.persona_age, m.persona_condition
                );
                for c in &m.persona_constraints {
                    out.push_str(c);
                    out.push_str(". ");
                }
                let element = match &m.target_text {
                    Some(text) => format!("{} \"{}\"", m.target_role, text),
                    None => m.target_role.clone(),
                };
                match m.category.as_str() {
                    "TouchTargetSize" => {
                        out.push_str(&format!(
                            "The {} at bounds {} measures {} dp where at least {} dp is expected, \
so even a small drift at the moment of contact lands outside it. ",
                            element,
                            m.bounds,
                            format_dp(m.measured_dp.unwrap_or_default()),
                            format_dp(m.required_dp.unwrap_or_default()),
                        ));
                    }
                    "ContrastRatio" => {
                        out.push_str(&format!(
                            "The text shown by the {} at bounds {} sits at a contrast ratio of \
{:.2}:1 against its background, far below the 4.5:1 needed for comfortable reading. ",
                            element,
                            m.bounds,
                            m.contrast_ratio.unwrap_or_default(),
                        ));
                    }
                    "ContentLabeling" => {
                        out.push_str(&format!(
                            "The {} at bounds {} exposes no accessible name, so the screen reader \
announces it without saying what it does. ",
                            element, m.bounds,
                        ));
                    }
                    _ => {
                        out.push_str(&format!(
                            "The {} at bounds {} triggers an unclassified finding. ",
                            element, m.bounds,
                        ));
                    }
                }
                out.push_str(&format!("{}. {}.", m.persona_psychology, m.persona_logic));
                out
            }
            2 => {
                let mut out = String::new();
                match (&m.target_text, &m.resource_id) {
                    (Some(t), _) => {
                        out.push_str(&format!("The {} carries the text \"{}\"", m.target_role, t))
                    }
                    (None, Some(rid)) => {
                        out.push_str(&format!("The {} is identified as {rid}", m.target_role))
                    }
                    (None, None) => out.push_str(&format!("The unnamed {}", m.target_role)),
                }
                if let Some(rid) = &m.resource_id {
                    if m.target_text.is_some() {
                        out.push_str(&format!(" and is identified as {rid}"));
                    }
                }
                out.push_str(", which marks the step it gates in the flow. ");
                if m.neighbor_texts.is_empty() {
                    out.push_str("No neighboring text is recorded around it. ");
                } else {
                    let quoted: Vec<String> = m
                        .neighbor_texts
                        .iter()
                        .map(|t| format!("\"{t}\""))
                        .collect();
                    out.push_str(&format!(
                        "Neighboring text {} places it inside a larger task. ",
                        quoted.join(", ")
                    ));
                }
                out.push_str(
                    "After the failed attempt described above, that step stays incomplete: each \
retry costs another attempt and more frustration, and the realistic outcome is that the user \
abandons the task rather than fight the interface.",
                );
                out
            }
            3 => {
                let mut out = String::new();
                for c in &m.clauses {
                    out.push_str(&format!(
                        "- {} — {}\n  Requirement: {}\n  Risk: {}\n",
                        c.instrument, c.clause_id, c.requirement_text, c.risk_text
                    ));
                }
                out.push_str(
                    "The functional blockage described above conflicts with every provision \
listed here. Remediating the element closes the compliance gap; leaving it in place keeps the \
operator exposed to the risks stated against each clause.",
                );
                out
            }
            other => {
                return Err(ProviderError::BadResponse(format!(
                    "mock provider has no template for layer {other}"
                )))
            }
        };
        Ok(text)
    }

    fn model_name(&self) -> String {
        "mock".to_string()
    }
}

// -- live HTTP provider -------------------------------------------------------

/// Client for any endpoint speaking the common chat-completion API shape.
/// Layer-1 images travel as base64 data URLs.
pub struct HttpProvider {
    cfg: ProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider { cfg, agent }
    }

    fn api_key(&self) -> Result<String, ProviderError> {
        std::env::var(&self.cfg.api_key_env).map_err(|_| {
            ProviderError::ProviderAuthError(format!(
                "environment variable {} is not set",
                self.cfg.api_key_env
            ))
        })
    }

    fn request_body(&self, prompt: &Prompt) -> serde_json::Value {
        let user_content = match &prompt.image {
            Some(img) => {
                let data_url = format!(
                    "data:image/png;base64,{}",
                    base64::engine::general_purpose::STANDARD.encode(&img.png)
                );
                json!([
                    { "type": "text", "text": prompt.user_text },
                    { "type": "image_url", "image_url": { "url": data_url } }
                ])
            }
            None => json!(prompt.user_text),
        };
        json!({
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "messages": [
                { "role": "system", "content": prompt.system_text },
                { "role": "user", "content": user_content }
            ]
        })
    }
}

impl ModelProvider for HttpProvider {
    fn complete(&self, prompt: &Prompt) -> Result<String, ProviderError> {
        let key = self.api_key()?;
        let body = self.request_body(prompt);

        let mut response = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::ProviderTimeout(e.to_string()),
                other => ProviderError::Transport(other.to_string()),
            })?;

        let status = response.status().as_u16();
        if status == 401 || status == 403 {
            return Err(ProviderError::ProviderAuthError(format!("status {status}")));
        }
        if !(200..300).contains(&status) {
            let message = response
                .body_mut()
                .read_to_string()
                .unwrap_or_else(|_| "<unreadable body>".to_string());
            return Err(ProviderError::Api { status, message });
        }

        let parsed: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::BadResponse("missing choices[0].message.content".to_string())
            })
    }

    fn model_name(&self) -> String {
        self.cfg.model_name.clone()
    }
}
