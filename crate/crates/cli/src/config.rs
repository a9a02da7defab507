//! Run configuration: CLI flags > `hear.toml` > built-in defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use hear_core::persona::SelectionPolicy;
use hear_core::ProviderConfig;
use serde::Deserialize;

use crate::{CliError, GenerateArgs};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jurisdiction: Option<String>,
    pub persona_policy: Option<String>,
    pub provider: Option<String>,
    pub density: Option<f64>,
    pub required_dp: Option<f64>,
    pub jobs: Option<usize>,
    pub personas: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub keep_prompts: Option<bool>,
    #[serde(default)]
    pub provider_config: FileProviderConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileProviderConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub api_key_env: Option<String>,
}

/// Load an explicit config path (must exist) or ./hear.toml when present.
pub fn load_file_config(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let default = PathBuf::from("hear.toml");
            if !default.exists() {
                return Ok(FileConfig::default());
            }
            default
        }
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderKind {
    Mock,
    Live,
}

/// Fully resolved settings for one generate run.
pub struct RunConfig {
    pub jurisdiction: Option<String>,
    pub persona_policy: SelectionPolicy,
    pub provider: ProviderKind,
    pub provider_config: ProviderConfig,
    pub density_override: Option<f64>,
    pub required_dp: f64,
    pub jobs: usize,
    pub personas_path: Option<PathBuf>,
    pub kb_path: Option<PathBuf>,
    pub keep_prompts: bool,
}

pub fn resolve(args: &GenerateArgs, file: FileConfig) -> Result<RunConfig, CliError> {
    let defaults = ProviderConfig::default();

    let policy_text = args
        .persona_policy
        .clone()
        .or(file.persona_policy)
        .unwrap_or_else(|| "deterministic".to_string());
    let persona_policy: SelectionPolicy = policy_text.parse().map_err(CliError::Input)?;

    let provider_text = args
        .provider
        .clone()
        .or(file.provider)
        .unwrap_or_else(|| "mock".to_string());
    let provider = match provider_text.as_str() {
        "mock" => ProviderKind::Mock,
        "live" => ProviderKind::Live,
        other => return Err(CliError::Input(format!("unknown provider {other:?}"))),
    };

    let jobs = args.jobs.or(file.jobs).unwrap_or(4);
    if jobs < 1 {
        return Err(CliError::Input("--jobs must be >= 1".to_string()));
    }

    Ok(RunConfig {
        jurisdiction: args.jurisdiction.clone().or(file.jurisdiction),
        persona_policy,
        provider,
        provider_config: ProviderConfig {
            endpoint: args
                .endpoint
                .clone()
                .or(file.provider_config.endpoint)
                .unwrap_or(defaults.endpoint),
            model_name: args
                .model
                .clone()
                .or(file.provider_config.model)
                .unwrap_or(defaults.model_name),
            temperature: args
                .temperature
                .or(file.provider_config.temperature)
                .unwrap_or(defaults.temperature),
            max_retries: args
                .max_retries
                .or(file.provider_config.max_retries)
                .unwrap_or(defaults.max_retries),
            timeout: Duration::from_secs(
                args.timeout_secs
                    .or(file.provider_config.timeout_secs)
                    .unwrap_or(defaults.timeout.as_secs()),
            ),
            api_key_env: args
                .api_key_env
                .clone()
                .or(file.provider_config.api_key_env)
                .unwrap_or(defaults.api_key_env),
        },
        density_override: args.density.or(file.density),
        required_dp: args
            .required_dp
            .or(file.required_dp)
            .unwrap_or(hear_core::scan::DEFAULT_REQUIRED_DP),
        jobs,
        personas_path: args.personas.clone().or(file.personas),
        kb_path: args.kb.clone().or(file.kb),
        keep_prompts: args.keep_prompts || file.keep_prompts.unwrap_or(false),
    })
}
