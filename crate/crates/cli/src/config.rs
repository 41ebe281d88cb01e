use std::fmt;
use std::path::{Path, PathBuf};

use disco_core::client::ClientConfig;
use disco_core::expectation::DEFAULT_EPSILON;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Bad flags, config files or settings. Maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a run depends on. Loaded from a JSON file, then overridden
/// by flags. The API key is deliberately not a field: it is read from the
/// environment only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `None` uses the bundled taxonomy.
    pub taxonomy: Option<PathBuf>,
    /// `None` uses the bundled synthetic corpus.
    pub reviews: Option<PathBuf>,
    /// Keyword lexicon for mock extraction; `None` uses the bundled one.
    pub lexicon: Option<PathBuf>,
    /// Restricts the run to one domain.
    pub domain: Option<String>,
    pub epsilon: f64,
    pub k: usize,
    pub seed: u64,
    pub leave_one_out: bool,
    pub strict: bool,
    /// Offline mode: lexicon extraction and template summaries.
    pub mock: bool,
    pub out: PathBuf,
    pub base_url: String,
    pub model: String,
    pub timeout_secs: u64,
    pub concurrency: usize,
    pub attempts: u32,
    /// Extra request fields (temperature, max tokens...) sent to the model.
    pub decoding: Map<String, Value>,
    /// Regenerate a summary once when validation flags it.
    pub regenerate_on_warning: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let client = ClientConfig::default();
        Self {
            taxonomy: None,
            reviews: None,
            lexicon: None,
            domain: None,
            epsilon: DEFAULT_EPSILON,
            k: 7,
            seed: 0,
            leave_one_out: false,
            strict: false,
            mock: false,
            out: PathBuf::from("disco-out"),
            base_url: client.base_url,
            model: client.model,
            timeout_secs: client.timeout_secs,
            concurrency: 4,
            attempts: 3,
            decoding: Map::new(),
            regenerate_on_warning: true,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if let Some(obj) = value.as_object() {
            if obj.keys().any(|k| k.to_ascii_lowercase().contains("key")) {
                return Err(ConfigError(format!(
                    "API keys are not read from config files; set {}",
                    disco_core::client::API_KEY_ENV
                )));
            }
        }
        serde_json::from_value(value).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError("k must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(ConfigError(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if self.concurrency == 0 {
            return Err(ConfigError("concurrency must be at least 1".into()));
        }
        if self.attempts == 0 {
            return Err(ConfigError("attempts must be at least 1".into()));
        }
        std::fs::create_dir_all(&self.out)
            .map_err(|e| ConfigError(format!("output directory {}: {e}", self.out.display())))?;
        let probe = self.out.join(".write-probe");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| ConfigError(format!("output directory {} is not writable: {e}", self.out.display())))
    }

    pub fn client_config(&self) -> ClientConfig {
        ClientConfig {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            options: self.decoding.clone(),
            timeout_secs: self.timeout_secs,
        }
    }
}
