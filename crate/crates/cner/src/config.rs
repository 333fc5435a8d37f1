//! `key = value` configuration with `CNER_*` environment overrides.
//!
//! Lines starting with `#` and blank lines are ignored. Relative paths are
//! resolved against the directory holding the config file. An environment
//! variable `CNER_<KEY>` (upper case, `.` and `-` mapped to `_`) overrides the
//! file value of `<key>`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use cner_core::relex::DEFAULT_MAX_TOKEN_DISTANCE;

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 5_242_880;
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_REMOTE_TIMEOUT_MS: u64 = 5_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config key `{key}`: {message}")]
    Value { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteConfig {
    pub id: String,
    pub display_name: String,
    pub endpoint: Option<String>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub tagger_model: Option<PathBuf>,
    pub relex_model: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub heuristic_caps: bool,
    pub doc_converter: Option<String>,
    pub max_upload_bytes: usize,
    pub max_token_distance: usize,
    /// The default `remote-adapter` first, then extra remotes by id.
    pub remotes: Vec<RemoteConfig>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            tagger_model: None,
            relex_model: None,
            gazetteer: None,
            abbreviations: None,
            heuristic_caps: false,
            doc_converter: None,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            max_token_distance: DEFAULT_MAX_TOKEN_DISTANCE,
            remotes: vec![RemoteConfig {
                id: crate::extractor::REMOTE_ID.into(),
                display_name: "Remote adapter".into(),
                endpoint: None,
                timeout: Duration::from_millis(DEFAULT_REMOTE_TIMEOUT_MS),
            }],
        }
    }
}

/// Parses `key = value` lines.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(pairs)
}

pub fn env_key(key: &str) -> String {
    let mut name = String::from("CNER_");
    name.extend(key.chars().map(|c| match c {
        '.' | '-' => '_',
        c => c.to_ascii_uppercase(),
    }));
    name
}

fn value_error(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| value_error(key, format!("`{value}` is not a valid number")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(value_error(key, format!("`{value}` is not a boolean"))),
    }
}

fn non_empty(value: String) -> Option<String> {
    (!value.is_empty()).then_some(value)
}

impl ServiceConfig {
    /// Reads `path` and applies environment overrides from the process.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_pairs(parse_pairs(&text)?, base, |k| std::env::var(k).ok())
    }

    /// Defaults plus environment overrides, for runs without a config file.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_pairs(BTreeMap::new(), Path::new("."), |k| std::env::var(k).ok())
    }

    /// Builds a config from file pairs, letting `env` override any known key
    /// or any remote key present in the file.
    pub fn from_pairs(
        mut pairs: BTreeMap<String, String>,
        base: &Path,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        const KEYS: [&str; 13] = [
            "bind",
            "port",
            "tagger_model",
            "relex_model",
            "gazetteer",
            "abbreviations",
            "heuristic_caps",
            "remote_endpoint",
            "remote_timeout_ms",
            "doc_converter",
            "max_upload_bytes",
            "max_token_distance",
            "remotes",
        ];
        let mut keys: Vec<String> = KEYS.iter().map(|k| k.to_string()).collect();
        keys.extend(pairs.keys().filter(|k| k.starts_with("remote.")).cloned());
        if let Some(ids) = env("CNER_REMOTES").or_else(|| pairs.get("remotes").cloned()) {
            for id in ids.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                for field in ["endpoint", "timeout_ms", "name"] {
                    keys.push(format!("remote.{id}.{field}"));
                }
            }
        }
        for key in keys {
            if let Some(v) = env(&env_key(&key)) {
                pairs.insert(key, v);
            }
        }

        let path = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let mut config = ServiceConfig::default();
        let mut remotes: BTreeMap<String, RemoteConfig> = BTreeMap::new();
        for (key, value) in pairs {
            match key.as_str() {
                "bind" => config.bind = value,
                "port" => config.port = parse_num(&key, &value)?,
                "tagger_model" => config.tagger_model = non_empty(value).map(|v| path(&v)),
                "relex_model" => config.relex_model = non_empty(value).map(|v| path(&v)),
                "gazetteer" => config.gazetteer = non_empty(value).map(|v| path(&v)),
                "abbreviations" => config.abbreviations = non_empty(value).map(|v| path(&v)),
                "heuristic_caps" => config.heuristic_caps = parse_bool(&key, &value)?,
                "remote_endpoint" => config.remotes[0].endpoint = non_empty(value),
                "remote_timeout_ms" => {
                    config.remotes[0].timeout = Duration::from_millis(parse_num(&key, &value)?);
                }
                "doc_converter" => config.doc_converter = non_empty(value),
                "max_upload_bytes" => config.max_upload_bytes = parse_num(&key, &value)?,
                "max_token_distance" => {
                    config.max_token_distance = parse_num(&key, &value)?;
                    if config.max_token_distance == 0 {
                        return Err(value_error(&key, "must be positive"));
                    }
                }
                "remotes" => {}
                other => {
                    let Some((id, field)) = other.strip_prefix("remote.").and_then(|r| r.rsplit_once('.')) else {
                        return Err(value_error(other, "unknown key"));
                    };
                    if id.is_empty() || id == crate::extractor::REMOTE_ID {
                        return Err(value_error(other, "invalid remote id"));
                    }
                    let entry = remotes.entry(id.to_string()).or_insert_with(|| RemoteConfig {
                        id: id.to_string(),
                        display_name: id.to_string(),
                        endpoint: None,
                        timeout: Duration::from_millis(DEFAULT_REMOTE_TIMEOUT_MS),
                    });
                    match field {
                        "endpoint" => entry.endpoint = non_empty(value),
                        "timeout_ms" => entry.timeout = Duration::from_millis(parse_num(other, &value)?),
                        "name" => entry.display_name = value,
                        _ => return Err(value_error(other, "unknown remote field")),
                    }
                }
            }
        }
        config.remotes.extend(remotes.into_values());
        Ok(config)
    }
}
