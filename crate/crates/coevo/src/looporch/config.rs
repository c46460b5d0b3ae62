//! Adaptation-loop configuration, loadable from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LoopError;

/// Hard ceiling on retry attempts.
pub const MAX_ATTEMPT_CEILING: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Static-gate similarity threshold (inclusive).
    pub gate_threshold: f64,
    /// Retry budget per session; at most [`MAX_ATTEMPT_CEILING`].
    pub max_attempts: usize,
    /// Patch application fuzz in lines.
    pub fuzz: usize,
    /// Context-window padding in lines.
    pub context_pad: usize,
    /// Wall-clock limit for one build, in seconds.
    pub build_timeout_secs: u64,
    /// Directory of prompt template overrides (`<coarse>.txt`,
    /// `<coarse>__<fine>.txt`). Built-ins are used when absent.
    pub template_dir: Option<PathBuf>,
    /// Build command template; `{workspace}` is substituted. When unset, the
    /// local compiler executor syntax-checks every C file in the workspace.
    pub executor_command: Option<String>,
    /// Chat-completion endpoint for the HTTP generation backend.
    pub backend_endpoint: Option<String>,
    pub backend_model: Option<String>,
    /// Environment variable holding the backend credential.
    pub api_key_env: String,
    /// Benchmark mode: gate candidates against the pack's reference patch.
    /// In live use no reference exists and the gate checks syntax only.
    pub gate_against_reference: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            gate_threshold: 0.7,
            max_attempts: 5,
            fuzz: 20,
            context_pad: 10,
            build_timeout_secs: 120,
            template_dir: None,
            executor_command: None,
            backend_endpoint: None,
            backend_model: None,
            api_key_env: "COEVO_API_KEY".to_string(),
            gate_against_reference: true,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LoopError> {
        if !(0.0..=1.0).contains(&self.gate_threshold) {
            return Err(LoopError::InvalidConfig(format!(
                "gate_threshold {} outside [0,1]",
                self.gate_threshold
            )));
        }
        if self.max_attempts == 0 || self.max_attempts > MAX_ATTEMPT_CEILING {
            return Err(LoopError::InvalidConfig(format!(
                "max_attempts {} outside 1..={MAX_ATTEMPT_CEILING}",
                self.max_attempts
            )));
        }
        Ok(())
    }

    /// Load from a `.toml` or `.json` file, keyed by extension.
    pub fn load(path: &Path) -> Result<Self, LoopError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LoopError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let config: LoopConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text)
                .map_err(|e| LoopError::InvalidConfig(format!("{}: {e}", path.display())))?,
            _ => serde_json::from_str(&text)
                .map_err(|e| LoopError::InvalidConfig(format!("{}: {e}", path.display())))?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = LoopConfig::default();
        assert!(config.validate().is_ok());
        assert_eq!(config.gate_threshold, 0.7);
        assert_eq!(config.max_attempts, 5);
        assert_eq!(config.fuzz, 20);
    }

    #[test]
    fn ceiling_enforced() {
        let config = LoopConfig {
            max_attempts: 11,
            ..LoopConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let dir = std::env::temp_dir().join(format!("coevo-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("loop.toml");
        std::fs::write(&path, "max_attempts = 3\ngate_threshold = 0.8\n").unwrap();
        let config = LoopConfig::load(&path).unwrap();
        assert_eq!(config.max_attempts, 3);
        assert_eq!(config.gate_threshold, 0.8);
        std::fs::remove_dir_all(&dir).ok();
    }
}
