use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// One acceptance check. Observational checks (`asserted == false`) never fail a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    /// Passes iff `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            asserted: true,
            passed: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
            detail: String::new(),
        }
    }

    pub fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            asserted: true,
            passed,
            value: None,
            tolerance: None,
            detail: detail.into(),
        }
    }

    pub fn observed(name: &str, value: Option<f64>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            asserted: false,
            passed: true,
            value,
            tolerance: None,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn fails(&self) -> bool {
        self.asserted && !self.passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical config written next to the manifest.
    pub config_hash: String,
    pub artifact_version: String,
    pub wall_start_ms: u64,
    pub wall_end_ms: u64,
    pub checks: Vec<Check>,
    pub truncated: bool,
    pub error: Option<String>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, config_hash: String) -> Self {
        RunManifest {
            command: command.into(),
            config_hash,
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            wall_start_ms: now_ms(),
            wall_end_ms: 0,
            checks: Vec::new(),
            truncated: false,
            error: None,
        }
    }

    pub fn all_passed(&self) -> bool {
        !self.truncated && self.error.is_none() && !self.checks.iter().any(Check::fails)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.fails()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn finish(&mut self) {
        self.wall_end_ms = now_ms();
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observational_checks_never_fail() {
        let mut m = RunManifest::start("flow", "00".into());
        m.checks.push(Check::observed("x", Some(-1.0), ""));
        m.checks.push(Check::at_most("y", 1e-7, 1e-6));
        assert!(m.all_passed());
        m.checks.push(Check::at_most("z", 2.0, 1.0));
        assert_eq!(m.failures().len(), 1);
        m.checks.pop();
        m.truncated = true;
        assert!(!m.all_passed());
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::start("verify", "ab".into());
        m.checks.push(Check::flag("f", false, "witness node 3"));
        m.finish();
        m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::read(dir.path()).unwrap(), m);
    }
}
