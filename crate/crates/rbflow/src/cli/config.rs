//! Flat `key = value` experiment configs and run manifests.

use std::collections::BTreeMap;

use crate::error::{RbError, Result};

/// Ordered key = value map parsed from a config file. Lines starting with
/// `#` and blank lines are ignored; keys may not repeat.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    pub entries: Vec<(String, String)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                RbError::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = k.trim().to_string();
            let val = v.trim().to_string();
            if seen.insert(key.clone(), ()).is_some() {
                return Err(RbError::Config(format!("duplicate key `{key}`")));
            }
            entries.push((key, val));
        }
        Ok(KvConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Reject keys outside the allowed schema.
    pub fn check_known(&self, allowed: &[&str]) -> Result<()> {
        for (k, _) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(RbError::Config(format!(
                    "unknown key `{k}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| RbError::Config(format!("missing required key `{key}`")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| RbError::Config(format!("key `{key}`: `{v}` is not a number")))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| RbError::Config(format!("key `{key}`: `{v}` is not an integer")))
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| RbError::Config(format!("key `{key}`: `{v}` is not an integer")))
            })
            .transpose()
    }

    /// Comma-separated list of numbers.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|_| {
                            RbError::Config(format!("key `{key}`: `{s}` is not a number"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: String) {
        if let Some(e) = self.entries.iter_mut().find(|(k, _)| k == key) {
            e.1 = value;
        } else {
            self.entries.push((key.to_string(), value));
        }
    }

    /// Render back to `key = value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

/// Write a run manifest: the resolved config followed by sha256 lines for
/// every artifact, as comments so the manifest re-ingests as a config.
pub fn write_manifest(dir: &std::path::Path, config: &KvConfig, artifacts: &[std::path::PathBuf]) -> Result<()> {
    use sha2::{Digest, Sha256};
    let mut text = config.render();
    for path in artifacts {
        let bytes = std::fs::read(path)?;
        let mut h = Sha256::new();
        h.update(&bytes);
        let digest = h.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        text.push_str(&format!("# sha256 {name} {hex}\n"));
    }
    std::fs::write(dir.join("manifest"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let cfg = KvConfig::parse("# comment\nn = 3\nrho = 0.1\n\ngrid = 16,16\n").unwrap();
        assert_eq!(cfg.get("n"), Some("3"));
        assert_eq!(cfg.get_f64("rho").unwrap(), Some(0.1));
        let again = KvConfig::parse(&cfg.render()).unwrap();
        assert_eq!(again.entries, cfg.entries);
    }

    #[test]
    fn unknown_and_duplicate_keys_rejected() {
        let cfg = KvConfig::parse("a = 1\nb = 2\n").unwrap();
        assert!(cfg.check_known(&["a"]).is_err());
        assert!(cfg.check_known(&["a", "b"]).is_ok());
        assert!(KvConfig::parse("a = 1\na = 2\n").is_err());
    }
}
