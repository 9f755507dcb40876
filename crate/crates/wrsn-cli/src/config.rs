//! Line-oriented `key = value` configuration files, overridden by CLI flags.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Raw config map; values stay strings until merged with flags.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`, got `{line}`", idx + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")),
        }
    }
}

/// Flag value if present, else config value, else default.
pub fn resolve<T: Clone + std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T>
where
    <T as std::str::FromStr>::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(config.get_parsed(key)?.unwrap_or(default))
}

/// Like [`resolve`] without a default.
pub fn resolve_opt<T: Clone + std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
) -> Result<Option<T>>
where
    <T as std::str::FromStr>::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    config.get_parsed(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let config = ConfigFile::parse("n = 24\n# comment\nalpha = 0.45\n").unwrap();
        assert_eq!(resolve(None, &config, "n", 10usize).unwrap(), 24);
        assert_eq!(resolve(Some(32usize), &config, "n", 10).unwrap(), 32);
        assert_eq!(resolve(None, &config, "missing", 7u32).unwrap(), 7);
        assert_eq!(
            resolve_opt::<f64>(None, &config, "alpha").unwrap(),
            Some(0.45)
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("nonsense").is_err());
    }
}
