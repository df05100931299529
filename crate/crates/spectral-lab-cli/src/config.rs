//! Flat `key = value` configuration files with `[section]` headers.
//!
//! No nesting, no quoting, `#` starts a comment. Unknown sections or keys
//! are hard errors carrying the line number, so typos cannot silently
//! fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { message: message.into() })
}

/// Keys accepted per section. The single source of truth for validation.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["kind"]),
    (
        "operator",
        &[
            "potential",
            "lambda",
            "alpha",
            "theta",
            "boundary",
            "perturbation",
            "kappa",
            "gamma",
            "decay_a",
            "decay_tau",
            "seed",
            "b_range",
        ],
    ),
    (
        "numeric",
        &[
            "grid",
            "nodes",
            "carmona_n",
            "window",
            "t_min",
            "t_max",
            "points_per_decade",
            "alphas",
            "max_depth",
            "k_max",
            "energy_min",
            "energy_max",
            "energies",
            "n_sites",
            "dc_eta",
            "dc_tau",
            "dc_n_max",
            "reference",
            "nu_beta",
            "slope_min",
            "slope_max",
            "log_r2_min",
            "target_exponent",
            "exponent_tol",
            "ratio_min",
            "ratio_max",
            "cauchy_tol",
            "stability_tol",
            "stability_depth_min",
            "domination_max",
            "jl_bracket",
            "jl_ratio_min",
            "jl_ratio_max",
        ],
    ),
];

/// Parsed file: `(section, key) → (value, line number)`.
pub struct RawConfig {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return err(format!("line {line_no}: malformed section header `{line}`"));
                };
                let name = name.trim();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                    return err(format!("line {line_no}: unknown section `[{name}]`"));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {line_no}: expected `key = value`, got `{line}`"));
            };
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return err(format!("line {line_no}: key `{key}` before any [section]"));
            }
            let allowed = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| keys.contains(&key))
                .unwrap_or(false);
            if !allowed {
                return err(format!("line {line_no}: unknown key `{key}` in [{section}]"));
            }
            if entries
                .insert((section.clone(), key.to_string()), (value.to_string(), line_no))
                .is_some()
            {
                return err(format!("line {line_no}: duplicate key `{key}` in [{section}]"));
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(v, _)| v.as_str())
    }

    pub fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError {
                    message: format!("[{section}] {key}: `{v}` is not a number"),
                }),
        }
    }

    pub fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError {
                message: format!("[{section}] {key}: `{v}` is not a nonnegative integer"),
            }),
        }
    }

    pub fn u64(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError {
                message: format!("[{section}] {key}: `{v}` is not a nonnegative integer"),
            }),
        }
    }

    pub fn bool(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => err(format!("[{section}] {key}: `{v}` is not true/false")),
        }
    }

    pub fn f64_list(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| ConfigError {
                        message: format!("[{section}] {key}: `{s}` is not a number"),
                    })
                })
                .collect(),
        }
    }

    /// Sorted `(section, key, value)` triples for the manifest echo.
    pub fn resolved_entries(&self) -> Vec<(String, String, String)> {
        self.entries
            .iter()
            .map(|((s, k), (v, _))| (s.clone(), k.clone(), v.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let cfg = RawConfig::parse(
            "# comment\n[experiment]\nkind = density\n[numeric]\nnodes = 512 # inline\n",
        )
        .unwrap();
        assert_eq!(cfg.get("experiment", "kind"), Some("density"));
        assert_eq!(cfg.usize("numeric", "nodes", 0).unwrap(), 512);
        assert_eq!(cfg.usize("numeric", "carmona_n", 7).unwrap(), 7);
    }

    #[test]
    fn rejects_unknown_key_with_line() {
        let e = RawConfig::parse("[numeric]\nnodez = 512\n").unwrap_err();
        assert!(e.message.contains("line 2"), "{}", e.message);
        assert!(e.message.contains("nodez"), "{}", e.message);
    }

    #[test]
    fn rejects_unknown_section_and_duplicates() {
        assert!(RawConfig::parse("[nope]\n").is_err());
        assert!(RawConfig::parse("[numeric]\nnodes = 1\nnodes = 2\n").is_err());
        assert!(RawConfig::parse("nodes = 1\n").is_err());
    }
}
