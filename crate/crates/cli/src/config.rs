//! Flat `key = value` run configuration.
//!
//! A config file carries the same knobs as the command-line flags; any flag
//! given explicitly wins over the file. Unknown keys are rejected so a typo
//! cannot silently fall back to a default.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use hetrel::cpgnn::TrainConfig;

use crate::error::CliError;

/// Every key a config file may set.
const KNOWN_KEYS: &[&str] = &[
    "nodes",
    "edges",
    "directed",
    "dim",
    "depth",
    "heads",
    "node_dropout",
    "learning_rate",
    "max_epochs",
    "patience",
    "seed",
    "loss_balance",
    "decay",
    "iterations",
    "walk_length",
    "normalized",
    "top",
];

/// Parsed config file: raw string values by key.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
    dir: PathBuf,
}

impl FileConfig {
    /// Reads and validates a config file. Blank lines and `#` comments are
    /// skipped; every other line must be `key = value` with a known key.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::usage(format!(
                    "{}:{}: unknown config key `{key}`",
                    path.display(),
                    idx + 1
                )));
            }
            if value.is_empty() {
                return Err(CliError::usage(format!(
                    "{}:{}: key `{key}` has no value",
                    path.display(),
                    idx + 1
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::usage(format!(
                    "{}:{}: key `{key}` set twice",
                    path.display(),
                    idx + 1
                )));
            }
        }
        let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok(Self { values, dir })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// A config source that may be absent entirely.
#[derive(Debug, Default)]
pub struct Settings {
    file: Option<FileConfig>,
}

impl Settings {
    pub fn from_file(path: Option<&Path>) -> Result<Self, CliError> {
        Ok(Self { file: path.map(FileConfig::load).transpose()? })
    }

    /// Flag value if given, else the config file's, else `None`.
    fn pick<'a>(&'a self, flag: Option<&'a str>, key: &str) -> Option<&'a str> {
        flag.or_else(|| self.file.as_ref().and_then(|f| f.raw(key)))
    }

    fn parse<T: std::str::FromStr>(&self, flag: Option<&str>, key: &str) -> Result<Option<T>, CliError> {
        match self.pick(flag, key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| {
                CliError::usage(format!("invalid value `{text}` for `{key}`"))
            }),
        }
    }

    /// A path-valued key. Relative paths in the config file resolve against
    /// the file's own directory; flag paths resolve as given.
    pub fn path(&self, flag: Option<&Path>, key: &str) -> Option<PathBuf> {
        if let Some(p) = flag {
            return Some(p.to_path_buf());
        }
        let file = self.file.as_ref()?;
        let raw = file.raw(key)?;
        let p = Path::new(raw);
        Some(if p.is_absolute() { p.to_path_buf() } else { file.dir.join(p) })
    }

    pub fn required_path(&self, flag: Option<&Path>, key: &str) -> Result<PathBuf, CliError> {
        self.path(flag, key)
            .ok_or_else(|| CliError::usage(format!("`--{key}` (or config key `{key}`) is required")))
    }

    /// Graphs are undirected unless `directed = true` or `--directed`.
    pub fn directed(&self, flag: bool) -> Result<bool, CliError> {
        if flag {
            return Ok(true);
        }
        match self.pick(None, "directed") {
            None => Ok(false),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(CliError::usage(format!(
                "invalid value `{other}` for `directed` (expected true or false)"
            ))),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag {
            return Ok(s);
        }
        Ok(self.parse::<u64>(None, "seed")?.unwrap_or(TrainConfig::default().seed))
    }

    /// The full training configuration, defaulting field by field.
    pub fn train_config(&self, seed_flag: Option<u64>) -> Result<TrainConfig, CliError> {
        let d = TrainConfig::default();
        let patience = match self.pick(None, "patience") {
            None => d.patience,
            Some("none") => None,
            Some(text) => Some(text.parse::<usize>().map_err(|_| {
                CliError::usage(format!("invalid value `{text}` for `patience`"))
            })?),
        };
        let loss_balance = match self.pick(None, "loss_balance") {
            None => d.loss_balance,
            Some(text) => parse_balance(text)?,
        };
        Ok(TrainConfig {
            dim: self.parse(None, "dim")?.unwrap_or(d.dim),
            depth: self.parse(None, "depth")?.unwrap_or(d.depth),
            heads: self.parse(None, "heads")?.unwrap_or(d.heads),
            node_dropout: self.parse(None, "node_dropout")?.unwrap_or(d.node_dropout),
            learning_rate: self.parse(None, "learning_rate")?.unwrap_or(d.learning_rate),
            max_epochs: self.parse(None, "max_epochs")?.unwrap_or(d.max_epochs),
            patience,
            seed: self.seed(seed_flag)?,
            loss_balance,
        })
    }

    pub fn decay(&self) -> Result<f64, CliError> {
        Ok(self.parse(None, "decay")?.unwrap_or(0.8))
    }

    pub fn iterations(&self) -> Result<usize, CliError> {
        Ok(self.parse(None, "iterations")?.unwrap_or(10))
    }

    pub fn walk_length(&self, flag: Option<usize>) -> Result<usize, CliError> {
        Ok(flag.or(self.parse(None, "walk_length")?).unwrap_or(2))
    }

    pub fn normalized(&self) -> Result<bool, CliError> {
        match self.pick(None, "normalized") {
            None => Ok(true),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(CliError::usage(format!(
                "invalid value `{other}` for `normalized` (expected true or false)"
            ))),
        }
    }

    pub fn top(&self, flag: Option<usize>) -> Result<usize, CliError> {
        Ok(flag.or(self.parse(None, "top")?).unwrap_or(10))
    }
}

/// `ws:wu` — the supervised and self-relevance loss weights.
fn parse_balance(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::usage(format!(
        "invalid value `{text}` for `loss_balance` (expected `ws:wu`, e.g. `1:1`)"
    ));
    let (l, r) = text.split_once(':').ok_or_else(bad)?;
    let ws: f64 = l.trim().parse().map_err(|_| bad())?;
    let wu: f64 = r.trim().parse().map_err(|_| bad())?;
    if !ws.is_finite() || !wu.is_finite() || ws < 0.0 || wu < 0.0 {
        return Err(bad());
    }
    Ok((ws, wu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn file_values_parse_and_flags_override() {
        let (_dir, path) = write_config(
            "# a comment\nseed = 9\ndim = 16\nloss_balance = 2:0.5\npatience = none\n",
        );
        let s = Settings::from_file(Some(&path)).unwrap();
        let cfg = s.train_config(None).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dim, 16);
        assert_eq!(cfg.loss_balance, (2.0, 0.5));
        assert_eq!(cfg.patience, None);
        // Everything unset falls back to the defaults.
        assert_eq!(cfg.heads, TrainConfig::default().heads);

        let with_flag = s.train_config(Some(31)).unwrap();
        assert_eq!(with_flag.seed, 31, "flag beats file");
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_rejected() {
        let (_dir, path) = write_config("dims = 16\n");
        assert!(Settings::from_file(Some(&path)).is_err());
        let (_dir2, path2) = write_config("dim 16\n");
        assert!(Settings::from_file(Some(&path2)).is_err());
        let (_dir3, path3) = write_config("dim = 16\ndim = 32\n");
        assert!(Settings::from_file(Some(&path3)).is_err());
        let (_dir4, path4) = write_config("dim =\n");
        assert!(Settings::from_file(Some(&path4)).is_err());
    }

    #[test]
    fn config_paths_resolve_against_the_config_directory() {
        let (dir, path) = write_config("nodes = data/n.tsv\n");
        let s = Settings::from_file(Some(&path)).unwrap();
        let resolved = s.path(None, "nodes").unwrap();
        assert_eq!(resolved, dir.path().join("data/n.tsv"));
        // A flag path is taken literally.
        let flagged = s.path(Some(Path::new("elsewhere/n.tsv")), "nodes").unwrap();
        assert_eq!(flagged, Path::new("elsewhere/n.tsv"));
        // Missing path with no flag: required lookups fail as usage errors.
        assert!(s.required_path(None, "edges").is_err());
    }

    #[test]
    fn bad_typed_values_are_usage_errors() {
        let (_dir, path) = write_config("dim = banana\n");
        let s = Settings::from_file(Some(&path)).unwrap();
        assert!(s.train_config(None).is_err());

        let (_dir2, path2) = write_config("loss_balance = 1,1\n");
        let s2 = Settings::from_file(Some(&path2)).unwrap();
        assert!(s2.train_config(None).is_err());

        let (_dir3, path3) = write_config("directed = sideways\n");
        let s3 = Settings::from_file(Some(&path3)).unwrap();
        assert!(s3.directed(false).is_err());
    }

    #[test]
    fn absent_file_means_pure_defaults() {
        let s = Settings::from_file(None).unwrap();
        let cfg = s.train_config(None).unwrap();
        assert_eq!(cfg.dim, TrainConfig::default().dim);
        assert!(!s.directed(false).unwrap());
        assert!(s.directed(true).unwrap());
        assert_eq!(s.top(None).unwrap(), 10);
        assert_eq!(s.walk_length(Some(6)).unwrap(), 6);
    }
}
