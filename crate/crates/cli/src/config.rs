//! Flat `key = value` configuration files with flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Failures split by exit code: configuration problems exit 2, everything
/// else exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<stillflow_core::Error> for CliError {
    fn from(e: stillflow_core::Error) -> Self {
        match e {
            stillflow_core::Error::Config(_) | stillflow_core::Error::InvalidSpec(_) => {
                Self::Config(e.to_string())
            }
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Resolved settings: config-file values overridden by command-line flags.
pub struct Cfg {
    map: BTreeMap<String, String>,
}

impl Cfg {
    /// Parses the optional config file, rejecting keys outside `allowed`.
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::Config(format!("{}:{}: expected `key = value`", p.display(), i + 1))
                })?;
                let k = k.trim();
                if !allowed.contains(&k) {
                    return Err(CliError::Config(format!(
                        "{}:{}: unknown key '{k}'",
                        p.display(),
                        i + 1
                    )));
                }
                map.insert(k.to_string(), v.trim().to_string());
            }
        }
        Ok(Self { map })
    }

    /// Flag override; flags always win over file values.
    pub fn set_flag<T: ToString>(&mut self, key: &str, value: &Option<T>) {
        if let Some(v) = value {
            self.map.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("key '{key}': cannot parse value '{v}'"))
            }),
        }
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list of usize, e.g. `widths = 16,32,64`.
    pub fn get_list(&self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim().parse().map_err(|_| {
                        CliError::Config(format!("key '{key}': bad list element '{x}'"))
                    })
                })
                .collect(),
        }
    }

    pub fn record<T: ToString>(&mut self, key: &str, value: T) {
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Resolved configuration, one `key = value` per line, for run logs.
    pub fn dump(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
