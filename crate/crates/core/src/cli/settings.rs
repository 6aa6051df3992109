//! `key = value` configuration files, flag/file/default resolution and
//! atomic output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Values read from a configuration file. Keys are normalized to
/// `snake_case`; every key must be consumed by the subcommand.
#[derive(Debug, Default)]
pub struct Settings {
    origin: PathBuf,
    values: BTreeMap<String, (usize, String)>,
    used: BTreeSet<String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(origin, i + 1, "expected key = value"));
            };
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(Error::parse(origin, i + 1, "empty key"));
            }
            let mut value = value.trim();
            if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
                value = &value[1..value.len() - 1];
            }
            if values.insert(key.clone(), (i + 1, value.to_owned())).is_some() {
                return Err(Error::parse(origin, i + 1, format!("duplicate key {key:?}")));
            }
        }
        Ok(Self {
            origin: origin.to_owned(),
            values,
            used: BTreeSet::new(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text, p)
            }
        }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.insert(key.to_owned());
        self.values.get(key).cloned()
    }

    /// The flag value if given, else the file value, else `None`.
    pub fn opt<T>(&mut self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let file = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match file {
            None => Ok(None),
            Some((_, v)) if v.is_empty() => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::parse(&self.origin, line, format!("{key}: {e}"))),
        }
    }

    pub fn get<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn require<T>(&mut self, flag: Option<T>, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.opt(flag, key)?
            .ok_or_else(|| Error::InvalidArgument(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    /// Comma-separated list; an empty flag list defers to the file.
    pub fn list(&mut self, flag: Vec<String>, key: &str) -> Vec<String> {
        let file = self.raw(key);
        if !flag.is_empty() {
            return flag;
        }
        file.map(|(_, v)| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect()
        })
        .unwrap_or_default()
    }

    /// Fails on keys no setting asked for.
    pub fn finish(self) -> Result<()> {
        match self.values.iter().find(|(k, _)| !self.used.contains(*k)) {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::parse(&self.origin, *line, format!("unknown key {k:?}"))),
        }
    }
}

/// Renders a flat serializable config as a file [`Settings::parse`] reads
/// back. `null` entries are omitted; arrays are comma-joined.
pub fn to_conf<T: Serialize>(config: &T) -> Result<String> {
    let Value::Object(map) = serde_json::to_value(config)? else {
        return Err(Error::InvalidArgument("configuration must be a flat object".into()));
    };
    let mut out = String::new();
    for (k, v) in map {
        let rendered = match v {
            Value::Null => continue,
            Value::String(s) => s,
            Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        out.push_str(&k);
        out.push_str(" = ");
        out.push_str(&rendered);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
