//! Flat `key=value` configuration files merged under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use umato::embed::EmbedConfig;
use umato::neighbors::KnnBackend;

use crate::args::EmbedArgs;
use crate::UsageError;

/// Values read from a config file. Keys are normalized to snake_case and
/// removed as they are consumed; leftovers are reported by [`ConfigFile::finish`].
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    /// Effective settings in resolution order, echoed into outputs.
    echo: Vec<String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                UsageError(format!("config line {}: expected key=value, got '{line}'", no + 1))
            })?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(UsageError(format!("config line {}: empty key", no + 1)).into());
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(UsageError(format!("config line {}: duplicate key '{key}'", no + 1)).into());
            }
        }
        Ok(Self {
            values,
            echo: Vec::new(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                Self::parse(&text)
            }
        }
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| UsageError(format!("config key '{key}': {e}")).into()),
        }
    }

    /// Flag value if given, else the config value, else `default`.
    /// The winner is recorded for the output header.
    pub fn resolve<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let from_file = self.take::<T>(key)?;
        let value = flag.or(from_file).unwrap_or(default);
        self.echo.push(format!("{key}={value}"));
        Ok(value)
    }

    /// Like [`ConfigFile::resolve`] with no default.
    pub fn resolve_opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let from_file = self.take::<T>(key)?;
        let value = flag.or(from_file);
        if let Some(v) = &value {
            self.echo.push(format!("{key}={v}"));
        }
        Ok(value)
    }

    /// A boolean switch: the flag can only turn it on; the file can set either way.
    pub fn resolve_switch(&mut self, key: &str, flag: bool, default: bool) -> Result<bool> {
        let flag = if flag { Some(true) } else { None };
        self.resolve(key, flag, default)
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.echo.push(line.into());
    }

    /// Rejects keys nobody consumed.
    pub fn finish(&self) -> Result<()> {
        if let Some(key) = self.values.keys().next() {
            return Err(UsageError(format!("unknown config key '{key}'")).into());
        }
        Ok(())
    }

    pub fn echo(&self) -> &[String] {
        &self.echo
    }
}

/// Resolves every embedding hyperparameter from flags, file and defaults.
pub fn embed_config(args: &EmbedArgs, file: &mut ConfigFile) -> Result<EmbedConfig> {
    let d = EmbedConfig::default();
    let knn: String = file.resolve("knn", args.knn.clone(), d.knn_backend.to_string())?;
    let knn_backend: KnnBackend = knn.parse().map_err(|e| UsageError(format!("{e}")))?;
    let cfg = EmbedConfig {
        k: file.resolve("k", args.k, d.k)?,
        n_h: file.resolve("hub_num", args.hub_num, d.n_h)?,
        dim: file.resolve("dim", args.dim, d.dim)?,
        global_epochs: file.resolve("global_epochs", args.global_epochs, d.global_epochs)?,
        local_epochs: file.resolve("local_epochs", args.local_epochs, d.local_epochs)?,
        min_dist: file.resolve("min_dist", args.min_dist, d.min_dist)?,
        a: file.resolve_opt("a", args.a)?,
        b: file.resolve_opt("b", args.b)?,
        gamma: file.resolve("gamma", args.gamma, d.gamma)?,
        negative_samples: file.resolve("negative_samples", args.negative_samples, d.negative_samples)?,
        epsilon: file.resolve("epsilon", args.epsilon, d.epsilon)?,
        hub_attract_penalty: file.resolve("hub_attract_penalty", args.hub_attract_penalty, d.hub_attract_penalty)?,
        repulse_penalty: file.resolve("repulse_penalty", args.repulse_penalty, d.repulse_penalty)?,
        m_init: file.resolve("m_init", args.m_init, d.m_init)?,
        lr_global: file.resolve("lr_global", args.lr_global, d.lr_global)?,
        lr_local: file.resolve("lr_local", args.lr_local, d.lr_local)?,
        seed: file.resolve("seed", args.seed, d.seed)?,
        knn_backend,
        init_noise: !file.resolve_switch("no_init_noise", args.no_init_noise, false)?,
    };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}
