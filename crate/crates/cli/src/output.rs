//! Data files and their metadata.

use std::fs;
use std::io;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use loclab::dynamics::IntegratorConfig;
use loclab::export::{fmt_f64, CsvTable, ParamsRecord, VERSION};
use loclab::LomseTriple;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// The settings of one run, in a fixed order. The output directory is not
/// part of it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: String,
    entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            entries: Vec::new(),
        }
    }

    pub fn set(mut self, key: &str, value: impl Into<String>) -> Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn triple(self, t: LomseTriple) -> Self {
        self.set("triple", format!("{},{},{}", t.n, t.p, t.k))
    }

    pub fn tolerances(self, cfg: &IntegratorConfig) -> Self {
        self.set("rtol", fmt_f64(cfg.tolerances.rtol))
            .set("atol", fmt_f64(cfg.tolerances.atol))
            .set("event_tol", fmt_f64(cfg.event_tol))
            .set("fixed_point_radius", fmt_f64(cfg.fixed_point_radius))
            .set("divergence_bound", fmt_f64(cfg.divergence_bound))
    }

    /// First 16 hex digits of the SHA-256 of the canonical settings.
    pub fn hash(&self, format: Format) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "version={VERSION}\ncommand={}\nformat={}\n",
            self.command,
            format.extension()
        ));
        for (k, v) in &self.entries {
            h.update(format!("{k}={v}\n"));
        }
        h.finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub struct Writer {
    dir: PathBuf,
    format: Format,
}

impl Writer {
    pub fn new(dir: PathBuf, format: Format) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, format })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    fn path(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.{}", self.format.extension()))
    }

    pub fn csv(&self, stem: &str, cfg: &RunConfig, mut table: CsvTable) -> io::Result<PathBuf> {
        let extra = std::mem::take(&mut table.meta);
        table.meta.push("version", VERSION);
        table.meta.push("command", cfg.command.clone());
        for (k, v) in &cfg.entries {
            table.meta.push(k.clone(), v.clone());
        }
        for (k, v) in extra.entries() {
            table.meta.push(k.clone(), v.clone());
        }
        table.meta.push("config_hash", cfg.hash(self.format));
        let path = self.path(stem);
        fs::write(&path, table.render())?;
        Ok(path)
    }

    pub fn json<T: Serialize>(
        &self,
        stem: &str,
        cfg: &RunConfig,
        params: Option<&ParamsRecord>,
        data: &T,
    ) -> io::Result<PathBuf> {
        let mut meta = Map::new();
        meta.insert("version".into(), json!(VERSION));
        meta.insert("command".into(), json!(cfg.command));
        for (k, v) in &cfg.entries {
            meta.insert(k.clone(), json!(v));
        }
        meta.insert("config_hash".into(), json!(cfg.hash(self.format)));
        let mut doc = Map::new();
        doc.insert("schema".into(), json!(SCHEMA));
        doc.insert("meta".into(), Value::Object(meta));
        if let Some(p) = params {
            doc.insert(
                "params".into(),
                serde_json::to_value(p).map_err(io::Error::other)?,
            );
        }
        doc.insert(
            "data".into(),
            serde_json::to_value(data).map_err(io::Error::other)?,
        );
        let mut text =
            serde_json::to_string_pretty(&Value::Object(doc)).map_err(io::Error::other)?;
        text.push('\n');
        let path = self.path(stem);
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Visits the leaves of a JSON value as dotted keys and CSV-ready values.
pub fn flatten(prefix: &str, v: &Value, out: &mut impl FnMut(String, String)) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Number(n) => {
            let s = match n.as_f64() {
                Some(x) if !n.is_i64() && !n.is_u64() => fmt_f64(x),
                _ => n.to_string(),
            };
            out(prefix.to_string(), s);
        }
        Value::String(s) => out(prefix.to_string(), csv_field(s)),
        Value::Bool(b) => out(prefix.to_string(), b.to_string()),
        Value::Null => out(prefix.to_string(), "nan".into()),
    }
}
