//! Versioned JSON reports and CSV plot data.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "heatball-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub status: Status,
    pub tolerances: Value,
    pub result: Value,
}

impl Report {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            status: Status::Pass,
            tolerances: json!({}),
            result: Value::Null,
        }
    }

    pub fn to_json(&self) -> Value {
        let generated = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "versions": { "heatball-cli": env!("CARGO_PKG_VERSION"), "heatball-core": heatball_core::VERSION },
            "config": self.config,
            "status": self.status,
            "tolerances": self.tolerances,
            "result": self.result,
            "generated_unix": generated,
        })
    }

    /// Writes the report to `out`, or to stdout.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        match out {
            Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
            None => {
                let mut o = std::io::stdout().lock();
                writeln!(o, "{text}")?;
                Ok(())
            }
        }
    }
}

pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn row<I: IntoIterator<Item = f64>>(&mut self, vals: I) {
        self.rows.push(vals.into_iter().map(fmt_num).collect());
    }

    pub fn row_str(&mut self, vals: Vec<String>) {
        self.rows.push(vals);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// `plot.csv` → `plot.csv.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
