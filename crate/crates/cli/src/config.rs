//! Config files mirror the command-line flags.
//!
//! ```toml
//! out = "report.json"          # applies to every subcommand
//!
//! [mv-check]
//! field = "ou.linear"
//! center = [1.0, 0.0]          # arrays become comma lists
//! r = [0.5, 0.2]
//! ```
//!
//! Top-level keys and the table named after the subcommand are turned into
//! flags. A flag given on the command line replaces the config entry.

use anyhow::{bail, Context, Result};
use std::ffi::OsString;
use std::path::Path;

/// Removes `--config <path>` from `args` and splices the file's flags in.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().to_string();
        if s == "--config" {
            let p = it.next().context("--config needs a path")?;
            path = Some(p);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.to_string_lossy()))?;
    // leading positional tokens: program, subcommand and any nested action
    let split = rest.iter().skip(1).position(|a| a.to_string_lossy().starts_with('-')).map_or(rest.len(), |i| i + 1);
    let Some(sub) = rest.get(1).map(|s| s.to_string_lossy().to_string()) else { return Ok(rest) };
    let given: Vec<String> = rest[split..]
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|f| f.split('=').next().unwrap_or(f).to_string()))
        .collect();
    let mut flags = Vec::new();
    let mut add = |k: &str, v: &toml::Value| -> Result<()> {
        if given.iter().any(|g| *g == k.replace('_', "-")) {
            return Ok(());
        }
        push_flag(&mut flags, k, v)
    };
    for (k, v) in &table {
        if !v.is_table() {
            add(k, v)?;
        }
    }
    if let Some(section) = table.get(&sub) {
        let section = section.as_table().with_context(|| format!("config entry `{sub}` must be a table"))?;
        for (k, v) in section {
            add(k, v)?;
        }
    }
    let mut out: Vec<OsString> = rest[..split].to_vec();
    out.extend(flags);
    out.extend(rest[split..].iter().cloned());
    Ok(out)
}

fn scalar(v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => bail!("unsupported config value {other}"),
    })
}

fn push_flag(out: &mut Vec<OsString>, key: &str, v: &toml::Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match v {
        toml::Value::Boolean(true) => out.push(flag.into()),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
            out.push(flag.into());
            out.push(parts.join(",").into());
        }
        toml::Value::Table(_) => bail!("nested table `{key}` in config"),
        other => {
            out.push(flag.into());
            out.push(scalar(other)?.into());
        }
    }
    Ok(())
}
